#pragma once

#include <string>
#include <vector>

#include "ugift/model.hpp"

namespace ugift {

enum class F1Mode { macro, binary_positive };

struct ClassStats {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct Metrics {
  double accuracy = 0.0;
  double f1 = 0.0;        // value under the selected mode
  double macro_f1 = 0.0;  // always the macro average
  F1Mode f1_mode = F1Mode::macro;
  std::vector<ClassStats> per_class;
  std::vector<std::vector<long>> confusion;  // rows = true, cols = predicted
};

// Entry (i, j) counts pairs with truth i and prediction j.
std::vector<std::vector<long>> confusion_matrix(const std::vector<int>& preds,
                                                const std::vector<int>& truth, int num_classes);

// Precision/recall/F1 per class with 0/0 := 0, accuracy = trace/total.
Metrics metrics_from_confusion(const std::vector<std::vector<long>>& confusion,
                               F1Mode mode = F1Mode::macro);

// Argmax predictions (ties to the lowest class index) then metrics.
Metrics evaluate(const ModelParams& params, const std::vector<FeatureVector>& vectors,
                 const std::vector<int>& labels, F1Mode mode = F1Mode::macro);

int argmax_label(const std::vector<double>& probs);

std::string metrics_table(const Metrics& m);

}  // namespace ugift
