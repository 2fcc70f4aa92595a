#include "ugift/eval.hpp"

#include <cstdio>

#include "ugift/error.hpp"

namespace ugift {

std::vector<std::vector<long>> confusion_matrix(const std::vector<int>& preds,
                                                const std::vector<int>& truth, int num_classes) {
  if (preds.size() != truth.size()) {
    throw DataError("confusion_matrix: prediction and truth lengths differ");
  }
  if (num_classes < 1) throw ConfigError("confusion_matrix: need at least one class");
  std::vector<std::vector<long>> m(static_cast<std::size_t>(num_classes),
                                   std::vector<long>(static_cast<std::size_t>(num_classes), 0));
  for (std::size_t i = 0; i < preds.size(); ++i) {
    int t = truth[i], p = preds[i];
    if (t < 0 || t >= num_classes || p < 0 || p >= num_classes) {
      throw DataError("confusion_matrix: label out of range at position " + std::to_string(i));
    }
    ++m[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  return m;
}

Metrics metrics_from_confusion(const std::vector<std::vector<long>>& confusion, F1Mode mode) {
  const std::size_t c = confusion.size();
  if (c == 0) throw DataError("metrics: empty confusion matrix");
  long total = 0, trace = 0;
  std::vector<long> row_sum(c, 0), col_sum(c, 0);
  for (std::size_t i = 0; i < c; ++i) {
    if (confusion[i].size() != c) throw DataError("metrics: confusion matrix is not square");
    for (std::size_t j = 0; j < c; ++j) {
      long v = confusion[i][j];
      if (v < 0) throw DataError("metrics: negative confusion count");
      total += v;
      row_sum[i] += v;
      col_sum[j] += v;
    }
    trace += confusion[i][i];
  }
  if (total == 0) throw DataError("metrics: all-zero confusion matrix");

  Metrics m;
  m.confusion = confusion;
  m.f1_mode = mode;
  m.accuracy = static_cast<double>(trace) / static_cast<double>(total);
  m.per_class.resize(c);
  double f1_sum = 0.0;
  for (std::size_t i = 0; i < c; ++i) {
    long tp = confusion[i][i];
    double precision = col_sum[i] == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(col_sum[i]);
    double recall = row_sum[i] == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(row_sum[i]);
    double f1 = (precision + recall) == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
    m.per_class[i] = {precision, recall, f1};
    f1_sum += f1;
  }
  m.macro_f1 = f1_sum / static_cast<double>(c);
  if (mode == F1Mode::binary_positive) {
    if (c < 2) throw ConfigError("binary-positive F1 needs at least two classes");
    m.f1 = m.per_class[1].f1;
  } else {
    m.f1 = m.macro_f1;
  }
  return m;
}

int argmax_label(const std::vector<double>& probs) {
  int best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

Metrics evaluate(const ModelParams& params, const std::vector<FeatureVector>& vectors,
                 const std::vector<int>& labels, F1Mode mode) {
  if (vectors.size() != labels.size()) {
    throw DataError("evaluate: vector and label counts differ");
  }
  std::vector<int> preds(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    preds[i] = argmax_label(predict(params, vectors[i]));
  }
  return metrics_from_confusion(confusion_matrix(preds, labels, params.cfg.num_classes), mode);
}

std::string metrics_table(const Metrics& m) {
  char buf[128];
  std::string out;
  std::snprintf(buf, sizeof(buf), "accuracy  %.4f\nf1        %.4f\nmacro_f1  %.4f\n",
                m.accuracy, m.f1, m.macro_f1);
  out += buf;
  out += "class  precision  recall     f1\n";
  for (std::size_t i = 0; i < m.per_class.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%5zu  %9.4f  %6.4f  %6.4f\n", i, m.per_class[i].precision,
                  m.per_class[i].recall, m.per_class[i].f1);
    out += buf;
  }
  return out;
}

}  // namespace ugift
