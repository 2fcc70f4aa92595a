#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ugift/corpus.hpp"
#include "ugift/model.hpp"

namespace ugift {

// T stochastic forward passes for one example; row t holds the softmax
// output of pass t.
struct MCPrediction {
  int passes = 0;       // T
  int num_classes = 0;  // C
  std::vector<double> probs;  // T x C, row-major

  double at(int t, int c) const {
    return probs[static_cast<std::size_t>(t) * num_classes + c];
  }
};

struct PseudoLabelRecord {
  std::string id;
  int pseudo_label = 0;
  std::vector<int> votes;          // per-class pass counts, sums to T
  std::vector<double> mean_probs;  // posterior mean, sums to 1
  double mutual_info = 0.0;        // in [0, ln C]
  double score = 0.0;              // normalized over the pool, sums to 1
  double variance = 0.0;           // mean per-class predictive variance
  double weight = 0.0;             // stability weight
  bool tie_broken = false;
};

enum class WeightMode { stability, paper_literal };

// T keyed dropout passes; pass t uses dropout key (round, t, sample).
// Leaves the model untouched; identical keys give identical matrices.
MCPrediction mc_predict(const ModelParams& params, const FeatureVector& x, int passes,
                        std::uint64_t round, std::uint64_t sample);

// Columnwise mean of the pass matrix.
std::vector<double> mean_probs(const MCPrediction& mc);

// Count of passes whose argmax lands on each class; per-row argmax ties go
// to the lowest class index.
std::vector<int> vote_labels(const MCPrediction& mc);

struct PseudoLabel {
  int label = 0;
  bool tie_broken = false;
};

// Plurality vote. The winner always meets the ceil(T/C) threshold by
// pigeonhole. Vote ties are broken by the higher posterior mean, then by the
// lower class index.
PseudoLabel majority_pseudo_label(const std::vector<int>& votes,
                                  const std::vector<double>& mean, int passes);

// Epistemic disagreement: H(mean over passes) - mean over passes of H(row),
// natural logs, 0*log(0) := 0, clamped to [0, ln C].
double bald(const MCPrediction& mc);

struct ScoreResult {
  std::vector<double> scores;
  // Set when sum(1 - E) was non-positive and the shifted form
  // (ln C - E) / sum(ln C - E) was used instead.
  bool used_fallback = false;
};

// Selection priorities over a pool: score_i = (1 - E_i) / sum_j (1 - E_j).
// Scores sum to 1 and decrease in E, so high score means a confident sample.
ScoreResult scores(const std::vector<double>& mutual_info, int num_classes);

// Mean over classes of the population variance of the per-pass probabilities.
double pred_variance(const MCPrediction& mc);

// stability mode: w = exp(-var / alpha), decreasing in var.
// paper_literal mode: w = alpha * var (kept for ablation).
double stability_weight(double variance, double alpha, WeightMode mode);

// One record per pool example: MC passes, votes, pseudo-label, mutual
// information, variance and weight, then pool-wide scores.
std::vector<PseudoLabelRecord> build_records(const UnlabeledSet& pool,
                                             const std::vector<FeatureVector>& vectors,
                                             const ModelParams& params, int passes,
                                             double alpha, WeightMode mode,
                                             std::uint64_t round);

std::string record_to_json(const PseudoLabelRecord& rec);
std::string records_to_jsonl(const std::vector<PseudoLabelRecord>& records);
PseudoLabelRecord record_from_json(const std::string& line);

}  // namespace ugift
