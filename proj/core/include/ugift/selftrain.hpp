#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ugift/corpus.hpp"
#include "ugift/eval.hpp"
#include "ugift/model.hpp"
#include "ugift/uncertainty.hpp"

namespace ugift {

struct SelfTrainConfig {
  int passes = 30;        // T forward passes per example
  int rounds = 10;        // R
  int pool_draw = 1000;   // P examples drawn per round
  int select_count = 500; // S pseudo-labels kept per round
  double alpha = 0.1;
  WeightMode weight_mode = WeightMode::stability;
  TrainConfig supervised{.batch_size = 8, .epochs = 40, .learning_rate = 1e-3};
  TrainConfig round_tune{.batch_size = 16, .epochs = 20, .learning_rate = 3e-4};
  bool replay_labeled = true;   // keep the K-shot set in every fine-tune
  bool remove_selected = true;  // selected ids leave the pool
  std::uint64_t seed = 0;

  void validate() const;
};

struct RoundLog {
  int round = 0;  // 1-based
  std::vector<std::string> pool_ids;      // ids drawn this round
  std::vector<std::string> selected_ids;  // top-S by score
  std::vector<int> pseudo_histogram;      // class counts over the selected set
  double mean_mutual_info_pool = 0.0;
  double mean_mutual_info_selected = 0.0;
  Metrics validation;
  // Full records for audit dumps; not part of the report JSON.
  std::vector<PseudoLabelRecord> records;
};

struct SelfTrainReport {
  Metrics baseline_validation;
  std::optional<Metrics> baseline_test;
  std::vector<RoundLog> rounds;
  // 1-based index of the round with the best validation accuracy (ties go to
  // the earlier round); 0 when no round ran, meaning the baseline stands.
  int best_round = 0;
  Metrics best_validation;
  std::optional<Metrics> best_test;
  // Best minus baseline, as fractions in [-1, 1]. Measured on the test set
  // when one is supplied, otherwise on validation.
  double delta_acc = 0.0;
  double delta_f1 = 0.0;
  std::string best_checkpoint;  // filled in by the harness when saved
};

struct SelfTrainOutcome {
  SelfTrainReport report;
  ModelParams baseline;
  ModelParams best;  // equals baseline when no round ran
};

// Supervised phase: vectorize and train the dropout classifier on the
// labeled set.
ModelParams train_base(const LabeledSet& labeled, const FeatureConfig& fcfg,
                       const ModelConfig& mcfg, const TrainConfig& tcfg);

// Pool of not-yet-consumed unlabeled examples, vectorized once up front.
class PoolState {
 public:
  PoolState(const UnlabeledSet& pool, const FeatureConfig& fcfg);

  std::size_t remaining() const { return alive_.size(); }
  const UnlabeledSet& source() const { return *source_; }

  // Indices (into the source set) drawn this round.
  std::vector<std::size_t> draw(std::size_t count, std::uint64_t seed, int round);
  const FeatureVector& vector_at(std::size_t source_index) const;
  void remove(const std::vector<std::size_t>& source_indices);

 private:
  const UnlabeledSet* source_;
  std::vector<FeatureVector> vectors_;
  std::vector<std::size_t> alive_;
};

// One self-training round: draw, pseudo-label, rank, select, fine-tune.
// Ranking is by score descending with ties broken by ascending mutual
// information and then id; because the score is an affine decreasing
// function of the mutual information this equals ascending (E, id).
struct RoundResult {
  ModelParams params;
  RoundLog log;
};

RoundResult run_round(const ModelParams& params, PoolState& pool,
                      const std::vector<WeightedExample>& labeled_replay,
                      const SelfTrainConfig& cfg, int round);

// Full pipeline: supervised baseline, R rounds, best-round selection by
// validation accuracy. Deltas use the test set when provided.
SelfTrainOutcome run_selftrain(const LabeledSet& labeled, const UnlabeledSet& unlabeled,
                               const LabeledSet& validation, const LabeledSet* test,
                               const FeatureConfig& fcfg, const ModelConfig& mcfg,
                               const SelfTrainConfig& cfg);

}  // namespace ugift
