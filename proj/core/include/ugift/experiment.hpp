#pragma once

#include <string>
#include <vector>

#include "ugift/config.hpp"
#include "ugift/selftrain.hpp"

namespace ugift {

// One experiment's worth of data, either loaded from explicit paths or
// carved out of a single source corpus.
struct ExperimentData {
  LabeledSet labeled;     // the (usually K-shot) training set
  LabeledSet validation;  // may be empty
  LabeledSet test;        // may be empty
  UnlabeledSet unlabeled; // hidden labels retained for harness metrics
};

// Deterministic split protocol: balanced test draw, balanced validation
// draw, balanced K-shot draw, remainder de-labeled into the unlabeled pool
// at the configured ratio and size. All draws are keyed off `seed`.
ExperimentData split_experiment_data(const LabeledSet& source, const SplitConfig& split,
                                     std::uint64_t seed);

// Load-or-split according to the run config.
ExperimentData prepare_experiment_data(const RunConfig& cfg);

// CLI command bodies. Each writes its outputs under cfg.out_dir and throws
// ConfigError / DataError on failure; the CLI maps those to exit codes.
void cmd_train(const RunConfig& cfg);
void cmd_selftrain(const RunConfig& cfg);
void cmd_score(const RunConfig& cfg, const std::string& checkpoint_path);
void cmd_evaluate(const RunConfig& cfg, const std::string& checkpoint_path);
void cmd_synth(const RunConfig& cfg);

struct SweepSpec {
  enum class Kind { k_shot, ratio };
  Kind kind = Kind::k_shot;
  std::vector<int> k_values{2, 5, 10, 20, 50, 100, 500, 1000};
  std::vector<ClassRatio> ratios;
  int seeds = 5;
};

// One CSV row per (value, method) with mean and sample stddev over seeds.
// Cells run in parallel across cfg.jobs threads; per-cell seeds make the
// output independent of scheduling.
std::string run_sweep_csv(const RunConfig& cfg, const SweepSpec& spec);

void cmd_sweep(const RunConfig& cfg, const SweepSpec& spec);

}  // namespace ugift
