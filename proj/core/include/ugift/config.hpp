#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ugift/corpus.hpp"
#include "ugift/eval.hpp"
#include "ugift/features.hpp"
#include "ugift/model.hpp"
#include "ugift/selftrain.hpp"

namespace ugift {

struct DataConfig {
  std::string labeled;     // path to the labeled corpus
  std::string unlabeled;   // optional: explicit unlabeled corpus
  std::string validation;  // optional: explicit validation corpus
  std::string test;        // optional: explicit test corpus
  CorpusFormat format = CorpusFormat::jsonl;
  int num_classes = 0;  // 0 = infer
  bool dedup = false;
};

// How to carve labeled/validation/test/unlabeled out of one source corpus
// when explicit paths are not given. Balanced draws throughout.
struct SplitConfig {
  int k_shot = 10;
  int validation_size = 200;
  int test_size = 400;
  int unlabeled_size = 2000;
  ClassRatio ratio{1, 1};  // unlabeled pool mix, class 0 : class 1
};

// Everything one run needs. Loaded from a single JSON document; CLI flags
// override individual fields.
struct RunConfig {
  std::string preset = "desk";  // "desk" or "paper" learning rates
  std::uint64_t seed = 42;
  std::string out_dir = "out";
  FeatureConfig features;
  // hidden/dropout for the classifier; input dim and class count are filled
  // from the feature config and the corpus.
  int model_hidden = 64;
  double model_dropout = 0.2;
  SelfTrainConfig selftrain;
  DataConfig data;
  SplitConfig split;
  F1Mode f1_mode = F1Mode::macro;
  SynthSpec synth;
  bool dump_records = true;
  int jobs = 1;  // parallel sweep cells

  void validate() const;
};

RunConfig default_run_config();
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);
nlohmann::ordered_json run_config_to_json(const RunConfig& cfg);

// Stable 64-bit hash of the canonical JSON form; part of provenance.
std::uint64_t config_hash(const RunConfig& cfg);

// Provenance block written into every output document: enough to reproduce
// the run exactly.
nlohmann::ordered_json provenance_json(const RunConfig& cfg);

const char* weight_mode_name(WeightMode mode);
WeightMode weight_mode_from_name(const std::string& name);
const char* f1_mode_name(F1Mode mode);
F1Mode f1_mode_from_name(const std::string& name);
const char* format_name(CorpusFormat format);
CorpusFormat format_from_name(const std::string& name);
const char* optimizer_name(Optimizer opt);
Optimizer optimizer_from_name(const std::string& name);

}  // namespace ugift
