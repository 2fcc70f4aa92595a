#include "ugift/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ugift/error.hpp"
#include "ugift/rng.hpp"
#include "ugift/version.hpp"

namespace ugift {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(std::string("config field '") + key + "' has the wrong type");
    }
  }
}

TrainConfig train_config_from_json(const json& j, TrainConfig base) {
  read_field(j, "batch_size", base.batch_size);
  read_field(j, "epochs", base.epochs);
  read_field(j, "learning_rate", base.learning_rate);
  if (j.contains("optimizer")) {
    base.optimizer = optimizer_from_name(j.at("optimizer").get<std::string>());
  }
  read_field(j, "shuffle", base.shuffle);
  return base;
}

ordered_json train_config_to_json(const TrainConfig& t) {
  return {{"batch_size", t.batch_size},
          {"epochs", t.epochs},
          {"learning_rate", t.learning_rate},
          {"optimizer", optimizer_name(t.optimizer)},
          {"shuffle", t.shuffle}};
}

}  // namespace

const char* weight_mode_name(WeightMode mode) {
  return mode == WeightMode::stability ? "stability" : "paper_literal";
}

WeightMode weight_mode_from_name(const std::string& name) {
  if (name == "stability") return WeightMode::stability;
  if (name == "paper_literal") return WeightMode::paper_literal;
  throw ConfigError("unknown weight mode '" + name + "' (expected stability or paper_literal)");
}

const char* f1_mode_name(F1Mode mode) {
  return mode == F1Mode::macro ? "macro" : "binary-positive";
}

F1Mode f1_mode_from_name(const std::string& name) {
  if (name == "macro") return F1Mode::macro;
  if (name == "binary-positive" || name == "binary_positive") return F1Mode::binary_positive;
  throw ConfigError("unknown f1 mode '" + name + "'");
}

const char* format_name(CorpusFormat format) {
  return format == CorpusFormat::jsonl ? "jsonl" : "csv";
}

CorpusFormat format_from_name(const std::string& name) {
  if (name == "jsonl") return CorpusFormat::jsonl;
  if (name == "csv") return CorpusFormat::csv;
  throw ConfigError("unknown corpus format '" + name + "' (expected jsonl or csv)");
}

const char* optimizer_name(Optimizer opt) {
  return opt == Optimizer::adam ? "adam" : "sgd";
}

Optimizer optimizer_from_name(const std::string& name) {
  if (name == "adam") return Optimizer::adam;
  if (name == "sgd") return Optimizer::sgd;
  throw ConfigError("unknown optimizer '" + name + "' (expected sgd or adam)");
}

void RunConfig::validate() const {
  features.validate();
  if (model_hidden < 1) throw ConfigError("model hidden width must be positive");
  if (model_dropout < 0.0 || model_dropout >= 1.0) {
    throw ConfigError("dropout rate must be in [0, 1)");
  }
  selftrain.validate();
  if (split.k_shot < 0 || split.validation_size < 0 || split.test_size < 0 ||
      split.unlabeled_size < 0) {
    throw ConfigError("split sizes must be non-negative");
  }
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (preset != "desk" && preset != "paper") {
    throw ConfigError("unknown preset '" + preset + "' (expected desk or paper)");
  }
}

RunConfig default_run_config() {
  return RunConfig{};
}

RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  read_field(j, "preset", cfg.preset);
  if (cfg.preset == "paper") {
    // PLM-scale learning rates; everything else matches the desk preset.
    cfg.selftrain.supervised.learning_rate = 3e-5;
    cfg.selftrain.round_tune.learning_rate = 1e-5;
  } else if (cfg.preset != "desk") {
    throw ConfigError("unknown preset '" + cfg.preset + "'");
  }
  read_field(j, "seed", cfg.seed);
  read_field(j, "out_dir", cfg.out_dir);
  if (j.contains("features")) {
    const auto& f = j.at("features");
    read_field(f, "dim", cfg.features.dim);
    if (f.contains("word_ngrams")) {
      auto orders = f.at("word_ngrams").get<std::vector<int>>();
      cfg.features.word_unigrams = false;
      cfg.features.word_bigrams = false;
      for (int o : orders) {
        if (o == 1) cfg.features.word_unigrams = true;
        else if (o == 2) cfg.features.word_bigrams = true;
        else throw ConfigError("word n-gram orders are limited to {1, 2}");
      }
    }
    read_field(f, "char_ngram", cfg.features.char_ngram);
    if (f.contains("tf")) {
      std::string tf = f.at("tf").get<std::string>();
      if (tf == "binary") cfg.features.tf = TfWeighting::binary;
      else if (tf == "log1p") cfg.features.tf = TfWeighting::log1p_tf;
      else throw ConfigError("unknown tf weighting '" + tf + "' (expected binary or log1p)");
    }
    read_field(f, "signed", cfg.features.signed_hashing);
  }
  if (j.contains("model")) {
    const auto& m = j.at("model");
    read_field(m, "hidden", cfg.model_hidden);
    read_field(m, "dropout", cfg.model_dropout);
  }
  if (j.contains("supervised_train")) {
    cfg.selftrain.supervised = train_config_from_json(j.at("supervised_train"),
                                                      cfg.selftrain.supervised);
  }
  if (j.contains("round_train")) {
    cfg.selftrain.round_tune = train_config_from_json(j.at("round_train"),
                                                      cfg.selftrain.round_tune);
  }
  if (j.contains("selftrain")) {
    const auto& s = j.at("selftrain");
    read_field(s, "passes", cfg.selftrain.passes);
    read_field(s, "rounds", cfg.selftrain.rounds);
    read_field(s, "pool", cfg.selftrain.pool_draw);
    read_field(s, "select", cfg.selftrain.select_count);
    read_field(s, "alpha", cfg.selftrain.alpha);
    if (s.contains("weight_mode")) {
      cfg.selftrain.weight_mode = weight_mode_from_name(s.at("weight_mode").get<std::string>());
    }
    read_field(s, "replay_labeled", cfg.selftrain.replay_labeled);
    read_field(s, "remove_selected", cfg.selftrain.remove_selected);
  }
  if (j.contains("data")) {
    const auto& d = j.at("data");
    read_field(d, "labeled", cfg.data.labeled);
    read_field(d, "unlabeled", cfg.data.unlabeled);
    read_field(d, "validation", cfg.data.validation);
    read_field(d, "test", cfg.data.test);
    if (d.contains("format")) {
      cfg.data.format = format_from_name(d.at("format").get<std::string>());
    }
    read_field(d, "num_classes", cfg.data.num_classes);
    read_field(d, "dedup", cfg.data.dedup);
  }
  if (j.contains("split")) {
    const auto& s = j.at("split");
    read_field(s, "k_shot", cfg.split.k_shot);
    read_field(s, "validation_size", cfg.split.validation_size);
    read_field(s, "test_size", cfg.split.test_size);
    read_field(s, "unlabeled_size", cfg.split.unlabeled_size);
    if (s.contains("ratio")) {
      cfg.split.ratio = parse_ratio(s.at("ratio").get<std::string>());
    }
  }
  if (j.contains("f1_mode")) {
    cfg.f1_mode = f1_mode_from_name(j.at("f1_mode").get<std::string>());
  }
  if (j.contains("synth")) {
    const auto& s = j.at("synth");
    read_field(s, "num_classes", cfg.synth.num_classes);
    read_field(s, "class_vocab", cfg.synth.class_vocab);
    read_field(s, "shared_vocab", cfg.synth.shared_vocab);
    read_field(s, "overlap", cfg.synth.overlap);
    read_field(s, "min_len", cfg.synth.min_len);
    read_field(s, "max_len", cfg.synth.max_len);
    read_field(s, "per_class", cfg.synth.per_class);
  }
  read_field(j, "dump_records", cfg.dump_records);
  read_field(j, "jobs", cfg.jobs);
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": malformed config JSON: " + e.what());
  }
  return run_config_from_json(j);
}

ordered_json run_config_to_json(const RunConfig& cfg) {
  std::vector<int> orders;
  if (cfg.features.word_unigrams) orders.push_back(1);
  if (cfg.features.word_bigrams) orders.push_back(2);
  ordered_json j;
  j["preset"] = cfg.preset;
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  j["features"] = {{"dim", cfg.features.dim},
                   {"word_ngrams", orders},
                   {"char_ngram", cfg.features.char_ngram},
                   {"tf", cfg.features.tf == TfWeighting::binary ? "binary" : "log1p"},
                   {"signed", cfg.features.signed_hashing}};
  j["model"] = {{"hidden", cfg.model_hidden}, {"dropout", cfg.model_dropout}};
  j["supervised_train"] = train_config_to_json(cfg.selftrain.supervised);
  j["round_train"] = train_config_to_json(cfg.selftrain.round_tune);
  j["selftrain"] = {{"passes", cfg.selftrain.passes},
                    {"rounds", cfg.selftrain.rounds},
                    {"pool", cfg.selftrain.pool_draw},
                    {"select", cfg.selftrain.select_count},
                    {"alpha", cfg.selftrain.alpha},
                    {"weight_mode", weight_mode_name(cfg.selftrain.weight_mode)},
                    {"replay_labeled", cfg.selftrain.replay_labeled},
                    {"remove_selected", cfg.selftrain.remove_selected}};
  j["data"] = {{"labeled", cfg.data.labeled},
               {"unlabeled", cfg.data.unlabeled},
               {"validation", cfg.data.validation},
               {"test", cfg.data.test},
               {"format", format_name(cfg.data.format)},
               {"num_classes", cfg.data.num_classes},
               {"dedup", cfg.data.dedup}};
  j["split"] = {{"k_shot", cfg.split.k_shot},
                {"validation_size", cfg.split.validation_size},
                {"test_size", cfg.split.test_size},
                {"unlabeled_size", cfg.split.unlabeled_size},
                {"ratio", ratio_to_string(cfg.split.ratio)}};
  j["f1_mode"] = f1_mode_name(cfg.f1_mode);
  j["synth"] = {{"num_classes", cfg.synth.num_classes},
                {"class_vocab", cfg.synth.class_vocab},
                {"shared_vocab", cfg.synth.shared_vocab},
                {"overlap", cfg.synth.overlap},
                {"min_len", cfg.synth.min_len},
                {"max_len", cfg.synth.max_len},
                {"per_class", cfg.synth.per_class}};
  j["dump_records"] = cfg.dump_records;
  j["jobs"] = cfg.jobs;
  return j;
}

std::uint64_t config_hash(const RunConfig& cfg) {
  return fnv1a64(run_config_to_json(cfg).dump());
}

ordered_json provenance_json(const RunConfig& cfg) {
  char hash_hex[17];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(config_hash(cfg)));
  ordered_json j;
  j["config_hash"] = hash_hex;
  j["seed"] = cfg.seed;
  j["version"] = kVersion;
  j["weight_mode"] = weight_mode_name(cfg.selftrain.weight_mode);
  return j;
}

}  // namespace ugift
