// ugift — uncertainty-guided self-training for few-shot text classification.
//
// Subcommands: train, selftrain, score, evaluate, sweep, synth.
// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ugift/config.hpp"
#include "ugift/error.hpp"
#include "ugift/experiment.hpp"
#include "ugift/version.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> rounds;
  std::optional<int> passes;
  std::optional<int> pool;
  std::optional<int> select;
  std::optional<double> alpha;
  std::optional<std::string> weight_mode;
  std::optional<int> k_shot;
  std::optional<std::string> ratio;
  std::optional<std::string> format;
  std::optional<std::string> labeled;
  std::optional<std::string> unlabeled;
  std::optional<std::string> validation;
  std::optional<std::string> test;
  std::optional<int> jobs;
  std::vector<std::string> overrides;  // dotted key=value pairs
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON run config");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_option("--rounds", f.rounds, "self-training rounds R");
  cmd->add_option("--passes", f.passes, "MC-dropout passes T");
  cmd->add_option("--pool", f.pool, "pool draw size P per round");
  cmd->add_option("--select", f.select, "pseudo-labels kept per round S");
  cmd->add_option("--alpha", f.alpha, "stability weight coefficient");
  cmd->add_option("--weight-mode", f.weight_mode, "stability or paper_literal");
  cmd->add_option("--k-shot", f.k_shot, "labeled examples K (balanced)");
  cmd->add_option("--ratio", f.ratio, "unlabeled pool ratio a:b");
  cmd->add_option("--format", f.format, "corpus format: jsonl or csv");
  cmd->add_option("--labeled", f.labeled, "labeled corpus path");
  cmd->add_option("--unlabeled", f.unlabeled, "unlabeled corpus path");
  cmd->add_option("--validation", f.validation, "validation corpus path");
  cmd->add_option("--test", f.test, "test corpus path");
  cmd->add_option("--jobs", f.jobs, "parallel sweep cells");
  cmd->add_option("--set", f.overrides, "dotted config override, e.g. model.hidden=32");
}

// Apply a dotted-path override onto the config JSON; values parse as JSON
// when possible and fall back to strings.
void apply_override(nlohmann::json& j, const std::string& kv) {
  auto eq = kv.find('=');
  if (eq == std::string::npos) {
    throw ugift::ConfigError("--set expects key=value, got '" + kv + "'");
  }
  std::string key = kv.substr(0, eq);
  std::string value = kv.substr(eq + 1);
  nlohmann::json* node = &j;
  std::size_t start = 0;
  for (;;) {
    std::size_t dot = key.find('.', start);
    std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) throw ugift::ConfigError("--set has an empty path segment: " + key);
    if (dot == std::string::npos) {
      auto parsed = nlohmann::json::parse(value, nullptr, false);
      (*node)[part] = parsed.is_discarded() ? nlohmann::json(value) : parsed;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

ugift::RunConfig build_config(const CommonFlags& f) {
  nlohmann::json j = nlohmann::json::object();
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path, std::ios::binary);
    if (!in) throw ugift::ConfigError("cannot open config file: " + f.config_path);
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ugift::ConfigError(f.config_path + ": malformed config JSON: " + e.what());
    }
  }
  for (const auto& kv : f.overrides) apply_override(j, kv);
  if (f.seed) j["seed"] = *f.seed;
  if (f.out_dir) j["out_dir"] = *f.out_dir;
  if (f.rounds) j["selftrain"]["rounds"] = *f.rounds;
  if (f.passes) j["selftrain"]["passes"] = *f.passes;
  if (f.pool) j["selftrain"]["pool"] = *f.pool;
  if (f.select) j["selftrain"]["select"] = *f.select;
  if (f.alpha) j["selftrain"]["alpha"] = *f.alpha;
  if (f.weight_mode) j["selftrain"]["weight_mode"] = *f.weight_mode;
  if (f.k_shot) j["split"]["k_shot"] = *f.k_shot;
  if (f.ratio) j["split"]["ratio"] = *f.ratio;
  if (f.format) j["data"]["format"] = *f.format;
  if (f.labeled) j["data"]["labeled"] = *f.labeled;
  if (f.unlabeled) j["data"]["unlabeled"] = *f.unlabeled;
  if (f.validation) j["data"]["validation"] = *f.validation;
  if (f.test) j["data"]["test"] = *f.test;
  if (f.jobs) j["jobs"] = *f.jobs;
  return ugift::run_config_from_json(j);
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    std::string part = text.substr(start, comma == std::string::npos ? comma : comma - start);
    if (!part.empty()) out.push_back(std::stoi(part));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw ugift::ConfigError("expected a comma-separated integer list");
  return out;
}

std::vector<ugift::ClassRatio> parse_ratio_list(const std::string& text) {
  std::vector<ugift::ClassRatio> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    std::string part = text.substr(start, comma == std::string::npos ? comma : comma - start);
    if (!part.empty()) out.push_back(ugift::parse_ratio(part));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw ugift::ConfigError("expected a comma-separated ratio list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uncertainty-guided self-training for few-shot text classification"};
  app.set_version_flag("--version", ugift::kVersion);
  app.require_subcommand(1);

  CommonFlags flags;
  std::string checkpoint_path;
  std::string sweep_kind = "k";
  std::string sweep_k_values = "2,5,10,20,50,100,500,1000";
  std::string sweep_ratios = "2:1,10:1,100:1,1:0";
  int sweep_seeds = 5;
  bool no_dump_records = false;

  auto* train = app.add_subcommand("train", "supervised baseline on the labeled set");
  add_common_flags(train, flags);

  auto* selftrain = app.add_subcommand("selftrain", "full uncertainty-guided self-training run");
  add_common_flags(selftrain, flags);
  selftrain->add_flag("--no-dump-records", no_dump_records,
                      "skip per-round pseudo-label record dumps");

  auto* score = app.add_subcommand("score", "rank an unlabeled pool by selection score");
  add_common_flags(score, flags);
  score->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();

  auto* evaluate = app.add_subcommand("evaluate", "metrics for a checkpoint on a labeled set");
  add_common_flags(evaluate, flags);
  evaluate->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();

  auto* sweep = app.add_subcommand("sweep", "K-shot or imbalance-ratio sweep to CSV");
  add_common_flags(sweep, flags);
  sweep->add_option("--sweep", sweep_kind, "sweep kind: k or ratio");
  sweep->add_option("--k-values", sweep_k_values, "comma-separated K values");
  sweep->add_option("--ratios", sweep_ratios, "comma-separated a:b ratios");
  sweep->add_option("--seeds", sweep_seeds, "repetitions per cell");

  auto* synth = app.add_subcommand("synth", "generate a synthetic labeled corpus");
  add_common_flags(synth, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);  // --help / --version
    }
    app.exit(e);
    return 2;
  }

  try {
    ugift::RunConfig cfg = build_config(flags);
    if (train->parsed()) {
      ugift::cmd_train(cfg);
    } else if (selftrain->parsed()) {
      if (no_dump_records) cfg.dump_records = false;
      ugift::cmd_selftrain(cfg);
    } else if (score->parsed()) {
      ugift::cmd_score(cfg, checkpoint_path);
    } else if (evaluate->parsed()) {
      ugift::cmd_evaluate(cfg, checkpoint_path);
    } else if (sweep->parsed()) {
      ugift::SweepSpec spec;
      if (sweep_kind == "k") {
        spec.kind = ugift::SweepSpec::Kind::k_shot;
        spec.k_values = parse_int_list(sweep_k_values);
      } else if (sweep_kind == "ratio") {
        spec.kind = ugift::SweepSpec::Kind::ratio;
        spec.ratios = parse_ratio_list(sweep_ratios);
      } else {
        throw ugift::ConfigError("unknown sweep kind '" + sweep_kind + "' (expected k or ratio)");
      }
      spec.seeds = sweep_seeds;
      ugift::cmd_sweep(cfg, spec);
    } else if (synth->parsed()) {
      ugift::cmd_synth(cfg);
    }
  } catch (const ugift::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
