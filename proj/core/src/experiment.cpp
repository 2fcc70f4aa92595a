#include "ugift/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <thread>

#include "ugift/error.hpp"
#include "ugift/rng.hpp"
#include "ugift/serialize.hpp"

namespace ugift {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path.string());
  out << text;
}

fs::path ensure_out_dir(const RunConfig& cfg) {
  fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory: " + cfg.out_dir);
  return dir;
}

LabeledSet load_labeled_or_fail(const std::string& path, const RunConfig& cfg) {
  if (path.empty()) {
    throw ConfigError("no labeled dataset configured (data.labeled)");
  }
  CorpusLoadOptions opts{cfg.data.format, cfg.data.num_classes, cfg.data.dedup};
  return load_labeled_corpus(path, opts);
}

ModelConfig model_config_for(const RunConfig& cfg, int num_classes) {
  return ModelConfig{cfg.features.dim, cfg.model_hidden, num_classes, cfg.model_dropout};
}

void write_provenance(const RunConfig& cfg, const fs::path& dir) {
  write_text(dir / "provenance.json", provenance_json(cfg).dump(2) + "\n");
}

ordered_json selftrain_header(const RunConfig& cfg) {
  ordered_json h;
  h["passes"] = cfg.selftrain.passes;
  h["pool"] = cfg.selftrain.pool_draw;
  h["select"] = cfg.selftrain.select_count;
  h["rounds"] = cfg.selftrain.rounds;
  h["alpha"] = cfg.selftrain.alpha;
  h["weight_mode"] = weight_mode_name(cfg.selftrain.weight_mode);
  h["replay_labeled"] = cfg.selftrain.replay_labeled;
  h["remove_selected"] = cfg.selftrain.remove_selected;
  return h;
}

// Ranked order used for record dumps: score descending, ties by ascending
// mutual information and then id.
std::vector<PseudoLabelRecord> ranked(std::vector<PseudoLabelRecord> records) {
  std::sort(records.begin(), records.end(),
            [](const PseudoLabelRecord& a, const PseudoLabelRecord& b) {
              if (a.score != b.score) return a.score > b.score;
              if (a.mutual_info != b.mutual_info) return a.mutual_info < b.mutual_info;
              return a.id < b.id;
            });
  return records;
}

const Metrics& pick_eval_metrics(const SelfTrainReport& report, bool test_available) {
  if (test_available) return *report.best_test;
  return report.best_validation;
}

struct CellResult {
  double baseline_acc = 0.0, baseline_f1 = 0.0;
  double ugift_acc = 0.0, ugift_f1 = 0.0;
};

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // sample stddev; 0 for a single seed
};

Aggregate aggregate(const std::vector<double>& xs) {
  Aggregate a;
  if (xs.empty()) return a;
  a.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double sq = 0.0;
    for (double x : xs) sq += (x - a.mean) * (x - a.mean);
    a.stddev = std::sqrt(sq / static_cast<double>(xs.size() - 1));
  }
  return a;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

ExperimentData split_experiment_data(const LabeledSet& source, const SplitConfig& split,
                                     std::uint64_t seed) {
  ExperimentData data;
  LabeledSet rest = source;
  if (split.test_size > 0) {
    auto [test, remainder] = sample_k_shot(rest, split.test_size,
                                           SeedTree::derive(seed, "split-test"));
    data.test = std::move(test);
    rest = std::move(remainder);
  } else {
    data.test.num_classes = source.num_classes;
  }
  if (split.validation_size > 0) {
    auto [val, remainder] = sample_k_shot(rest, split.validation_size,
                                          SeedTree::derive(seed, "split-validation"));
    data.validation = std::move(val);
    rest = std::move(remainder);
  } else {
    data.validation.num_classes = source.num_classes;
  }
  if (split.k_shot > 0) {
    auto [few, remainder] = sample_k_shot(rest, split.k_shot,
                                          SeedTree::derive(seed, "split-kshot"));
    data.labeled = std::move(few);
    rest = std::move(remainder);
  } else {
    data.labeled = std::move(rest);
    rest = LabeledSet{.examples = {}, .num_classes = source.num_classes};
  }
  auto pool = UnlabeledSet::from_examples(rest.examples);
  if (split.unlabeled_size > 0 && !pool.empty()) {
    data.unlabeled = build_imbalanced_pool(pool, split.ratio,
                                           static_cast<std::size_t>(split.unlabeled_size),
                                           SeedTree::derive(seed, "split-pool"));
  } else {
    data.unlabeled = std::move(pool);
  }
  return data;
}

ExperimentData prepare_experiment_data(const RunConfig& cfg) {
  CorpusLoadOptions opts{cfg.data.format, cfg.data.num_classes, cfg.data.dedup};
  LabeledSet source = load_labeled_or_fail(cfg.data.labeled, cfg);

  const bool explicit_val = !cfg.data.validation.empty();
  const bool explicit_test = !cfg.data.test.empty();
  const bool explicit_unlabeled = !cfg.data.unlabeled.empty();

  SplitConfig split = cfg.split;
  if (explicit_val) split.validation_size = 0;
  if (explicit_test) split.test_size = 0;
  if (explicit_unlabeled) split.unlabeled_size = 0;

  ExperimentData data;
  if (explicit_val || explicit_test || explicit_unlabeled) {
    // Explicit sets come from their own files; only the K-shot draw applies
    // to the source corpus.
    data.labeled = source;
    if (split.k_shot > 0) {
      auto [few, remainder] = sample_k_shot(source, split.k_shot,
                                            SeedTree::derive(cfg.seed, "split-kshot"));
      data.labeled = std::move(few);
      if (!explicit_unlabeled) {
        auto pool = UnlabeledSet::from_examples(remainder.examples);
        if (cfg.split.unlabeled_size > 0 && !pool.empty()) {
          pool = build_imbalanced_pool(pool, cfg.split.ratio,
                                       static_cast<std::size_t>(cfg.split.unlabeled_size),
                                       SeedTree::derive(cfg.seed, "split-pool"));
        }
        data.unlabeled = std::move(pool);
      }
    }
    data.validation.num_classes = source.num_classes;
    data.test.num_classes = source.num_classes;
    if (explicit_val) data.validation = load_labeled_corpus(cfg.data.validation, opts);
    if (explicit_test) data.test = load_labeled_corpus(cfg.data.test, opts);
    if (explicit_unlabeled) {
      data.unlabeled = load_unlabeled_corpus(cfg.data.unlabeled, opts);
    }
  } else {
    data = split_experiment_data(source, split, cfg.seed);
  }
  return data;
}

void cmd_train(const RunConfig& cfg) {
  cfg.validate();
  auto dir = ensure_out_dir(cfg);
  auto data = prepare_experiment_data(cfg);
  if (data.labeled.examples.empty()) throw DataError("train: no labeled examples after split");

  TrainConfig tcfg = cfg.selftrain.supervised;
  tcfg.seed = SeedTree::derive(cfg.seed, "supervised");
  ModelConfig mcfg = model_config_for(cfg, data.labeled.num_classes);
  ModelParams model = train_base(data.labeled, cfg.features, mcfg, tcfg);

  const LabeledSet& eval_set = !data.test.examples.empty() ? data.test : data.validation;
  if (eval_set.examples.empty()) {
    throw ConfigError("train: no evaluation split configured (test or validation)");
  }
  std::vector<int> labels;
  std::vector<FeatureVector> vectors;
  for (const auto& e : eval_set.examples) {
    vectors.push_back(vectorize_text(e.text, cfg.features));
    labels.push_back(*e.label);
  }
  Metrics m = evaluate(model, vectors, labels, cfg.f1_mode);

  save_checkpoint(model, (dir / "model.json").string());
  ordered_json j = metrics_to_json(m);
  j["provenance"] = provenance_json(cfg);
  write_text(dir / "metrics.json", j.dump(2) + "\n");
  write_provenance(cfg, dir);
}

void cmd_selftrain(const RunConfig& cfg) {
  cfg.validate();
  auto dir = ensure_out_dir(cfg);
  auto data = prepare_experiment_data(cfg);
  if (data.validation.examples.empty()) {
    throw ConfigError("selftrain: a validation split is required for best-round selection");
  }

  SelfTrainConfig stcfg = cfg.selftrain;
  stcfg.seed = cfg.seed;
  ModelConfig mcfg = model_config_for(cfg, data.labeled.num_classes);
  auto outcome = run_selftrain(data.labeled, data.unlabeled, data.validation,
                               data.test.examples.empty() ? nullptr : &data.test,
                               cfg.features, mcfg, stcfg);

  save_checkpoint(outcome.baseline, (dir / "model_baseline.json").string());
  const std::string best_path = (dir / "model_best.json").string();
  save_checkpoint(outcome.best, best_path);
  outcome.report.best_checkpoint = best_path;

  if (cfg.dump_records) {
    for (const auto& round : outcome.report.rounds) {
      write_text(dir / ("records_round_" + std::to_string(round.round) + ".jsonl"),
                 records_to_jsonl(ranked(round.records)));
    }
  }

  ordered_json j;
  j["header"] = selftrain_header(cfg);
  j["provenance"] = provenance_json(cfg);
  j.update(report_to_json(outcome.report));
  write_text(dir / "report.json", j.dump(2) + "\n");
  write_provenance(cfg, dir);
}

void cmd_score(const RunConfig& cfg, const std::string& checkpoint_path) {
  cfg.validate();
  auto dir = ensure_out_dir(cfg);
  ModelParams model = load_checkpoint(checkpoint_path);
  if (model.cfg.input_dim != cfg.features.dim) {
    throw ConfigError("checkpoint input dim " + std::to_string(model.cfg.input_dim) +
                      " does not match feature dim " + std::to_string(cfg.features.dim));
  }
  if (cfg.data.unlabeled.empty()) {
    throw ConfigError("score: no unlabeled dataset configured (data.unlabeled)");
  }
  CorpusLoadOptions opts{cfg.data.format, cfg.data.num_classes, cfg.data.dedup};
  UnlabeledSet pool = load_unlabeled_corpus(cfg.data.unlabeled, opts);
  auto vectors = vectorize_batch(pool.examples(), cfg.features);
  auto records = build_records(pool, vectors, model, cfg.selftrain.passes, cfg.selftrain.alpha,
                               cfg.selftrain.weight_mode, SeedTree::derive(cfg.seed, "score"));
  write_text(dir / "records.jsonl", records_to_jsonl(ranked(std::move(records))));
  write_provenance(cfg, dir);
}

void cmd_evaluate(const RunConfig& cfg, const std::string& checkpoint_path) {
  cfg.validate();
  auto dir = ensure_out_dir(cfg);
  ModelParams model = load_checkpoint(checkpoint_path);
  if (model.cfg.input_dim != cfg.features.dim) {
    throw ConfigError("checkpoint input dim " + std::to_string(model.cfg.input_dim) +
                      " does not match feature dim " + std::to_string(cfg.features.dim));
  }
  std::string path = !cfg.data.test.empty() ? cfg.data.test
                     : !cfg.data.validation.empty() ? cfg.data.validation
                                                    : cfg.data.labeled;
  if (path.empty()) throw ConfigError("evaluate: no labeled dataset configured");
  CorpusLoadOptions opts{cfg.data.format, cfg.data.num_classes, cfg.data.dedup};
  LabeledSet set = load_labeled_corpus(path, opts);
  if (set.num_classes > model.cfg.num_classes) {
    throw ConfigError("evaluate: corpus has more classes than the checkpoint");
  }
  std::vector<int> labels;
  std::vector<FeatureVector> vectors;
  for (const auto& e : set.examples) {
    vectors.push_back(vectorize_text(e.text, cfg.features));
    labels.push_back(*e.label);
  }
  Metrics m = evaluate(model, vectors, labels, cfg.f1_mode);
  ordered_json j = metrics_to_json(m);
  j["provenance"] = provenance_json(cfg);
  write_text(dir / "metrics.json", j.dump(2) + "\n");
  write_provenance(cfg, dir);
}

void cmd_synth(const RunConfig& cfg) {
  cfg.validate();
  auto dir = ensure_out_dir(cfg);
  LabeledSet set = synth_corpus(cfg.synth, SeedTree::derive(cfg.seed, "synth"));
  if (cfg.data.format == CorpusFormat::jsonl) {
    write_jsonl(set.examples, (dir / "synth.jsonl").string());
  } else {
    write_csv(set.examples, (dir / "synth.csv").string());
  }
  write_provenance(cfg, dir);
}

std::string run_sweep_csv(const RunConfig& cfg, const SweepSpec& spec) {
  cfg.validate();
  if (spec.seeds < 1) throw ConfigError("sweep: need at least one seed");
  const bool ratio_sweep = spec.kind == SweepSpec::Kind::ratio;
  const std::size_t num_values = ratio_sweep ? spec.ratios.size() : spec.k_values.size();
  if (num_values == 0) throw ConfigError("sweep: no values given");

  // One shared source corpus; partitions vary per cell seed.
  LabeledSet source;
  if (cfg.data.labeled.empty()) {
    source = synth_corpus(cfg.synth, SeedTree::derive(cfg.seed, "sweep-synth"));
  } else {
    CorpusLoadOptions opts{cfg.data.format, cfg.data.num_classes, cfg.data.dedup};
    source = load_labeled_corpus(cfg.data.labeled, opts);
  }

  const std::size_t cells = num_values * static_cast<std::size_t>(spec.seeds);
  std::vector<CellResult> results(cells);
  std::vector<std::string> errors(cells);
  std::atomic<std::size_t> next{0};

  auto run_cell = [&](std::size_t cell) {
    const std::size_t vi = cell / static_cast<std::size_t>(spec.seeds);
    const std::size_t rep = cell % static_cast<std::size_t>(spec.seeds);
    SplitConfig split = cfg.split;
    if (ratio_sweep) {
      split.ratio = spec.ratios[vi];
    } else {
      split.k_shot = spec.k_values[vi];
    }
    const std::uint64_t cell_seed =
        SeedTree::derive(cfg.seed, "sweep-cell", {static_cast<std::uint64_t>(vi), rep});
    auto data = split_experiment_data(source, split, cell_seed);
    if (data.test.examples.empty()) throw ConfigError("sweep: test split is empty");
    if (data.validation.examples.empty()) throw ConfigError("sweep: validation split is empty");

    SelfTrainConfig stcfg = cfg.selftrain;
    stcfg.seed = cell_seed;
    ModelConfig mcfg = model_config_for(cfg, data.labeled.num_classes);
    auto outcome = run_selftrain(data.labeled, data.unlabeled, data.validation, &data.test,
                                 cfg.features, mcfg, stcfg);
    CellResult r;
    r.baseline_acc = outcome.report.baseline_test->accuracy;
    r.baseline_f1 = outcome.report.baseline_test->f1;
    const Metrics& best = pick_eval_metrics(outcome.report, true);
    r.ugift_acc = best.accuracy;
    r.ugift_f1 = best.f1;
    results[cell] = r;
  };

  auto worker = [&]() {
    for (;;) {
      std::size_t cell = next.fetch_add(1);
      if (cell >= cells) return;
      try {
        run_cell(cell);
      } catch (const std::exception& e) {
        errors[cell] = e.what();
      }
    }
  };

  const int jobs = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(cells)));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(jobs));
    for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  for (std::size_t cell = 0; cell < cells; ++cell) {
    if (!errors[cell].empty()) {
      throw DataError("sweep cell " + std::to_string(cell) + " failed: " + errors[cell]);
    }
  }

  std::string csv = "sweep,value,method,seeds,acc_mean,acc_std,f1_mean,f1_std\n";
  const std::string kind = ratio_sweep ? "ratio" : "k";
  for (std::size_t vi = 0; vi < num_values; ++vi) {
    std::string value = ratio_sweep ? ratio_to_string(spec.ratios[vi])
                                    : std::to_string(spec.k_values[vi]);
    std::vector<double> base_acc, base_f1, ug_acc, ug_f1;
    for (int rep = 0; rep < spec.seeds; ++rep) {
      const auto& r = results[vi * static_cast<std::size_t>(spec.seeds) +
                              static_cast<std::size_t>(rep)];
      base_acc.push_back(r.baseline_acc);
      base_f1.push_back(r.baseline_f1);
      ug_acc.push_back(r.ugift_acc);
      ug_f1.push_back(r.ugift_f1);
    }
    auto arow = [&](const char* method, const std::vector<double>& acc,
                    const std::vector<double>& f1) {
      auto a = aggregate(acc);
      auto f = aggregate(f1);
      csv += kind + "," + value + "," + method + "," + std::to_string(spec.seeds) + "," +
             format_double(a.mean) + "," + format_double(a.stddev) + "," +
             format_double(f.mean) + "," + format_double(f.stddev) + "\n";
    };
    arow("baseline", base_acc, base_f1);
    arow("ugift", ug_acc, ug_f1);
  }
  return csv;
}

void cmd_sweep(const RunConfig& cfg, const SweepSpec& spec) {
  auto dir = ensure_out_dir(cfg);
  write_text(dir / "sweep.csv", run_sweep_csv(cfg, spec));
  write_provenance(cfg, dir);
}

}  // namespace ugift
