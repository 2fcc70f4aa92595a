#include "ugift/selftrain.hpp"

#include <algorithm>
#include <numeric>

#include "ugift/error.hpp"
#include "ugift/rng.hpp"

namespace ugift {

void SelfTrainConfig::validate() const {
  if (passes < 1) throw ConfigError("selftrain: passes must be >= 1");
  if (rounds < 0) throw ConfigError("selftrain: rounds must be >= 0");
  if (pool_draw < 1) throw ConfigError("selftrain: pool draw must be >= 1");
  if (select_count < 1) throw ConfigError("selftrain: select count must be >= 1");
  if (select_count > pool_draw) {
    throw ConfigError("selftrain: select count exceeds pool draw");
  }
  if (alpha <= 0.0) throw ConfigError("selftrain: alpha must be positive");
  supervised.validate();
  round_tune.validate();
}

ModelParams train_base(const LabeledSet& labeled, const FeatureConfig& fcfg,
                       const ModelConfig& mcfg, const TrainConfig& tcfg) {
  if (labeled.examples.empty()) throw DataError("train_base: empty labeled set");
  if (mcfg.input_dim != fcfg.dim) {
    throw ConfigError("train_base: model input dim disagrees with feature dim");
  }
  if (mcfg.num_classes != labeled.num_classes) {
    throw ConfigError("train_base: model class count disagrees with corpus");
  }
  std::vector<WeightedExample> data;
  data.reserve(labeled.examples.size());
  for (const auto& e : labeled.examples) {
    data.push_back({vectorize_text(e.text, fcfg), *e.label, 1.0});
  }
  auto initial = init_model(mcfg, SeedTree::derive(tcfg.seed, "base-init"));
  return train(initial, data, tcfg, DropoutMode::on).params;
}

PoolState::PoolState(const UnlabeledSet& pool, const FeatureConfig& fcfg)
    : source_(&pool), vectors_(vectorize_batch(pool.examples(), fcfg)) {
  alive_.resize(pool.size());
  std::iota(alive_.begin(), alive_.end(), std::size_t{0});
}

std::vector<std::size_t> PoolState::draw(std::size_t count, std::uint64_t seed, int round) {
  if (alive_.empty()) throw DataError("pool draw from an empty pool");
  count = std::min(count, alive_.size());
  Rng rng(SeedTree::derive(seed, "pool-draw", {static_cast<std::uint64_t>(round)}));
  std::vector<std::size_t> drawn;
  drawn.reserve(count);
  for (std::size_t pos : rng.sample_without_replacement(alive_.size(), count)) {
    drawn.push_back(alive_[pos]);
  }
  return drawn;
}

const FeatureVector& PoolState::vector_at(std::size_t source_index) const {
  return vectors_.at(source_index);
}

void PoolState::remove(const std::vector<std::size_t>& source_indices) {
  std::vector<bool> gone(vectors_.size(), false);
  for (std::size_t i : source_indices) gone.at(i) = true;
  std::erase_if(alive_, [&](std::size_t i) { return gone[i]; });
}

RoundResult run_round(const ModelParams& params, PoolState& pool,
                      const std::vector<WeightedExample>& labeled_replay,
                      const SelfTrainConfig& cfg, int round) {
  cfg.validate();
  auto drawn = pool.draw(static_cast<std::size_t>(cfg.pool_draw), cfg.seed, round);

  UnlabeledSet drawn_set = pool.source().subset(drawn);
  std::vector<FeatureVector> drawn_vectors;
  drawn_vectors.reserve(drawn.size());
  for (std::size_t i : drawn) drawn_vectors.push_back(pool.vector_at(i));

  const std::uint64_t mc_key =
      SeedTree::derive(cfg.seed, "mc-round", {static_cast<std::uint64_t>(round)});
  auto records = build_records(drawn_set, drawn_vectors, params, cfg.passes, cfg.alpha,
                               cfg.weight_mode, mc_key);

  // Rank: score descending == mutual information ascending; ids settle ties.
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (records[a].mutual_info != records[b].mutual_info) {
      return records[a].mutual_info < records[b].mutual_info;
    }
    return records[a].id < records[b].id;
  });
  const std::size_t take = std::min(static_cast<std::size_t>(cfg.select_count), order.size());

  RoundResult out{params, {}};
  RoundLog& log = out.log;
  log.round = round;
  log.pool_ids.reserve(records.size());
  for (const auto& r : records) log.pool_ids.push_back(r.id);
  log.pseudo_histogram.assign(static_cast<std::size_t>(params.cfg.num_classes), 0);

  std::vector<WeightedExample> tune_data;
  tune_data.reserve(take + labeled_replay.size());
  std::vector<std::size_t> selected_source;
  selected_source.reserve(take);
  double info_pool = 0.0, info_selected = 0.0;
  for (const auto& r : records) info_pool += r.mutual_info;
  for (std::size_t k = 0; k < take; ++k) {
    const auto& rec = records[order[k]];
    log.selected_ids.push_back(rec.id);
    ++log.pseudo_histogram[static_cast<std::size_t>(rec.pseudo_label)];
    info_selected += rec.mutual_info;
    tune_data.push_back({drawn_vectors[order[k]], rec.pseudo_label, rec.weight});
    selected_source.push_back(drawn[order[k]]);
  }
  log.mean_mutual_info_pool = info_pool / static_cast<double>(records.size());
  log.mean_mutual_info_selected = info_selected / static_cast<double>(take);
  log.records = std::move(records);

  if (cfg.replay_labeled) {
    tune_data.insert(tune_data.end(), labeled_replay.begin(), labeled_replay.end());
  }

  TrainConfig tcfg = cfg.round_tune;
  tcfg.seed = SeedTree::derive(cfg.seed, "round-tune", {static_cast<std::uint64_t>(round)});
  out.params = train(params, tune_data, tcfg, DropoutMode::on).params;

  if (cfg.remove_selected) {
    pool.remove(selected_source);
  }
  return out;
}

SelfTrainOutcome run_selftrain(const LabeledSet& labeled, const UnlabeledSet& unlabeled,
                               const LabeledSet& validation, const LabeledSet* test,
                               const FeatureConfig& fcfg, const ModelConfig& mcfg,
                               const SelfTrainConfig& cfg) {
  cfg.validate();
  if (validation.examples.empty()) throw DataError("run_selftrain: empty validation set");

  auto vectorize_labeled = [&](const LabeledSet& set) {
    std::vector<FeatureVector> vs;
    std::vector<int> ys;
    vs.reserve(set.examples.size());
    ys.reserve(set.examples.size());
    for (const auto& e : set.examples) {
      vs.push_back(vectorize_text(e.text, fcfg));
      ys.push_back(*e.label);
    }
    return std::make_pair(std::move(vs), std::move(ys));
  };
  auto [val_x, val_y] = vectorize_labeled(validation);

  TrainConfig sup = cfg.supervised;
  sup.seed = SeedTree::derive(cfg.seed, "supervised");
  ModelParams baseline = train_base(labeled, fcfg, mcfg, sup);

  SelfTrainOutcome out{.report = {}, .baseline = baseline, .best = baseline};
  SelfTrainReport& report = out.report;
  report.baseline_validation = evaluate(baseline, val_x, val_y);
  report.best_validation = report.baseline_validation;

  std::vector<FeatureVector> test_x;
  std::vector<int> test_y;
  if (test != nullptr && !test->examples.empty()) {
    std::tie(test_x, test_y) = vectorize_labeled(*test);
    report.baseline_test = evaluate(baseline, test_x, test_y);
  }

  std::vector<WeightedExample> replay;
  if (cfg.replay_labeled) {
    replay.reserve(labeled.examples.size());
    for (const auto& e : labeled.examples) {
      replay.push_back({vectorize_text(e.text, fcfg), *e.label, 1.0});
    }
  }

  PoolState pool(unlabeled, fcfg);
  ModelParams current = baseline;
  double best_acc = -1.0;
  for (int round = 1; round <= cfg.rounds; ++round) {
    if (pool.remaining() == 0) break;  // pool consumed; nothing left to label
    auto rr = run_round(current, pool, replay, cfg, round);
    current = std::move(rr.params);
    rr.log.validation = evaluate(current, val_x, val_y);
    if (rr.log.validation.accuracy > best_acc) {
      best_acc = rr.log.validation.accuracy;
      report.best_round = round;
      report.best_validation = rr.log.validation;
      out.best = current;
    }
    report.rounds.push_back(std::move(rr.log));
  }

  const Metrics* base_ref = &report.baseline_validation;
  const Metrics* best_ref = &report.best_validation;
  if (!test_x.empty()) {
    report.best_test = report.best_round == 0 ? *report.baseline_test
                                              : evaluate(out.best, test_x, test_y);
    base_ref = &*report.baseline_test;
    best_ref = &*report.best_test;
  }
  report.delta_acc = best_ref->accuracy - base_ref->accuracy;
  report.delta_f1 = best_ref->f1 - base_ref->f1;
  return out;
}

}  // namespace ugift
