#include "ugift/uncertainty.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "ugift/error.hpp"

namespace ugift {

namespace {

double entropy(const double* p, int n) {
  double h = 0.0;
  for (int i = 0; i < n; ++i) {
    if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
  }
  return h;
}

}  // namespace

MCPrediction mc_predict(const ModelParams& params, const FeatureVector& x, int passes,
                        std::uint64_t round, std::uint64_t sample) {
  if (passes < 1) throw ConfigError("mc_predict: need at least one pass");
  MCPrediction mc;
  mc.passes = passes;
  mc.num_classes = params.cfg.num_classes;
  mc.probs.reserve(static_cast<std::size_t>(passes) * mc.num_classes);
  for (int t = 0; t < passes; ++t) {
    DropoutKey key{round, static_cast<std::uint64_t>(t), sample};
    auto probs = forward(params, x, &key);
    mc.probs.insert(mc.probs.end(), probs.begin(), probs.end());
  }
  return mc;
}

std::vector<double> mean_probs(const MCPrediction& mc) {
  std::vector<double> mean(static_cast<std::size_t>(mc.num_classes), 0.0);
  for (int t = 0; t < mc.passes; ++t) {
    for (int c = 0; c < mc.num_classes; ++c) {
      mean[static_cast<std::size_t>(c)] += mc.at(t, c);
    }
  }
  for (auto& v : mean) v /= static_cast<double>(mc.passes);
  return mean;
}

std::vector<int> vote_labels(const MCPrediction& mc) {
  std::vector<int> votes(static_cast<std::size_t>(mc.num_classes), 0);
  for (int t = 0; t < mc.passes; ++t) {
    int best = 0;
    for (int c = 1; c < mc.num_classes; ++c) {
      if (mc.at(t, c) > mc.at(t, best)) best = c;
    }
    ++votes[static_cast<std::size_t>(best)];
  }
  return votes;
}

PseudoLabel majority_pseudo_label(const std::vector<int>& votes,
                                  const std::vector<double>& mean, int passes) {
  if (votes.empty() || votes.size() != mean.size()) {
    throw DataError("majority_pseudo_label: votes and mean sizes disagree");
  }
  int total = 0;
  for (int v : votes) total += v;
  if (total != passes) throw DataError("majority_pseudo_label: votes do not sum to T");

  int top = *std::max_element(votes.begin(), votes.end());
  std::vector<int> tied;
  for (std::size_t c = 0; c < votes.size(); ++c) {
    if (votes[c] == top) tied.push_back(static_cast<int>(c));
  }
  if (tied.size() == 1) {
    return {tied.front(), false};
  }
  // Vote tie: prefer the larger posterior mean, then the lower index.
  int best = tied.front();
  for (int c : tied) {
    if (mean[static_cast<std::size_t>(c)] > mean[static_cast<std::size_t>(best)]) best = c;
  }
  return {best, true};
}

double bald(const MCPrediction& mc) {
  auto mean = mean_probs(mc);
  double h_mean = entropy(mean.data(), mc.num_classes);
  double h_rows = 0.0;
  for (int t = 0; t < mc.passes; ++t) {
    h_rows += entropy(mc.probs.data() + static_cast<std::size_t>(t) * mc.num_classes,
                      mc.num_classes);
  }
  h_rows /= static_cast<double>(mc.passes);
  double e = h_mean - h_rows;
  return std::clamp(e, 0.0, std::log(static_cast<double>(mc.num_classes)));
}

ScoreResult scores(const std::vector<double>& mutual_info, int num_classes) {
  if (mutual_info.empty()) throw DataError("scores: empty pool");
  ScoreResult out;
  out.scores.resize(mutual_info.size());
  double denom = 0.0;
  for (double e : mutual_info) denom += 1.0 - e;
  if (denom > 0.0) {
    for (std::size_t i = 0; i < mutual_info.size(); ++i) {
      out.scores[i] = (1.0 - mutual_info[i]) / denom;
    }
    return out;
  }
  // With C > 2 the terms 1 - E can go negative; shift by the entropy bound.
  out.used_fallback = true;
  const double bound = std::log(static_cast<double>(num_classes));
  double shifted = 0.0;
  for (double e : mutual_info) shifted += bound - e;
  if (shifted <= 0.0) {
    // Every sample sits at the bound; no ordering information remains.
    std::fill(out.scores.begin(), out.scores.end(),
              1.0 / static_cast<double>(mutual_info.size()));
    return out;
  }
  for (std::size_t i = 0; i < mutual_info.size(); ++i) {
    out.scores[i] = (bound - mutual_info[i]) / shifted;
  }
  return out;
}

double pred_variance(const MCPrediction& mc) {
  auto mean = mean_probs(mc);
  double acc = 0.0;
  for (int c = 0; c < mc.num_classes; ++c) {
    double var = 0.0;
    for (int t = 0; t < mc.passes; ++t) {
      double d = mc.at(t, c) - mean[static_cast<std::size_t>(c)];
      var += d * d;
    }
    acc += var / static_cast<double>(mc.passes);
  }
  return acc / static_cast<double>(mc.num_classes);
}

double stability_weight(double variance, double alpha, WeightMode mode) {
  if (variance < 0.0) throw DataError("stability_weight: negative variance");
  if (alpha <= 0.0) throw ConfigError("stability_weight: alpha must be positive");
  if (mode == WeightMode::paper_literal) {
    return alpha * variance;
  }
  return std::exp(-variance / alpha);
}

std::vector<PseudoLabelRecord> build_records(const UnlabeledSet& pool,
                                             const std::vector<FeatureVector>& vectors,
                                             const ModelParams& params, int passes,
                                             double alpha, WeightMode mode,
                                             std::uint64_t round) {
  if (pool.size() != vectors.size()) {
    throw DataError("build_records: pool and vector counts differ");
  }
  std::vector<PseudoLabelRecord> records;
  records.reserve(pool.size());
  std::vector<double> infos;
  infos.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    auto mc = mc_predict(params, vectors[i], passes, round, static_cast<std::uint64_t>(i));
    PseudoLabelRecord rec;
    rec.id = pool.examples()[i].id;
    rec.votes = vote_labels(mc);
    rec.mean_probs = mean_probs(mc);
    auto pl = majority_pseudo_label(rec.votes, rec.mean_probs, passes);
    rec.pseudo_label = pl.label;
    rec.tie_broken = pl.tie_broken;
    rec.mutual_info = bald(mc);
    rec.variance = pred_variance(mc);
    rec.weight = stability_weight(rec.variance, alpha, mode);
    infos.push_back(rec.mutual_info);
    records.push_back(std::move(rec));
  }
  auto sc = scores(infos, params.cfg.num_classes);
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].score = sc.scores[i];
  }
  return records;
}

std::string record_to_json(const PseudoLabelRecord& rec) {
  nlohmann::ordered_json j;
  j["id"] = rec.id;
  j["pseudo_label"] = rec.pseudo_label;
  j["votes"] = rec.votes;
  j["mean_probs"] = rec.mean_probs;
  j["mutual_info"] = rec.mutual_info;
  j["score"] = rec.score;
  j["variance"] = rec.variance;
  j["weight"] = rec.weight;
  j["tie_broken"] = rec.tie_broken;
  return j.dump();
}

std::string records_to_jsonl(const std::vector<PseudoLabelRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += record_to_json(r);
    out += '\n';
  }
  return out;
}

PseudoLabelRecord record_from_json(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed record JSON: ") + e.what());
  }
  PseudoLabelRecord rec;
  rec.id = j.at("id").get<std::string>();
  rec.pseudo_label = j.at("pseudo_label").get<int>();
  rec.votes = j.at("votes").get<std::vector<int>>();
  rec.mean_probs = j.at("mean_probs").get<std::vector<double>>();
  rec.mutual_info = j.at("mutual_info").get<double>();
  rec.score = j.at("score").get<double>();
  rec.variance = j.at("variance").get<double>();
  rec.weight = j.at("weight").get<double>();
  rec.tie_broken = j.at("tie_broken").get<bool>();
  return rec;
}

}  // namespace ugift
