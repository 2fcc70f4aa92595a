#include "ugift/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ugift/error.hpp"
#include "ugift/rng.hpp"

namespace ugift {

namespace {

constexpr double kLogClamp = 1e-12;

// Keep-or-scale factor for one hidden unit under one mask.
double dropout_factor(const DropoutKey& key, std::size_t unit, double p) {
  std::uint64_t h = mix64(key.round + 0x9E3779B97F4A7C15ull * key.pass);
  h = mix64(h ^ mix64(key.sample + 0x9E3779B97F4A7C15ull * unit));
  double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  return u < p ? 0.0 : 1.0 / (1.0 - p);
}

void check_dims(const ModelParams& params, const FeatureVector& x) {
  for (const auto& e : x.entries) {
    if (e.index >= static_cast<std::uint32_t>(params.cfg.input_dim)) {
      throw DataError("feature index " + std::to_string(e.index) +
                      " out of range for input dim " + std::to_string(params.cfg.input_dim));
    }
  }
}

// Hidden layer with optional dropout; shared by forward and grad.
void hidden_activations(const ModelParams& params, const FeatureVector& x,
                        const DropoutKey* key, std::vector<double>& pre,
                        std::vector<double>& post) {
  const int h = params.cfg.hidden;
  const int d = params.cfg.input_dim;
  pre.assign(static_cast<std::size_t>(h), 0.0);
  for (int i = 0; i < h; ++i) {
    double acc = params.b1[static_cast<std::size_t>(i)];
    const double* row = params.w1.data() + static_cast<std::size_t>(i) * d;
    for (const auto& e : x.entries) acc += row[e.index] * e.value;
    pre[static_cast<std::size_t>(i)] = acc;
  }
  post.resize(static_cast<std::size_t>(h));
  const double p = params.cfg.dropout;
  for (int i = 0; i < h; ++i) {
    double a = std::max(0.0, pre[static_cast<std::size_t>(i)]);
    if (key != nullptr && p > 0.0) {
      a *= dropout_factor(*key, static_cast<std::size_t>(i), p);
    }
    post[static_cast<std::size_t>(i)] = a;
  }
}

std::vector<double> softmax(const std::vector<double>& logits) {
  double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (auto& v : out) v /= sum;
  return out;
}

std::vector<double> output_probs(const ModelParams& params, const std::vector<double>& h) {
  const int c = params.cfg.num_classes;
  const int hd = params.cfg.hidden;
  std::vector<double> logits(static_cast<std::size_t>(c));
  for (int k = 0; k < c; ++k) {
    double acc = params.b2[static_cast<std::size_t>(k)];
    const double* row = params.w2.data() + static_cast<std::size_t>(k) * hd;
    for (int i = 0; i < hd; ++i) acc += row[i] * h[static_cast<std::size_t>(i)];
    logits[static_cast<std::size_t>(k)] = acc;
  }
  return softmax(logits);
}

struct AdamState {
  std::vector<double> m, v;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

void adam_step(std::vector<double>& theta, const std::vector<double>& g, AdamState& st,
               double lr, long step) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    st.m[i] = b1 * st.m[i] + (1.0 - b1) * g[i];
    st.v[i] = b2 * st.v[i] + (1.0 - b2) * g[i] * g[i];
    theta[i] -= lr * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + eps);
  }
}

void sgd_step(std::vector<double>& theta, const std::vector<double>& g, double lr) {
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * g[i];
}

}  // namespace

void ModelConfig::validate() const {
  if (input_dim < 1 || hidden < 1 || num_classes < 1) {
    throw ConfigError("model dims must be positive");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    throw ConfigError("dropout rate must be in [0, 1)");
  }
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch size must be positive");
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (learning_rate <= 0.0) throw ConfigError("learning rate must be positive");
  if (weight_decay < 0.0) throw ConfigError("weight decay must be non-negative");
}

ModelParams init_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ModelParams p;
  p.cfg = cfg;
  p.w1.resize(static_cast<std::size_t>(cfg.hidden) * cfg.input_dim);
  p.b1.assign(static_cast<std::size_t>(cfg.hidden), 0.0);
  p.w2.resize(static_cast<std::size_t>(cfg.num_classes) * cfg.hidden);
  p.b2.assign(static_cast<std::size_t>(cfg.num_classes), 0.0);

  auto fill_glorot = [&](std::vector<double>& w, int fan_in, int fan_out, const char* tag) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Rng rng(SeedTree::derive(seed, tag));
    for (auto& v : w) v = a * (2.0 * rng.uniform_open() - 1.0);
  };
  fill_glorot(p.w1, cfg.input_dim, cfg.hidden, "init-w1");
  fill_glorot(p.w2, cfg.hidden, cfg.num_classes, "init-w2");
  return p;
}

std::vector<double> forward(const ModelParams& params, const FeatureVector& x,
                            const DropoutKey* key) {
  check_dims(params, x);
  std::vector<double> pre, post;
  hidden_activations(params, x, key, pre, post);
  return output_probs(params, post);
}

std::vector<double> predict(const ModelParams& params, const FeatureVector& x) {
  return forward(params, x, nullptr);
}

double loss_ce(const std::vector<std::vector<double>>& probs_batch,
               const std::vector<int>& labels, const std::vector<double>* weights) {
  if (probs_batch.size() != labels.size()) {
    throw DataError("loss_ce: batch sizes disagree");
  }
  if (weights != nullptr && weights->size() != labels.size()) {
    throw DataError("loss_ce: weight count disagrees with batch");
  }
  if (probs_batch.empty()) throw DataError("loss_ce: empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < probs_batch.size(); ++i) {
    const auto& probs = probs_batch[i];
    int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= probs.size()) {
      throw DataError("loss_ce: label " + std::to_string(y) + " out of range");
    }
    double w = 1.0;
    if (weights != nullptr) {
      w = (*weights)[i];
      if (w < 0.0) throw DataError("loss_ce: negative weight");
    }
    double p = std::clamp(probs[static_cast<std::size_t>(y)], kLogClamp, 1.0 - kLogClamp);
    total += w * -std::log(p);
  }
  return total / static_cast<double>(probs_batch.size());
}

GradResult grad(const ModelParams& params, const std::vector<WeightedExample>& batch,
                const std::vector<DropoutKey>& keys) {
  if (batch.empty()) throw DataError("grad: empty batch");
  if (!keys.empty() && keys.size() != batch.size()) {
    throw DataError("grad: dropout key count disagrees with batch");
  }
  const int hd = params.cfg.hidden;
  const int d = params.cfg.input_dim;
  const int c = params.cfg.num_classes;
  const double p = params.cfg.dropout;
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  GradResult out;
  out.grads.w1.assign(params.w1.size(), 0.0);
  out.grads.b1.assign(params.b1.size(), 0.0);
  out.grads.w2.assign(params.w2.size(), 0.0);
  out.grads.b2.assign(params.b2.size(), 0.0);

  std::vector<double> pre, post, dz2(static_cast<std::size_t>(c)),
      dh(static_cast<std::size_t>(hd));
  double total_loss = 0.0;

  // Samples accumulate in index order so the reduction is deterministic.
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const auto& ex = batch[s];
    check_dims(params, ex.x);
    if (ex.label < 0 || ex.label >= c) {
      throw DataError("grad: label " + std::to_string(ex.label) + " out of range");
    }
    if (ex.weight < 0.0) throw DataError("grad: negative weight");
    const DropoutKey* key = keys.empty() ? nullptr : &keys[s];
    hidden_activations(params, ex.x, key, pre, post);
    auto probs = output_probs(params, post);

    double py = std::clamp(probs[static_cast<std::size_t>(ex.label)], kLogClamp, 1.0 - kLogClamp);
    total_loss += ex.weight * -std::log(py) * inv_n;

    const double scale = ex.weight * inv_n;
    for (int k = 0; k < c; ++k) {
      double delta = probs[static_cast<std::size_t>(k)] - (k == ex.label ? 1.0 : 0.0);
      dz2[static_cast<std::size_t>(k)] = scale * delta;
    }
    for (int k = 0; k < c; ++k) {
      double g = dz2[static_cast<std::size_t>(k)];
      out.grads.b2[static_cast<std::size_t>(k)] += g;
      double* row = out.grads.w2.data() + static_cast<std::size_t>(k) * hd;
      for (int i = 0; i < hd; ++i) row[i] += g * post[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < hd; ++i) {
      double acc = 0.0;
      for (int k = 0; k < c; ++k) {
        acc += params.w2[static_cast<std::size_t>(k) * hd + i] * dz2[static_cast<std::size_t>(k)];
      }
      // Backward through dropout scaling and the rectifier.
      if (key != nullptr && p > 0.0) {
        acc *= dropout_factor(*key, static_cast<std::size_t>(i), p);
      }
      if (pre[static_cast<std::size_t>(i)] <= 0.0) acc = 0.0;
      dh[static_cast<std::size_t>(i)] = acc;
    }
    for (int i = 0; i < hd; ++i) {
      double g = dh[static_cast<std::size_t>(i)];
      if (g == 0.0) continue;
      out.grads.b1[static_cast<std::size_t>(i)] += g;
      double* row = out.grads.w1.data() + static_cast<std::size_t>(i) * d;
      for (const auto& e : ex.x.entries) row[e.index] += g * e.value;
    }
  }
  out.loss = total_loss;
  return out;
}

TrainResult train(const ModelParams& params, const std::vector<WeightedExample>& data,
                  const TrainConfig& tcfg, DropoutMode dropout) {
  tcfg.validate();
  if (data.empty()) throw DataError("train: empty dataset");

  TrainResult result;
  result.params = params;
  ModelParams& model = result.params;

  AdamState st_w1(model.w1.size()), st_b1(model.b1.size()), st_w2(model.w2.size()),
      st_b2(model.b2.size());
  long step = 0;

  // Tail averaging starts at the midpoint epoch.
  const int tail_start = tcfg.epochs - tcfg.epochs / 2;
  ModelParams average = model;
  long averaged = 0;
  auto accumulate_average = [&]() {
    ++averaged;
    const double k = 1.0 / static_cast<double>(averaged);
    for (std::size_t i = 0; i < model.w1.size(); ++i) average.w1[i] += k * (model.w1[i] - average.w1[i]);
    for (std::size_t i = 0; i < model.b1.size(); ++i) average.b1[i] += k * (model.b1[i] - average.b1[i]);
    for (std::size_t i = 0; i < model.w2.size(); ++i) average.w2[i] += k * (model.w2[i] - average.w2[i]);
    for (std::size_t i = 0; i < model.b2.size(); ++i) average.b2[i] += k * (model.b2[i] - average.b2[i]);
  };

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const std::size_t bs = static_cast<std::size_t>(tcfg.batch_size);
  std::vector<WeightedExample> batch;
  std::vector<DropoutKey> keys;

  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    if (tcfg.shuffle) {
      Rng rng(SeedTree::derive(tcfg.seed, "shuffle", {static_cast<std::uint64_t>(epoch)}));
      rng.shuffle(order);
    }
    const std::uint64_t epoch_key = SeedTree::derive(tcfg.seed, "dropout",
                                                     {static_cast<std::uint64_t>(epoch)});
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      std::size_t end = std::min(order.size(), start + bs);
      batch.clear();
      keys.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(data[order[i]]);
        if (dropout == DropoutMode::on) {
          keys.push_back({epoch_key, static_cast<std::uint64_t>(batches),
                          static_cast<std::uint64_t>(i - start)});
        }
      }
      auto g = grad(model, batch, keys);
      if (!std::isfinite(g.loss)) {
        throw DataError("train: loss diverged (non-finite) at epoch " + std::to_string(epoch));
      }
      ++step;
      if (tcfg.optimizer == Optimizer::adam) {
        adam_step(model.w1, g.grads.w1, st_w1, tcfg.learning_rate, step);
        adam_step(model.b1, g.grads.b1, st_b1, tcfg.learning_rate, step);
        adam_step(model.w2, g.grads.w2, st_w2, tcfg.learning_rate, step);
        adam_step(model.b2, g.grads.b2, st_b2, tcfg.learning_rate, step);
      } else {
        sgd_step(model.w1, g.grads.w1, tcfg.learning_rate);
        sgd_step(model.b1, g.grads.b1, tcfg.learning_rate);
        sgd_step(model.w2, g.grads.w2, tcfg.learning_rate);
        sgd_step(model.b2, g.grads.b2, tcfg.learning_rate);
      }
      if (tcfg.weight_decay > 0.0) {
        const double shrink = 1.0 - tcfg.learning_rate * tcfg.weight_decay;
        for (auto& w : model.w1) w *= shrink;
        for (auto& w : model.w2) w *= shrink;
        if (tcfg.decay_biases) {
          for (auto& b : model.b1) b *= shrink;
          for (auto& b : model.b2) b *= shrink;
        }
      }
      if (tcfg.polyak_tail && epoch >= tail_start) accumulate_average();
      epoch_loss += g.loss;
      ++batches;
    }
    result.epoch_losses.push_back(batches > 0 ? epoch_loss / static_cast<double>(batches) : 0.0);
  }
  if (tcfg.polyak_tail && averaged > 0) {
    result.params = std::move(average);
  }
  return result;
}

namespace {

using nlohmann::ordered_json;

ordered_json tensor_json(const std::vector<double>& data, std::initializer_list<int> shape) {
  ordered_json t;
  t["shape"] = std::vector<int>(shape);
  t["data"] = data;
  return t;
}

std::vector<double> tensor_from_json(const nlohmann::json& t, std::size_t expected,
                                     const char* name) {
  if (!t.contains("shape") || !t.contains("data")) {
    throw DataError(std::string("checkpoint tensor '") + name + "' missing shape or data");
  }
  std::size_t n = 1;
  for (const auto& s : t["shape"]) n *= s.get<std::size_t>();
  auto data = t["data"].get<std::vector<double>>();
  if (data.size() != n || n != expected) {
    throw DataError(std::string("checkpoint tensor '") + name + "' has wrong size");
  }
  return data;
}

}  // namespace

std::string checkpoint_to_json(const ModelParams& params) {
  ordered_json j;
  j["format"] = "ugift-checkpoint";
  j["version"] = 1;
  j["config"] = {{"input_dim", params.cfg.input_dim},
                 {"hidden", params.cfg.hidden},
                 {"num_classes", params.cfg.num_classes},
                 {"dropout", params.cfg.dropout}};
  j["params"]["w1"] = tensor_json(params.w1, {params.cfg.hidden, params.cfg.input_dim});
  j["params"]["b1"] = tensor_json(params.b1, {params.cfg.hidden});
  j["params"]["w2"] = tensor_json(params.w2, {params.cfg.num_classes, params.cfg.hidden});
  j["params"]["b2"] = tensor_json(params.b2, {params.cfg.num_classes});
  return j.dump(2) + "\n";
}

ModelParams checkpoint_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint JSON: ") + e.what());
  }
  if (j.value("format", "") != "ugift-checkpoint") {
    throw DataError("not a ugift checkpoint (missing format tag)");
  }
  if (j.value("version", 0) != 1) {
    throw DataError("unsupported checkpoint version");
  }
  ModelParams p;
  const auto& c = j.at("config");
  p.cfg.input_dim = c.at("input_dim").get<int>();
  p.cfg.hidden = c.at("hidden").get<int>();
  p.cfg.num_classes = c.at("num_classes").get<int>();
  p.cfg.dropout = c.at("dropout").get<double>();
  p.cfg.validate();
  const auto& t = j.at("params");
  p.w1 = tensor_from_json(t.at("w1"), static_cast<std::size_t>(p.cfg.hidden) * p.cfg.input_dim, "w1");
  p.b1 = tensor_from_json(t.at("b1"), static_cast<std::size_t>(p.cfg.hidden), "b1");
  p.w2 = tensor_from_json(t.at("w2"), static_cast<std::size_t>(p.cfg.num_classes) * p.cfg.hidden, "w2");
  p.b2 = tensor_from_json(t.at("b2"), static_cast<std::size_t>(p.cfg.num_classes), "b2");
  return p;
}

void save_checkpoint(const ModelParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint: " + path);
  out << checkpoint_to_json(params);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace ugift
