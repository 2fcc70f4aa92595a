#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ugift/features.hpp"

namespace ugift {

struct ModelConfig {
  int input_dim = 4096;
  int hidden = 64;
  int num_classes = 2;
  double dropout = 0.2;  // in [0, 1)

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// Two-layer rectifier network: relu(W1 x + b1) -> softmax(W2 h + b2).
// Matrices are row-major; shapes follow the config.
struct ModelParams {
  ModelConfig cfg;
  std::vector<double> w1;  // hidden x input_dim
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // num_classes x hidden
  std::vector<double> b2;  // num_classes

  bool operator==(const ModelParams&) const = default;
};

// Identifies one dropout mask. Masks are a pure function of (key, unit), so
// forward passes are reproducible and order-independent.
struct DropoutKey {
  std::uint64_t round = 0;
  std::uint64_t pass = 0;
  std::uint64_t sample = 0;
};

enum class Optimizer { sgd, adam };

struct TrainConfig {
  int batch_size = 8;
  int epochs = 40;
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::adam;
  // Decoupled L2 decay per step: theta -= lr * weight_decay * theta.
  // Keeps logits out of the saturated softmax regime so dropout
  // disagreement stays informative.
  double weight_decay = 0.0;
  // Extend the decay to b1/b2. Anchors the class prior near zero, which
  // stops pseudo-label class skew from imprinting into the bias and
  // running away across self-training rounds.
  bool decay_biases = false;
  // Return the Polyak average of the iterates from the last half of the
  // epochs instead of the final iterate. Cancels the stochastic parameter
  // walk that otherwise leaves a seed-random class prior on tiny datasets.
  bool polyak_tail = false;
  std::uint64_t seed = 0;
  bool shuffle = true;

  void validate() const;
};

struct WeightedExample {
  FeatureVector x;
  int label = 0;
  double weight = 1.0;
};

// Glorot-uniform weights from the seed-keyed stream, zero biases.
ModelParams init_model(const ModelConfig& cfg, std::uint64_t seed);

// Softmax probabilities; with a dropout key, hidden units are zeroed with
// probability p and survivors scaled by 1/(1-p) (inverted dropout).
std::vector<double> forward(const ModelParams& params, const FeatureVector& x,
                            const DropoutKey* key = nullptr);

// Deterministic forward with dropout disabled.
std::vector<double> predict(const ModelParams& params, const FeatureVector& x);

// Mean cross-entropy: (1/N) * sum_i w_i * (-log probs_i[y_i]). Probabilities
// are clamped to [1e-12, 1 - 1e-12] before the log. Weights default to 1, in
// which case this is the plain unweighted loss.
double loss_ce(const std::vector<std::vector<double>>& probs_batch,
               const std::vector<int>& labels,
               const std::vector<double>* weights = nullptr);

struct Gradients {
  std::vector<double> w1, b1, w2, b2;
};

struct GradResult {
  Gradients grads;
  double loss = 0.0;
};

// Exact analytic gradient of the weighted loss under fixed dropout masks.
// keys may be empty (no dropout) or hold one key per sample.
GradResult grad(const ModelParams& params, const std::vector<WeightedExample>& batch,
                const std::vector<DropoutKey>& keys);

enum class DropoutMode { on, off };

struct TrainResult {
  ModelParams params;
  std::vector<double> epoch_losses;  // mean batch loss per epoch
};

// Minibatch training with per-epoch shuffling and keyed dropout masks.
// Aborts with DataError if the loss goes non-finite.
TrainResult train(const ModelParams& params, const std::vector<WeightedExample>& data,
                  const TrainConfig& tcfg, DropoutMode dropout);

// Versioned JSON checkpoint; round-trips parameters exactly.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);
std::string checkpoint_to_json(const ModelParams& params);
ModelParams checkpoint_from_json(const std::string& text);

}  // namespace ugift
