#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ugift/corpus.hpp"

namespace ugift {

enum class TfWeighting { binary, log1p_tf };

struct FeatureConfig {
  int dim = 4096;  // power of two
  bool word_unigrams = true;
  bool word_bigrams = true;
  int char_ngram = 0;  // 0 = off; otherwise character n-gram order
  TfWeighting tf = TfWeighting::log1p_tf;
  bool signed_hashing = true;

  void validate() const;
};

struct FeatureEntry {
  std::uint32_t index;
  double value;

  bool operator==(const FeatureEntry&) const = default;
};

// Sparse L2-normalized vector; indices strictly increasing, no zero weights.
struct FeatureVector {
  std::vector<FeatureEntry> entries;

  bool empty() const { return entries.empty(); }
  double l2_norm() const;

  bool operator==(const FeatureVector&) const = default;
};

// Case-folds, then splits into maximal runs of alphanumeric code points.
// Everything else (punctuation, underscore, whitespace, emoji) separates.
std::vector<std::string> tokenize(const std::string& text);

// n-grams joined with U+0020 are hashed with FNV-1a-64; index = hash mod dim,
// sign from bit 63. Gram counts are tf-weighted, accumulated per index, and
// the result is L2-normalized. Entries that cancel to zero are dropped.
FeatureVector hash_features(const std::vector<std::string>& tokens, const FeatureConfig& cfg);

FeatureVector vectorize_text(const std::string& text, const FeatureConfig& cfg);

// Elementwise tokenize + hash; output order matches input order.
std::vector<FeatureVector> vectorize_batch(const std::vector<Example>& examples,
                                           const FeatureConfig& cfg);

}  // namespace ugift
