#include "ugift/features.hpp"

#include <cmath>
#include <map>

#include "ugift/error.hpp"
#include "ugift/rng.hpp"

namespace ugift {

namespace {

// Decode one UTF-8 code point starting at i; advances i. Invalid bytes decode
// as U+FFFD and advance by one so tokenization never stalls.
char32_t decode_utf8(const std::string& s, std::size_t& i) {
  unsigned char b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int extra;
  char32_t cp;
  if ((b0 & 0xE0) == 0xC0) {
    extra = 1;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    extra = 2;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    extra = 3;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  if (i + static_cast<std::size_t>(extra) >= s.size()) {
    ++i;
    return 0xFFFD;  // truncated sequence
  }
  for (int k = 1; k <= extra; ++k) {
    unsigned char bk = static_cast<unsigned char>(s[i + k]);
    if ((bk & 0xC0) != 0x80) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | (bk & 0x3F);
  }
  i += static_cast<std::size_t>(extra) + 1;
  return cp;
}

void encode_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Simple case folding over the bicameral ranges this project meets in
// practice: ASCII, Latin-1, Latin Extended-A, Greek, Cyrillic. Code points
// outside these ranges pass through unchanged.
char32_t fold_case(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return cp + 0x20;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;  // Latin-1 capitals
  if (cp >= 0x100 && cp <= 0x137) return (cp % 2 == 0) ? cp + 1 : cp;
  if (cp >= 0x139 && cp <= 0x148) return (cp % 2 == 1) ? cp + 1 : cp;
  if (cp >= 0x14A && cp <= 0x177) return (cp % 2 == 0) ? cp + 1 : cp;
  if (cp == 0x178) return 0xFF;  // Y with diaeresis
  if (cp >= 0x179 && cp <= 0x17E) return (cp % 2 == 1) ? cp + 1 : cp;
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20;  // Greek capitals
  if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;                 // Cyrillic capitals
  if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;                 // Cyrillic supplements
  return cp;
}

bool is_alnum_cp(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= U'0' && cp <= U'9') || (cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z');
  }
  // Letter ranges for the scripts the corpora cover. Conservative: anything
  // unlisted acts as a separator.
  static constexpr std::pair<char32_t, char32_t> kRanges[] = {
      {0xC0, 0xD6},     {0xD8, 0xF6},     {0xF8, 0x24F},    // Latin-1 + Extended
      {0x370, 0x3FF},   {0x400, 0x4FF},                     // Greek, Cyrillic
      {0x590, 0x5FF},   {0x600, 0x6FF},                     // Hebrew, Arabic
      {0x900, 0x97F},                                       // Devanagari
      {0x3040, 0x30FF},                                     // Hiragana, Katakana
      {0x4E00, 0x9FFF},                                     // CJK unified
      {0xAC00, 0xD7A3},                                     // Hangul syllables
  };
  for (auto [lo, hi] : kRanges) {
    if (cp >= lo && cp <= hi) return true;
  }
  return false;
}

double tf_weight(TfWeighting tf, std::size_t count) {
  return tf == TfWeighting::binary ? 1.0 : std::log1p(static_cast<double>(count));
}

}  // namespace

void FeatureConfig::validate() const {
  if (dim < 2 || (dim & (dim - 1)) != 0) {
    throw ConfigError("feature dim must be a power of two >= 2, got " + std::to_string(dim));
  }
  if (!word_unigrams && !word_bigrams && char_ngram <= 0) {
    throw ConfigError("feature config enables no n-gram order");
  }
  if (char_ngram < 0) {
    throw ConfigError("char n-gram order must be non-negative");
  }
}

double FeatureVector::l2_norm() const {
  double s = 0.0;
  for (const auto& e : entries) s += e.value * e.value;
  return std::sqrt(s);
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    char32_t cp = decode_utf8(text, i);
    if (is_alnum_cp(cp)) {
      encode_utf8(fold_case(cp), current);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

FeatureVector hash_features(const std::vector<std::string>& tokens, const FeatureConfig& cfg) {
  cfg.validate();
  std::map<std::string, std::size_t> counts;
  if (cfg.word_unigrams) {
    for (const auto& t : tokens) ++counts[t];
  }
  if (cfg.word_bigrams) {
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
      ++counts[tokens[i] + " " + tokens[i + 1]];
    }
  }
  if (cfg.char_ngram > 0) {
    std::string joined;
    for (const auto& t : tokens) {
      if (!joined.empty()) joined += ' ';
      joined += t;
    }
    const std::size_t n = static_cast<std::size_t>(cfg.char_ngram);
    // Window over code points, not bytes.
    std::vector<std::size_t> offsets;
    std::size_t i = 0;
    while (i < joined.size()) {
      offsets.push_back(i);
      decode_utf8(joined, i);
    }
    offsets.push_back(joined.size());
    for (std::size_t start = 0; start + n < offsets.size(); ++start) {
      ++counts[joined.substr(offsets[start], offsets[start + n] - offsets[start])];
    }
  }

  std::map<std::uint32_t, double> acc;
  const std::uint64_t mask = static_cast<std::uint64_t>(cfg.dim) - 1;
  for (const auto& [gram, count] : counts) {
    std::uint64_t h = fnv1a64(gram);
    auto index = static_cast<std::uint32_t>(h & mask);
    double sign = (!cfg.signed_hashing || (h >> 63) == 0) ? 1.0 : -1.0;
    acc[index] += sign * tf_weight(cfg.tf, count);
  }

  FeatureVector v;
  v.entries.reserve(acc.size());
  double sq = 0.0;
  for (const auto& [index, value] : acc) {
    if (value == 0.0) continue;  // opposite-sign collisions can cancel
    v.entries.push_back({index, value});
    sq += value * value;
  }
  if (sq > 0.0) {
    double inv = 1.0 / std::sqrt(sq);
    for (auto& e : v.entries) e.value *= inv;
  }
  return v;
}

FeatureVector vectorize_text(const std::string& text, const FeatureConfig& cfg) {
  return hash_features(tokenize(text), cfg);
}

std::vector<FeatureVector> vectorize_batch(const std::vector<Example>& examples,
                                           const FeatureConfig& cfg) {
  std::vector<FeatureVector> out;
  out.reserve(examples.size());
  for (const auto& e : examples) {
    out.push_back(vectorize_text(e.text, cfg));
  }
  return out;
}

}  // namespace ugift
