#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ugift {

struct Example {
  std::string id;
  std::string text;
  std::optional<int> label;  // class index in [0, C)

  bool operator==(const Example&) const = default;
};

// Examples with labels present, plus the class count C.
struct LabeledSet {
  std::vector<Example> examples;
  int num_classes = 0;

  std::size_t size() const { return examples.size(); }
};

// Examples whose labels are hidden from the training path. Ground-truth
// labels, when the source had them, are kept in a side store that only the
// evaluation harness reads (pseudo-label precision, pool construction).
class UnlabeledSet {
 public:
  UnlabeledSet() = default;

  // Strips labels off the examples; originals go to the hidden store.
  static UnlabeledSet from_examples(std::vector<Example> examples);

  // Training-path accessor: labels are always absent here.
  const std::vector<Example>& examples() const { return examples_; }
  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }

  bool has_hidden_labels() const;

  // Harness-only. Never feed this into training.
  std::optional<int> hidden_label_for_eval(std::size_t i) const;

  // Subset by index, keeping hidden labels aligned.
  UnlabeledSet subset(const std::vector<std::size_t>& indices) const;

 private:
  std::vector<Example> examples_;
  std::vector<std::optional<int>> hidden_labels_;
};

enum class CorpusFormat { jsonl, csv };

struct CorpusLoadOptions {
  CorpusFormat format = CorpusFormat::jsonl;
  // 0 means infer C as max label + 1; otherwise labels are validated < C.
  int num_classes = 0;
  // Drop exact-text duplicates (first occurrence wins). Off by default so
  // corpus statistics survive loading.
  bool dedup = false;
};

LabeledSet load_labeled_corpus(const std::string& path, const CorpusLoadOptions& opts = {});

// Labels in the file, if any, land in the hidden store.
UnlabeledSet load_unlabeled_corpus(const std::string& path, const CorpusLoadOptions& opts = {});

void write_jsonl(const std::vector<Example>& examples, const std::string& path);
void write_csv(const std::vector<Example>& examples, const std::string& path);
std::string to_jsonl(const std::vector<Example>& examples);

// Balanced K-shot draw: exactly k/C examples per class, uniform without
// replacement from the seed-keyed stream. Returns (few_shot, remainder);
// both preserve the original example order.
std::pair<LabeledSet, LabeledSet> sample_k_shot(const LabeledSet& set, int k,
                                                std::uint64_t seed);

// "majority : minority" mix ratio for binary pools, e.g. 100:1 or 1:0.
struct ClassRatio {
  std::uint64_t majority = 1;  // class-0 share
  std::uint64_t minority = 1;  // class-1 share
};

ClassRatio parse_ratio(const std::string& text);
std::string ratio_to_string(const ClassRatio& r);

// Binary pool with minority count = floor(n * b / (a + b)) for ratio a:b,
// drawn uniformly per class from the hidden labels, output order shuffled.
UnlabeledSet build_imbalanced_pool(const UnlabeledSet& set, const ClassRatio& ratio,
                                   std::size_t total, std::uint64_t seed);

// Synthetic corpus generator: each class owns a private token vocabulary and
// shares a common one; `overlap` is the probability a token is drawn from the
// shared vocabulary. Deterministic per (spec, seed).
struct SynthSpec {
  int num_classes = 2;
  int class_vocab = 400;   // tokens per class vocabulary
  int shared_vocab = 800;  // tokens in the shared vocabulary
  double overlap = 0.6;    // probability of drawing a shared token
  int min_len = 8;
  int max_len = 20;
  int per_class = 200;
};

LabeledSet synth_corpus(const SynthSpec& spec, std::uint64_t seed);

}  // namespace ugift
