#include "ugift/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "ugift/error.hpp"
#include "ugift/rng.hpp"

namespace ugift {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n\f\v");
  if (a == std::string::npos) return {};
  std::size_t b = s.find_last_not_of(" \t\r\n\f\v");
  return s.substr(a, b - a + 1);
}

std::string basename_of(const std::string& path) {
  std::size_t slash = path.find_last_of("/\\");
  return slash == std::string::npos ? path : path.substr(slash + 1);
}

struct RawRecord {
  std::string id;
  std::string text;
  std::optional<int> label;
  std::size_t line = 0;
};

std::vector<RawRecord> parse_jsonl(const std::string& path, std::istream& in) {
  std::vector<RawRecord> out;
  std::string line;
  std::size_t lineno = 0;
  const std::string base = basename_of(path);
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(path + ": malformed JSON at line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
      throw DataError(path + ": missing string field 'text' at line " + std::to_string(lineno));
    }
    RawRecord r;
    r.line = lineno;
    r.text = j["text"].get<std::string>();
    if (j.contains("id")) {
      if (j["id"].is_string()) {
        r.id = j["id"].get<std::string>();
      } else if (j["id"].is_number_integer()) {
        r.id = std::to_string(j["id"].get<long long>());
      } else {
        throw DataError(path + ": field 'id' must be a string at line " + std::to_string(lineno));
      }
    } else {
      r.id = base + ":" + std::to_string(lineno);
    }
    if (j.contains("label") && !j["label"].is_null()) {
      if (!j["label"].is_number_integer()) {
        throw DataError(path + ": field 'label' must be an integer at line " + std::to_string(lineno));
      }
      r.label = j["label"].get<int>();
    }
    out.push_back(std::move(r));
  }
  return out;
}

// RFC-4180: quoted fields may contain commas, newlines and doubled quotes.
std::vector<std::vector<std::string>> parse_csv(const std::string& path, std::istream& in,
                                                std::vector<std::size_t>& row_lines) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool row_has_data = false;
  std::size_t lineno = 1;
  std::size_t row_start = 1;

  auto end_field = [&]() {
    row.push_back(field);
    field.clear();
  };
  auto end_row = [&]() {
    end_field();
    rows.push_back(row);
    row_lines.push_back(row_start);
    row.clear();
    row_has_data = false;
  };

  char c;
  while (in.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++lineno;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        row_has_data = true;
        break;
      case ',':
        end_field();
        row_has_data = true;
        break;
      case '\r':
        break;
      case '\n':
        if (row_has_data || !field.empty() || !row.empty()) end_row();
        ++lineno;
        row_start = lineno;
        break;
      default:
        field.push_back(c);
        row_has_data = true;
        break;
    }
  }
  if (in_quotes) {
    throw DataError(path + ": unterminated quoted field at end of file");
  }
  if (row_has_data || !field.empty() || !row.empty()) end_row();
  return rows;
}

std::vector<RawRecord> parse_csv_records(const std::string& path, std::istream& in) {
  std::vector<std::size_t> row_lines;
  auto rows = parse_csv(path, in, row_lines);
  if (rows.empty()) {
    throw DataError(path + ": empty corpus (no header row)");
  }
  const auto& header = rows.front();
  int text_col = -1, label_col = -1, id_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::string h = trim(header[i]);
    if (h == "text") text_col = static_cast<int>(i);
    else if (h == "label") label_col = static_cast<int>(i);
    else if (h == "id") id_col = static_cast<int>(i);
  }
  if (text_col < 0) {
    throw DataError(path + ": CSV header must contain a 'text' column");
  }
  const std::string base = basename_of(path);
  std::vector<RawRecord> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    std::size_t lineno = row_lines[r];
    if (static_cast<std::size_t>(text_col) >= row.size()) {
      throw DataError(path + ": row at line " + std::to_string(lineno) + " is missing the 'text' column");
    }
    RawRecord rec;
    rec.line = lineno;
    rec.text = row[text_col];
    if (id_col >= 0 && static_cast<std::size_t>(id_col) < row.size() && !row[id_col].empty()) {
      rec.id = row[id_col];
    } else {
      rec.id = base + ":" + std::to_string(lineno);
    }
    if (label_col >= 0 && static_cast<std::size_t>(label_col) < row.size()) {
      std::string raw = trim(row[label_col]);
      if (!raw.empty()) {
        try {
          std::size_t pos = 0;
          int v = std::stoi(raw, &pos);
          if (pos != raw.size()) throw std::invalid_argument(raw);
          rec.label = v;
        } catch (const std::exception&) {
          throw DataError(path + ": non-integer label '" + raw + "' at line " + std::to_string(lineno));
        }
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<RawRecord> load_records(const std::string& path, const CorpusLoadOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open corpus file: " + path);
  }
  auto records = opts.format == CorpusFormat::jsonl ? parse_jsonl(path, in)
                                                    : parse_csv_records(path, in);
  if (opts.dedup) {
    std::unordered_set<std::string> seen;
    std::vector<RawRecord> kept;
    kept.reserve(records.size());
    for (auto& r : records) {
      if (seen.insert(r.text).second) kept.push_back(std::move(r));
    }
    records = std::move(kept);
  }
  if (records.empty()) {
    throw DataError(path + ": empty corpus");
  }
  std::unordered_set<std::string> ids;
  for (const auto& r : records) {
    if (trim(r.text).empty()) {
      throw DataError(path + ": empty text at line " + std::to_string(r.line));
    }
    if (!ids.insert(r.id).second) {
      throw DataError(path + ": duplicate id '" + r.id + "' at line " + std::to_string(r.line));
    }
  }
  return records;
}

std::string json_escape(const std::string& s) {
  return json(s).dump();
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

}  // namespace

LabeledSet load_labeled_corpus(const std::string& path, const CorpusLoadOptions& opts) {
  auto records = load_records(path, opts);
  LabeledSet set;
  int max_label = -1;
  for (const auto& r : records) {
    if (!r.label) {
      throw DataError(path + ": missing label at line " + std::to_string(r.line));
    }
    if (*r.label < 0) {
      throw DataError(path + ": negative label at line " + std::to_string(r.line));
    }
    max_label = std::max(max_label, *r.label);
    set.examples.push_back({r.id, r.text, r.label});
  }
  set.num_classes = opts.num_classes > 0 ? opts.num_classes : max_label + 1;
  if (max_label >= set.num_classes) {
    throw DataError(path + ": label " + std::to_string(max_label) + " out of range for " +
                    std::to_string(set.num_classes) + " classes");
  }
  return set;
}

UnlabeledSet load_unlabeled_corpus(const std::string& path, const CorpusLoadOptions& opts) {
  auto records = load_records(path, opts);
  std::vector<Example> examples;
  examples.reserve(records.size());
  for (const auto& r : records) {
    examples.push_back({r.id, r.text, r.label});
  }
  return UnlabeledSet::from_examples(std::move(examples));
}

UnlabeledSet UnlabeledSet::from_examples(std::vector<Example> examples) {
  UnlabeledSet set;
  set.hidden_labels_.reserve(examples.size());
  for (auto& e : examples) {
    set.hidden_labels_.push_back(e.label);
    e.label.reset();
  }
  set.examples_ = std::move(examples);
  return set;
}

bool UnlabeledSet::has_hidden_labels() const {
  return std::any_of(hidden_labels_.begin(), hidden_labels_.end(),
                     [](const auto& l) { return l.has_value(); });
}

std::optional<int> UnlabeledSet::hidden_label_for_eval(std::size_t i) const {
  return i < hidden_labels_.size() ? hidden_labels_[i] : std::nullopt;
}

UnlabeledSet UnlabeledSet::subset(const std::vector<std::size_t>& indices) const {
  UnlabeledSet out;
  out.examples_.reserve(indices.size());
  out.hidden_labels_.reserve(indices.size());
  for (std::size_t i : indices) {
    out.examples_.push_back(examples_.at(i));
    out.hidden_labels_.push_back(hidden_labels_.at(i));
  }
  return out;
}

std::string to_jsonl(const std::vector<Example>& examples) {
  std::string out;
  for (const auto& e : examples) {
    out += "{\"id\":" + json_escape(e.id) + ",\"text\":" + json_escape(e.text);
    if (e.label) out += ",\"label\":" + std::to_string(*e.label);
    out += "}\n";
  }
  return out;
}

void write_jsonl(const std::vector<Example>& examples, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << to_jsonl(examples);
}

void write_csv(const std::vector<Example>& examples, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << "id,text,label\n";
  for (const auto& e : examples) {
    out << csv_escape(e.id) << "," << csv_escape(e.text) << ",";
    if (e.label) out << *e.label;
    out << "\n";
  }
}

std::pair<LabeledSet, LabeledSet> sample_k_shot(const LabeledSet& set, int k,
                                                std::uint64_t seed) {
  const int c = set.num_classes;
  if (c <= 0) throw ConfigError("sample_k_shot: set has no classes");
  if (k <= 0 || k % c != 0) {
    throw ConfigError("sample_k_shot: k must be a positive multiple of the class count (k=" +
                      std::to_string(k) + ", C=" + std::to_string(c) + ")");
  }
  const std::size_t per_class = static_cast<std::size_t>(k / c);

  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(c));
  for (std::size_t i = 0; i < set.examples.size(); ++i) {
    by_class[static_cast<std::size_t>(*set.examples[i].label)].push_back(i);
  }
  std::vector<bool> picked(set.examples.size(), false);
  for (int cls = 0; cls < c; ++cls) {
    auto& pool = by_class[static_cast<std::size_t>(cls)];
    if (pool.size() < per_class) {
      throw DataError("sample_k_shot: class " + std::to_string(cls) + " has " +
                      std::to_string(pool.size()) + " examples, need " + std::to_string(per_class));
    }
    Rng rng(SeedTree::derive(seed, "kshot", {static_cast<std::uint64_t>(cls)}));
    for (std::size_t i : rng.sample_without_replacement(pool.size(), per_class)) {
      picked[pool[i]] = true;
    }
  }
  LabeledSet few_shot{.examples = {}, .num_classes = c};
  LabeledSet remainder{.examples = {}, .num_classes = c};
  for (std::size_t i = 0; i < set.examples.size(); ++i) {
    (picked[i] ? few_shot : remainder).examples.push_back(set.examples[i]);
  }
  return {std::move(few_shot), std::move(remainder)};
}

ClassRatio parse_ratio(const std::string& text) {
  std::size_t colon = text.find(':');
  if (colon == std::string::npos) {
    throw ConfigError("ratio must be 'a:b', got '" + text + "'");
  }
  auto parse_part = [&](const std::string& part) -> std::uint64_t {
    std::string t = trim(part);
    if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError("ratio must be 'a:b' with non-negative integers, got '" + text + "'");
    }
    return std::stoull(t);
  };
  ClassRatio r{parse_part(text.substr(0, colon)), parse_part(text.substr(colon + 1))};
  if (r.majority == 0 && r.minority == 0) {
    throw ConfigError("ratio 0:0 is degenerate");
  }
  return r;
}

std::string ratio_to_string(const ClassRatio& r) {
  return std::to_string(r.majority) + ":" + std::to_string(r.minority);
}

UnlabeledSet build_imbalanced_pool(const UnlabeledSet& set, const ClassRatio& ratio,
                                   std::size_t total, std::uint64_t seed) {
  if (total == 0) throw ConfigError("build_imbalanced_pool: total must be positive");
  if (ratio.majority == 0 && ratio.minority == 0) throw ConfigError("ratio 0:0 is degenerate");
  if (!set.has_hidden_labels()) {
    throw DataError("build_imbalanced_pool: pool construction needs hidden labels");
  }

  std::vector<std::size_t> class0, class1;
  for (std::size_t i = 0; i < set.size(); ++i) {
    auto l = set.hidden_label_for_eval(i);
    if (!l) throw DataError("build_imbalanced_pool: example without hidden label: " +
                            set.examples()[i].id);
    if (*l == 0) class0.push_back(i);
    else if (*l == 1) class1.push_back(i);
    else throw DataError("build_imbalanced_pool: ratios are defined for binary pools only");
  }

  // minority = floor(n*b/(a+b)); floor biases toward the scarcer class.
  const std::size_t minority =
      static_cast<std::size_t>((static_cast<unsigned long long>(total) * ratio.minority) /
                               (ratio.majority + ratio.minority));
  const std::size_t majority = total - minority;
  if (class0.size() < majority) {
    throw DataError("build_imbalanced_pool: need " + std::to_string(majority) +
                    " class-0 examples, have " + std::to_string(class0.size()));
  }
  if (class1.size() < minority) {
    throw DataError("build_imbalanced_pool: need " + std::to_string(minority) +
                    " class-1 examples, have " + std::to_string(class1.size()));
  }

  std::vector<std::size_t> chosen;
  chosen.reserve(total);
  {
    Rng rng(SeedTree::derive(seed, "pool-majority"));
    for (std::size_t i : rng.sample_without_replacement(class0.size(), majority)) {
      chosen.push_back(class0[i]);
    }
  }
  {
    Rng rng(SeedTree::derive(seed, "pool-minority"));
    for (std::size_t i : rng.sample_without_replacement(class1.size(), minority)) {
      chosen.push_back(class1[i]);
    }
  }
  Rng rng(SeedTree::derive(seed, "pool-shuffle"));
  rng.shuffle(chosen);
  return set.subset(chosen);
}

LabeledSet synth_corpus(const SynthSpec& spec, std::uint64_t seed) {
  if (spec.num_classes < 2) throw ConfigError("synth_corpus: need at least 2 classes");
  if (spec.class_vocab < 1) throw ConfigError("synth_corpus: class vocabulary is empty");
  if (spec.overlap < 0.0 || spec.overlap > 1.0) {
    throw ConfigError("synth_corpus: overlap must be in [0,1]");
  }
  if (spec.overlap > 0.0 && spec.shared_vocab < 1) {
    throw ConfigError("synth_corpus: overlap > 0 needs a shared vocabulary");
  }
  if (spec.min_len < 1 || spec.max_len < spec.min_len) {
    throw ConfigError("synth_corpus: invalid length range");
  }
  if (spec.per_class < 1) throw ConfigError("synth_corpus: per_class must be positive");

  LabeledSet set;
  set.num_classes = spec.num_classes;
  set.examples.reserve(static_cast<std::size_t>(spec.num_classes) * spec.per_class);
  for (int cls = 0; cls < spec.num_classes; ++cls) {
    for (int i = 0; i < spec.per_class; ++i) {
      Rng rng(SeedTree::derive(seed, "synth",
                               {static_cast<std::uint64_t>(cls), static_cast<std::uint64_t>(i)}));
      int len = spec.min_len +
                static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(spec.max_len - spec.min_len + 1)));
      std::string text;
      for (int t = 0; t < len; ++t) {
        if (!text.empty()) text += ' ';
        if (spec.overlap > 0.0 && rng.uniform() < spec.overlap) {
          text += "s" + std::to_string(rng.uniform_int(static_cast<std::uint64_t>(spec.shared_vocab)));
        } else {
          text += "c" + std::to_string(cls) + "w" +
                  std::to_string(rng.uniform_int(static_cast<std::uint64_t>(spec.class_vocab)));
        }
      }
      set.examples.push_back({"synth:" + std::to_string(cls) + ":" + std::to_string(i),
                              std::move(text), cls});
    }
  }
  return set;
}

}  // namespace ugift
