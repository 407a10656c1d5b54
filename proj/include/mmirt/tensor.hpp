#pragma once

// Sparse (subject, item, format) -> correct response tensors.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mmirt/error.hpp"
#include "mmirt/format.hpp"
#include "mmirt/rng.hpp"

namespace mmirt {

struct ResponseRecord {
  std::string subject;
  std::string item;
  FormatIndicator format;
  int correct = 0;

  friend bool operator==(const ResponseRecord&, const ResponseRecord&) = default;
};

using LabelMap = std::map<std::string, QualityLabel>;

// Immutable sparse response tensor. Index lists are in first-appearance order
// unless given explicitly, so every downstream array is reproducible from the
// same file.
class ResponseTensor {
 public:
  ResponseTensor() = default;

  explicit ResponseTensor(std::vector<ResponseRecord> records, LabelMap labels = {})
      : records_(std::move(records)), labels_(std::move(labels)) {
    for (const auto& r : records_) {
      intern(subjects_, subject_index_, r.subject);
      intern(items_, item_index_, r.item);
    }
    build_cells();
  }

  // Keeps the given index lists (which must cover every record) so that a
  // masked training split still parameterizes every subject and item.
  ResponseTensor(std::vector<ResponseRecord> records, std::vector<std::string> subjects,
                 std::vector<std::string> items, LabelMap labels = {})
      : records_(std::move(records)), labels_(std::move(labels)) {
    for (const auto& s : subjects) intern(subjects_, subject_index_, s);
    for (const auto& i : items) intern(items_, item_index_, i);
    for (const auto& r : records_) {
      if (!subject_index_.count(r.subject) || !item_index_.count(r.item)) {
        throw ValidationError("record (" + r.subject + ", " + r.item + ") outside the index lists");
      }
    }
    build_cells();
  }

  const std::vector<ResponseRecord>& records() const noexcept { return records_; }
  const std::vector<std::string>& subjects() const noexcept { return subjects_; }
  const std::vector<std::string>& items() const noexcept { return items_; }
  const LabelMap& item_labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  std::optional<std::size_t> subject_index(const std::string& id) const {
    auto it = subject_index_.find(id);
    if (it == subject_index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<std::size_t> item_index(const std::string& id) const {
    auto it = item_index_.find(id);
    if (it == item_index_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<QualityLabel> label(const std::string& item) const {
    auto it = labels_.find(item);
    if (it == labels_.end()) return std::nullopt;
    return it->second;
  }

  // Recorded outcome for one cell, if present.
  std::optional<int> lookup(const std::string& subject, const std::string& item, FormatIndicator s) const {
    auto si = subject_index(subject);
    auto ii = item_index(item);
    if (!si || !ii) return std::nullopt;
    auto it = cells_.find(cell_key(*si, *ii, s));
    if (it == cells_.end()) return std::nullopt;
    return records_[it->second].correct;
  }

  ResponseTensor with_labels(LabelMap labels) const {
    return ResponseTensor(records_, subjects_, items_, std::move(labels));
  }

  template <typename Pred>
  ResponseTensor filter(Pred&& keep) const {
    std::vector<ResponseRecord> out;
    for (const auto& r : records_) {
      if (keep(r)) out.push_back(r);
    }
    return ResponseTensor(std::move(out), labels_);
  }

 private:
  static void intern(std::vector<std::string>& list, std::unordered_map<std::string, std::size_t>& index,
                     const std::string& id) {
    if (index.emplace(id, list.size()).second) list.push_back(id);
  }

  static std::uint64_t cell_key(std::size_t s, std::size_t i, FormatIndicator f) {
    return (static_cast<std::uint64_t>(s) << 34) | (static_cast<std::uint64_t>(i) << 2) |
           static_cast<std::uint64_t>(f.code());
  }

  void build_cells() {
    cells_.reserve(records_.size());
    for (std::size_t k = 0; k < records_.size(); ++k) {
      const auto& r = records_[k];
      if (r.correct != 0 && r.correct != 1) {
        throw ValidationError("outcome must be 0 or 1 for (" + r.subject + ", " + r.item + ")");
      }
      auto key = cell_key(subject_index_.at(r.subject), item_index_.at(r.item), r.format);
      if (!cells_.emplace(key, k).second) {
        throw ValidationError("duplicate record (" + r.subject + ", " + r.item + ", (" +
                              std::to_string(r.format.image) + "," + std::to_string(r.format.text) + "))");
      }
    }
  }

  std::vector<ResponseRecord> records_;
  std::vector<std::string> subjects_;
  std::vector<std::string> items_;
  std::unordered_map<std::string, std::size_t> subject_index_;
  std::unordered_map<std::string, std::size_t> item_index_;
  std::unordered_map<std::uint64_t, std::size_t> cells_;
  LabelMap labels_;
};

// ---------------------------------------------------------------------------
// IO

enum class FileFormat { Jsonl, Csv };

inline FileFormat guess_file_format(const std::string& path) {
  auto dot = path.rfind('.');
  if (dot != std::string::npos && path.substr(dot) == ".csv") return FileFormat::Csv;
  return FileFormat::Jsonl;
}

namespace detail {

inline int binary_field(const nlohmann::json& v, const char* name, std::size_t row) {
  int x;
  if (v.is_boolean()) {
    x = v.get<bool>() ? 1 : 0;
  } else if (v.is_number_integer()) {
    x = v.get<int>();
  } else if (v.is_number_float() && (v.get<double>() == 0.0 || v.get<double>() == 1.0)) {
    x = static_cast<int>(v.get<double>());
  } else if (v.is_string() && (v.get<std::string>() == "0" || v.get<std::string>() == "1")) {
    x = v.get<std::string>()[0] - '0';
  } else {
    throw ParseError(std::string("field '") + name + "' must be 0 or 1", row);
  }
  if (x != 0 && x != 1) throw ParseError(std::string("field '") + name + "' must be 0 or 1", row);
  return x;
}

inline std::string id_field(const nlohmann::json& obj, const char* name, const char* alias, std::size_t row) {
  const nlohmann::json* v = nullptr;
  if (obj.contains(name)) {
    v = &obj[name];
  } else if (obj.contains(alias)) {
    v = &obj[alias];
  } else {
    throw ParseError(std::string("missing field '") + name + "'", row);
  }
  if (v->is_string()) return v->get<std::string>();
  if (v->is_number_integer()) return std::to_string(v->get<long long>());
  throw ParseError(std::string("field '") + name + "' must be a string", row);
}

inline ResponseRecord record_from_json(const nlohmann::json& obj, std::size_t row) {
  if (!obj.is_object()) throw ParseError("expected a JSON object", row);
  ResponseRecord r;
  r.subject = id_field(obj, "subject", "subject_id", row);
  r.item = id_field(obj, "item", "item_id", row);
  for (const char* f : {"s_image", "s_text", "correct"}) {
    if (!obj.contains(f)) throw ParseError(std::string("missing field '") + f + "'", row);
  }
  r.format = FormatIndicator(binary_field(obj["s_image"], "s_image", row), binary_field(obj["s_text"], "s_text", row));
  r.correct = binary_field(obj["correct"], "correct", row);
  return r;
}

// Splits one CSV line; supports double-quoted fields with "" escapes.
inline std::vector<std::string> split_csv_line(const std::string& line, std::size_t row) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", row);
  out.push_back(std::move(cur));
  return out;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  return out + "\"";
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return in;
}

inline bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace detail

inline std::vector<ResponseRecord> parse_records(std::istream& in, FileFormat fmt) {
  std::vector<ResponseRecord> out;
  std::string line;
  std::size_t row = 0;
  if (fmt == FileFormat::Jsonl) {
    while (std::getline(in, line)) {
      ++row;
      if (detail::blank(line)) continue;
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what(), row);
      }
      out.push_back(detail::record_from_json(obj, row));
    }
    return out;
  }
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++row;
    if (detail::blank(line)) continue;
    auto fields = detail::split_csv_line(line, row);
    if (header.empty()) {
      header = std::move(fields);
      continue;
    }
    if (fields.size() != header.size()) throw ParseError("expected " + std::to_string(header.size()) + " fields", row);
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t k = 0; k < header.size(); ++k) obj[header[k]] = fields[k];
    out.push_back(detail::record_from_json(obj, row));
  }
  return out;
}

// Duplicate (subject, item, format) keys and non-binary fields are errors.
inline ResponseTensor load_responses(const std::string& path, FileFormat fmt) {
  auto in = detail::open_input(path);
  return ResponseTensor(parse_records(in, fmt));
}

inline ResponseTensor load_responses(const std::string& path) { return load_responses(path, guess_file_format(path)); }

inline LabelMap load_item_labels(const std::string& path) {
  auto in = detail::open_input(path);
  LabelMap labels;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (detail::blank(line)) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), row);
    }
    auto item = detail::id_field(obj, "item", "item_id", row);
    if (!obj.contains("quality") || !obj["quality"].is_string()) throw ParseError("missing field 'quality'", row);
    try {
      labels[item] = parse_quality(obj["quality"].get<std::string>());
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), row);
    }
  }
  return labels;
}

inline void write_records(std::ostream& out, const ResponseTensor& t, FileFormat fmt) {
  if (fmt == FileFormat::Jsonl) {
    for (const auto& r : t.records()) {
      nlohmann::ordered_json obj;
      obj["subject"] = r.subject;
      obj["item"] = r.item;
      obj["s_image"] = r.format.image;
      obj["s_text"] = r.format.text;
      obj["correct"] = r.correct;
      out << obj.dump() << '\n';
    }
    return;
  }
  out << "subject,item,s_image,s_text,correct\n";
  for (const auto& r : t.records()) {
    out << detail::csv_escape(r.subject) << ',' << detail::csv_escape(r.item) << ',' << r.format.image << ','
        << r.format.text << ',' << r.correct << '\n';
  }
}

inline void save_responses(const std::string& path, const ResponseTensor& t, FileFormat fmt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  write_records(out, t, fmt);
}

inline void save_item_labels(const std::string& path, const std::vector<std::string>& order, const LabelMap& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  for (const auto& item : order) {
    auto it = labels.find(item);
    if (it == labels.end()) continue;
    nlohmann::ordered_json obj;
    obj["item"] = item;
    obj["quality"] = std::string(to_string(it->second));
    out << obj.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Splitting

struct TensorSplit {
  ResponseTensor train;
  ResponseTensor val;
  ResponseTensor test;
};

// Item-level split: every record of a held-out item lands in the same split.
inline TensorSplit split(const ResponseTensor& t, std::size_t val_count, std::size_t test_count, std::uint64_t seed) {
  const auto n = t.items().size();
  if (val_count + test_count > 0 && val_count + test_count >= n) {
    throw ValidationError("val_count + test_count must be smaller than the item count");
  }
  std::vector<int> assign(n, 0);
  Rng rng(derive_seed(seed, {0x5911}));
  auto picked = rng.sample_indices(n, val_count + test_count);
  for (std::size_t k = 0; k < picked.size(); ++k) assign[picked[k]] = k < val_count ? 1 : 2;

  std::vector<ResponseRecord> parts[3];
  for (const auto& r : t.records()) parts[assign[*t.item_index(r.item)]].push_back(r);
  return {ResponseTensor(std::move(parts[0]), t.item_labels()), ResponseTensor(std::move(parts[1]), t.item_labels()),
          ResponseTensor(std::move(parts[2]), t.item_labels())};
}

// Cell-level masking: seeded random fractions of (subject, item, format)
// cells go to validation and test. The training tensor keeps the full index
// lists, so every id stays parameterized.
inline TensorSplit mask_cells(const ResponseTensor& t, double val_fraction, double test_fraction, std::uint64_t seed) {
  if (val_fraction < 0 || test_fraction < 0 || val_fraction + test_fraction >= 1.0) {
    throw ValidationError("mask fractions must be non-negative and sum to less than 1");
  }
  const auto n = t.size();
  const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * double(n)));
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * double(n)));
  std::vector<int> assign(n, 0);
  Rng rng(derive_seed(seed, {0xce11}));
  auto picked = rng.sample_indices(n, n_val + n_test);
  for (std::size_t k = 0; k < picked.size(); ++k) assign[picked[k]] = k < n_val ? 1 : 2;

  std::vector<ResponseRecord> parts[3];
  for (std::size_t k = 0; k < n; ++k) parts[assign[k]].push_back(t.records()[k]);
  return {ResponseTensor(std::move(parts[0]), t.subjects(), t.items(), t.item_labels()),
          ResponseTensor(std::move(parts[1]), t.item_labels()), ResponseTensor(std::move(parts[2]), t.item_labels())};
}

// ---------------------------------------------------------------------------
// Summaries

struct AccuracyRow {
  std::string id;
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const { return total ? double(correct) / double(total) : 0.0; }
};

struct AccuracySummary {
  std::vector<AccuracyRow> subjects;
  std::vector<AccuracyRow> items;
};

// Per-subject and per-item accuracy over records in format `s` (default:
// full format). Groups without such records are omitted.
inline AccuracySummary summarize(const ResponseTensor& t, FormatIndicator s = kFullFormat) {
  std::vector<AccuracyRow> subj(t.subjects().size()), items(t.items().size());
  for (std::size_t k = 0; k < subj.size(); ++k) subj[k].id = t.subjects()[k];
  for (std::size_t k = 0; k < items.size(); ++k) items[k].id = t.items()[k];
  for (const auto& r : t.records()) {
    if (r.format != s) continue;
    auto& a = subj[*t.subject_index(r.subject)];
    auto& b = items[*t.item_index(r.item)];
    ++a.total;
    ++b.total;
    a.correct += r.correct;
    b.correct += r.correct;
  }
  AccuracySummary out;
  for (auto& r : subj) if (r.total) out.subjects.push_back(std::move(r));
  for (auto& r : items) if (r.total) out.items.push_back(std::move(r));
  return out;
}

}  // namespace mmirt
