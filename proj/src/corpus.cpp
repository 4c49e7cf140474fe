// Copyright 2026 The attnclust Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "attnclust/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "attnclust/common.hpp"

namespace attnclust {

namespace {

struct Row {
  std::size_t line = 0;
  std::vector<std::string> fields;
  std::string error;
};

// Splits delimited text into rows, honouring quoted fields. `line` is the
// physical line on which the row starts.
std::vector<Row> split_rows(std::string_view content, char delim) {
  std::vector<Row> rows;
  std::size_t i = 0;
  std::size_t line = 1;
  const std::size_t n = content.size();
  while (i < n) {
    Row row;
    row.line = line;
    std::string field;
    bool in_quotes = false;
    bool quoted = false;
    bool done = false;
    while (!done) {
      if (i >= n) {
        if (in_quotes) row.error = "unterminated quoted field";
        row.fields.push_back(std::move(field));
        break;
      }
      char c = content[i];
      if (in_quotes) {
        if (c == '"') {
          if (i + 1 < n && content[i + 1] == '"') {
            field.push_back('"');
            i += 2;
          } else {
            in_quotes = false;
            ++i;
          }
        } else {
          if (c == '\n') ++line;
          field.push_back(c);
          ++i;
        }
        continue;
      }
      if (c == '"' && field.empty() && !quoted) {
        in_quotes = true;
        quoted = true;
        ++i;
      } else if (c == delim) {
        row.fields.push_back(std::move(field));
        field.clear();
        quoted = false;
        ++i;
      } else if (c == '\r' && i + 1 < n && content[i + 1] == '\n') {
        ++i;
      } else if (c == '\n') {
        row.fields.push_back(std::move(field));
        ++line;
        ++i;
        done = true;
      } else {
        if (quoted && row.error.empty()) row.error = "text after closing quote";
        field.push_back(c);
        ++i;
      }
    }
    // Blank lines carry no data.
    if (row.fields.size() == 1 && row.fields[0].empty() && row.error.empty()) continue;
    rows.push_back(std::move(row));
  }
  return rows;
}

bool needs_quotes(const std::string& s, char delim) {
  return s.find_first_of(std::string{delim, '"', '\n', '\r'}) != std::string::npos;
}

std::string quote_field(const std::string& s, char delim) {
  if (!needs_quotes(s, delim)) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

bool is_word_char(unsigned char c) { return c >= 0x80 || std::isalnum(c); }

}  // namespace

LoadResult parse_records(std::string_view content, const TableSchema& schema) {
  const char delim = schema.delimiter ? schema.delimiter : ',';
  auto rows = split_rows(content, delim);
  if (rows.empty()) throw ParseError("no header row");
  const Row& header = rows.front();
  if (!header.error.empty()) throw ParseError("malformed header: " + header.error, header.line);

  auto find_col = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t c = 0; c < header.fields.size(); ++c)
      if (trim(header.fields[c]) == name) return c;
    return std::nullopt;
  };
  auto text_col = find_col(schema.text_col);
  if (!text_col) throw ParseError("missing text column '" + schema.text_col + "'", header.line);
  auto label_col = find_col(schema.label_col);
  if (!label_col) throw ParseError("missing label column '" + schema.label_col + "'", header.line);
  auto id_col = find_col(schema.id_col);
  // Files exported from data frames often carry an unnamed leading index.
  if (!id_col && !header.fields.empty() && trim(header.fields[0]).empty()) id_col = 0;

  LoadResult result;
  std::set<std::string> seen_ids;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const Row& row = rows[r];
    if (!row.error.empty()) {
      result.malformed.push_back({row.line, row.error});
      continue;
    }
    if (row.fields.size() != header.fields.size()) {
      result.malformed.push_back({row.line, "expected " + std::to_string(header.fields.size()) +
                                                " fields, found " +
                                                std::to_string(row.fields.size())});
      continue;
    }
    RawRecord rec;
    rec.id = id_col ? trim(row.fields[*id_col]) : std::to_string(r);
    rec.text = row.fields[*text_col];
    rec.class_label = trim(row.fields[*label_col]);
    if (trim(rec.text).empty() || rec.class_label.empty()) {
      ++result.dropped_empty;
      continue;
    }
    if (rec.id.empty()) rec.id = std::to_string(r);
    if (!seen_ids.insert(rec.id).second) {
      result.malformed.push_back({row.line, "duplicate id '" + rec.id + "'"});
      continue;
    }
    for (std::size_t c = 0; c < header.fields.size(); ++c) {
      if (c == *text_col || c == *label_col || (id_col && c == *id_col)) continue;
      rec.extra[trim(header.fields[c])] = row.fields[c];
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

LoadResult load_records(const std::filesystem::path& path, TableSchema schema) {
  if (!std::filesystem::exists(path)) throw ParseError("missing file: " + path.string());
  if (!schema.delimiter) {
    auto ext = path.extension().string();
    schema.delimiter = (ext == ".tsv" || ext == ".tab") ? '\t' : ',';
  }
  return parse_records(read_file(path), schema);
}

std::string format_records(std::span<const RawRecord> records, const TableSchema& schema) {
  const char delim = schema.delimiter ? schema.delimiter : ',';
  std::string out = schema.id_col + delim + schema.text_col + delim + schema.label_col + "\n";
  for (const auto& r : records) {
    out += quote_field(r.id, delim);
    out += delim;
    out += quote_field(r.text, delim);
    out += delim;
    out += quote_field(r.class_label, delim);
    out += '\n';
  }
  return out;
}

FilteredCorpus filter_classes(std::span<const RawRecord> records, std::size_t min_count,
                              std::size_t max_per_class, std::uint64_t seed) {
  if (min_count < 1) throw std::invalid_argument("filter_classes: min_count must be >= 1");
  if (max_per_class < min_count)
    throw std::invalid_argument("filter_classes: max_per_class must be >= min_count");

  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < records.size(); ++i) by_class[records[i].class_label].push_back(i);

  Rng rng(seed);
  std::vector<std::size_t> keep;
  FilteredCorpus out;
  for (auto& [label, idx] : by_class) {
    if (idx.size() < min_count) continue;
    if (idx.size() > max_per_class) {
      seeded_shuffle(idx, rng);
      idx.resize(max_per_class);
    }
    out.class_counts[label] = idx.size();
    keep.insert(keep.end(), idx.begin(), idx.end());
  }
  if (keep.empty()) throw std::runtime_error("filter_classes: every class was filtered out");
  std::sort(keep.begin(), keep.end());
  out.records.reserve(keep.size());
  for (auto i : keep) out.records.push_back(records[i]);
  return out;
}

SplitPair stratified_split(const FilteredCorpus& corpus, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0))
    throw std::invalid_argument("stratified_split: ratio must lie in (0, 1)");
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < corpus.records.size(); ++i)
    by_class[corpus.records[i].class_label].push_back(i);

  Rng rng(seed);
  SplitPair split;
  for (auto& [label, idx] : by_class) {
    seeded_shuffle(idx, rng);
    const std::size_t c = idx.size();
    std::size_t n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(c) + 0.5 + 1e-9));
    if (c == 1) {
      n_train = 0;
      split.warnings.push_back("class '" + label + "' has a single record; kept for clustering");
    }
    n_train = std::min(n_train, c);
    split.training.insert(split.training.end(), idx.begin(), idx.begin() + static_cast<long>(n_train));
    split.clustering.insert(split.clustering.end(), idx.begin() + static_cast<long>(n_train), idx.end());
  }
  std::sort(split.training.begin(), split.training.end());
  std::sort(split.clustering.begin(), split.clustering.end());
  return split;
}

LabelEncoder::LabelEncoder(std::vector<std::string> labels) : labels_(std::move(labels)) {
  std::sort(labels_.begin(), labels_.end());
  labels_.erase(std::unique(labels_.begin(), labels_.end()), labels_.end());
}

LabelEncoder LabelEncoder::fit(std::span<const RawRecord> records) {
  std::vector<std::string> labels;
  for (const auto& r : records) labels.push_back(r.class_label);
  return LabelEncoder(std::move(labels));
}

int LabelEncoder::encode(const std::string& label) const {
  auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
  if (it == labels_.end() || *it != label) throw std::out_of_range("unknown label '" + label + "'");
  return static_cast<int>(it - labels_.begin());
}

Vocabulary::Vocabulary() : Vocabulary({}, {}, 1) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::vector<std::size_t> frequencies,
                       std::size_t min_freq)
    : min_freq_(min_freq) {
  if (tokens.size() != frequencies.size())
    throw std::invalid_argument("Vocabulary: token and frequency counts differ");
  tokens_ = {std::string(kPadToken), std::string(kOovToken)};
  freqs_ = {0, 0};
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (index_.count(tokens[i]) || tokens[i] == kPadToken || tokens[i] == kOovToken)
      throw std::invalid_argument("Vocabulary: duplicate token '" + tokens[i] + "'");
    index_.emplace(tokens[i], static_cast<TokenId>(tokens_.size()));
    tokens_.push_back(std::move(tokens[i]));
    freqs_.push_back(frequencies[i]);
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : tokens_) {
    h = fnv1a64(t, h);
    h = fnv1a64(std::string_view("\n", 1), h);
  }
  hash_ = h;
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kOov : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.count(std::string(token)) > 0;
}

std::string Vocabulary::to_json() const {
  nlohmann::json j;
  j["min_freq"] = min_freq_;
  j["hash"] = hex64(hash_);
  j["tokens"] = std::vector<std::string>(tokens_.begin() + 2, tokens_.end());
  j["frequencies"] = std::vector<std::size_t>(freqs_.begin() + 2, freqs_.end());
  return j.dump() + "\n";
}

Vocabulary Vocabulary::from_json(std::string_view text) {
  try {
    auto j = nlohmann::json::parse(text);
    Vocabulary v(j.at("tokens").get<std::vector<std::string>>(),
                 j.at("frequencies").get<std::vector<std::size_t>>(),
                 j.at("min_freq").get<std::size_t>());
    if (j.contains("hash") && j["hash"].get<std::string>() != hex64(v.hash()))
      throw ParseError("vocabulary hash does not match its tokens");
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("vocabulary: ") + e.what());
  }
}

Vocabulary build_vocabulary(std::span<const std::vector<std::string>> documents,
                            std::size_t min_freq) {
  if (min_freq < 1) throw std::invalid_argument("build_vocabulary: min_freq must be >= 1");
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& doc : documents)
    for (const auto& w : doc) {
      ++counts[w];
      ++total;
    }
  if (total == 0) throw std::invalid_argument("build_vocabulary: empty corpus");
  std::vector<std::pair<std::string, std::size_t>> entries;
  for (auto& [w, c] : counts)
    if (c >= min_freq) entries.emplace_back(w, c);
  // std::map iteration already orders ties lexicographically.
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  std::vector<std::size_t> freqs;
  for (auto& [w, c] : entries) {
    tokens.push_back(w);
    freqs.push_back(c);
  }
  return Vocabulary(std::move(tokens), std::move(freqs), min_freq);
}

std::size_t TokenizedDocument::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

std::vector<std::vector<std::string>> segment_text(std::string_view text) {
  std::vector<std::vector<std::string>> sentences;
  std::vector<std::string> current;
  std::string word;
  auto flush_word = [&] {
    std::size_t b = 0, e = word.size();
    while (b < e && !is_word_char(static_cast<unsigned char>(word[b]))) ++b;
    while (e > b && !is_word_char(static_cast<unsigned char>(word[e - 1]))) --e;
    if (e > b) current.push_back(word.substr(b, e - b));
    word.clear();
  };
  auto flush_sentence = [&] {
    flush_word();
    if (!current.empty()) sentences.push_back(std::move(current));
    current.clear();
  };
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (c == '.' || c == '!' || c == '?') {
      flush_sentence();
    } else if (std::isspace(c)) {
      flush_word();
    } else {
      word.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  flush_sentence();
  return sentences;
}

std::vector<std::string> word_stream(std::string_view text) {
  std::vector<std::string> words;
  for (auto& s : segment_text(text))
    for (auto& w : s) words.push_back(std::move(w));
  return words;
}

TokenizedDocument tokenize_document(std::string_view text, const Vocabulary& vocab,
                                    TokenLimits limits) {
  if (limits.max_sentences < 1 || limits.max_words < 1)
    throw std::invalid_argument("tokenize_document: limits must be >= 1");
  TokenizedDocument doc;
  for (const auto& words : segment_text(text)) {
    if (doc.sentences.size() == limits.max_sentences) break;
    Sentence s;
    for (const auto& w : words) {
      if (s.size() == limits.max_words) break;
      s.push_back(vocab.id(w));
    }
    doc.sentences.push_back(std::move(s));
  }
  if (doc.sentences.empty()) doc.sentences.push_back({Vocabulary::kOov});
  return doc;
}

std::vector<std::vector<std::string>> detokenize(const TokenizedDocument& doc,
                                                 const Vocabulary& vocab) {
  std::vector<std::vector<std::string>> out;
  for (const auto& s : doc.sentences) {
    std::vector<std::string> words;
    for (auto id : s) words.push_back(vocab.token(id));
    out.push_back(std::move(words));
  }
  return out;
}

std::string format_corpus_jsonl(std::span<const TokenizedDocument> docs) {
  std::string out;
  for (const auto& d : docs) {
    nlohmann::json j;
    j["id"] = d.id;
    j["label_id"] = d.label ? nlohmann::json(*d.label) : nlohmann::json(nullptr);
    j["sentences"] = d.sentences;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<TokenizedDocument> parse_corpus_jsonl(std::string_view text) {
  std::vector<TokenizedDocument> docs;
  std::size_t line_no = 0;
  for (const auto& line : split(text, '\n')) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      TokenizedDocument d;
      d.id = j.at("id").get<std::string>();
      if (!j.at("label_id").is_null()) d.label = j["label_id"].get<int>();
      d.sentences = j.at("sentences").get<std::vector<Sentence>>();
      if (d.sentences.empty()) throw ParseError("document without sentences", line_no);
      for (const auto& s : d.sentences)
        if (s.empty()) throw ParseError("empty sentence", line_no);
      docs.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("corpus jsonl: ") + e.what(), line_no);
    }
  }
  return docs;
}

}  // namespace attnclust
