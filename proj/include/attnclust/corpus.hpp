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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace attnclust {

// ---------------------------------------------------------------------------
// Raw tabular records
// ---------------------------------------------------------------------------

struct RawRecord {
  std::string id;
  std::string text;
  std::string class_label;
  std::map<std::string, std::string> extra;  // every other column, unused
};

/// Column mapping for a delimited file with a header row. A zero delimiter
/// means: tab for `.tsv`/`.tab` paths, comma otherwise.
struct TableSchema {
  std::string text_col = "review";
  std::string label_col = "condition";
  std::string id_col = "id";
  char delimiter = 0;
};

struct RowIssue {
  std::size_t line = 0;
  std::string message;
};

struct LoadResult {
  std::vector<RawRecord> records;
  std::size_t dropped_empty = 0;   // rows whose text or label was blank
  std::vector<RowIssue> malformed;  // rows skipped because they could not be parsed
};

/// Parses delimited text with RFC 4180 quoting: a quoted field may contain
/// the delimiter, newlines and doubled quotes. Throws ParseError when the
/// header lacks a declared column.
LoadResult parse_records(std::string_view content, const TableSchema& schema);
LoadResult load_records(const std::filesystem::path& path, TableSchema schema);

/// Renders records back into delimited text, quoting where needed.
std::string format_records(std::span<const RawRecord> records, const TableSchema& schema);

// ---------------------------------------------------------------------------
// Class filtering and stratified splitting
// ---------------------------------------------------------------------------

struct FilteredCorpus {
  std::vector<RawRecord> records;
  std::map<std::string, std::size_t> class_counts;
};

/// Drops classes with fewer than `min_count` records and caps the rest at
/// `max_per_class` by seeded sampling without replacement. Input order is
/// preserved among the survivors.
FilteredCorpus filter_classes(std::span<const RawRecord> records, std::size_t min_count = 3,
                              std::size_t max_per_class = 20, std::uint64_t seed = 0);

struct SplitPair {
  std::vector<std::size_t> training;    // indices into FilteredCorpus::records
  std::vector<std::size_t> clustering;
  std::vector<std::string> warnings;
};

/// Per class, round(ratio * count) records (halves round up, i.e. toward
/// training) go to the training side after a seeded shuffle. A class with a
/// single record always lands on the clustering side.
SplitPair stratified_split(const FilteredCorpus& corpus, double ratio, std::uint64_t seed);

/// Dense 0-based label ids assigned by sorted label string.
class LabelEncoder {
 public:
  LabelEncoder() = default;
  explicit LabelEncoder(std::vector<std::string> labels);
  static LabelEncoder fit(std::span<const RawRecord> records);

  int encode(const std::string& label) const;  // throws on unknown label
  const std::string& decode(int id) const { return labels_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;
};

// ---------------------------------------------------------------------------
// Vocabulary and tokenization
// ---------------------------------------------------------------------------

using TokenId = std::int32_t;
using Sentence = std::vector<TokenId>;

class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kOov = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kOovToken = "<unk>";

  Vocabulary();
  /// Rebuilds from an id-ordered token list (reserved entries excluded).
  Vocabulary(std::vector<std::string> tokens, std::vector<std::size_t> frequencies,
             std::size_t min_freq);

  TokenId id(std::string_view token) const;  // kOov when absent
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t frequency(TokenId id) const { return freqs_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  std::size_t min_freq() const { return min_freq_; }
  /// Fingerprint over the id -> token mapping.
  std::uint64_t hash() const { return hash_; }

  std::string to_json() const;
  static Vocabulary from_json(std::string_view text);

 private:
  std::vector<std::string> tokens_;
  std::vector<std::size_t> freqs_;
  std::unordered_map<std::string, TokenId> index_;
  std::size_t min_freq_ = 1;
  std::uint64_t hash_ = 0;
};

/// Ids ordered by descending frequency, ties by token string. Tokens seen
/// fewer than `min_freq` times are left out and encode as OOV.
Vocabulary build_vocabulary(std::span<const std::vector<std::string>> documents,
                            std::size_t min_freq);

struct TokenizedDocument {
  std::string id;
  std::vector<Sentence> sentences;
  std::optional<int> label;

  std::size_t token_count() const;
};

struct TokenLimits {
  std::size_t max_sentences = 30;
  std::size_t max_words = 50;  // per sentence
};

/// Splits on '.', '!' and '?', then on whitespace; words are lowercased and
/// stripped of leading/trailing non-alphanumeric characters. Bytes >= 0x80
/// count as word characters. Empty sentences are dropped.
std::vector<std::vector<std::string>> segment_text(std::string_view text);

/// All words of `segment_text` in order.
std::vector<std::string> word_stream(std::string_view text);

TokenizedDocument tokenize_document(std::string_view text, const Vocabulary& vocab,
                                    TokenLimits limits = {});

std::vector<std::vector<std::string>> detokenize(const TokenizedDocument& doc,
                                                 const Vocabulary& vocab);

/// One JSON object per line: {"id", "label_id", "sentences"}. Missing labels
/// are written as null.
std::string format_corpus_jsonl(std::span<const TokenizedDocument> docs);
std::vector<TokenizedDocument> parse_corpus_jsonl(std::string_view text);

}  // namespace attnclust
