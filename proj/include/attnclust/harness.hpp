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

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "attnclust/baseline.hpp"
#include "attnclust/clustering.hpp"
#include "attnclust/corpus.hpp"
#include "attnclust/embeddings.hpp"
#include "attnclust/han.hpp"
#include "attnclust/report.hpp"

namespace attnclust {

/// A failure inside one pipeline stage ("load", "split", "embeddings", ...).
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& message)
      : std::runtime_error(stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct ExperimentConfig {
  std::filesystem::path dataset;
  std::filesystem::path pretrained;  // word vectors for AP variations
  TableSchema schema;
  std::size_t min_per_class = 3;
  std::size_t max_per_class = 20;
  std::size_t min_freq = 1;
  TokenLimits limits;
  HanConfig han;  // embed_dim doubles as the skip-gram dimension
  bool fine_tune_pretrained = false;  // han.fine_tune_embeddings applies to AS only
  SkipgramConfig skipgram;
  ParagraphVectorConfig doc2vec = [] {
    ParagraphVectorConfig c;
    c.dim = 0;  // 0: 2 * han.sent_hidden
    return c;
  }();
  ClusteringParams clustering;
  std::filesystem::path out_dir;  // empty: nothing written

  /// Sorted `key = value` lines covering every field.
  std::string canonical() const;
  std::string hash() const;
  /// Throws StageError("config", ...) naming the missing file.
  void check_files(bool need_pretrained) const;
};

/// `key = value` lines; `#` starts a comment. Unknown keys are errors.
ExperimentConfig parse_experiment_config(std::string_view text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
/// Applies one `key = value` setting.
void set_config_value(ExperimentConfig& config, std::string_view key, std::string_view value);

/// Everything derived from the dataset before any model is trained.
struct PreparedData {
  FilteredCorpus corpus;
  SplitPair split;
  LabelEncoder labels;
  Vocabulary vocab;
  std::vector<TokenizedDocument> docs;  // aligned with corpus.records
};

PreparedData prepare_data(const ExperimentConfig& config, double fraction, std::uint64_t seed);

/// Training documents keep labels; clustering documents are copied with
/// labels removed and their true label ids returned separately.
std::vector<TokenizedDocument> training_documents(const PreparedData& data);
std::vector<TokenizedDocument> clustering_documents(const PreparedData& data,
                                                    std::vector<int>* true_labels = nullptr);

/// Runs the seven algorithms on `vectors` and scores them against
/// `true_labels`.
ResultTable cluster_and_score(const std::string& code, std::span<const DocumentVector> vectors,
                              std::span<const int> true_labels, const ClusteringParams& params,
                              const std::filesystem::path& out_dir = {});

ResultTable run_variation(const VariationSpec& spec, const ExperimentConfig& config);
ResultTable run_plain(const ExperimentConfig& config, std::uint64_t seed);

/// Writes `<code>_table.csv`, `<code>_table.md`, `<code>_provenance.json` and
/// `<code>_avg_ev.svg` (+ sidecar).
void write_table_artifacts(const ResultTable& table, const std::filesystem::path& out_dir);

}  // namespace attnclust
