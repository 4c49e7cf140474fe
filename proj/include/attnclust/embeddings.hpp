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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "attnclust/common.hpp"
#include "attnclust/corpus.hpp"

namespace attnclust {

/// V x d word-vector table. Row `Vocabulary::kPad` is kept at zero.
struct EmbeddingMatrix {
  Eigen::MatrixXd rows;
  std::uint64_t vocab_hash = 0;

  std::size_t vocab_size() const { return static_cast<std::size_t>(rows.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(rows.cols()); }
};

/// Throws if any entry is non-finite or the PAD row is not zero.
void check_embeddings(const EmbeddingMatrix& emb);

/// Entries uniform in [-0.5/d, 0.5/d]; PAD row zeroed.
EmbeddingMatrix init_random(std::size_t vocab_size, std::size_t dim, std::uint64_t seed,
                            std::uint64_t vocab_hash = 0);

struct SkipgramConfig {
  std::size_t dim = 100;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double learning_rate = 0.025;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SkipgramResult {
  EmbeddingMatrix embeddings;
  std::vector<double> epoch_loss;  // mean negative-sampling loss per (center, context) pair
};

/// Draws token ids proportionally to count^0.75.
class NegativeSampler {
 public:
  explicit NegativeSampler(std::span<const std::size_t> counts, double power = 0.75);
  TokenId sample(Rng& rng) const;

 private:
  std::vector<double> cumulative_;
};

/// Token counts over a tokenized corpus, indexed by id. PAD is never counted.
std::vector<std::size_t> token_counts(std::span<const TokenizedDocument> docs,
                                      std::size_t vocab_size);

/// Skip-gram with negative sampling. Context windows stay inside a sentence,
/// the learning rate decays linearly to 1e-4 of its start value, and the
/// center-word matrix is returned.
SkipgramResult train_skipgram(std::span<const TokenizedDocument> docs, const Vocabulary& vocab,
                              const SkipgramConfig& config);

struct PretrainedLoad {
  EmbeddingMatrix embeddings;
  std::size_t found = 0;
  std::size_t missing = 0;
  double coverage = 0.0;  // found / non-reserved vocabulary size
  std::vector<std::string> warnings;
};

/// Reads `token v1 ... vd` lines (optional leading `V d` header). Vocabulary
/// tokens absent from the file get seeded random rows.
PretrainedLoad parse_pretrained(std::string_view text, const Vocabulary& vocab,
                                std::size_t dim_expected, std::uint64_t seed);
PretrainedLoad load_pretrained(const std::filesystem::path& path, const Vocabulary& vocab,
                               std::size_t dim_expected, std::uint64_t seed);

/// Text word-vector format with a `V d` header; reserved rows are skipped.
std::string format_word_vectors(const EmbeddingMatrix& emb, const Vocabulary& vocab);

std::string embeddings_to_json(const EmbeddingMatrix& emb);
EmbeddingMatrix embeddings_from_json(std::string_view text);

}  // namespace attnclust
