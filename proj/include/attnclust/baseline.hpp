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
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "attnclust/corpus.hpp"
#include "attnclust/embeddings.hpp"
#include "attnclust/vectors.hpp"

namespace attnclust {

struct ParagraphVectorConfig {
  std::size_t dim = 100;
  std::size_t negatives = 5;
  std::size_t epochs = 20;
  double learning_rate = 0.025;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Distributed bag-of-words paragraph vectors: each document vector is
/// trained to predict the document's own tokens against negative samples.
struct ParagraphVectorParams {
  Eigen::MatrixXd doc_vectors;  // N x d
  Eigen::MatrixXd word_output;  // V x d
  std::vector<std::size_t> counts;  // unigram counts behind the negative sampler
  ParagraphVectorConfig config;
};

struct ParagraphVectorResult {
  ParagraphVectorParams params;
  std::vector<DocumentVector> vectors;  // input order
  std::vector<double> epoch_loss;       // mean loss per (document, token) pair
};

ParagraphVectorResult train_doc_vectors(std::span<const TokenizedDocument> docs,
                                        std::size_t vocab_size,
                                        const ParagraphVectorConfig& config);

/// Vectors for unseen documents: the word matrix is frozen and only the new
/// document rows are optimised under the same objective.
std::vector<DocumentVector> infer_doc_vectors(const ParagraphVectorParams& params,
                                              std::span<const TokenizedDocument> docs);

/// Unweighted mean of the document's non-PAD word vectors.
DocumentVector mean_embedding_vector(const TokenizedDocument& doc, const EmbeddingMatrix& emb);

}  // namespace attnclust
