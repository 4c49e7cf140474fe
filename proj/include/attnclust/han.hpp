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
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "attnclust/common.hpp"
#include "attnclust/corpus.hpp"
#include "attnclust/embeddings.hpp"
#include "attnclust/neural.hpp"
#include "attnclust/vectors.hpp"

namespace attnclust {

enum class EmbeddingMode { kRandom, kSelfTrained, kPretrained };

std::string to_string(EmbeddingMode mode);
EmbeddingMode embedding_mode_from_string(std::string_view s);

struct HanConfig {
  EmbeddingMode mode = EmbeddingMode::kSelfTrained;
  std::size_t embed_dim = 100;
  std::size_t word_hidden = 50;
  std::size_t sent_hidden = 50;
  std::size_t attention_dim = 100;
  std::size_t classes = 2;
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  double learning_rate = 0.5;
  double lr_decay = 0.5;         // multiplied in every `decay_every` epochs
  std::size_t decay_every = 20;  // 0 disables decay
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
  bool fine_tune_embeddings = true;

  void validate() const;
  std::string to_json() const;
  static HanConfig from_json(std::string_view text);
};

/// Weights of the two-level encoder plus the classifier head. The chain of
/// widths is embed_dim -> 2*word_hidden -> 2*sent_hidden -> classes.
struct HanParams {
  EmbeddingMatrix embedding;
  LstmParams word_fwd, word_bwd;
  AttentionParams word_attn;
  LstmParams sent_fwd, sent_bwd;
  AttentionParams sent_attn;
  Mat classifier_W;
  Vec classifier_b;

  static HanParams initialize(const HanConfig& config, EmbeddingMatrix embedding);
  /// Same shapes, all zeros.
  HanParams zeros_like() const;

  std::size_t doc_vector_dim() const { return static_cast<std::size_t>(classifier_W.cols()); }
  std::size_t classes() const { return static_cast<std::size_t>(classifier_W.rows()); }

  ParamStore to_store() const;
  static HanParams from_store(const ParamStore& store, std::uint64_t vocab_hash);
};

struct HanForward {
  Vec probabilities;
  DocumentVector vector;
  std::vector<Vec> word_attention;  // one weight vector per sentence
  Vec sentence_attention;
};

/// Word-level Bi-LSTM + attention per sentence, then sentence-level
/// Bi-LSTM + attention to the document vector, then softmax. Trailing PAD
/// ids are stripped from each sentence and interior PADs are masked.
HanForward forward_classify(const HanParams& params, const TokenizedDocument& doc);

/// Cross-entropy of one labelled document; when `grads` is given the
/// gradient is accumulated into it. `probabilities` receives the softmax
/// output.
double han_loss(const HanParams& params, const TokenizedDocument& doc, int label,
                HanParams* grads = nullptr, Vec* probabilities = nullptr);

struct TrainingHistory {
  std::vector<double> loss;      // mean cross-entropy per epoch
  std::vector<double> accuracy;  // fraction classified correctly during the epoch
};

struct TrainedHan {
  HanParams params;
  TrainingHistory history;
};

class TrainingDiverged : public std::runtime_error {
 public:
  explicit TrainingDiverged(std::size_t epoch)
      : std::runtime_error("training diverged (non-finite loss) in epoch " + std::to_string(epoch)),
        epoch_(epoch) {}
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

/// Mini-batch gradient descent on mean cross-entropy with global-norm
/// clipping and step decay. Every document needs a label < config.classes.
/// Throws TrainingDiverged once the loss or the weights stop being finite.
TrainedHan train_han(const HanConfig& config, std::span<const TokenizedDocument> docs,
                     EmbeddingMatrix embeddings);

/// Document vectors (the input of the classifier head) in input order.
std::vector<DocumentVector> encode_corpus(const HanParams& params,
                                          std::span<const TokenizedDocument> docs);

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

class CheckpointError : public ParseError {
 public:
  using ParseError::ParseError;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct HanCheckpoint {
  HanConfig config;
  HanParams params;
};

/// Binary container: magic, version, vocab hash, config JSON, then named
/// tensors (shape + row-major little-endian doubles).
std::string serialize_checkpoint(const HanConfig& config, const HanParams& params);
HanCheckpoint parse_checkpoint(std::string_view bytes,
                               std::optional<std::uint64_t> expected_vocab_hash = std::nullopt);

void save_checkpoint(const std::filesystem::path& path, const HanConfig& config,
                     const HanParams& params);
HanCheckpoint load_checkpoint(const std::filesystem::path& path,
                              std::optional<std::uint64_t> expected_vocab_hash = std::nullopt);

}  // namespace attnclust
