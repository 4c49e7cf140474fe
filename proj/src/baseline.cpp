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

#include "attnclust/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace attnclust {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double log_sigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

Eigen::MatrixXd random_rows(std::size_t n, std::size_t dim, Rng& rng) {
  const double r = 0.5 / static_cast<double>(dim);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = uniform_real(rng, -r, r);
  return m;
}

// Runs the DBOW objective over `docs`. `doc_vectors` rows are always
// updated; `word_output` only when `train_words` is set.
std::vector<double> run_dbow(std::span<const TokenizedDocument> docs, Eigen::MatrixXd& doc_vectors,
                             Eigen::MatrixXd& word_output, bool train_words,
                             const NegativeSampler& sampler, const ParagraphVectorConfig& cfg,
                             Rng& rng) {
  std::size_t tokens = 0;
  for (const auto& d : docs) tokens += d.token_count();
  const double total_steps = static_cast<double>(std::max<std::size_t>(1, cfg.epochs * tokens));
  std::size_t step = 0;
  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), 0);
  Eigen::RowVectorXd grad(doc_vectors.cols());
  std::vector<double> losses;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    seeded_shuffle(order, rng);
    double loss_sum = 0.0;
    std::size_t pairs = 0;
    for (auto di : order) {
      auto dv = doc_vectors.row(static_cast<Eigen::Index>(di));
      for (const auto& sent : docs[di].sentences) {
        for (TokenId w : sent) {
          if (w == Vocabulary::kPad) continue;
          const double lr =
              cfg.learning_rate * std::max(1e-4, 1.0 - static_cast<double>(step++) / total_steps);
          grad.setZero();
          for (std::size_t k = 0; k <= cfg.negatives; ++k) {
            TokenId target = w;
            double label = 1.0;
            if (k > 0) {
              target = sampler.sample(rng);
              if (target == w) continue;
              label = 0.0;
            }
            auto out = word_output.row(target);
            const double score = dv.dot(out);
            loss_sum -= label > 0 ? log_sigmoid(score) : log_sigmoid(-score);
            const double g = (label - sigmoid(score)) * lr;
            grad += g * out;
            if (train_words) out += g * dv;
          }
          dv += grad;
          ++pairs;
        }
      }
    }
    losses.push_back(pairs ? loss_sum / static_cast<double>(pairs) : 0.0);
  }
  return losses;
}

}  // namespace

void ParagraphVectorConfig::validate() const {
  if (!dim || !negatives || !(learning_rate > 0.0))
    throw std::invalid_argument("ParagraphVectorConfig: dim, negatives and learning_rate must be positive");
}

ParagraphVectorResult train_doc_vectors(std::span<const TokenizedDocument> docs,
                                        std::size_t vocab_size,
                                        const ParagraphVectorConfig& config) {
  config.validate();
  if (docs.size() < 2) throw std::invalid_argument("train_doc_vectors: need at least 2 documents");
  ParagraphVectorResult result;
  auto& p = result.params;
  p.config = config;
  p.counts = token_counts(docs, vocab_size);
  Rng rng(config.seed);
  p.doc_vectors = random_rows(docs.size(), config.dim, rng);
  p.word_output = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(vocab_size),
                                        static_cast<Eigen::Index>(config.dim));
  NegativeSampler sampler(p.counts);
  result.epoch_loss = run_dbow(docs, p.doc_vectors, p.word_output, true, sampler, config, rng);
  for (std::size_t i = 0; i < docs.size(); ++i)
    result.vectors.push_back({docs[i].id, p.doc_vectors.row(static_cast<Eigen::Index>(i)).transpose()});
  return result;
}

std::vector<DocumentVector> infer_doc_vectors(const ParagraphVectorParams& params,
                                              std::span<const TokenizedDocument> docs) {
  Rng rng(params.config.seed ^ 0xd1b54a32d192ed03ULL);
  Eigen::MatrixXd doc_vectors = random_rows(docs.size(), params.config.dim, rng);
  Eigen::MatrixXd words = params.word_output;
  NegativeSampler sampler(params.counts);
  // Bounds-check ids against the frozen table.
  token_counts(docs, static_cast<std::size_t>(words.rows()));
  run_dbow(docs, doc_vectors, words, false, sampler, params.config, rng);
  std::vector<DocumentVector> out;
  for (std::size_t i = 0; i < docs.size(); ++i)
    out.push_back({docs[i].id, doc_vectors.row(static_cast<Eigen::Index>(i)).transpose()});
  return out;
}

DocumentVector mean_embedding_vector(const TokenizedDocument& doc, const EmbeddingMatrix& emb) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(emb.rows.cols());
  std::size_t n = 0;
  for (const auto& s : doc.sentences)
    for (TokenId id : s) {
      if (id < 0 || static_cast<std::size_t>(id) >= emb.vocab_size())
        throw std::out_of_range("mean_embedding_vector: token id outside embedding table");
      if (id == Vocabulary::kPad) continue;
      sum += emb.rows.row(id).transpose();
      ++n;
    }
  if (n == 0) throw std::invalid_argument("mean_embedding_vector: document '" + doc.id + "' is all PAD");
  return {doc.id, sum / static_cast<double>(n)};
}

}  // namespace attnclust
