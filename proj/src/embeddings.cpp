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

#include "attnclust/embeddings.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

namespace attnclust {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(sigmoid(x)) without overflow for large |x|.
double log_sigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

bool parse_double(std::string_view s, double& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string_view> fields_of(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t b = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > b) out.push_back(line.substr(b, i - b));
  }
  return out;
}

}  // namespace

void check_embeddings(const EmbeddingMatrix& emb) {
  if (!emb.rows.allFinite()) throw std::runtime_error("embedding matrix has non-finite entries");
  if (emb.rows.rows() > 0 && !emb.rows.row(Vocabulary::kPad).isZero(0.0))
    throw std::runtime_error("embedding PAD row is not zero");
}

EmbeddingMatrix init_random(std::size_t vocab_size, std::size_t dim, std::uint64_t seed,
                            std::uint64_t vocab_hash) {
  if (vocab_size < 2) throw std::invalid_argument("init_random: vocab_size must be >= 2");
  if (dim < 1) throw std::invalid_argument("init_random: dim must be >= 1");
  Rng rng(seed);
  const double r = 0.5 / static_cast<double>(dim);
  EmbeddingMatrix emb;
  emb.vocab_hash = vocab_hash;
  emb.rows.resize(static_cast<Eigen::Index>(vocab_size), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < emb.rows.rows(); ++i)
    for (Eigen::Index j = 0; j < emb.rows.cols(); ++j) emb.rows(i, j) = uniform_real(rng, -r, r);
  emb.rows.row(Vocabulary::kPad).setZero();
  return emb;
}

void SkipgramConfig::validate() const {
  if (dim < 1 || window < 1 || negatives < 1 || !(learning_rate > 0.0))
    throw std::invalid_argument("SkipgramConfig: dim, window, negatives and learning_rate must be positive");
}

NegativeSampler::NegativeSampler(std::span<const std::size_t> counts, double power) {
  cumulative_.reserve(counts.size());
  double acc = 0.0;
  for (auto c : counts) {
    acc += c > 0 ? std::pow(static_cast<double>(c), power) : 0.0;
    cumulative_.push_back(acc);
  }
  if (acc <= 0.0) throw std::invalid_argument("NegativeSampler: all counts are zero");
}

TokenId NegativeSampler::sample(Rng& rng) const {
  double u = uniform_real(rng, 0.0, cumulative_.back());
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  return static_cast<TokenId>(it - cumulative_.begin());
}

std::vector<std::size_t> token_counts(std::span<const TokenizedDocument> docs,
                                      std::size_t vocab_size) {
  std::vector<std::size_t> counts(vocab_size, 0);
  for (const auto& d : docs)
    for (const auto& s : d.sentences)
      for (auto id : s) {
        if (id < 0 || static_cast<std::size_t>(id) >= vocab_size)
          throw std::out_of_range("token id outside vocabulary");
        if (id != Vocabulary::kPad) ++counts[static_cast<std::size_t>(id)];
      }
  return counts;
}

SkipgramResult train_skipgram(std::span<const TokenizedDocument> docs, const Vocabulary& vocab,
                              const SkipgramConfig& config) {
  config.validate();
  if (docs.empty()) throw std::invalid_argument("train_skipgram: empty corpus");
  const auto counts = token_counts(docs, vocab.size());
  std::size_t distinct = 0, total = 0;
  for (auto c : counts) {
    distinct += c > 0;
    total += c;
  }
  if (distinct < 2) throw std::invalid_argument("train_skipgram: fewer than 2 distinct tokens");

  SkipgramResult result;
  result.embeddings = init_random(vocab.size(), config.dim, config.seed, vocab.hash());
  Eigen::MatrixXd& input = result.embeddings.rows;
  Eigen::MatrixXd output = Eigen::MatrixXd::Zero(input.rows(), input.cols());
  NegativeSampler sampler(counts);
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  const double total_steps = static_cast<double>(config.epochs * total);
  std::size_t step = 0;
  Eigen::VectorXd grad_in(input.cols());
  const auto window = static_cast<std::ptrdiff_t>(config.window);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t pairs = 0;
    for (const auto& doc : docs) {
      for (const auto& sent : doc.sentences) {
        const auto len = static_cast<std::ptrdiff_t>(sent.size());
        for (std::ptrdiff_t pos = 0; pos < len; ++pos) {
          const TokenId center = sent[static_cast<std::size_t>(pos)];
          if (center == Vocabulary::kPad) continue;
          const double lr = config.learning_rate *
                            std::max(1e-4, 1.0 - static_cast<double>(step) / total_steps);
          ++step;
          for (std::ptrdiff_t off = -window; off <= window; ++off) {
            const std::ptrdiff_t cpos = pos + off;
            if (off == 0 || cpos < 0 || cpos >= len) continue;
            const TokenId context = sent[static_cast<std::size_t>(cpos)];
            if (context == Vocabulary::kPad) continue;
            grad_in.setZero();
            for (std::size_t k = 0; k <= config.negatives; ++k) {
              TokenId target = context;
              double label = 1.0;
              if (k > 0) {
                target = sampler.sample(rng);
                if (target == context) continue;
                label = 0.0;
              }
              const double score = input.row(center).dot(output.row(target));
              loss_sum -= label > 0 ? log_sigmoid(score) : log_sigmoid(-score);
              const double g = (label - sigmoid(score)) * lr;
              grad_in += g * output.row(target).transpose();
              output.row(target) += g * input.row(center);
            }
            input.row(center) += grad_in.transpose();
            ++pairs;
          }
        }
      }
    }
    result.epoch_loss.push_back(pairs ? loss_sum / static_cast<double>(pairs) : 0.0);
  }
  input.row(Vocabulary::kPad).setZero();
  check_embeddings(result.embeddings);
  return result;
}

PretrainedLoad parse_pretrained(std::string_view text, const Vocabulary& vocab,
                                std::size_t dim_expected, std::uint64_t seed) {
  if (dim_expected < 1) throw std::invalid_argument("load_pretrained: dim_expected must be >= 1");
  PretrainedLoad out;
  out.embeddings = init_random(vocab.size(), dim_expected, seed, vocab.hash());
  std::vector<bool> filled(vocab.size(), false);
  std::unordered_set<std::string> seen;

  std::size_t line_no = 0;
  bool first = true;
  for (const auto& line : split(text, '\n')) {
    ++line_no;
    auto f = fields_of(line);
    if (f.empty()) continue;
    if (first) {
      first = false;
      double a, b;
      if (f.size() == 2 && parse_double(f[0], a) && parse_double(f[1], b) &&
          f[0].find('.') == std::string_view::npos && f[1].find('.') == std::string_view::npos)
        continue;  // "V d" header
    }
    if (f.size() - 1 != dim_expected)
      throw ParseError("dimension mismatch: expected " + std::to_string(dim_expected) +
                           " values, found " + std::to_string(f.size() - 1),
                       line_no);
    std::string token(f[0]);
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim_expected));
    for (std::size_t j = 0; j < dim_expected; ++j) {
      double x;
      if (!parse_double(f[j + 1], x) || !std::isfinite(x))
        throw ParseError("bad vector value '" + std::string(f[j + 1]) + "'", line_no);
      v(static_cast<Eigen::Index>(j)) = x;
    }
    if (!seen.insert(token).second) {
      out.warnings.push_back("duplicate token '" + token + "' on line " +
                             std::to_string(line_no) + " ignored; first occurrence wins");
      continue;
    }
    if (!vocab.contains(token)) continue;
    const auto id = static_cast<std::size_t>(vocab.id(token));
    out.embeddings.rows.row(static_cast<Eigen::Index>(id)) = v.transpose();
    filled[id] = true;
  }
  const std::size_t real = vocab.size() - 2;
  for (std::size_t id = 2; id < vocab.size(); ++id) filled[id] ? ++out.found : ++out.missing;
  out.coverage = real ? static_cast<double>(out.found) / static_cast<double>(real) : 0.0;
  out.embeddings.rows.row(Vocabulary::kPad).setZero();
  check_embeddings(out.embeddings);
  return out;
}

PretrainedLoad load_pretrained(const std::filesystem::path& path, const Vocabulary& vocab,
                               std::size_t dim_expected, std::uint64_t seed) {
  return parse_pretrained(read_file(path), vocab, dim_expected, seed);
}

std::string format_word_vectors(const EmbeddingMatrix& emb, const Vocabulary& vocab) {
  if (emb.vocab_size() != vocab.size())
    throw std::invalid_argument("format_word_vectors: vocabulary size mismatch");
  std::ostringstream out;
  out << (vocab.size() - 2) << ' ' << emb.dim() << '\n';
  for (std::size_t id = 2; id < vocab.size(); ++id) {
    out << vocab.token(static_cast<TokenId>(id));
    for (std::size_t j = 0; j < emb.dim(); ++j)
      out << ' ' << format_double(emb.rows(static_cast<Eigen::Index>(id), static_cast<Eigen::Index>(j)));
    out << '\n';
  }
  return out.str();
}

std::string embeddings_to_json(const EmbeddingMatrix& emb) {
  nlohmann::json j;
  j["dim"] = emb.dim();
  j["vocab_hash"] = hex64(emb.vocab_hash);
  auto& rows = j["rows"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < emb.rows.rows(); ++i) {
    std::vector<double> r(emb.rows.cols());
    for (Eigen::Index c = 0; c < emb.rows.cols(); ++c) r[static_cast<std::size_t>(c)] = emb.rows(i, c);
    rows.push_back(std::move(r));
  }
  return j.dump() + "\n";
}

EmbeddingMatrix embeddings_from_json(std::string_view text) {
  try {
    auto j = nlohmann::json::parse(text);
    EmbeddingMatrix emb;
    const auto dim = j.at("dim").get<std::size_t>();
    emb.vocab_hash = std::stoull(j.at("vocab_hash").get<std::string>(), nullptr, 16);
    const auto& rows = j.at("rows");
    emb.rows.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto r = rows[i].get<std::vector<double>>();
      if (r.size() != dim) throw ParseError("embedding row " + std::to_string(i) + " has wrong width");
      for (std::size_t c = 0; c < dim; ++c)
        emb.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = r[c];
    }
    check_embeddings(emb);
    return emb;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("embeddings: ") + e.what());
  }
}

}  // namespace attnclust
