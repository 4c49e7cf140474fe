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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "attnclust/corpus.hpp"
#include "attnclust/embeddings.hpp"
#include "attnclust/vectors.hpp"

using namespace attnclust;

namespace {

struct SunMoon {
  Vocabulary vocab;
  std::vector<TokenizedDocument> docs;
};

SunMoon sun_moon_corpus() {
  std::vector<std::string> texts;
  std::mt19937 rng(3);
  for (int i = 0; i < 60; ++i) {
    std::string t = "sun moon. ";
    for (int j = 0; j < 4; ++j) t += "rock" + std::to_string(rng() % 12) + " ";
    t += ". moon sun.";
    texts.push_back(t);
  }
  std::vector<std::vector<std::string>> streams;
  for (const auto& t : texts) streams.push_back(word_stream(t));
  SunMoon out{build_vocabulary(streams, 1), {}};
  for (std::size_t i = 0; i < texts.size(); ++i) {
    out.docs.push_back(tokenize_document(texts[i], out.vocab));
    out.docs.back().id = std::to_string(i);
  }
  return out;
}

Vocabulary small_vocab() {
  std::vector<std::vector<std::string>> docs = {{"alpha", "beta", "gamma", "delta"}};
  return build_vocabulary(docs, 1);
}

}  // namespace

TEST_CASE("random initialization") {
  auto a = init_random(4, 3, 7);
  auto b = init_random(4, 3, 7);
  CHECK(a.rows == b.rows);
  CHECK(a.rows.row(Vocabulary::kPad).isZero(0.0));
  CHECK(a.rows.cwiseAbs().maxCoeff() <= 0.5 / 3);
  CHECK(init_random(4, 3, 8).rows != a.rows);
  CHECK_NOTHROW(check_embeddings(a));
  CHECK_THROWS_AS(init_random(1, 3, 7), std::invalid_argument);
  CHECK_THROWS_AS(init_random(4, 0, 7), std::invalid_argument);
}

TEST_CASE("negative sampler follows count^0.75") {
  std::vector<std::size_t> counts = {0, 0, 16, 1};
  NegativeSampler sampler(counts);
  Rng rng(5);
  int hits2 = 0, reserved = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    auto id = sampler.sample(rng);
    reserved += id < 2;
    hits2 += id == 2;
  }
  CHECK(reserved == 0);
  const double expected = 8.0 / 9.0;  // 16^0.75 = 8
  CHECK(hits2 / static_cast<double>(n) == doctest::Approx(expected).epsilon(0.01));
}

TEST_CASE("skip-gram pulls co-occurring words together") {
  auto c = sun_moon_corpus();
  SkipgramConfig cfg;
  cfg.dim = 16;
  cfg.window = 2;
  cfg.epochs = 10;
  cfg.seed = 4;
  auto before = init_random(c.vocab.size(), cfg.dim, cfg.seed);
  auto r = train_skipgram(c.docs, c.vocab, cfg);
  const auto sun = c.vocab.id("sun"), moon = c.vocab.id("moon");
  const double cos_before = cosine_similarity(before.rows.row(sun).transpose(), before.rows.row(moon).transpose());
  const double cos_after = cosine_similarity(r.embeddings.rows.row(sun).transpose(),
                                             r.embeddings.rows.row(moon).transpose());
  CHECK(cos_after > cos_before);
  CHECK_NOTHROW(check_embeddings(r.embeddings));
  CHECK(r.embeddings.vocab_hash == c.vocab.hash());
  CHECK(r.epoch_loss.size() == cfg.epochs);
  for (std::size_t e = 1; e < r.epoch_loss.size(); ++e) CHECK(r.epoch_loss[e] <= r.epoch_loss[e - 1] * 1.05);
  CHECK(r.epoch_loss.back() < r.epoch_loss.front());
}

TEST_CASE("skip-gram determinism and zero epochs") {
  auto c = sun_moon_corpus();
  SkipgramConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 2;
  cfg.seed = 9;
  CHECK(train_skipgram(c.docs, c.vocab, cfg).embeddings.rows ==
        train_skipgram(c.docs, c.vocab, cfg).embeddings.rows);
  cfg.epochs = 0;
  auto zero = train_skipgram(c.docs, c.vocab, cfg);
  CHECK(zero.embeddings.rows == init_random(c.vocab.size(), cfg.dim, cfg.seed).rows);
  CHECK(zero.epoch_loss.empty());
}

TEST_CASE("skip-gram rejects degenerate corpora") {
  std::vector<std::vector<std::string>> streams = {{"same", "same"}};
  auto vocab = build_vocabulary(streams, 1);
  std::vector<TokenizedDocument> docs = {tokenize_document("same same", vocab)};
  CHECK_THROWS_AS(train_skipgram(docs, vocab, {}), std::invalid_argument);
  CHECK_THROWS_AS(train_skipgram(std::span<const TokenizedDocument>{}, vocab, {}), std::invalid_argument);
  SkipgramConfig bad;
  bad.window = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("pretrained loading") {
  auto vocab = small_vocab();
  auto r = parse_pretrained("alpha 1 2 3\nbeta 4 5 6\ngamma 7 8 9\nother 0 0 0\n", vocab, 3, 1);
  CHECK(r.found == 3);
  CHECK(r.missing == 1);
  CHECK(r.coverage == doctest::Approx(0.75));
  CHECK(r.embeddings.rows.row(vocab.id("beta")) == Eigen::RowVector3d(4, 5, 6));
  CHECK(r.embeddings.rows.row(Vocabulary::kPad).isZero(0.0));
  CHECK_FALSE(r.embeddings.rows.row(vocab.id("delta")).isZero(0.0));
  CHECK_NOTHROW(check_embeddings(r.embeddings));

  auto header = parse_pretrained("3 3\nalpha 1 2 3\n", vocab, 3, 1);
  CHECK(header.found == 1);
  CHECK(header.embeddings.rows.row(vocab.id("alpha")) == Eigen::RowVector3d(1, 2, 3));

  CHECK_THROWS_AS(parse_pretrained("alpha 1 2 3 4 5\n", vocab, 3, 1), ParseError);
  CHECK_THROWS_AS(parse_pretrained("alpha 1 x 3\n", vocab, 3, 1), ParseError);
  CHECK_THROWS(load_pretrained("/nonexistent.vec", vocab, 3, 1));
}

TEST_CASE("duplicate pretrained token keeps the first row") {
  auto vocab = small_vocab();
  auto r = parse_pretrained("alpha 1 2 3\nalpha 9 9 9\n", vocab, 3, 1);
  CHECK(r.embeddings.rows.row(vocab.id("alpha")) == Eigen::RowVector3d(1, 2, 3));
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("alpha") != std::string::npos);
}

TEST_CASE("word-vector file round trip") {
  auto vocab = small_vocab();
  auto emb = init_random(vocab.size(), 4, 2, vocab.hash());
  auto back = parse_pretrained(format_word_vectors(emb, vocab), vocab, 4, 99);
  CHECK(back.coverage == 1.0);
  const auto n = emb.rows.rows() - 2;
  CHECK(back.embeddings.rows.bottomRows(n) == emb.rows.bottomRows(n));
}

TEST_CASE("embedding JSON round trip") {
  auto emb = init_random(5, 3, 11, 1234);
  auto back = embeddings_from_json(embeddings_to_json(emb));
  CHECK(back.rows == emb.rows);
  CHECK(back.vocab_hash == 1234);
  CHECK_THROWS_AS(embeddings_from_json("{\"dim\": 3"), ParseError);
}
