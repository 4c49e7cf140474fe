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

#include <random>

#include "attnclust/han.hpp"
#include "han_fixtures.hpp"

using namespace attnclust;

namespace {

HanParams toy_params(const fixtures::ToyCorpus& c, const HanConfig& cfg) {
  return HanParams::initialize(cfg, init_random(c.vocab_size, cfg.embed_dim, 11, 77));
}

bool same_params(const HanParams& a, const HanParams& b) {
  const auto sa = a.to_store(), sb = b.to_store();
  if (sa.size() != sb.size()) return false;
  for (std::size_t i = 0; i < sa.size(); ++i)
    if (sa.name(i) != sb.name(i) || sa.value(i) != sb.value(i)) return false;
  return true;
}

}  // namespace

TEST_CASE("forward pass shapes and attention normalisation") {
  auto c = fixtures::disjoint_corpus(10, 1);
  auto cfg = fixtures::toy_config();
  auto p = toy_params(c, cfg);
  for (const auto& d : c.docs) {
    auto f = forward_classify(p, d);
    CHECK(f.vector.values.size() == static_cast<Eigen::Index>(2 * cfg.sent_hidden));
    CHECK(f.vector.doc_id == d.id);
    CHECK(f.probabilities.sum() == doctest::Approx(1.0));
    CHECK(f.sentence_attention.size() == static_cast<Eigen::Index>(d.sentences.size()));
    CHECK(std::abs(f.sentence_attention.sum() - 1.0) < 1e-12);
    REQUIRE(f.word_attention.size() == d.sentences.size());
    for (std::size_t s = 0; s < d.sentences.size(); ++s) {
      CHECK(f.word_attention[s].size() == static_cast<Eigen::Index>(d.sentences[s].size()));
      CHECK(std::abs(f.word_attention[s].sum() - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("single word document") {
  auto c = fixtures::disjoint_corpus(2, 1);
  auto p = toy_params(c, fixtures::toy_config());
  TokenizedDocument d{"w", {{5}}, {}};
  auto f = forward_classify(p, d);
  REQUIRE(f.word_attention.size() == 1);
  CHECK(f.word_attention[0].size() == 1);
  CHECK(f.word_attention[0](0) == 1.0);
  CHECK(f.sentence_attention(0) == 1.0);
}

TEST_CASE("padding is ignored") {
  auto c = fixtures::disjoint_corpus(2, 1);
  auto p = toy_params(c, fixtures::toy_config());
  TokenizedDocument plain{"a", {{4, 5, 6}, {7}}, {}};
  TokenizedDocument padded{"a", {{4, 5, 6, Vocabulary::kPad, Vocabulary::kPad}, {7, Vocabulary::kPad}}, {}};
  auto a = forward_classify(p, plain), b = forward_classify(p, padded);
  CHECK(a.vector.values == b.vector.values);
  CHECK(a.probabilities == b.probabilities);
  TokenizedDocument bad{"x", {{static_cast<TokenId>(c.vocab_size)}}, {}};
  CHECK_THROWS(forward_classify(p, bad));
}

TEST_CASE("end-to-end gradient") {
  auto c = fixtures::disjoint_corpus(2, 5);
  auto cfg = fixtures::toy_config();
  cfg.embed_dim = 4;
  cfg.word_hidden = 3;
  cfg.sent_hidden = 3;
  cfg.attention_dim = 4;
  auto p = HanParams::initialize(cfg, init_random(c.vocab_size, cfg.embed_dim, 2, 77));
  p.embedding.rows *= 20.0;  // keep embedding gradients well above rounding noise
  p.embedding.rows.row(Vocabulary::kPad).setZero();
  auto report = finite_difference_check(fixtures::han_loss_function(c.docs, 77), p.to_store(),
                                        {1e-5, 2000, 1e-8, 1});
  CHECK_MESSAGE(report.max_rel_error < 1e-4, report.worst_param);
}

TEST_CASE("training is deterministic and zero epochs is a no-op") {
  auto c = fixtures::disjoint_corpus(12, 2);
  auto cfg = fixtures::toy_config();
  cfg.epochs = 3;
  auto emb = init_random(c.vocab_size, cfg.embed_dim, 11, 77);
  auto a = train_han(cfg, c.docs, emb);
  auto b = train_han(cfg, c.docs, emb);
  CHECK(same_params(a.params, b.params));
  CHECK(a.history.loss == b.history.loss);
  CHECK(a.history.loss.size() == 3);
  CHECK(a.history.accuracy.size() == 3);

  cfg.epochs = 0;
  auto z = train_han(cfg, c.docs, emb);
  CHECK(same_params(z.params, HanParams::initialize(cfg, emb)));
  CHECK(z.history.loss.empty());
}

TEST_CASE("training preconditions") {
  auto c = fixtures::disjoint_corpus(4, 2);
  auto cfg = fixtures::toy_config();
  auto emb = init_random(c.vocab_size, cfg.embed_dim, 11, 77);
  auto unlabeled = c.docs;
  unlabeled[1].label.reset();
  CHECK_THROWS_AS(train_han(cfg, unlabeled, emb), std::invalid_argument);
  auto out_of_range = c.docs;
  out_of_range[0].label = 2;
  CHECK_THROWS_AS(train_han(cfg, out_of_range, emb), std::invalid_argument);
  CHECK_THROWS_AS(train_han(cfg, std::span<const TokenizedDocument>{}, emb), std::invalid_argument);
  cfg.classes = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("divergence reports the epoch") {
  auto c = fixtures::disjoint_corpus(4, 2);
  auto cfg = fixtures::toy_config();
  cfg.epochs = 3;
  cfg.learning_rate = 1e308;
  cfg.clip_norm = 1e308;
  try {
    train_han(cfg, c.docs, init_random(c.vocab_size, cfg.embed_dim, 11, 77));
    FAIL("expected divergence");
  } catch (const TrainingDiverged& e) {
    CHECK(e.epoch() < 3);
  }
}

TEST_CASE("full-batch training loss does not rise") {
  auto c = fixtures::disjoint_corpus(20, 4);
  auto cfg = fixtures::toy_config();
  cfg.batch_size = c.docs.size();
  cfg.epochs = 60;
  auto r = train_han(cfg, c.docs, init_random(c.vocab_size, cfg.embed_dim, 11, 77));
  for (std::size_t e = 1; e < r.history.loss.size(); ++e)
    CHECK(r.history.loss[e] <= r.history.loss[e - 1] * 1.05);
  CHECK(r.history.loss.back() < r.history.loss.front());
}

TEST_CASE("encoding is pure, ordered and batch independent") {
  auto c = fixtures::disjoint_corpus(9, 6);
  auto p = toy_params(c, fixtures::toy_config());
  auto all = encode_corpus(p, c.docs);
  REQUIRE(all.size() == c.docs.size());
  for (std::size_t i = 0; i < c.docs.size(); ++i) {
    CHECK(all[i].doc_id == c.docs[i].id);
    auto single = encode_corpus(p, std::span(c.docs).subspan(i, 1));
    CHECK(single[0].values == all[i].values);
    CHECK(forward_classify(p, c.docs[i]).vector.values == all[i].values);
  }
  CHECK(encode_corpus(p, c.docs)[4].values == all[4].values);
}

TEST_CASE("trained vectors separate the classes") {
  auto c = fixtures::disjoint_corpus(20, 7);
  auto cfg = fixtures::toy_config();
  auto r = train_han(cfg, c.docs, init_random(c.vocab_size, cfg.embed_dim, 11, 77));
  CHECK(r.history.accuracy.back() == 1.0);
  auto v = encode_corpus(r.params, c.docs);
  double same = 0.0, cross = 0.0;
  int ns = 0, nc = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j) {
      const double cs = cosine_similarity(v[i].values, v[j].values);
      if (c.docs[i].label == c.docs[j].label) {
        same += cs;
        ++ns;
      } else {
        cross += cs;
        ++nc;
      }
    }
  CHECK(cross / nc < same / ns);
  CHECK(cosine_similarity(v[0].values, v[1].values) < cosine_similarity(v[0].values, v[2].values));
}

TEST_CASE("checkpoint round trip") {
  auto c = fixtures::disjoint_corpus(6, 8);
  auto cfg = fixtures::toy_config();
  cfg.epochs = 2;
  auto r = train_han(cfg, c.docs, init_random(c.vocab_size, cfg.embed_dim, 11, 77));
  const auto bytes = serialize_checkpoint(cfg, r.params);
  auto back = parse_checkpoint(bytes, 77);
  CHECK(same_params(back.params, r.params));
  CHECK(back.config.to_json() == cfg.to_json());
  CHECK(back.params.embedding.vocab_hash == 77);
  CHECK(forward_classify(back.params, c.docs[0]).probabilities ==
        forward_classify(r.params, c.docs[0]).probabilities);

  CHECK_THROWS_AS(parse_checkpoint(bytes, 78), CheckpointError);
  auto bumped = bytes;
  bumped[8] = static_cast<char>(bumped[8] + 1);
  CHECK_THROWS_AS(parse_checkpoint(bumped), CheckpointError);

  std::mt19937_64 rng(1);
  for (int i = 0; i < 25; ++i) {
    const auto cut = rng() % bytes.size();
    CHECK_THROWS_AS(parse_checkpoint(bytes.substr(0, cut)), CheckpointError);
  }
  CHECK_THROWS_AS(parse_checkpoint(bytes + "x"), CheckpointError);
}

TEST_CASE("config JSON round trip") {
  auto cfg = fixtures::toy_config(4);
  cfg.mode = EmbeddingMode::kPretrained;
  cfg.fine_tune_embeddings = false;
  auto back = HanConfig::from_json(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());
  CHECK(back.mode == EmbeddingMode::kPretrained);
  CHECK(embedding_mode_from_string(to_string(EmbeddingMode::kRandom)) == EmbeddingMode::kRandom);
  CHECK_THROWS(embedding_mode_from_string("bogus"));
}
