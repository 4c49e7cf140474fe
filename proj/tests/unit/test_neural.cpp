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

#include <cmath>
#include <random>

#include "attnclust/neural.hpp"

using namespace attnclust;

namespace {

Mat random_mat(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

void add_lstm(ParamStore& s, const std::string& prefix, const LstmParams& p) {
  s.add(prefix + ".W", p.W);
  s.add(prefix + ".U", p.U);
  s.add(prefix + ".b", p.b);
}

LstmParams lstm_from(const ParamStore& s, const std::string& prefix) {
  return {s.value(prefix + ".W"), s.value(prefix + ".U"), s.value(prefix + ".b").col(0)};
}

void put_lstm_grads(ParamStore& s, const std::string& prefix, const LstmParams& g) {
  s.grad(prefix + ".W") = g.W;
  s.grad(prefix + ".U") = g.U;
  s.grad(prefix + ".b") = g.b;
}

void add_attention(ParamStore& s, const AttentionParams& p) {
  s.add("attn.W", p.W);
  s.add("attn.b", p.b);
  s.add("attn.ctx", p.context);
}

AttentionParams attention_from(const ParamStore& s) {
  return {s.value("attn.W"), s.value("attn.b").col(0), s.value("attn.ctx").col(0)};
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

constexpr double kLayerTolerance = 1e-5;

}  // namespace

TEST_CASE("lstm cell with zero weights") {
  auto p = LstmParams::zeros(3, 2);
  auto s = lstm_cell_step(Vec::Ones(3), Vec::Zero(2), Vec::Zero(2), p);
  CHECK(s.h.isZero(0.0));
  CHECK(s.c.isZero(0.0));
  Vec c(2);
  c << 1.5, -2.0;
  auto t = lstm_cell_step(Vec::Ones(3), Vec::Zero(2), c, p);
  CHECK(t.c.isApprox(0.5 * c));
  CHECK(t.h(0) == doctest::Approx(0.5 * std::tanh(0.75)));
  CHECK(t.h(1) == doctest::Approx(0.5 * std::tanh(-1.0)));
}

TEST_CASE("lstm cell matches hand-evaluated gates") {
  Rng rng(1);
  auto p = LstmParams::xavier(2, 1, rng);
  p.b << 0.1, 0.2, -0.3, 0.4;
  Vec x(2), h(1), c(1);
  x << 0.5, -1.0;
  h << 0.3;
  c << -0.7;
  auto z = [&](int gate) { return p.W.row(gate).dot(x) + p.U(gate, 0) * h(0) + p.b(gate); };
  const double i = sigmoid(z(0)), f = sigmoid(z(1)), o = sigmoid(z(2)), g = std::tanh(z(3));
  const double c_next = f * c(0) + i * g;
  auto s = lstm_cell_step(x, h, c, p);
  CHECK(s.c(0) == doctest::Approx(c_next).epsilon(1e-14));
  CHECK(s.h(0) == doctest::Approx(o * std::tanh(c_next)).epsilon(1e-14));
}

TEST_CASE("xavier init puts forget bias at one") {
  Rng rng(2);
  auto p = LstmParams::xavier(4, 3, rng);
  CHECK(p.b.segment(3, 3).isApprox(Vec::Ones(3)));
  CHECK(p.b.head(3).isZero(0.0));
  CHECK(p.b.tail(6).isZero(0.0));
  CHECK_FALSE(p.W.isZero(0.0));
}

TEST_CASE("lstm cell rejects non-finite input") {
  auto p = LstmParams::zeros(2, 2);
  Vec x(2);
  x << 1.0, std::nan("");
  CHECK_THROWS(lstm_cell_step(x, Vec::Zero(2), Vec::Zero(2), p));
}

TEST_CASE("lstm cell gradient") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const auto d = static_cast<Eigen::Index>(2 + seed % 3), h = static_cast<Eigen::Index>(1 + seed % 4);
    ParamStore store;
    add_lstm(store, "cell", LstmParams::xavier(static_cast<std::size_t>(d), static_cast<std::size_t>(h), rng));
    store.add("x", random_mat(d, 1, rng));
    store.add("h", random_mat(h, 1, rng));
    store.add("c", random_mat(h, 1, rng));
    const Vec rh = random_mat(h, 1, rng).col(0), rc = random_mat(h, 1, rng).col(0);
    LossFunction loss = [&](ParamStore& s, bool with_grad) {
      auto p = lstm_from(s, "cell");
      LstmStepCache cache;
      auto out = lstm_cell_step(s.value("x").col(0), s.value("h").col(0), s.value("c").col(0), p, &cache);
      if (with_grad) {
        auto g = LstmParams::zeros(p.input_dim(), p.hidden());
        auto back = lstm_cell_backward(cache, p, rh, rc, g);
        put_lstm_grads(s, "cell", g);
        s.grad("x") = back.dx;
        s.grad("h") = back.dh_prev;
        s.grad("c") = back.dc_prev;
      }
      return rh.dot(out.h) + rc.dot(out.c);
    };
    auto report = finite_difference_check(loss, store, {1e-5, 1000, 1e-8, seed});
    CHECK_MESSAGE(report.max_rel_error < kLayerTolerance, report.worst_param);
  }
}

TEST_CASE("bilstm shapes and single step") {
  Rng rng(3);
  auto fwd = LstmParams::xavier(3, 2, rng), bwd = LstmParams::xavier(3, 2, rng);
  Mat seq = random_mat(3, 1, rng);
  Mat out = bilstm_encode(seq, fwd, bwd);
  CHECK(out.rows() == 4);
  auto f = lstm_cell_step(seq.col(0), Vec::Zero(2), Vec::Zero(2), fwd);
  auto b = lstm_cell_step(seq.col(0), Vec::Zero(2), Vec::Zero(2), bwd);
  CHECK(out.col(0).head(2) == f.h);
  CHECK(out.col(0).tail(2) == b.h);
  CHECK(bilstm_encode(random_mat(3, 7, rng), fwd, bwd).cols() == 7);
  CHECK_THROWS(bilstm_encode(Mat(3, 0), fwd, bwd));
}

TEST_CASE("bilstm on a palindrome with shared weights") {
  Rng rng(4);
  auto p = LstmParams::xavier(2, 3, rng);
  Mat a = random_mat(2, 1, rng), b = random_mat(2, 1, rng), c = random_mat(2, 1, rng);
  Mat seq(2, 5);
  seq << a, b, c, b, a;
  Mat out = bilstm_encode(seq, p, p);
  for (Eigen::Index t = 0; t < 5; ++t) {
    CHECK(out.col(t).head(3).isApprox(out.col(4 - t).tail(3), 1e-14));
    CHECK(out.col(t).tail(3).isApprox(out.col(4 - t).head(3), 1e-14));
  }
}

TEST_CASE("bilstm gradient") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Rng rng(seed + 10);
    const Eigen::Index d = 3, h = 2 + static_cast<Eigen::Index>(seed % 2), T = 2 + static_cast<Eigen::Index>(seed);
    ParamStore store;
    add_lstm(store, "fwd", LstmParams::xavier(d, h, rng));
    add_lstm(store, "bwd", LstmParams::xavier(d, h, rng));
    store.add("seq", random_mat(d, T, rng));
    const Mat r = random_mat(2 * h, T, rng);
    LossFunction loss = [&](ParamStore& s, bool with_grad) {
      auto f = lstm_from(s, "fwd"), b = lstm_from(s, "bwd");
      BiLstmCache cache;
      Mat out = bilstm_encode(s.value("seq"), f, b, &cache);
      if (with_grad) {
        auto gf = LstmParams::zeros(f.input_dim(), f.hidden()), gb = gf;
        s.grad("seq") = bilstm_backward(cache, f, b, r, gf, gb);
        put_lstm_grads(s, "fwd", gf);
        put_lstm_grads(s, "bwd", gb);
      }
      return r.cwiseProduct(out).sum();
    };
    auto report = finite_difference_check(loss, store, {1e-5, 1000, 1e-8, seed});
    CHECK_MESSAGE(report.max_rel_error < kLayerTolerance, report.worst_param);
  }
}

TEST_CASE("attention pooling basics") {
  Rng rng(5);
  auto p = AttentionParams::xavier(4, 3, rng);
  Mat one = random_mat(4, 1, rng);
  auto a = attention_pool(one, p);
  CHECK(a.weights(0) == 1.0);
  CHECK(a.pooled.isApprox(one.col(0)));
  Mat twin(4, 2);
  twin << one, one;
  auto b = attention_pool(twin, p);
  CHECK(b.weights(0) == doctest::Approx(0.5));
  CHECK(b.weights(1) == doctest::Approx(0.5));
  CHECK_THROWS(attention_pool(Mat(4, 0), p));
}

TEST_CASE("attention weights are a distribution") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const auto T = static_cast<Eigen::Index>(1 + seed % 9);
    auto p = AttentionParams::xavier(6, 4, rng);
    auto out = attention_pool(random_mat(6, T, rng, 3.0), p);
    CHECK(std::abs(out.weights.sum() - 1.0) <= 1e-12);
    CHECK(out.weights.minCoeff() > 0.0);
  }
}

TEST_CASE("masked positions get zero weight and do not change the result") {
  Rng rng(6);
  auto p = AttentionParams::xavier(4, 3, rng);
  Mat live = random_mat(4, 3, rng);
  Mat padded(4, 5);
  padded << live, random_mat(4, 2, rng);
  const bool mask[5] = {true, true, true, false, false};
  auto masked = attention_pool(padded, p, mask);
  auto plain = attention_pool(live, p);
  CHECK(masked.weights(3) == 0.0);
  CHECK(masked.weights(4) == 0.0);
  CHECK(masked.weights.head(3).isApprox(plain.weights, 1e-14));
  CHECK(masked.pooled.isApprox(plain.pooled, 1e-14));
}

TEST_CASE("attention gradient") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Rng rng(seed + 20);
    const Eigen::Index sd = 4, a = 3, T = 1 + static_cast<Eigen::Index>(seed);
    ParamStore store;
    add_attention(store, AttentionParams::xavier(sd, a, rng));
    store.add("states", random_mat(sd, T, rng));
    const Vec r = random_mat(sd, 1, rng).col(0);
    LossFunction loss = [&](ParamStore& s, bool with_grad) {
      auto p = attention_from(s);
      AttentionCache cache;
      auto out = attention_pool(s.value("states"), p, {}, &cache);
      if (with_grad) {
        auto g = AttentionParams::zeros(sd, a);
        s.grad("states") = attention_backward(cache, p, r, g);
        s.grad("attn.W") = g.W;
        s.grad("attn.b") = g.b;
        s.grad("attn.ctx") = g.context;
      }
      return r.dot(out.pooled);
    };
    auto report = finite_difference_check(loss, store, {1e-5, 1000, 1e-8, seed});
    CHECK_MESSAGE(report.max_rel_error < kLayerTolerance, report.worst_param);
  }
}

TEST_CASE("softmax cross-entropy") {
  auto uniform = dense_softmax_xent(Vec::Ones(3), 1, Mat::Zero(4, 3), Vec::Zero(4));
  CHECK(uniform.loss == doctest::Approx(std::log(4.0)));
  CHECK(uniform.probabilities.isApprox(Vec::Constant(4, 0.25)));

  Vec big(2);
  big << 1000.0, 0.0;
  auto p = softmax(big);
  CHECK(p.allFinite());
  CHECK(p(0) == doctest::Approx(1.0));
  CHECK(p(1) == doctest::Approx(0.0));
  auto x = dense_softmax_xent(Vec::Ones(1), 1, (Mat(2, 1) << 1000.0, 0.0).finished(), Vec::Zero(2));
  CHECK(x.loss == doctest::Approx(1000.0));
}

TEST_CASE("softmax cross-entropy gradient") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed + 30);
    const Eigen::Index m = 5, K = 2 + static_cast<Eigen::Index>(seed % 3);
    ParamStore store;
    store.add("v", random_mat(m, 1, rng));
    store.add("W", random_mat(K, m, rng));
    store.add("b", random_mat(K, 1, rng));
    const int label = static_cast<int>(seed % static_cast<std::uint64_t>(K));
    LossFunction loss = [&](ParamStore& s, bool with_grad) {
      auto out = dense_softmax_xent(s.value("v").col(0), label, s.value("W"), s.value("b").col(0));
      if (with_grad) {
        s.grad("v") = out.d_input;
        s.grad("W") = out.d_W;
        s.grad("b") = out.d_b;
      }
      return out.loss;
    };
    auto report = finite_difference_check(loss, store, {1e-5, 1000, 1e-8, seed});
    CHECK_MESSAGE(report.max_rel_error < 1e-6, report.worst_param);
  }
}

TEST_CASE("finite-difference check on a quadratic") {
  Rng rng(7);
  ParamStore store;
  store.add("theta", random_mat(80, 1, rng));
  store.add("zero", Mat::Zero(3, 1));
  LossFunction loss = [](ParamStore& s, bool with_grad) {
    if (with_grad) {
      s.grad("theta") = 2.0 * s.value("theta");
      s.grad("zero") = 2.0 * s.value("zero");
    }
    return s.value("theta").squaredNorm() + s.value("zero").squaredNorm();
  };
  auto report = finite_difference_check(loss, store);
  CHECK(report.max_rel_error < 1e-8);
  CHECK(report.coords_checked == 53);
  CHECK(std::isfinite(report.max_rel_error));

  LossFunction wrong = [](ParamStore& s, bool with_grad) {
    if (with_grad) s.grad("theta") = 3.0 * s.value("theta");
    return s.value("theta").squaredNorm();
  };
  ParamStore one;
  one.add("theta", Mat::Ones(2, 1));
  CHECK(finite_difference_check(wrong, one).max_rel_error > 0.3);

  LossFunction broken = [](ParamStore&, bool) { return std::nan(""); };
  CHECK_THROWS(finite_difference_check(broken, one));
}

TEST_CASE("param store clipping") {
  ParamStore s;
  s.add("a", Mat::Zero(2, 1));
  s.add("b", Mat::Zero(1, 1));
  s.grad("a") << 3.0, 0.0;
  s.grad("b") << 4.0;
  CHECK(s.grad_norm() == doctest::Approx(5.0));
  CHECK(s.clip_grad_norm(1.0) == doctest::Approx(5.0));
  CHECK(s.grad_norm() == doctest::Approx(1.0));
  CHECK(s.clip_grad_norm(10.0) == doctest::Approx(1.0));
  CHECK(s.grad_norm() == doctest::Approx(1.0));
  CHECK(s.parameter_count() == 3);
  s.zero_grad();
  CHECK(s.grad_norm() == 0.0);
  CHECK(s.grad("a").rows() == 2);
}
