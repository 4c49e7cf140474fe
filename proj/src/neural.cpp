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

#include "attnclust/neural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace attnclust {

namespace {

Vec sigmoid(const Vec& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

void xavier_fill(Eigen::Ref<Mat> block, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (Eigen::Index c = 0; c < block.cols(); ++c)
    for (Eigen::Index r = 0; r < block.rows(); ++r) block(r, c) = uniform_real(rng, -limit, limit);
}

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

}  // namespace

LstmParams LstmParams::zeros(std::size_t input_dim, std::size_t hidden) {
  LstmParams p;
  p.W = Mat::Zero(idx(4 * hidden), idx(input_dim));
  p.U = Mat::Zero(idx(4 * hidden), idx(hidden));
  p.b = Vec::Zero(idx(4 * hidden));
  return p;
}

LstmParams LstmParams::xavier(std::size_t input_dim, std::size_t hidden, Rng& rng) {
  LstmParams p = zeros(input_dim, hidden);
  const auto h = idx(hidden);
  for (Eigen::Index gate = 0; gate < 4; ++gate) {
    xavier_fill(p.W.middleRows(gate * h, h), input_dim, hidden, rng);
    xavier_fill(p.U.middleRows(gate * h, h), hidden, hidden, rng);
  }
  p.b.segment(h, h).setOnes();
  return p;
}

LstmState lstm_cell_step(const Vec& x, const Vec& h_prev, const Vec& c_prev,
                         const LstmParams& params, LstmStepCache* cache) {
  const auto h = idx(params.hidden());
  if (x.size() != params.W.cols() || h_prev.size() != h || c_prev.size() != h)
    throw std::invalid_argument("lstm_cell_step: dimension mismatch");
  if (!x.allFinite() || !h_prev.allFinite() || !c_prev.allFinite())
    throw std::domain_error("lstm_cell_step: non-finite input");

  Vec z = params.W * x + params.U * h_prev + params.b;
  Vec i = sigmoid(z.segment(0, h));
  Vec f = sigmoid(z.segment(h, h));
  Vec o = sigmoid(z.segment(2 * h, h));
  Vec g = z.segment(3 * h, h).array().tanh().matrix();
  LstmState next;
  next.c = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
  Vec tanh_c = next.c.array().tanh().matrix();
  next.h = o.cwiseProduct(tanh_c);
  if (cache) {
    cache->x = x;
    cache->h_prev = h_prev;
    cache->c_prev = c_prev;
    cache->i = std::move(i);
    cache->f = std::move(f);
    cache->o = std::move(o);
    cache->g = std::move(g);
    cache->c = next.c;
    cache->tanh_c = std::move(tanh_c);
  }
  return next;
}

LstmStepGrad lstm_cell_backward(const LstmStepCache& cache, const LstmParams& params,
                                const Vec& dh, const Vec& dc, LstmParams& grads) {
  const auto h = idx(params.hidden());
  const auto& k = cache;
  Vec dc_total = dc + dh.cwiseProduct(k.o).cwiseProduct((1.0 - k.tanh_c.array().square()).matrix());
  Vec dz(4 * h);
  dz.segment(0, h) = dc_total.cwiseProduct(k.g).array() * k.i.array() * (1.0 - k.i.array());
  dz.segment(h, h) = dc_total.cwiseProduct(k.c_prev).array() * k.f.array() * (1.0 - k.f.array());
  dz.segment(2 * h, h) = dh.cwiseProduct(k.tanh_c).array() * k.o.array() * (1.0 - k.o.array());
  dz.segment(3 * h, h) = dc_total.cwiseProduct(k.i).array() * (1.0 - k.g.array().square());

  grads.W.noalias() += dz * k.x.transpose();
  grads.U.noalias() += dz * k.h_prev.transpose();
  grads.b += dz;

  LstmStepGrad out;
  out.dx.noalias() = params.W.transpose() * dz;
  out.dh_prev.noalias() = params.U.transpose() * dz;
  out.dc_prev = dc_total.cwiseProduct(k.f);
  return out;
}

Mat bilstm_encode(const Mat& sequence, const LstmParams& fwd, const LstmParams& bwd,
                  BiLstmCache* cache) {
  const Eigen::Index T = sequence.cols();
  if (T == 0) throw std::invalid_argument("bilstm_encode: empty sequence");
  const auto hf = idx(fwd.hidden());
  const auto hb = idx(bwd.hidden());
  Mat out(hf + hb, T);
  if (cache) {
    cache->fwd.assign(static_cast<std::size_t>(T), {});
    cache->bwd.assign(static_cast<std::size_t>(T), {});
  }
  LstmState s{Vec::Zero(hf), Vec::Zero(hf)};
  for (Eigen::Index t = 0; t < T; ++t) {
    s = lstm_cell_step(sequence.col(t), s.h, s.c, fwd,
                       cache ? &cache->fwd[static_cast<std::size_t>(t)] : nullptr);
    out.col(t).head(hf) = s.h;
  }
  s = {Vec::Zero(hb), Vec::Zero(hb)};
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    s = lstm_cell_step(sequence.col(t), s.h, s.c, bwd,
                       cache ? &cache->bwd[static_cast<std::size_t>(t)] : nullptr);
    out.col(t).tail(hb) = s.h;
  }
  return out;
}

Mat bilstm_backward(const BiLstmCache& cache, const LstmParams& fwd, const LstmParams& bwd,
                    const Mat& d_output, LstmParams& grad_fwd, LstmParams& grad_bwd) {
  const auto T = static_cast<Eigen::Index>(cache.fwd.size());
  const auto hf = idx(fwd.hidden());
  const auto hb = idx(bwd.hidden());
  Mat d_seq = Mat::Zero(idx(fwd.input_dim()), T);

  Vec dh_next = Vec::Zero(hf), dc_next = Vec::Zero(hf);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    Vec dh = d_output.col(t).head(hf) + dh_next;
    auto g = lstm_cell_backward(cache.fwd[static_cast<std::size_t>(t)], fwd, dh, dc_next, grad_fwd);
    d_seq.col(t) += g.dx;
    dh_next = std::move(g.dh_prev);
    dc_next = std::move(g.dc_prev);
  }
  dh_next = Vec::Zero(hb);
  dc_next = Vec::Zero(hb);
  for (Eigen::Index t = 0; t < T; ++t) {
    Vec dh = d_output.col(t).tail(hb) + dh_next;
    auto g = lstm_cell_backward(cache.bwd[static_cast<std::size_t>(t)], bwd, dh, dc_next, grad_bwd);
    d_seq.col(t) += g.dx;
    dh_next = std::move(g.dh_prev);
    dc_next = std::move(g.dc_prev);
  }
  return d_seq;
}

AttentionParams AttentionParams::zeros(std::size_t state_dim, std::size_t attention_dim) {
  AttentionParams p;
  p.W = Mat::Zero(idx(attention_dim), idx(state_dim));
  p.b = Vec::Zero(idx(attention_dim));
  p.context = Vec::Zero(idx(attention_dim));
  return p;
}

AttentionParams AttentionParams::xavier(std::size_t state_dim, std::size_t attention_dim,
                                        Rng& rng) {
  AttentionParams p = zeros(state_dim, attention_dim);
  xavier_fill(p.W, state_dim, attention_dim, rng);
  Mat ctx(idx(attention_dim), 1);
  xavier_fill(ctx, attention_dim, 1, rng);
  p.context = ctx.col(0);
  return p;
}

AttentionOutput attention_pool(const Mat& states, const AttentionParams& params,
                               std::span<const bool> mask, AttentionCache* cache) {
  const Eigen::Index T = states.cols();
  if (T == 0) throw std::invalid_argument("attention_pool: no states");
  if (states.rows() != params.W.cols())
    throw std::invalid_argument("attention_pool: state width mismatch");
  if (!mask.empty() && static_cast<Eigen::Index>(mask.size()) != T)
    throw std::invalid_argument("attention_pool: mask length mismatch");
  auto live = [&](Eigen::Index t) { return mask.empty() || mask[static_cast<std::size_t>(t)]; };

  Mat projected = ((params.W * states).colwise() + params.b).array().tanh().matrix();
  Vec scores = projected.transpose() * params.context;
  double max_score = -std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t < T; ++t)
    if (live(t)) max_score = std::max(max_score, scores(t));
  if (!std::isfinite(max_score)) throw std::invalid_argument("attention_pool: every position masked");

  AttentionOutput out;
  out.weights = Vec::Zero(T);
  double total = 0.0;
  for (Eigen::Index t = 0; t < T; ++t)
    if (live(t)) total += out.weights(t) = std::exp(scores(t) - max_score);
  out.weights /= total;
  out.pooled = states * out.weights;
  if (cache) {
    cache->states = states;
    cache->projected = std::move(projected);
    cache->weights = out.weights;
    cache->mask.assign(mask.begin(), mask.end());
  }
  return out;
}

Mat attention_backward(const AttentionCache& cache, const AttentionParams& params,
                       const Vec& d_pooled, AttentionParams& grads) {
  const auto& w = cache.weights;
  Mat d_states = d_pooled * w.transpose();
  Vec d_weights = cache.states.transpose() * d_pooled;
  Vec d_scores = w.cwiseProduct((d_weights.array() - w.dot(d_weights)).matrix());
  // Masked positions carry zero weight, hence zero score gradient.
  grads.context.noalias() += cache.projected * d_scores;
  Mat d_pre = (params.context * d_scores.transpose()).cwiseProduct(
      (1.0 - cache.projected.array().square()).matrix());
  grads.W.noalias() += d_pre * cache.states.transpose();
  grads.b += d_pre.rowwise().sum();
  d_states.noalias() += params.W.transpose() * d_pre;
  return d_states;
}

Vec softmax(const Vec& logits) {
  Vec e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

SoftmaxXent dense_softmax_xent(const Vec& v, int label, const Mat& W, const Vec& b) {
  if (label < 0 || label >= W.rows())
    throw std::invalid_argument("dense_softmax_xent: label out of range");
  if (W.cols() != v.size() || b.size() != W.rows())
    throw std::invalid_argument("dense_softmax_xent: dimension mismatch");
  Vec logits = W * v + b;
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  SoftmaxXent out;
  out.probabilities = (logits.array() - lse).exp().matrix();
  out.loss = lse - logits(label);
  Vec d_logits = out.probabilities;
  d_logits(label) -= 1.0;
  out.d_W = d_logits * v.transpose();
  out.d_b = d_logits;
  out.d_input = W.transpose() * d_logits;
  return out;
}

void ParamStore::add(const std::string& name, Mat value) {
  if (index_.count(name)) throw std::invalid_argument("ParamStore: duplicate name " + name);
  index_.emplace(name, names_.size());
  names_.push_back(name);
  grads_.push_back(Mat::Zero(value.rows(), value.cols()));
  values_.push_back(std::move(value));
}

void ParamStore::zero_grad() {
  for (auto& g : grads_) g.setZero();
}

double ParamStore::grad_norm() const {
  double sq = 0.0;
  for (const auto& g : grads_) sq += g.squaredNorm();
  return std::sqrt(sq);
}

double ParamStore::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (auto& g : grads_) g *= scale;
  }
  return norm;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
  return n;
}

FdReport finite_difference_check(const LossFunction& loss, const ParamStore& params,
                                 const FdOptions& options) {
  ParamStore work = params;
  work.zero_grad();
  const double base = loss(work, true);
  if (!std::isfinite(base)) throw std::runtime_error("finite_difference_check: non-finite loss");
  const ParamStore analytic = work;

  Rng rng(options.seed);
  FdReport report;
  for (std::size_t p = 0; p < work.size(); ++p) {
    const auto n = static_cast<std::size_t>(work.value(p).size());
    std::vector<std::size_t> coords(n);
    std::iota(coords.begin(), coords.end(), 0);
    if (n > options.coords_per_tensor) {
      seeded_shuffle(coords, rng);
      coords.resize(options.coords_per_tensor);
    }
    for (auto c : coords) {
      double& x = work.value(p).data()[c];
      const double saved = x;
      x = saved + options.epsilon;
      const double up = loss(work, false);
      x = saved - options.epsilon;
      const double down = loss(work, false);
      x = saved;
      if (!std::isfinite(up) || !std::isfinite(down))
        throw std::runtime_error("finite_difference_check: non-finite loss");
      const double numeric = (up - down) / (2.0 * options.epsilon);
      const double a = analytic.grad(p).data()[c];
      const double scale = std::max(std::abs(a), std::abs(numeric));
      const double err = scale < options.abs_threshold ? std::abs(a - numeric)
                                                       : std::abs(a - numeric) / scale;
      ++report.coords_checked;
      if (report.worst_param.empty() || err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_param = work.name(p);
        report.worst_index = c;
      }
    }
  }
  return report;
}

}  // namespace attnclust
