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
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "attnclust/common.hpp"

namespace attnclust {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Sequences are stored column-wise: a d x T matrix holds T steps of width d.

// ---------------------------------------------------------------------------
// LSTM
// ---------------------------------------------------------------------------

/// Gate blocks are stacked in the order input, forget, output, candidate:
/// rows [0,h) of W/U/b belong to the input gate, [h,2h) to the forget gate
/// and so on.
struct LstmParams {
  Mat W;  // 4h x d_in
  Mat U;  // 4h x h
  Vec b;  // 4h

  std::size_t hidden() const { return static_cast<std::size_t>(U.cols()); }
  std::size_t input_dim() const { return static_cast<std::size_t>(W.cols()); }

  static LstmParams zeros(std::size_t input_dim, std::size_t hidden);
  /// Xavier-uniform per gate block, zero biases except the forget gate (1).
  static LstmParams xavier(std::size_t input_dim, std::size_t hidden, Rng& rng);
};

struct LstmState {
  Vec h;
  Vec c;
};

struct LstmStepCache {
  Vec x, h_prev, c_prev;
  Vec i, f, o, g;
  Vec c, tanh_c;
};

struct LstmStepGrad {
  Vec dx, dh_prev, dc_prev;
};

/// One step of the standard LSTM cell. Throws std::domain_error on non-finite
/// input.
LstmState lstm_cell_step(const Vec& x, const Vec& h_prev, const Vec& c_prev,
                         const LstmParams& params, LstmStepCache* cache = nullptr);

/// Backpropagates `dh`/`dc` (gradients w.r.t. the step's h and c outputs)
/// through one cached step, accumulating parameter gradients into `grads`.
LstmStepGrad lstm_cell_backward(const LstmStepCache& cache, const LstmParams& params,
                                const Vec& dh, const Vec& dc, LstmParams& grads);

struct BiLstmCache {
  std::vector<LstmStepCache> fwd;
  std::vector<LstmStepCache> bwd;  // bwd[t] is the step that consumed input t
};

/// Returns a 2h x T matrix whose column t is [h_fwd_t; h_bwd_t]. Both
/// directions start from a zero state.
Mat bilstm_encode(const Mat& sequence, const LstmParams& fwd, const LstmParams& bwd,
                  BiLstmCache* cache = nullptr);

/// Gradient w.r.t. the input sequence; parameter gradients are accumulated.
Mat bilstm_backward(const BiLstmCache& cache, const LstmParams& fwd, const LstmParams& bwd,
                    const Mat& d_output, LstmParams& grad_fwd, LstmParams& grad_bwd);

// ---------------------------------------------------------------------------
// Attention pooling
// ---------------------------------------------------------------------------

struct AttentionParams {
  Mat W;        // a x state_dim
  Vec b;        // a
  Vec context;  // a

  static AttentionParams zeros(std::size_t state_dim, std::size_t attention_dim);
  static AttentionParams xavier(std::size_t state_dim, std::size_t attention_dim, Rng& rng);
};

struct AttentionOutput {
  Vec pooled;
  Vec weights;
};

struct AttentionCache {
  Mat states;
  Mat projected;  // tanh(W s_t + b), column per step
  Vec weights;
  std::vector<bool> mask;
};

/// u_t = tanh(W s_t + b), score_t = u_t . context, weights = softmax(score),
/// pooled = sum_t weights_t s_t. Positions with mask[t] == false receive
/// exactly zero weight; an empty mask means every position is live.
AttentionOutput attention_pool(const Mat& states, const AttentionParams& params,
                               std::span<const bool> mask = {},
                               AttentionCache* cache = nullptr);

Mat attention_backward(const AttentionCache& cache, const AttentionParams& params,
                       const Vec& d_pooled, AttentionParams& grads);

// ---------------------------------------------------------------------------
// Output layer
// ---------------------------------------------------------------------------

Vec softmax(const Vec& logits);

struct SoftmaxXent {
  Vec probabilities;
  double loss = 0.0;
  Vec d_input;
  Mat d_W;
  Vec d_b;
};

/// p = softmax(W v + b), loss = -log p[label], with log-sum-exp stabilisation.
SoftmaxXent dense_softmax_xent(const Vec& v, int label, const Mat& W, const Vec& b);

// ---------------------------------------------------------------------------
// Parameter storage and gradient checking
// ---------------------------------------------------------------------------

/// Named parameter tensors, each paired with a same-shaped gradient.
/// Iteration order is insertion order.
class ParamStore {
 public:
  void add(const std::string& name, Mat value);
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  Mat& value(const std::string& name) { return values_.at(index_.at(name)); }
  const Mat& value(const std::string& name) const { return values_.at(index_.at(name)); }
  Mat& grad(const std::string& name) { return grads_.at(index_.at(name)); }
  const Mat& grad(const std::string& name) const { return grads_.at(index_.at(name)); }

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Mat& value(std::size_t i) { return values_[i]; }
  const Mat& value(std::size_t i) const { return values_[i]; }
  Mat& grad(std::size_t i) { return grads_[i]; }
  const Mat& grad(std::size_t i) const { return grads_[i]; }

  void zero_grad();
  double grad_norm() const;
  /// Rescales gradients so their global norm is at most `max_norm`.
  /// Returns the norm before clipping.
  double clip_grad_norm(double max_norm);
  std::size_t parameter_count() const;

 private:
  std::vector<std::string> names_;
  std::vector<Mat> values_;
  std::vector<Mat> grads_;
  std::map<std::string, std::size_t> index_;
};

/// Loss over the values in `store`; when `with_grad` is set it also writes
/// the analytic gradient into `store`'s gradient slots.
using LossFunction = std::function<double(ParamStore& store, bool with_grad)>;

struct FdOptions {
  double epsilon = 1e-5;
  std::size_t coords_per_tensor = 50;  // tensors at or below this size are checked fully
  double abs_threshold = 1e-8;         // below this magnitude the absolute error is used
  std::uint64_t seed = 0;
};

struct FdReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t coords_checked = 0;
};

/// Compares the analytic gradient to central differences on a sampled
/// subset of every tensor and reports the worst relative error
/// |a - n| / max(|a|, |n|).
FdReport finite_difference_check(const LossFunction& loss, const ParamStore& params,
                                 const FdOptions& options = {});

}  // namespace attnclust
