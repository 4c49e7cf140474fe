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

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "attnclust/vectors.hpp"

namespace attnclust {

/// n points of dimension m, one per row. Carries no class labels.
struct PointSet {
  Eigen::MatrixXd coords;
  std::vector<std::string> doc_ids;

  std::size_t size() const { return static_cast<std::size_t>(coords.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(coords.cols()); }

  static PointSet from_vectors(std::span<const DocumentVector> vectors);
};

inline constexpr int kNoise = -1;

struct ClusterAssignment {
  std::string algorithm;
  std::vector<int> labels;
  std::size_t k_found = 0;
  std::size_t iterations = 0;
  bool converged = true;
  double inertia = 0.0;                    // k-means family only
  std::vector<double> inertia_history;     // one entry per Lloyd assignment step
  std::map<std::string, double> params;    // effective parameters used
  std::vector<std::string> notes;
};

/// Relabels non-noise clusters 0..k-1 in order of first appearance and sets
/// k_found.
void canonicalize(ClusterAssignment& assignment);

/// True when the non-noise labels are exactly 0..k_found-1.
bool has_contiguous_labels(const ClusterAssignment& assignment);

/// Noise points become one extra cluster so metrics see a total labelling.
std::vector<int> labels_with_noise_cluster(const ClusterAssignment& assignment);

ClusterAssignment kmeans(const PointSet& points, std::size_t k, std::size_t n_init = 10,
                         std::size_t max_iter = 300, std::uint64_t seed = 0);

ClusterAssignment minibatch_kmeans(const PointSet& points, std::size_t k,
                                   std::size_t batch_size = 100, std::size_t max_iter = 100,
                                   std::uint64_t seed = 0);

enum class Linkage { kWard, kComplete, kAverage };

/// Bottom-up merging; on equal criterion values the smallest (i, j) pair wins.
ClusterAssignment agglomerative(const PointSet& points, std::size_t k,
                                Linkage linkage = Linkage::kWard);

/// Ward merging of weighted points (weights act as multiplicities).
ClusterAssignment weighted_ward(const Eigen::MatrixXd& coords, std::span<const double> weights,
                                std::size_t k);

/// The eps-neighbourhood includes the point itself.
ClusterAssignment dbscan(const PointSet& points, double eps, std::size_t min_samples);

/// Flat-kernel mode seeking from every point.
ClusterAssignment mean_shift(const PointSet& points, double bandwidth, std::size_t max_iter = 300);

/// Clustering feature: count, linear sum and squared sum of a point group.
struct ClusteringFeature {
  double n = 0.0;
  Eigen::VectorXd linear_sum;
  double squared_sum = 0.0;

  static ClusteringFeature of_point(const Eigen::VectorXd& x);
  void merge(const ClusteringFeature& other);
  Eigen::VectorXd centroid() const;
  /// Root-mean-square distance of members to the centroid.
  double radius() const;
};

ClusterAssignment birch(const PointSet& points, double threshold, std::size_t branching,
                        std::size_t k);

/// Message passing on s(i,j) = -|xi - xj|^2 with preference equal to the
/// median similarity. Deterministic: no noise is injected into s.
ClusterAssignment affinity_propagation(const PointSet& points, double damping = 0.9,
                                       std::size_t max_iter = 200,
                                       std::size_t convergence_iter = 15);

/// round(sqrt(n)), at least 1.
std::size_t estimate_k_sqrt(std::size_t n);

/// Twice the median distance to the 4th nearest other point.
double default_dbscan_eps(const PointSet& points);
/// Half the median pairwise distance.
double default_bandwidth(const PointSet& points);

// ---------------------------------------------------------------------------
// Uniform entry point over the seven algorithms
// ---------------------------------------------------------------------------

enum class Algorithm { kKMeans, kAgglomerative, kDbscan, kMeanShift, kBirch, kAffinity, kMiniBatchKMeans };

/// Row order of a result table.
inline constexpr std::array<Algorithm, 7> kAllAlgorithms = {
    Algorithm::kKMeans, Algorithm::kAgglomerative, Algorithm::kDbscan, Algorithm::kMeanShift,
    Algorithm::kBirch,  Algorithm::kAffinity,      Algorithm::kMiniBatchKMeans};

std::string_view algorithm_name(Algorithm a);
Algorithm algorithm_from_name(std::string_view name);
/// Whether the algorithm is told the number of clusters.
bool takes_k(Algorithm a);

struct ClusteringParams {
  std::size_t kmeans_n_init = 10;
  std::size_t kmeans_max_iter = 300;
  std::size_t minibatch_size = 100;
  std::size_t minibatch_max_iter = 100;
  Linkage linkage = Linkage::kWard;
  double dbscan_eps = 0.0;  // 0: default_dbscan_eps
  std::size_t dbscan_min_samples = 4;
  double bandwidth = 0.0;  // 0: default_bandwidth
  std::size_t meanshift_max_iter = 300;
  double birch_threshold = 0.5;
  std::size_t birch_branching = 50;
  double ap_damping = 0.9;
  std::size_t ap_max_iter = 200;
  std::size_t ap_convergence_iter = 15;
  std::uint64_t seed = 0;
};

ClusterAssignment run_algorithm(Algorithm algorithm, const PointSet& points, std::size_t k,
                                const ClusteringParams& params);

/// `doc_id,label` rows with a header.
std::string format_assignment_csv(const PointSet& points, const ClusterAssignment& assignment);
/// {algorithm, params, k_found, iterations, converged}
std::string format_diagnostics_json(const ClusterAssignment& assignment);

}  // namespace attnclust
