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

#include "attnclust/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <stdexcept>

#include <json.hpp>

#include "attnclust/common.hpp"

namespace attnclust {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Index ix(std::size_t n) { return static_cast<Index>(n); }

MatrixXd squared_distances(const MatrixXd& x) {
  const Index n = x.rows();
  MatrixXd d(n, n);
  for (Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Index j = i + 1; j < n; ++j) d(i, j) = d(j, i) = (x.row(i) - x.row(j)).squaredNorm();
  }
  return d;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  double lo = *std::max_element(v.begin(), v.begin() + static_cast<long>(mid));
  return 0.5 * (lo + hi);
}

void check_points(const PointSet& points) {
  if (points.size() == 0) throw std::invalid_argument("clustering: empty point set");
  if (!points.coords.allFinite()) throw std::invalid_argument("clustering: non-finite coordinates");
}

void check_k(const PointSet& points, std::size_t k) {
  if (k < 1) throw std::invalid_argument("clustering: k must be >= 1");
  if (k > points.size())
    throw std::invalid_argument("clustering: k = " + std::to_string(k) + " exceeds n = " +
                                std::to_string(points.size()));
}

// Index of the nearest center, lowest index on ties.
std::size_t nearest(const MatrixXd& centers, const VectorXd& x, double* dist_sq = nullptr) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index c = 0; c < centers.rows(); ++c) {
    const double d = (centers.row(c).transpose() - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::size_t>(c);
    }
  }
  if (dist_sq) *dist_sq = best_d;
  return best;
}

MatrixXd kmeans_plus_plus(const MatrixXd& x, std::size_t k, Rng& rng) {
  const std::size_t n = static_cast<std::size_t>(x.rows());
  MatrixXd centers(ix(k), x.cols());
  std::vector<bool> chosen(n, false);
  std::size_t first = uniform_index(rng, n);
  centers.row(0) = x.row(ix(first));
  chosen[first] = true;
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = (x.row(ix(i)) - centers.row(0)).squaredNorm();
  for (std::size_t c = 1; c < k; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = n;
    if (total > 0.0) {
      double u = uniform_real(rng, 0.0, total);
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        pick = i;
        if (u < d2[i]) break;
        u -= d2[i];
      }
    } else {
      // Every point coincides with a center already; take an unused index.
      std::vector<std::size_t> unused;
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) unused.push_back(i);
      pick = unused[uniform_index(rng, unused.size())];
    }
    chosen[pick] = true;
    centers.row(ix(c)) = x.row(ix(pick));
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], (x.row(ix(i)) - centers.row(ix(c))).squaredNorm());
  }
  return centers;
}

MatrixXd cluster_means(const MatrixXd& x, const std::vector<int>& labels, std::size_t k,
                       std::vector<std::size_t>& sizes) {
  MatrixXd centers = MatrixXd::Zero(ix(k), x.cols());
  sizes.assign(k, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    centers.row(labels[i]) += x.row(ix(i));
    ++sizes[static_cast<std::size_t>(labels[i])];
  }
  for (std::size_t c = 0; c < k; ++c)
    if (sizes[c]) centers.row(ix(c)) /= static_cast<double>(sizes[c]);
  return centers;
}

// Gives every empty cluster the point farthest from its current center,
// taken from clusters that can spare one. Returns true if anything moved.
bool repair_empty_clusters(const MatrixXd& x, std::vector<int>& labels, MatrixXd& centers) {
  const std::size_t k = static_cast<std::size_t>(centers.rows());
  std::vector<std::size_t> sizes;
  centers = cluster_means(x, labels, k, sizes);
  bool moved = false;
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] > 0) continue;
    std::size_t far = labels.size();
    double far_d = -1.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto from = static_cast<std::size_t>(labels[i]);
      if (sizes[from] < 2) continue;
      const double d = (x.row(ix(i)) - centers.row(labels[i])).squaredNorm();
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    if (far == labels.size()) break;  // fewer distinct points than clusters
    --sizes[static_cast<std::size_t>(labels[far])];
    labels[far] = static_cast<int>(c);
    sizes[c] = 1;
    moved = true;
  }
  if (moved) centers = cluster_means(x, labels, k, sizes);
  return moved;
}

double inertia_of(const MatrixXd& x, const std::vector<int>& labels, const MatrixXd& centers) {
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    total += (x.row(ix(i)) - centers.row(labels[i])).squaredNorm();
  return total;
}

struct LloydRun {
  std::vector<int> labels;
  MatrixXd centers;
  std::vector<double> history;
  std::size_t iterations = 0;
  bool converged = false;
};

LloydRun lloyd(const MatrixXd& x, MatrixXd centers, std::size_t max_iter) {
  const std::size_t n = static_cast<std::size_t>(x.rows());
  LloydRun run;
  std::vector<int> assigned(n);
  for (std::size_t it = 0; it < max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i)
      assigned[i] = static_cast<int>(nearest(centers, x.row(ix(i)).transpose()));
    run.history.push_back(inertia_of(x, assigned, centers));
    run.iterations = it + 1;
    if (it > 0 && assigned == run.labels) {
      run.converged = true;
      break;
    }
    run.labels = assigned;
    repair_empty_clusters(x, run.labels, centers);
  }
  run.centers = std::move(centers);
  return run;
}

// ---------------------------------------------------------------------------
// Lance-Williams agglomeration
// ---------------------------------------------------------------------------

ClusterAssignment lance_williams(const MatrixXd& x, std::vector<double> sizes, std::size_t k,
                                 Linkage linkage) {
  const std::size_t n = static_cast<std::size_t>(x.rows());
  MatrixXd d = squared_distances(x);
  if (linkage == Linkage::kWard) {
    // Ward cost of merging weighted singletons, scaled by 2.
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) d(ix(i), ix(j)) *= 2.0 * sizes[i] * sizes[j] / (sizes[i] + sizes[j]);
  } else {
    d = d.cwiseSqrt();
  }
  std::vector<bool> active(n, true);
  std::vector<std::size_t> root(n);
  std::iota(root.begin(), root.end(), 0);
  for (std::size_t merges = 0; merges + k < n; ++merges) {
    std::size_t bi = 0, bj = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        if (d(ix(i), ix(j)) < best) {
          best = d(ix(i), ix(j));
          bi = i;
          bj = j;
        }
      }
    }
    const double ni = sizes[bi], nj = sizes[bj];
    for (std::size_t m = 0; m < n; ++m) {
      if (!active[m] || m == bi || m == bj) continue;
      const double dim = d(ix(bi), ix(m)), djm = d(ix(bj), ix(m));
      double v = 0.0;
      switch (linkage) {
        case Linkage::kWard: {
          const double nm = sizes[m];
          v = ((ni + nm) * dim + (nj + nm) * djm - nm * best) / (ni + nj + nm);
          break;
        }
        case Linkage::kComplete: v = std::max(dim, djm); break;
        case Linkage::kAverage: v = (ni * dim + nj * djm) / (ni + nj); break;
      }
      d(ix(bi), ix(m)) = d(ix(m), ix(bi)) = v;
    }
    sizes[bi] += nj;
    active[bj] = false;
    for (auto& r : root)
      if (r == bj) r = bi;
  }
  ClusterAssignment out;
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.labels[i] = static_cast<int>(root[i]);
  out.iterations = n - k;
  canonicalize(out);
  return out;
}

// ---------------------------------------------------------------------------
// CF tree
// ---------------------------------------------------------------------------

struct CfNode;

struct CfEntry {
  ClusteringFeature cf;
  std::unique_ptr<CfNode> child;  // null in leaves
  int subcluster = -1;            // leaf entries only
};

struct CfNode {
  bool leaf = true;
  std::vector<CfEntry> entries;
};

using NodePair = std::pair<std::unique_ptr<CfNode>, std::unique_ptr<CfNode>>;

ClusteringFeature summarize(const CfNode& node) {
  ClusteringFeature cf = node.entries.front().cf;
  for (std::size_t i = 1; i < node.entries.size(); ++i) cf.merge(node.entries[i].cf);
  return cf;
}

std::size_t closest_entry(const CfNode& node, const VectorXd& x) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < node.entries.size(); ++i) {
    const double d = (node.entries[i].cf.centroid() - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

NodePair split_node(CfNode& node) {
  const std::size_t m = node.entries.size();
  std::size_t a = 0, b = 1;
  double far = -1.0;
  std::vector<VectorXd> cents;
  for (const auto& e : node.entries) cents.push_back(e.cf.centroid());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      const double d = (cents[i] - cents[j]).squaredNorm();
      if (d > far) {
        far = d;
        a = i;
        b = j;
      }
    }
  NodePair out{std::make_unique<CfNode>(), std::make_unique<CfNode>()};
  out.first->leaf = out.second->leaf = node.leaf;
  for (std::size_t i = 0; i < m; ++i) {
    const bool to_first =
        i == a || (i != b && (cents[i] - cents[a]).squaredNorm() <= (cents[i] - cents[b]).squaredNorm());
    (to_first ? out.first : out.second)->entries.push_back(std::move(node.entries[i]));
  }
  return out;
}

class CfTree {
 public:
  CfTree(double threshold, std::size_t branching)
      : threshold_(threshold), branching_(branching), root_(std::make_unique<CfNode>()) {}

  int insert(const VectorXd& x) {
    int sub = -1;
    auto split = insert_into(*root_, x, sub);
    if (split) {
      auto root = std::make_unique<CfNode>();
      root->leaf = false;
      for (auto* half : {&split->first, &split->second}) {
        CfEntry e;
        e.cf = summarize(**half);
        e.child = std::move(*half);
        root->entries.push_back(std::move(e));
      }
      root_ = std::move(root);
    }
    return sub;
  }

  std::vector<ClusteringFeature> subclusters() const {
    std::vector<ClusteringFeature> out(static_cast<std::size_t>(next_id_));
    collect(*root_, out);
    return out;
  }

 private:
  std::optional<NodePair> insert_into(CfNode& node, const VectorXd& x, int& sub) {
    const auto point = ClusteringFeature::of_point(x);
    if (node.entries.empty()) {
      node.entries.push_back({point, nullptr, sub = next_id_++});
      return std::nullopt;
    }
    const std::size_t c = closest_entry(node, x);
    CfEntry& entry = node.entries[c];
    if (!node.leaf) {
      auto split = insert_into(*entry.child, x, sub);
      if (!split) {
        entry.cf.merge(point);
        return std::nullopt;
      }
      CfEntry second;
      second.cf = summarize(*split->second);
      second.child = std::move(split->second);
      entry.cf = summarize(*split->first);
      entry.child = std::move(split->first);
      node.entries.insert(node.entries.begin() + static_cast<long>(c) + 1, std::move(second));
    } else {
      ClusteringFeature merged = entry.cf;
      merged.merge(point);
      if (merged.radius() <= threshold_) {
        entry.cf = std::move(merged);
        sub = entry.subcluster;
        return std::nullopt;
      }
      node.entries.push_back({point, nullptr, sub = next_id_++});
    }
    if (node.entries.size() > branching_) return split_node(node);
    return std::nullopt;
  }

  static void collect(const CfNode& node, std::vector<ClusteringFeature>& out) {
    for (const auto& e : node.entries) {
      if (node.leaf) out[static_cast<std::size_t>(e.subcluster)] = e.cf;
      else collect(*e.child, out);
    }
  }

  double threshold_;
  std::size_t branching_;
  std::unique_ptr<CfNode> root_;
  int next_id_ = 0;
};

}  // namespace

PointSet PointSet::from_vectors(std::span<const DocumentVector> vectors) {
  PointSet p;
  if (vectors.empty()) return p;
  const Index m = vectors.front().values.size();
  p.coords.resize(ix(vectors.size()), m);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].values.size() != m) throw std::invalid_argument("PointSet: ragged vectors");
    p.coords.row(ix(i)) = vectors[i].values.transpose();
    p.doc_ids.push_back(vectors[i].doc_id);
  }
  return p;
}

void canonicalize(ClusterAssignment& a) {
  std::map<int, int> remap;
  for (int& l : a.labels) {
    if (l < 0) {
      l = kNoise;
      continue;
    }
    auto [it, fresh] = remap.emplace(l, static_cast<int>(remap.size()));
    l = it->second;
  }
  a.k_found = remap.size();
}

bool has_contiguous_labels(const ClusterAssignment& a) {
  std::vector<bool> seen(a.k_found, false);
  for (int l : a.labels) {
    if (l == kNoise) continue;
    if (l < 0 || static_cast<std::size_t>(l) >= a.k_found) return false;
    seen[static_cast<std::size_t>(l)] = true;
  }
  return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

std::vector<int> labels_with_noise_cluster(const ClusterAssignment& a) {
  std::vector<int> out = a.labels;
  for (int& l : out)
    if (l == kNoise) l = static_cast<int>(a.k_found);
  return out;
}

ClusterAssignment kmeans(const PointSet& points, std::size_t k, std::size_t n_init,
                         std::size_t max_iter, std::uint64_t seed) {
  check_points(points);
  check_k(points, k);
  if (n_init < 1 || max_iter < 1) throw std::invalid_argument("kmeans: n_init and max_iter must be >= 1");
  const MatrixXd& x = points.coords;
  std::optional<LloydRun> best;
  double best_inertia = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < n_init; ++r) {
    Rng rng(seed + r);
    auto run = lloyd(x, kmeans_plus_plus(x, k, rng), max_iter);
    const double inertia = inertia_of(x, run.labels, run.centers);
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best = std::move(run);
    }
  }
  ClusterAssignment out;
  out.algorithm = "k-means";
  out.labels = best->labels;
  out.inertia = best_inertia;
  out.inertia_history = best->history;
  out.iterations = best->iterations;
  out.converged = best->converged;
  out.params = {{"k", double(k)}, {"n_init", double(n_init)}, {"max_iter", double(max_iter)},
                {"seed", double(seed)}};
  canonicalize(out);
  return out;
}

ClusterAssignment minibatch_kmeans(const PointSet& points, std::size_t k, std::size_t batch_size,
                                   std::size_t max_iter, std::uint64_t seed) {
  check_points(points);
  check_k(points, k);
  if (batch_size < 1 || max_iter < 1)
    throw std::invalid_argument("minibatch_kmeans: batch_size and max_iter must be >= 1");
  const MatrixXd& x = points.coords;
  const std::size_t n = points.size();
  Rng rng(seed);
  MatrixXd centers = kmeans_plus_plus(x, k, rng);
  std::vector<double> counts(k, 0.0);
  std::vector<std::size_t> batch(std::min(batch_size, n));
  std::vector<std::size_t> batch_labels(batch.size());
  for (std::size_t it = 0; it < max_iter; ++it) {
    if (batch_size >= n) std::iota(batch.begin(), batch.end(), 0);
    else
      for (auto& b : batch) b = uniform_index(rng, n);
    for (std::size_t b = 0; b < batch.size(); ++b)
      batch_labels[b] = nearest(centers, x.row(ix(batch[b])).transpose());
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const std::size_t c = batch_labels[b];
      counts[c] += 1.0;
      const double lr = 1.0 / counts[c];
      centers.row(ix(c)) = (1.0 - lr) * centers.row(ix(c)) + lr * x.row(ix(batch[b]));
    }
  }
  ClusterAssignment out;
  out.algorithm = "minibkmea";
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.labels[i] = static_cast<int>(nearest(centers, x.row(ix(i)).transpose()));
  if (repair_empty_clusters(x, out.labels, centers)) out.notes.push_back("empty cluster reseeded");
  std::vector<std::size_t> sizes;
  out.inertia = inertia_of(x, out.labels, cluster_means(x, out.labels, k, sizes));
  out.iterations = max_iter;
  out.params = {{"k", double(k)}, {"batch_size", double(batch_size)},
                {"max_iter", double(max_iter)}, {"seed", double(seed)}};
  canonicalize(out);
  return out;
}

ClusterAssignment agglomerative(const PointSet& points, std::size_t k, Linkage linkage) {
  check_points(points);
  check_k(points, k);
  auto out = lance_williams(points.coords, std::vector<double>(points.size(), 1.0), k, linkage);
  out.algorithm = "agglom";
  out.params = {{"k", double(k)}, {"linkage", double(static_cast<int>(linkage))}};
  return out;
}

ClusterAssignment weighted_ward(const Eigen::MatrixXd& coords, std::span<const double> weights,
                                std::size_t k) {
  if (static_cast<std::size_t>(coords.rows()) != weights.size())
    throw std::invalid_argument("weighted_ward: weight count mismatch");
  if (k < 1 || k > weights.size()) throw std::invalid_argument("weighted_ward: bad k");
  return lance_williams(coords, std::vector<double>(weights.begin(), weights.end()), k,
                        Linkage::kWard);
}

ClusterAssignment dbscan(const PointSet& points, double eps, std::size_t min_samples) {
  check_points(points);
  if (!(eps > 0.0)) throw std::invalid_argument("dbscan: eps must be > 0");
  if (min_samples < 1) throw std::invalid_argument("dbscan: min_samples must be >= 1");
  const std::size_t n = points.size();
  const MatrixXd d2 = squared_distances(points.coords);
  const double eps2 = eps * eps;
  std::vector<std::vector<std::size_t>> neighbours(n);
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      if (d2(ix(i), ix(j)) <= eps2) neighbours[i].push_back(j);
    core[i] = neighbours[i].size() >= min_samples;
  }
  constexpr int kUnvisited = -2;
  std::vector<int> labels(n, kUnvisited);
  int cluster = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != kUnvisited || !core[i]) continue;
    std::deque<std::size_t> queue{i};
    labels[i] = cluster;
    while (!queue.empty()) {
      const std::size_t q = queue.front();
      queue.pop_front();
      for (std::size_t r : neighbours[q]) {
        if (labels[r] != kUnvisited) continue;
        labels[r] = cluster;
        if (core[r]) queue.push_back(r);
      }
    }
    ++cluster;
  }
  ClusterAssignment out;
  out.algorithm = "dbscan";
  out.labels = labels;
  std::size_t noise = 0, cores = 0;
  for (auto& l : out.labels)
    if (l == kUnvisited) {
      l = kNoise;
      ++noise;
    }
  for (bool c : core) cores += c;
  out.params = {{"eps", eps}, {"min_samples", double(min_samples)}, {"core_points", double(cores)},
                {"noise_points", double(noise)}};
  out.iterations = 1;
  canonicalize(out);
  return out;
}

ClusterAssignment mean_shift(const PointSet& points, double bandwidth, std::size_t max_iter) {
  check_points(points);
  if (!(bandwidth > 0.0)) throw std::invalid_argument("mean_shift: bandwidth must be > 0");
  const MatrixXd& x = points.coords;
  const std::size_t n = points.size();
  const double bw2 = bandwidth * bandwidth;
  const double stop = 1e-3 * bandwidth;

  struct Mode {
    VectorXd at;
    std::size_t support;
    std::size_t start;
  };
  std::vector<Mode> modes;
  std::size_t max_iters_used = 0;
  bool all_converged = true;
  for (std::size_t s = 0; s < n; ++s) {
    VectorXd at = x.row(ix(s)).transpose();
    std::size_t support = 0;
    std::size_t it = 0;
    bool converged = false;
    for (; it < max_iter; ++it) {
      VectorXd sum = VectorXd::Zero(x.cols());
      std::size_t count = 0;
      for (std::size_t i = 0; i < n; ++i)
        if ((x.row(ix(i)).transpose() - at).squaredNorm() <= bw2) {
          sum += x.row(ix(i)).transpose();
          ++count;
        }
      if (count == 0) {
        converged = true;
        break;
      }
      VectorXd next = sum / static_cast<double>(count);
      support = count;
      const double shift = (next - at).norm();
      at = std::move(next);
      if (shift < stop) {
        converged = true;
        break;
      }
    }
    all_converged = all_converged && converged;
    max_iters_used = std::max(max_iters_used, it + 1);
    modes.push_back({std::move(at), support, s});
  }
  std::stable_sort(modes.begin(), modes.end(),
                   [](const Mode& a, const Mode& b) { return a.support > b.support; });
  std::vector<VectorXd> kept;
  const double merge2 = 0.25 * bw2;
  for (const auto& m : modes) {
    bool near = false;
    for (const auto& k : kept)
      if ((k - m.at).squaredNorm() <= merge2) {
        near = true;
        break;
      }
    if (!near) kept.push_back(m.at);
  }
  MatrixXd centers(ix(kept.size()), x.cols());
  for (std::size_t c = 0; c < kept.size(); ++c) centers.row(ix(c)) = kept[c].transpose();
  ClusterAssignment out;
  out.algorithm = "meanshift";
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.labels[i] = static_cast<int>(nearest(centers, x.row(ix(i)).transpose()));
  out.iterations = max_iters_used;
  out.converged = all_converged;
  out.params = {{"bandwidth", bandwidth}, {"max_iter", double(max_iter)}};
  canonicalize(out);
  return out;
}

ClusteringFeature ClusteringFeature::of_point(const Eigen::VectorXd& x) {
  return {1.0, x, x.squaredNorm()};
}

void ClusteringFeature::merge(const ClusteringFeature& other) {
  if (n == 0.0) {
    *this = other;
    return;
  }
  n += other.n;
  linear_sum += other.linear_sum;
  squared_sum += other.squared_sum;
}

Eigen::VectorXd ClusteringFeature::centroid() const { return linear_sum / n; }

double ClusteringFeature::radius() const {
  const double v = squared_sum / n - centroid().squaredNorm();
  return std::sqrt(std::max(0.0, v));
}

ClusterAssignment birch(const PointSet& points, double threshold, std::size_t branching,
                        std::size_t k) {
  check_points(points);
  if (!(threshold > 0.0)) throw std::invalid_argument("birch: threshold must be > 0");
  if (branching < 2) throw std::invalid_argument("birch: branching must be >= 2");
  if (k < 1) throw std::invalid_argument("birch: k must be >= 1");
  const std::size_t n = points.size();
  CfTree tree(threshold, branching);
  std::vector<int> sub_of(n);
  for (std::size_t i = 0; i < n; ++i) sub_of[i] = tree.insert(points.coords.row(ix(i)).transpose());
  const auto subs = tree.subclusters();

  ClusterAssignment out;
  out.algorithm = "birch_fn";
  std::size_t k_eff = k;
  if (k > subs.size()) {
    k_eff = subs.size();
    out.notes.push_back("k = " + std::to_string(k) + " exceeds " + std::to_string(subs.size()) +
                        " leaf subclusters; clamped");
  }
  MatrixXd centroids(ix(subs.size()), points.coords.cols());
  std::vector<double> weights(subs.size());
  for (std::size_t s = 0; s < subs.size(); ++s) {
    centroids.row(ix(s)) = subs[s].centroid().transpose();
    weights[s] = subs[s].n;
  }
  const auto global = weighted_ward(centroids, weights, k_eff);
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.labels[i] = global.labels[static_cast<std::size_t>(sub_of[i])];
  out.iterations = 1;
  out.params = {{"threshold", threshold}, {"branching", double(branching)}, {"k", double(k)},
                {"subclusters", double(subs.size())}};
  canonicalize(out);
  return out;
}

ClusterAssignment affinity_propagation(const PointSet& points, double damping,
                                       std::size_t max_iter, std::size_t convergence_iter) {
  check_points(points);
  if (!(damping >= 0.5 && damping < 1.0))
    throw std::invalid_argument("affinity_propagation: damping must lie in [0.5, 1)");
  const std::size_t n = points.size();
  const Index N = ix(n);
  ClusterAssignment out;
  out.algorithm = "affinity";
  MatrixXd s = -squared_distances(points.coords);
  std::vector<double> off;
  off.reserve(n * (n - 1));
  for (Index i = 0; i < N; ++i)
    for (Index j = 0; j < N; ++j)
      if (i != j) off.push_back(s(i, j));
  const double preference = median(off);
  out.params = {{"damping", damping}, {"max_iter", double(max_iter)},
                {"convergence_iter", double(convergence_iter)}, {"preference", preference}};

  const bool all_equal =
      off.empty() || std::all_of(off.begin(), off.end(), [&](double v) { return v == off.front(); });
  if (all_equal) {
    // Degenerate similarities: either every point is its own exemplar or
    // there is a single cluster.
    out.labels.resize(n);
    const bool separate = !off.empty() && preference > off.front();
    for (std::size_t i = 0; i < n; ++i) out.labels[i] = separate ? static_cast<int>(i) : 0;
    out.notes.push_back("all similarities equal");
    canonicalize(out);
    return out;
  }
  s.diagonal().setConstant(preference);

  MatrixXd r = MatrixXd::Zero(N, N), a = MatrixXd::Zero(N, N);
  std::vector<std::vector<bool>> window;  // exemplar flags of recent iterations
  std::size_t it = 0;
  bool converged = false;
  for (; it < max_iter; ++it) {
    MatrixXd as = a + s;
    MatrixXd r_new(N, N);
    for (Index i = 0; i < N; ++i) {
      Index first = 0;
      double m1 = -std::numeric_limits<double>::infinity(), m2 = m1;
      for (Index k = 0; k < N; ++k) {
        const double v = as(i, k);
        if (v > m1) {
          m2 = m1;
          m1 = v;
          first = k;
        } else if (v > m2) {
          m2 = v;
        }
      }
      for (Index k = 0; k < N; ++k) r_new(i, k) = s(i, k) - (k == first ? m2 : m1);
    }
    r = damping * r + (1.0 - damping) * r_new;

    MatrixXd rp = r.cwiseMax(0.0);
    rp.diagonal() = r.diagonal();
    const Eigen::RowVectorXd col = rp.colwise().sum();
    MatrixXd a_new(N, N);
    for (Index i = 0; i < N; ++i)
      for (Index k = 0; k < N; ++k) {
        const double v = col(k) - rp(i, k);
        a_new(i, k) = i == k ? v : std::min(0.0, v);
      }
    a = damping * a + (1.0 - damping) * a_new;

    std::vector<bool> e(n);
    std::size_t exemplars = 0;
    for (Index i = 0; i < N; ++i) exemplars += e[static_cast<std::size_t>(i)] = (a(i, i) + r(i, i)) > 0.0;
    window.push_back(std::move(e));
    if (window.size() > convergence_iter) window.erase(window.begin());
    if (window.size() == convergence_iter && exemplars > 0 &&
        std::all_of(window.begin(), window.end(), [&](const auto& w) { return w == window.back(); })) {
      converged = true;
      ++it;
      break;
    }
  }
  out.iterations = std::min(it, max_iter);
  out.converged = converged;

  std::vector<Index> ex;
  for (Index i = 0; i < N; ++i)
    if (a(i, i) + r(i, i) > 0.0) ex.push_back(i);
  if (ex.empty()) {
    out.labels.assign(n, kNoise);
    out.converged = false;
    out.notes.push_back("no exemplars emerged");
    canonicalize(out);
    return out;
  }
  auto assign = [&](const std::vector<Index>& exemplars) {
    std::vector<int> labels(n);
    for (Index i = 0; i < N; ++i) {
      int best = 0;
      for (std::size_t c = 1; c < exemplars.size(); ++c)
        if (s(i, exemplars[c]) > s(i, exemplars[static_cast<std::size_t>(best)])) best = static_cast<int>(c);
      labels[static_cast<std::size_t>(i)] = best;
    }
    for (std::size_t c = 0; c < exemplars.size(); ++c) labels[static_cast<std::size_t>(exemplars[c])] = static_cast<int>(c);
    return labels;
  };
  auto labels = assign(ex);
  // Refine each exemplar to the member with the largest summed similarity.
  for (std::size_t c = 0; c < ex.size(); ++c) {
    std::vector<Index> members;
    for (Index i = 0; i < N; ++i)
      if (labels[static_cast<std::size_t>(i)] == static_cast<int>(c)) members.push_back(i);
    double best = -std::numeric_limits<double>::infinity();
    for (Index cand : members) {
      double total = 0.0;
      for (Index m : members) total += s(m, cand);
      if (total > best) {
        best = total;
        ex[c] = cand;
      }
    }
  }
  out.labels = assign(ex);
  if (!converged) out.notes.push_back("did not converge within max_iter");
  canonicalize(out);
  return out;
}

std::size_t estimate_k_sqrt(std::size_t n) {
  if (n < 1) throw std::invalid_argument("estimate_k_sqrt: n must be >= 1");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n)))));
}

double default_dbscan_eps(const PointSet& points) {
  check_points(points);
  const std::size_t n = points.size();
  if (n < 2) return 1.0;
  const MatrixXd d2 = squared_distances(points.coords);
  std::vector<double> kth;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) row.push_back(d2(ix(i), ix(j)));
    const std::size_t k = std::min<std::size_t>(4, row.size()) - 1;
    std::nth_element(row.begin(), row.begin() + static_cast<long>(k), row.end());
    kth.push_back(std::sqrt(row[k]));
  }
  // Twice the typical core spacing so fringe points still join their cluster.
  const double eps = 2.0 * median(kth);
  return eps > 0.0 ? eps : 1e-9;
}

double default_bandwidth(const PointSet& points) {
  check_points(points);
  const std::size_t n = points.size();
  std::vector<double> d;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d.push_back((points.coords.row(ix(i)) - points.coords.row(ix(j))).norm());
  const double bw = median(std::move(d)) / 2.0;
  return bw > 0.0 ? bw : 1.0;
}

std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kKMeans: return "k-means";
    case Algorithm::kAgglomerative: return "agglom";
    case Algorithm::kDbscan: return "dbscan";
    case Algorithm::kMeanShift: return "meanshift";
    case Algorithm::kBirch: return "birch_fn";
    case Algorithm::kAffinity: return "affinity";
    case Algorithm::kMiniBatchKMeans: return "minibkmea";
  }
  return "?";
}

Algorithm algorithm_from_name(std::string_view name) {
  for (auto a : kAllAlgorithms)
    if (algorithm_name(a) == name) return a;
  throw std::invalid_argument("unknown clustering algorithm '" + std::string(name) + "'");
}

bool takes_k(Algorithm a) {
  return a == Algorithm::kKMeans || a == Algorithm::kAgglomerative || a == Algorithm::kBirch ||
         a == Algorithm::kMiniBatchKMeans;
}

ClusterAssignment run_algorithm(Algorithm algorithm, const PointSet& points, std::size_t k,
                                const ClusteringParams& p) {
  switch (algorithm) {
    case Algorithm::kKMeans: return kmeans(points, k, p.kmeans_n_init, p.kmeans_max_iter, p.seed);
    case Algorithm::kAgglomerative: return agglomerative(points, k, p.linkage);
    case Algorithm::kDbscan:
      return dbscan(points, p.dbscan_eps > 0.0 ? p.dbscan_eps : default_dbscan_eps(points),
                    p.dbscan_min_samples);
    case Algorithm::kMeanShift:
      return mean_shift(points, p.bandwidth > 0.0 ? p.bandwidth : default_bandwidth(points),
                        p.meanshift_max_iter);
    case Algorithm::kBirch: return birch(points, p.birch_threshold, p.birch_branching, k);
    case Algorithm::kAffinity:
      return affinity_propagation(points, p.ap_damping, p.ap_max_iter, p.ap_convergence_iter);
    case Algorithm::kMiniBatchKMeans:
      return minibatch_kmeans(points, k, p.minibatch_size, p.minibatch_max_iter, p.seed);
  }
  throw std::logic_error("run_algorithm: unhandled algorithm");
}

std::string format_assignment_csv(const PointSet& points, const ClusterAssignment& assignment) {
  if (points.doc_ids.size() != assignment.labels.size())
    throw std::invalid_argument("format_assignment_csv: id count mismatch");
  std::string out = "doc_id,label\n";
  for (std::size_t i = 0; i < assignment.labels.size(); ++i)
    out += points.doc_ids[i] + "," + std::to_string(assignment.labels[i]) + "\n";
  return out;
}

std::string format_diagnostics_json(const ClusterAssignment& assignment) {
  nlohmann::ordered_json j;
  j["algorithm"] = assignment.algorithm;
  j["params"] = assignment.params;
  j["k_found"] = assignment.k_found;
  j["iterations"] = assignment.iterations;
  j["converged"] = assignment.converged;
  if (!assignment.inertia_history.empty()) j["inertia"] = assignment.inertia;
  if (!assignment.notes.empty()) j["notes"] = assignment.notes;
  return j.dump(2) + "\n";
}

}  // namespace attnclust
