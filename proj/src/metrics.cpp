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

#include "attnclust/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>

namespace attnclust {

namespace {

double entropy(const std::vector<long>& totals, long n) {
  double h = 0.0;
  for (long t : totals)
    if (t > 0) {
      const double p = static_cast<double>(t) / static_cast<double>(n);
      h -= p * std::log(p);
    }
  return h;
}

double comb2(long x) { return 0.5 * static_cast<double>(x) * static_cast<double>(x - 1); }

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Same partition up to relabelling: every nonzero row and column holds one cell.
bool identical_partitions(const ContingencyTable& t) {
  if (t.classes() != t.clusters()) return false;
  for (const auto& row : t.counts)
    if (std::count_if(row.begin(), row.end(), [](long c) { return c > 0; }) != 1) return false;
  return true;
}

}  // namespace

ContingencyTable contingency_table(std::span<const int> labels_true, std::span<const int> labels_pred) {
  if (labels_true.size() != labels_pred.size())
    throw std::invalid_argument("contingency_table: label vectors differ in length");
  if (labels_true.empty()) throw std::invalid_argument("contingency_table: empty labelling");
  std::map<int, std::size_t> rows, cols;
  for (int l : labels_true)
    if (!rows.count(l)) rows[l] = rows.size();
  for (int l : labels_pred)
    if (!cols.count(l)) cols[l] = cols.size();

  ContingencyTable t;
  t.counts.assign(rows.size(), std::vector<long>(cols.size(), 0));
  t.class_totals.assign(rows.size(), 0);
  t.cluster_totals.assign(cols.size(), 0);
  for (std::size_t i = 0; i < labels_true.size(); ++i) {
    const auto r = rows[labels_true[i]], c = cols[labels_pred[i]];
    ++t.counts[r][c];
    ++t.class_totals[r];
    ++t.cluster_totals[c];
  }
  t.n = static_cast<long>(labels_true.size());
  return t;
}

double v_measure_from(double homogeneity, double completeness) {
  const double s = homogeneity + completeness;
  return s > 0.0 ? 2.0 * homogeneity * completeness / s : 0.0;
}

HomogeneityCompleteness homogeneity_completeness_v(const ContingencyTable& t) {
  const double n = static_cast<double>(t.n);
  const double h_c = entropy(t.class_totals, t.n);
  const double h_k = entropy(t.cluster_totals, t.n);
  double h_c_given_k = 0.0, h_k_given_c = 0.0;
  for (std::size_t i = 0; i < t.classes(); ++i)
    for (std::size_t j = 0; j < t.clusters(); ++j) {
      const long nij = t.counts[i][j];
      if (nij == 0) continue;
      const double p = static_cast<double>(nij) / n;
      h_c_given_k -= p * std::log(static_cast<double>(nij) / static_cast<double>(t.cluster_totals[j]));
      h_k_given_c -= p * std::log(static_cast<double>(nij) / static_cast<double>(t.class_totals[i]));
    }
  HomogeneityCompleteness out;
  out.homogeneity = h_c > 0.0 ? clamp01(1.0 - h_c_given_k / h_c) : 1.0;
  out.completeness = h_k > 0.0 ? clamp01(1.0 - h_k_given_c / h_k) : 1.0;
  out.v_measure = v_measure_from(out.homogeneity, out.completeness);
  return out;
}

double adjusted_rand_index(const ContingencyTable& t) {
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& row : t.counts)
    for (long c : row) index += comb2(c);
  for (long a : t.class_totals) sum_a += comb2(a);
  for (long b : t.cluster_totals) sum_b += comb2(b);
  const double total = comb2(t.n);
  const double expected = total > 0.0 ? sum_a * sum_b / total : 0.0;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

double mutual_information(const ContingencyTable& t) {
  const double n = static_cast<double>(t.n);
  double mi = 0.0;
  for (std::size_t i = 0; i < t.classes(); ++i)
    for (std::size_t j = 0; j < t.clusters(); ++j) {
      const long nij = t.counts[i][j];
      if (nij == 0) continue;
      mi += static_cast<double>(nij) / n *
            std::log(n * static_cast<double>(nij) /
                     (static_cast<double>(t.class_totals[i]) * static_cast<double>(t.cluster_totals[j])));
    }
  return std::max(0.0, mi);
}

double expected_mutual_information(const ContingencyTable& t) {
  const long n = t.n;
  const double nd = static_cast<double>(n);
  auto lf = [](long x) { return std::lgamma(static_cast<double>(x) + 1.0); };
  const double lf_n = lf(n);
  double emi = 0.0;
  for (long a : t.class_totals)
    for (long b : t.cluster_totals) {
      const double fixed = lf(a) + lf(b) + lf(n - a) + lf(n - b) - lf_n;
      for (long nij = std::max(1L, a + b - n); nij <= std::min(a, b); ++nij) {
        const double term = static_cast<double>(nij) / nd *
                            std::log(nd * static_cast<double>(nij) /
                                     (static_cast<double>(a) * static_cast<double>(b)));
        const double log_p = fixed - lf(nij) - lf(a - nij) - lf(b - nij) - lf(n - a - b + nij);
        emi += term * std::exp(log_p);
      }
    }
  return emi;
}

double adjusted_mutual_info(const ContingencyTable& t) {
  const double mi = mutual_information(t);
  const double emi = expected_mutual_information(t);
  const double norm = 0.5 * (entropy(t.class_totals, t.n) + entropy(t.cluster_totals, t.n));
  const double denom = norm - emi;
  if (std::abs(denom) < 1e-12) return identical_partitions(t) ? 1.0 : 0.0;
  return std::clamp((mi - emi) / denom, -1.0, 1.0);
}

std::optional<double> silhouette_score(const Eigen::MatrixXd& points, std::span<const int> labels) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (labels.size() != n) throw std::invalid_argument("silhouette_score: label count mismatch");
  std::map<int, std::size_t> index;
  for (int l : labels)
    if (!index.count(l)) index[l] = index.size();
  const std::size_t k = index.size();
  if (k < 2 || k == n) return std::nullopt;

  std::vector<std::size_t> cluster(n), size(k, 0);
  for (std::size_t i = 0; i < n; ++i) ++size[cluster[i] = index[labels[i]]];
  double total = 0.0;
  std::vector<double> sums(k);
  for (std::size_t i = 0; i < n; ++i) {
    if (size[cluster[i]] == 1) continue;  // singleton scores 0
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i)
        sums[cluster[j]] += (points.row(static_cast<Eigen::Index>(i)) - points.row(static_cast<Eigen::Index>(j))).norm();
    const double a = sums[cluster[i]] / static_cast<double>(size[cluster[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c)
      if (c != cluster[i]) b = std::min(b, sums[c] / static_cast<double>(size[c]));
    const double m = std::max(a, b);
    total += m > 0.0 ? (b - a) / m : 0.0;
  }
  return total / static_cast<double>(n);
}

double average_evaluation(const MetricReport& r) {
  const double external = r.homo + r.comp + r.v_measure + r.ari + r.ami;
  return r.silhouette ? (external + *r.silhouette) / 6.0 : external / 5.0;
}

MetricReport evaluate(std::span<const int> labels_true, std::span<const int> labels_pred,
                      const Eigen::MatrixXd& points) {
  const auto table = contingency_table(labels_true, labels_pred);
  const auto hcv = homogeneity_completeness_v(table);
  MetricReport r;
  r.homo = hcv.homogeneity;
  r.comp = hcv.completeness;
  r.v_measure = hcv.v_measure;
  r.ari = adjusted_rand_index(table);
  r.ami = adjusted_mutual_info(table);
  r.silhouette = silhouette_score(points, labels_pred);
  r.avg_ev = average_evaluation(r);
  return r;
}

std::string format_metric(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  if (s == "-0.000") s = "0.000";
  if (s.rfind("0.", 0) == 0) s.erase(0, 1);
  else if (s.rfind("-0.", 0) == 0) s.erase(1, 1);
  return s;
}

std::string format_metric(const std::optional<double>& v) { return v ? format_metric(*v) : "----"; }

std::optional<double> parse_metric(const std::string& text) {
  if (text == "----") return std::nullopt;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) throw std::invalid_argument("bad metric value '" + text + "'");
  return v;
}

}  // namespace attnclust
