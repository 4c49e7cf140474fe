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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace attnclust {

/// Counts n_ij of true class i against predicted cluster j. Labels are
/// compacted to 0..R-1 and 0..C-1 in order of first appearance.
struct ContingencyTable {
  std::vector<std::vector<long>> counts;
  std::vector<long> class_totals;    // a_i
  std::vector<long> cluster_totals;  // b_j
  long n = 0;

  std::size_t classes() const { return class_totals.size(); }
  std::size_t clusters() const { return cluster_totals.size(); }
};

ContingencyTable contingency_table(std::span<const int> labels_true, std::span<const int> labels_pred);

struct HomogeneityCompleteness {
  double homogeneity = 0.0;
  double completeness = 0.0;
  double v_measure = 0.0;
};

HomogeneityCompleteness homogeneity_completeness_v(const ContingencyTable& table);
/// Harmonic mean, 0 when both inputs are 0.
double v_measure_from(double homogeneity, double completeness);

double adjusted_rand_index(const ContingencyTable& table);

/// Mutual information in nats.
double mutual_information(const ContingencyTable& table);
/// Expected mutual information under the hypergeometric permutation model.
double expected_mutual_information(const ContingencyTable& table);
double adjusted_mutual_info(const ContingencyTable& table);

/// Euclidean silhouette; nullopt when fewer than 2 clusters or every point
/// is its own cluster.
std::optional<double> silhouette_score(const Eigen::MatrixXd& points, std::span<const int> labels);

struct MetricReport {
  double homo = 0.0;
  double comp = 0.0;
  double v_measure = 0.0;
  double ari = 0.0;
  double ami = 0.0;
  std::optional<double> silhouette;
  double avg_ev = 0.0;

  bool silhouette_defined() const { return silhouette.has_value(); }
};

/// Mean of the six metrics, or of the five external ones when silhouette is
/// absent.
double average_evaluation(const MetricReport& report);

/// Fills every field including avg_ev.
MetricReport evaluate(std::span<const int> labels_true, std::span<const int> labels_pred,
                      const Eigen::MatrixXd& points);

/// Three decimals with the leading zero dropped: ".506", "1.000", "-.060".
std::string format_metric(double v);
/// "----" when absent.
std::string format_metric(const std::optional<double>& v);
/// Inverse of format_metric; "----" yields nullopt.
std::optional<double> parse_metric(const std::string& text);

}  // namespace attnclust
