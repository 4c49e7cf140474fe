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

#include <random>
#include <vector>

#include "attnclust/clustering.hpp"

namespace fixtures {

// Three isotropic blobs at (0,0), (10,0), (0,10), sigma 0.5, 20 points each.
inline attnclust::PointSet blobs3(std::vector<int>* truth = nullptr, std::uint64_t seed = 42) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.5);
  const double centers[3][2] = {{0, 0}, {10, 0}, {0, 10}};
  attnclust::PointSet p;
  p.coords.resize(60, 2);
  if (truth) truth->clear();
  for (int i = 0; i < 60; ++i) {
    const int c = i % 3;
    p.coords(i, 0) = centers[c][0] + g(rng);
    p.coords(i, 1) = centers[c][1] + g(rng);
    p.doc_ids.push_back("p" + std::to_string(i));
    if (truth) truth->push_back(c);
  }
  return p;
}

inline attnclust::PointSet all_same(int n = 10) {
  attnclust::PointSet p;
  p.coords = Eigen::MatrixXd::Constant(n, 2, 3.25);
  for (int i = 0; i < n; ++i) p.doc_ids.push_back("s" + std::to_string(i));
  return p;
}

inline attnclust::PointSet from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  attnclust::PointSet p;
  p.coords.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) p.coords(i, j++) = v;
    p.doc_ids.push_back("r" + std::to_string(i));
    ++i;
  }
  return p;
}

}  // namespace fixtures
