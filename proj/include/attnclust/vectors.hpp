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

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace attnclust {

/// A document's representation as fed to clustering.
struct DocumentVector {
  std::string doc_id;
  Eigen::VectorXd values;
};

/// `doc_id,v_0,...,v_{m-1}` with a header row; values round-trip exactly.
std::string format_vectors_csv(std::span<const DocumentVector> vectors);
std::vector<DocumentVector> parse_vectors_csv(std::string_view text);

/// One `{"doc_id": ..., "values": [...]}` object per line.
std::string format_vectors_jsonl(std::span<const DocumentVector> vectors);
std::vector<DocumentVector> parse_vectors_jsonl(std::string_view text);

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace attnclust
