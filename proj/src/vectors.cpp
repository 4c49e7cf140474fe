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

#include "attnclust/vectors.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "attnclust/common.hpp"

namespace attnclust {

std::string format_vectors_csv(std::span<const DocumentVector> vectors) {
  std::string out = "doc_id";
  const Eigen::Index dim = vectors.empty() ? 0 : vectors.front().values.size();
  for (Eigen::Index j = 0; j < dim; ++j) out += ",v_" + std::to_string(j);
  out += '\n';
  for (const auto& v : vectors) {
    if (v.values.size() != dim) throw std::invalid_argument("format_vectors_csv: ragged vectors");
    if (v.doc_id.find_first_of(",\n\"") != std::string::npos)
      throw std::invalid_argument("format_vectors_csv: doc id needs quoting: " + v.doc_id);
    out += v.doc_id;
    for (Eigen::Index j = 0; j < dim; ++j) {
      out += ',';
      out += format_double(v.values(j));
    }
    out += '\n';
  }
  return out;
}

std::vector<DocumentVector> parse_vectors_csv(std::string_view text) {
  auto lines = split(text, '\n');
  if (lines.empty() || trim(lines[0]).empty()) throw ParseError("vector csv: missing header");
  const auto header = split(trim(lines[0]), ',');
  if (header.empty() || header[0] != "doc_id") throw ParseError("vector csv: bad header", 1);
  const std::size_t dim = header.size() - 1;
  std::vector<DocumentVector> out;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    auto line = trim(lines[ln]);
    if (line.empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() != dim + 1) throw ParseError("vector csv: wrong field count", ln + 1);
    DocumentVector v;
    v.doc_id = fields[0];
    v.values.resize(static_cast<Eigen::Index>(dim));
    for (std::size_t j = 0; j < dim; ++j) {
      try {
        std::size_t used = 0;
        v.values(static_cast<Eigen::Index>(j)) = std::stod(fields[j + 1], &used);
        if (used != fields[j + 1].size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw ParseError("vector csv: bad number '" + fields[j + 1] + "'", ln + 1);
      }
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::string format_vectors_jsonl(std::span<const DocumentVector> vectors) {
  std::string out;
  for (const auto& v : vectors) {
    nlohmann::json j;
    j["doc_id"] = v.doc_id;
    j["values"] = std::vector<double>(v.values.data(), v.values.data() + v.values.size());
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<DocumentVector> parse_vectors_jsonl(std::string_view text) {
  std::vector<DocumentVector> out;
  std::size_t ln = 0;
  for (const auto& line : split(text, '\n')) {
    ++ln;
    if (trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      auto values = j.at("values").get<std::vector<double>>();
      DocumentVector v;
      v.doc_id = j.at("doc_id").get<std::string>();
      v.values = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
      out.push_back(std::move(v));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("vector jsonl: ") + e.what(), ln);
    }
  }
  return out;
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double denom = a.norm() * b.norm();
  return denom > 0.0 ? a.dot(b) / denom : 0.0;
}

}  // namespace attnclust
