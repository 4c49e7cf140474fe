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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attnclust/metrics.hpp"

namespace attnclust {

enum class Family { kAS, kAP, kPlain };

/// One cell of the variation grid: AS1..AS9, AP1..AP9 or PLAIN.
struct VariationSpec {
  Family family = Family::kAS;
  int fraction_tenths = 5;  // ignored for PLAIN
  std::uint64_t seed = 1;

  double fraction() const { return family == Family::kPlain ? 0.5 : fraction_tenths / 10.0; }
  std::string code() const;
  static VariationSpec parse(std::string_view code, std::uint64_t seed = 1);
};

struct ResultRow {
  std::string algorithm;
  MetricReport report;
  std::size_t k_found = 0;
};

struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string started_at;  // ISO-8601 UTC, never written into tables
  std::string finished_at;
  std::vector<std::string> notes;
};

struct ResultTable {
  std::string code;
  std::vector<ResultRow> rows;
  Provenance provenance;

  const ResultRow& row(std::string_view algorithm) const;
};

/// `algorithm,homo,comp,v_me,ari,ami,silh,avg_ev` with 3-decimal cells.
std::string format_table_csv(const ResultTable& table);
/// Markdown table headed `Algorithm | Homo | Comp | V-me | ARI | AMI | Silh | AvgEv`.
std::string format_table_markdown(const ResultTable& table);
/// Reads the CSV form back; values carry 3-decimal precision.
ResultTable parse_table_csv(std::string_view text, std::string code);
std::string format_provenance_json(const ResultTable& table);

enum class TableFormat { kCsv, kMarkdown };
void emit_result_table(const ResultTable& table, TableFormat format, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Charts
// ---------------------------------------------------------------------------

struct Chart {
  std::string svg;
  std::string csv;  // the plotted numbers
};

/// One bar per algorithm of a single table.
Chart avg_ev_bar_chart(const ResultTable& table);

/// Metric names accepted by metric_value.
double metric_value(const MetricReport& report, std::string_view metric);

/// One algorithm's metric against the training fraction. Every table must
/// belong to the same AS or AP family; points are ordered by fraction.
Chart metric_line_chart(std::span<const ResultTable> tables, std::string_view metric,
                        std::string_view algorithm);

enum class ChartKind { kAvgEvBars, kMetricLine };
/// Writes `path` (SVG) and `path` with extension `.csv`.
void emit_chart(std::span<const ResultTable> tables, ChartKind kind, std::string_view metric,
                std::string_view algorithm, const std::filesystem::path& path);

}  // namespace attnclust
