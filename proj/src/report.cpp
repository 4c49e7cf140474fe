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

#include "attnclust/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "attnclust/common.hpp"

namespace attnclust {

namespace {

constexpr const char* kCsvHeader = "algorithm,homo,comp,v_me,ari,ami,silh,avg_ev";

std::string fixed(double v, int decimals = 1) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Plot frame shared by both chart kinds.
struct Frame {
  double width = 640, height = 400;
  double left = 60, right = 20, top = 40, bottom = 70;
  double y_min = 0.0, y_max = 1.0;

  double plot_w() const { return width - left - right; }
  double plot_h() const { return height - top - bottom; }
  double y(double v) const { return top + plot_h() * (1.0 - (v - y_min) / (y_max - y_min)); }
};

void y_range(Frame& f, const std::vector<double>& values) {
  f.y_min = std::min(0.0, *std::min_element(values.begin(), values.end()));
  f.y_max = std::max(1.0, *std::max_element(values.begin(), values.end()));
}

std::string svg_open(const Frame& f, std::string_view title, std::string_view y_label) {
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\"" << f.height
    << "\" viewBox=\"0 0 " << f.width << ' ' << f.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << f.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
    << xml_escape(title) << "</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = f.y_min + (f.y_max - f.y_min) * t / 4.0;
    s << "<line x1=\"" << f.left << "\" x2=\"" << f.width - f.right << "\" y1=\"" << fixed(f.y(v))
      << "\" y2=\"" << fixed(f.y(v)) << "\" stroke=\"#ddd\"/>\n"
      << "<text x=\"" << f.left - 6 << "\" y=\"" << fixed(f.y(v) + 4) << "\" text-anchor=\"end\">"
      << fixed(v, 2) << "</text>\n";
  }
  s << "<line x1=\"" << f.left << "\" x2=\"" << f.left << "\" y1=\"" << f.top << "\" y2=\""
    << f.top + f.plot_h() << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << f.left << "\" x2=\"" << f.width - f.right << "\" y1=\"" << fixed(f.y(0.0))
    << "\" y2=\"" << fixed(f.y(0.0)) << "\" stroke=\"black\"/>\n"
    << "<text transform=\"translate(16," << f.top + f.plot_h() / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << xml_escape(y_label) << "</text>\n";
  return s.str();
}

}  // namespace

std::string VariationSpec::code() const {
  switch (family) {
    case Family::kPlain: return "PLAIN";
    case Family::kAS: return "AS" + std::to_string(fraction_tenths);
    case Family::kAP: return "AP" + std::to_string(fraction_tenths);
  }
  return "?";
}

VariationSpec VariationSpec::parse(std::string_view code, std::uint64_t seed) {
  VariationSpec v;
  v.seed = seed;
  if (code == "PLAIN") {
    v.family = Family::kPlain;
    v.fraction_tenths = 5;
    return v;
  }
  if (code.size() == 3 && (code.substr(0, 2) == "AS" || code.substr(0, 2) == "AP") &&
      code[2] >= '1' && code[2] <= '9') {
    v.family = code[1] == 'S' ? Family::kAS : Family::kAP;
    v.fraction_tenths = code[2] - '0';
    return v;
  }
  throw std::invalid_argument("bad variation code '" + std::string(code) +
                              "' (expected AS1..AS9, AP1..AP9 or PLAIN)");
}

const ResultRow& ResultTable::row(std::string_view algorithm) const {
  for (const auto& r : rows)
    if (r.algorithm == algorithm) return r;
  throw std::out_of_range("result table " + code + " has no row '" + std::string(algorithm) + "'");
}

std::string format_table_csv(const ResultTable& table) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : table.rows) {
    const auto& m = r.report;
    out += r.algorithm + "," + format_metric(m.homo) + "," + format_metric(m.comp) + "," +
           format_metric(m.v_measure) + "," + format_metric(m.ari) + "," + format_metric(m.ami) + "," +
           format_metric(m.silhouette) + "," + format_metric(m.avg_ev) + "\n";
  }
  return out;
}

std::string format_table_markdown(const ResultTable& table) {
  std::string out = "| Algorithm | Homo | Comp | V-me | ARI | AMI | Silh | AvgEv |\n"
                    "|---|---:|---:|---:|---:|---:|---:|---:|\n";
  for (const auto& r : table.rows) {
    const auto& m = r.report;
    out += "| " + r.algorithm + " | " + format_metric(m.homo) + " | " + format_metric(m.comp) + " | " +
           format_metric(m.v_measure) + " | " + format_metric(m.ari) + " | " + format_metric(m.ami) +
           " | " + format_metric(m.silhouette) + " | " + format_metric(m.avg_ev) + " |\n";
  }
  return out;
}

ResultTable parse_table_csv(std::string_view text, std::string code) {
  ResultTable table;
  table.code = std::move(code);
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != kCsvHeader) throw ParseError("unexpected result table header '" + line + "'", 1);
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != 8) throw ParseError("expected 8 cells, found " + std::to_string(cells.size()), line_no);
    try {
      ResultRow r;
      r.algorithm = cells[0];
      r.report.homo = *parse_metric(cells[1]);
      r.report.comp = *parse_metric(cells[2]);
      r.report.v_measure = *parse_metric(cells[3]);
      r.report.ari = *parse_metric(cells[4]);
      r.report.ami = *parse_metric(cells[5]);
      r.report.silhouette = parse_metric(cells[6]);
      r.report.avg_ev = *parse_metric(cells[7]);
      table.rows.push_back(std::move(r));
    } catch (const std::bad_optional_access&) {
      throw ParseError("'----' is only allowed in the silh column", line_no);
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  if (line_no == 0) throw ParseError("empty result table");
  return table;
}

std::string format_provenance_json(const ResultTable& table) {
  nlohmann::ordered_json j;
  j["variation"] = table.code;
  j["config_hash"] = table.provenance.config_hash;
  j["seed"] = table.provenance.seed;
  j["started_at"] = table.provenance.started_at;
  j["finished_at"] = table.provenance.finished_at;
  j["notes"] = table.provenance.notes;
  auto& k = j["k_found"] = nlohmann::ordered_json::object();
  for (const auto& r : table.rows) k[r.algorithm] = r.k_found;
  return j.dump(2) + "\n";
}

void emit_result_table(const ResultTable& table, TableFormat format, const std::filesystem::path& path) {
  if (table.rows.empty()) throw std::invalid_argument("emit_result_table: table has no rows");
  write_file_atomic(path, format == TableFormat::kCsv ? format_table_csv(table) : format_table_markdown(table));
}

double metric_value(const MetricReport& m, std::string_view metric) {
  if (metric == "homo" || metric == "homogeneity") return m.homo;
  if (metric == "comp" || metric == "completeness") return m.comp;
  if (metric == "v_me" || metric == "v_measure") return m.v_measure;
  if (metric == "ari") return m.ari;
  if (metric == "ami") return m.ami;
  if (metric == "silh" || metric == "silhouette") return m.silhouette.value_or(0.0);
  if (metric == "avg_ev") return m.avg_ev;
  throw std::invalid_argument("unknown metric '" + std::string(metric) + "'");
}

Chart avg_ev_bar_chart(const ResultTable& table) {
  if (table.rows.empty()) throw std::invalid_argument("avg_ev_bar_chart: empty table");
  Chart chart;
  chart.csv = "algorithm,avg_ev\n";
  std::vector<double> values;
  for (const auto& r : table.rows) {
    values.push_back(r.report.avg_ev);
    chart.csv += r.algorithm + "," + format_double(r.report.avg_ev) + "\n";
  }
  Frame f;
  y_range(f, values);
  std::ostringstream s;
  s << svg_open(f, "Avg.Ev. by algorithm (" + table.code + ")", "Avg.Ev.");
  const double slot = f.plot_w() / static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = f.left + slot * static_cast<double>(i) + slot * 0.15;
    const double y0 = f.y(0.0), y1 = f.y(values[i]);
    s << "<rect class=\"bar\" x=\"" << fixed(x) << "\" y=\"" << fixed(std::min(y0, y1)) << "\" width=\""
      << fixed(slot * 0.7) << "\" height=\"" << fixed(std::abs(y0 - y1)) << "\" fill=\"#4878a8\"/>\n"
      << "<text x=\"" << fixed(x + slot * 0.35) << "\" y=\"" << fixed(std::min(y0, y1) - 4)
      << "\" text-anchor=\"middle\" font-size=\"10\">" << format_metric(values[i]) << "</text>\n"
      << "<text x=\"" << fixed(x + slot * 0.35) << "\" y=\"" << fixed(f.top + f.plot_h() + 18)
      << "\" text-anchor=\"middle\">" << xml_escape(table.rows[i].algorithm) << "</text>\n";
  }
  s << "</svg>\n";
  chart.svg = s.str();
  return chart;
}

Chart metric_line_chart(std::span<const ResultTable> tables, std::string_view metric,
                        std::string_view algorithm) {
  if (tables.empty()) throw std::invalid_argument("metric_line_chart: no tables");
  std::optional<Family> family;
  std::map<int, double> points;
  for (const auto& t : tables) {
    const auto spec = VariationSpec::parse(t.code);
    if (spec.family == Family::kPlain)
      throw std::invalid_argument("metric_line_chart: PLAIN has no fraction axis");
    if (family && *family != spec.family)
      throw std::invalid_argument("metric_line_chart: tables mix AS and AP families");
    family = spec.family;
    if (!points.emplace(spec.fraction_tenths, metric_value(t.row(algorithm).report, metric)).second)
      throw std::invalid_argument("metric_line_chart: duplicate fraction " + t.code);
  }
  const std::string fam = *family == Family::kAS ? "AS" : "AP";
  Chart chart;
  chart.csv = "fraction_tenths," + std::string(metric) + "\n";
  std::vector<double> values;
  for (const auto& [n, v] : points) {
    chart.csv += std::to_string(n) + "," + format_double(v) + "\n";
    values.push_back(v);
  }
  Frame f;
  y_range(f, values);
  auto x_of = [&](int n) { return f.left + f.plot_w() * (n - 0.5) / 9.0; };
  std::ostringstream s;
  s << svg_open(f, std::string(metric) + " of " + std::string(algorithm) + " with variation " + fam,
                std::string(metric));
  for (int n = 1; n <= 9; ++n)
    s << "<text x=\"" << fixed(x_of(n)) << "\" y=\"" << fixed(f.top + f.plot_h() + 18)
      << "\" text-anchor=\"middle\">" << fam << n << "</text>\n";
  s << "<polyline fill=\"none\" stroke=\"#c0504d\" stroke-width=\"2\" points=\"";
  bool first = true;
  for (const auto& [n, v] : points) {
    s << (first ? "" : " ") << fixed(x_of(n)) << ',' << fixed(f.y(v));
    first = false;
  }
  s << "\"/>\n";
  for (const auto& [n, v] : points)
    s << "<circle class=\"point\" cx=\"" << fixed(x_of(n)) << "\" cy=\"" << fixed(f.y(v))
      << "\" r=\"4\" fill=\"#c0504d\"/>\n";
  s << "</svg>\n";
  chart.svg = s.str();
  return chart;
}

void emit_chart(std::span<const ResultTable> tables, ChartKind kind, std::string_view metric,
                std::string_view algorithm, const std::filesystem::path& path) {
  Chart chart;
  if (kind == ChartKind::kAvgEvBars) {
    if (tables.size() != 1) throw std::invalid_argument("avg_ev_bars takes exactly one table");
    chart = avg_ev_bar_chart(tables.front());
  } else {
    chart = metric_line_chart(tables, metric, algorithm);
  }
  auto sidecar = path;
  sidecar.replace_extension(".csv");
  write_file_atomic(path, chart.svg);
  write_file_atomic(sidecar, chart.csv);
}

}  // namespace attnclust
