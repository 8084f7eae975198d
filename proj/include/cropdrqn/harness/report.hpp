// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cropdrqn/core/version.hpp"
#include "cropdrqn/harness/experiment.hpp"

namespace cropdrqn::harness {

inline const std::vector<std::string>& report_metrics() {
  static const std::vector<std::string> m{"reward", "yield", "n_input", "water_input", "leaching", "n2o"};
  return m;
}

/// One line of the summary CSV.
struct SummaryRow {
  std::string experiment, scenario, label;
  double point = 0.0;
  std::string policy, metric;
  double mean = 0.0, lo = 0.0, hi = 0.0;
  std::size_t n = 0;

  friend bool operator==(const SummaryRow&, const SummaryRow&) = default;
};

inline constexpr const char* kSummaryHeader = "experiment,scenario,label,point,policy,metric,mean,lo,hi,n";

inline std::vector<SummaryRow> summary_rows(const SweepResult& r) {
  std::vector<SummaryRow> rows;
  for (const auto& c : r.cells)
    for (const auto& [metric, m] : c.summary.metrics)
      rows.push_back({to_string(r.spec.kind), c.scenario, c.label, c.point, to_string(c.policy), metric, m.mean,
                      m.lo, m.hi, m.n});
  return rows;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw IoError("cannot write " + p.string());
  return os;
}

inline void close_out(std::ofstream& os, const std::filesystem::path& p) {
  os.flush();
  if (!os) throw IoError("failed writing " + p.string());
}

inline void check_csv_field(const std::string& s) {
  if (s.find_first_of(",\n\"") != std::string::npos) throw DomainError("CSV field contains a separator: " + s);
}

}  // namespace detail

inline void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& os) {
  os << kSummaryHeader << '\n';
  for (const auto& r : rows) {
    for (const auto* f : {&r.experiment, &r.scenario, &r.label, &r.policy, &r.metric}) detail::check_csv_field(*f);
    os << r.experiment << ',' << r.scenario << ',' << r.label << ',' << text::exact(r.point) << ',' << r.policy << ','
       << r.metric << ',' << text::exact(r.mean) << ',' << text::exact(r.lo) << ',' << text::exact(r.hi) << ','
       << r.n << '\n';
  }
}

inline std::vector<SummaryRow> read_summary_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || text::trim(line) != kSummaryHeader) throw ParseError("missing summary header", 1);
  std::vector<SummaryRow> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto f = text::split(line, ',');
    if (f.size() != 10) throw ParseError("expected 10 fields", lineno);
    SummaryRow r;
    r.experiment = std::string(f[0]);
    r.scenario = std::string(f[1]);
    r.label = std::string(f[2]);
    r.point = text::to_double(f[3], "point", lineno);
    r.policy = std::string(f[4]);
    r.metric = std::string(f[5]);
    r.mean = text::to_double(f[6], "mean", lineno);
    r.lo = text::to_double(f[7], "lo", lineno);
    r.hi = text::to_double(f[8], "hi", lineno);
    const long n = text::to_long(f[9], "n", lineno);
    if (n < 1) throw ValidationError("n", "must be at least 1", lineno);
    r.n = static_cast<std::size_t>(n);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline constexpr const char* kCaseHeader = "case,policy,yield,n_input,water_input,leaching,n2o,reward,weather_digest";

/// Table-3-shaped: one noise-free realization per case and policy.
inline void write_case_table_csv(const SweepResult& r, std::ostream& os) {
  os << kCaseHeader << '\n';
  for (const auto& row : r.case_rows) {
    auto get = [&](const char* name) {
      for (const auto& [n, v] : row.metrics)
        if (n == name) return text::exact(v);
      return std::string();
    };
    os << row.case_id << ',' << to_string(row.policy) << ',' << get("yield") << ',' << get("n_input") << ','
       << get("water_input") << ',' << get("leaching") << ',' << get("n2o") << ',' << text::exact(row.reward) << ','
       << row.weather_digest << '\n';
  }
}

/// Line chart with one series per policy and a shaded band between lo and hi.
/// The x ticks are exactly the grid points.
inline std::string render_chart_svg(const SweepResult& r, const std::string& metric) {
  std::vector<double> xs;
  for (const auto& c : r.cells)
    if (std::find(xs.begin(), xs.end(), c.point) == xs.end()) xs.push_back(c.point);
  std::sort(xs.begin(), xs.end());
  std::vector<PolicyKind> pols;
  for (const auto& c : r.cells)
    if (std::find(pols.begin(), pols.end(), c.policy) == pols.end()) pols.push_back(c.policy);

  double ylo = INFINITY, yhi = -INFINITY;
  for (const auto& c : r.cells) {
    const auto& m = c.summary.metric(metric);
    ylo = std::min({ylo, m.lo, m.mean});
    yhi = std::max({yhi, m.hi, m.mean});
  }
  if (!(yhi > ylo)) {
    ylo -= 1.0;
    yhi += 1.0;
  }
  const double W = 640, H = 400, L = 80, R = 140, T = 40, B = 60;
  const double xmin = xs.front(), xmax = xs.back();
  auto px = [&](double x) {
    return xs.size() == 1 ? L + (W - L - R) / 2 : L + (x - xmin) / (xmax - xmin) * (W - L - R);
  };
  auto py = [&](double y) { return T + (yhi - y) / (yhi - ylo) * (H - T - B); };
  auto f = [](double v) { return text::fixed(v, 2); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" data-metric=\""
     << metric << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << metric << " ("
     << to_string(r.spec.kind) << ", mean with 95% PI)</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (double x : xs)
    os << "<g class=\"xtick\" data-x=\"" << text::exact(x) << "\"><line x1=\"" << f(px(x)) << "\" y1=\"" << H - B
       << "\" x2=\"" << f(px(x)) << "\" y2=\"" << H - B + 5 << "\" stroke=\"black\"/><text x=\"" << f(px(x))
       << "\" y=\"" << H - B + 20 << "\" text-anchor=\"middle\" font-size=\"12\">" << text::exact(x)
       << "</text></g>\n";
  for (int k = 0; k <= 4; ++k) {
    const double y = ylo + (yhi - ylo) * k / 4.0;
    os << "<text x=\"" << L - 6 << "\" y=\"" << f(py(y) + 4) << "\" text-anchor=\"end\" font-size=\"11\">"
       << text::fixed(y, 1) << "</text>\n";
  }
  const char* xlabel = r.spec.kind == ExperimentKind::TempSweep     ? "temperature offset (C)"
                       : r.spec.kind == ExperimentKind::PrecipSweep ? "rain factor"
                                                                     : "case";
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\" font-size=\"13\">"
     << xlabel << "</text>\n";
  for (std::size_t pi = 0; pi < pols.size(); ++pi) {
    const char* col = colors[pi % 4];
    std::vector<std::pair<double, const MetricSummary*>> pts;
    for (double x : xs)
      for (const auto& c : r.cells)
        if (c.point == x && c.policy == pols[pi]) pts.emplace_back(x, &c.summary.metric(metric));
    std::string band, line;
    for (const auto& [x, m] : pts) band += f(px(x)) + "," + f(py(m->hi)) + " ";
    for (auto it = pts.rbegin(); it != pts.rend(); ++it) band += f(px(it->first)) + "," + f(py(it->second->lo)) + " ";
    for (const auto& [x, m] : pts) line += f(px(x)) + "," + f(py(m->mean)) + " ";
    os << "<g class=\"series\" data-policy=\"" << to_string(pols[pi]) << "\">\n";
    os << "<polygon points=\"" << band << "\" fill=\"" << col << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    os << "<polyline points=\"" << line << "\" fill=\"none\" stroke=\"" << col << "\" stroke-width=\"2\"/>\n";
    for (const auto& [x, m] : pts)
      os << "<circle cx=\"" << f(px(x)) << "\" cy=\"" << f(py(m->mean)) << "\" r=\"3\" fill=\"" << col << "\"/>\n";
    os << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 20 * (pi + 1) << "\" fill=\"" << col
       << "\" font-size=\"12\">" << to_string(pols[pi]) << "</text>\n</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline nlohmann::json manifest_json(const SweepResult& r, const std::vector<std::string>& files) {
  nlohmann::json j;
  j["manifest_version"] = 1;
  j["tool"] = "cropdrqn";
  j["version"] = kVersion;
  j["kind"] = to_string(r.spec.kind);
  j["seed"] = r.spec.seed;
  j["eval_seed"] = r.eval_seed;
  j["config_hash"] = config_hash(r.spec);
  j["spec"] = experiment_to_json(r.spec);
  j["policies"] = nlohmann::json::array();
  for (const auto& p : r.policies) {
    nlohmann::json q{{"name", p.name}, {"source", p.source}, {"train_seed", p.train_seed},
                     {"checkpoint", p.checkpoint}, {"episodes", p.episodes}};
    if (p.accepted) {
      q["fine_tune_accepted"] = *p.accepted;
      q["validation_candidate"] = p.validation_candidate;
      q["validation_fixed"] = p.validation_fixed;
    }
    j["policies"].push_back(q);
  }
  j["cells"] = nlohmann::json::array();
  for (const auto& c : r.cells)
    j["cells"].push_back({{"scenario", c.scenario}, {"label", c.label}, {"point", c.point},
                          {"policy", to_string(c.policy)}, {"realizations", c.summary.metric("reward").n}});
  if (!r.case_rows.empty()) {
    j["case_weather"] = nlohmann::json::array();
    for (const auto& row : r.case_rows)
      j["case_weather"].push_back({{"case", row.case_id}, {"policy", to_string(row.policy)},
                                   {"weather_digest", row.weather_digest}});
  }
  j["files"] = files;
  return j;
}

/// Writes <dir>/<kind>.csv, case_table.csv (case study), charts/<kind>_<metric>.svg,
/// curves/<policy>.csv and manifest.json. Returns the paths written, relative to `dir`.
inline std::vector<std::string> emit_report(const SweepResult& r, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  detail::ensure_dir(dir);
  detail::ensure_dir(dir / "charts");
  std::vector<std::string> files;
  auto write = [&](const std::string& rel, const std::string& content) {
    const fs::path p = dir / rel;
    auto os = detail::open_out(p);
    os << content;
    detail::close_out(os, p);
    files.push_back(rel);
  };
  const std::string kind = to_string(r.spec.kind);
  {
    std::ostringstream os;
    write_summary_csv(summary_rows(r), os);
    write(kind + ".csv", os.str());
  }
  if (!r.case_rows.empty()) {
    std::ostringstream os;
    write_case_table_csv(r, os);
    write("case_table.csv", os.str());
  }
  for (const auto& m : report_metrics()) {
    bool present = !r.cells.empty();
    for (const auto& c : r.cells) {
      bool has = false;
      for (const auto& [n, s] : c.summary.metrics) has = has || n == m;
      present = present && has;
    }
    if (present) write("charts/" + kind + "_" + m + ".svg", render_chart_svg(r, m));
  }
  bool curves = false;
  for (const auto& p : r.policies)
    if (!p.curve.empty()) {
      if (!curves) detail::ensure_dir(dir / "curves");
      curves = true;
      std::string name = p.name;
      std::replace(name.begin(), name.end(), ':', '_');
      std::ostringstream os;
      agent::write_curve_csv(p.curve, os);
      write("curves/" + name + ".csv", os.str());
    }
  files.push_back("manifest.json");
  const fs::path mp = dir / "manifest.json";
  auto os = detail::open_out(mp);
  os << manifest_json(r, files).dump(2) << '\n';
  detail::close_out(os, mp);
  return files;
}

}  // namespace cropdrqn::harness
