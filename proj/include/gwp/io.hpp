#pragma once

// CSV and JSON serialization of count fields, point patterns and result
// tables. CSV: '.' decimal separator, '\n' line endings, shortest round-trip
// decimal for floating point. JSON sidecars carry schema_version 1.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "gwp/baselines.hpp"
#include "gwp/errors.hpp"
#include "gwp/gwd.hpp"
#include "gwp/marked.hpp"
#include "gwp/process.hpp"

namespace gwp::io {

inline constexpr int kSchemaVersion = 1;

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// JSON number, or null for non-finite values.
inline nlohmann::json json_number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

inline nlohmann::json to_json(const GwdParams& p) {
  return {{"a", p.a}, {"k", p.k}, {"rho", p.rho}};
}

inline nlohmann::json to_json(const Window& w) {
  std::vector<double> upper;
  for (int i = 0; i < w.dim(); ++i) upper.push_back(w.upper(i));
  return {{"dim", w.dim()}, {"lower", w.lower()}, {"upper", upper}, {"density", w.density()}};
}

inline nlohmann::json to_json(const QuadratGrid& g) {
  return {{"window", to_json(g.window())},
          {"cells_per_axis", g.cells_per_axis()},
          {"cell_volume", g.cell_volume()}};
}

inline nlohmann::json metadata(const CountMeta& meta, const QuadratGrid& grid) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["model"] = meta.model;
  if (meta.model == "gwp") {
    j["params"] = to_json(meta.params);
    j["backend"] = std::string(to_string(meta.backend));
  }
  j["seed"] = meta.seed;
  j["grid"] = to_json(grid);
  return j;
}

inline nlohmann::json metadata(const CountField& f) { return metadata(f.meta, f.grid); }

inline nlohmann::json metadata(const MarkedCountField& f) {
  nlohmann::json j = metadata(f.meta, f.marked_grid.grid);
  j["num_marks"] = f.marked_grid.num_marks;
  return j;
}

namespace detail {

inline void write_cell_prefix(std::ostream& os, const QuadratGrid& g, std::size_t cell) {
  const auto idx = g.multi_index(cell);
  os << cell;
  for (int axis = 0; axis < g.dim(); ++axis) os << ',' << idx[axis];
}

inline void write_axis_header(std::ostream& os, int dim) {
  os << "cell_index";
  for (int axis = 0; axis < dim; ++axis) os << ",axis" << axis;
}

}  // namespace detail

/// `cell_index,axis0[,axis1[,axis2]],count`
inline void write_count_field_csv(std::ostream& os, const CountField& f) {
  detail::write_axis_header(os, f.grid.dim());
  os << ",count\n";
  for (std::size_t cell = 0; cell < f.counts.size(); ++cell) {
    detail::write_cell_prefix(os, f.grid, cell);
    os << ',' << f.counts[cell] << '\n';
  }
}

/// `cell_index,axis0[,...],mark,count` with marks numbered from 1.
inline void write_marked_field_csv(std::ostream& os, const MarkedCountField& f) {
  const QuadratGrid& g = f.marked_grid.grid;
  detail::write_axis_header(os, g.dim());
  os << ",mark,count\n";
  for (std::size_t cell = 0; cell < g.num_cells(); ++cell) {
    for (int m = 1; m <= f.marked_grid.num_marks; ++m) {
      detail::write_cell_prefix(os, g, cell);
      os << ',' << m << ',' << f.at(cell, m) << '\n';
    }
  }
}

/// `x[,y[,z]][,mark]`
inline void write_points_csv(std::ostream& os, const PointPattern& p) {
  static constexpr const char* kAxisNames[] = {"x", "y", "z"};
  const int d = p.window.dim();
  for (int axis = 0; axis < d; ++axis) os << (axis ? "," : "") << kAxisNames[axis];
  if (p.marks) os << ",mark";
  os << '\n';
  for (std::size_t i = 0; i < p.points.size(); ++i) {
    for (int axis = 0; axis < d; ++axis) os << (axis ? "," : "") << format_double(p.points[i][axis]);
    if (p.marks) os << ',' << (*p.marks)[i];
    os << '\n';
  }
}

inline void write_pmf_csv(std::ostream& os, const PmfTable& t) {
  os << "n,probability\n";
  for (std::size_t n = 0; n < t.size(); ++n) os << n << ',' << format_double(t.probs[n]) << '\n';
}

/// `param,tv_distance`
inline void write_limit_csv(std::ostream& os, const std::vector<LimitPoint>& rows) {
  os << "param,tv_distance\n";
  for (const auto& r : rows) os << format_double(r.param) << ',' << format_double(r.tv_distance) << '\n';
}

inline void write_orderliness_csv(std::ostream& os, const std::vector<OrderlinessRow>& rows) {
  os << "volume,ratio,p0,p1,printed_atom_constant,small_volume_limit\n";
  for (const auto& r : rows) {
    os << format_double(r.volume) << ',' << format_double(r.ratio) << ',' << format_double(r.p0) << ','
       << format_double(r.p1) << ',' << format_double(r.printed_atom_constant) << ','
       << format_double(r.small_volume_limit) << '\n';
  }
}

inline void write_ergodicity_csv(std::ostream& os, const std::vector<ErgodicityRow>& rows) {
  os << "volume,mean,variance,mean_se,ensemble_intensity,theory_variance,poisson_mean,"
        "poisson_variance,poisson_theory_variance\n";
  for (const auto& r : rows) {
    os << format_double(r.volume) << ',' << format_double(r.mean) << ',' << format_double(r.variance)
       << ',' << format_double(r.mean_se) << ',' << format_double(r.ensemble_intensity) << ','
       << format_double(r.theory_variance) << ',' << format_double(r.poisson_mean) << ','
       << format_double(r.poisson_variance) << ',' << format_double(r.poisson_theory_variance) << '\n';
  }
}

inline nlohmann::json to_json(const FitResult& r) {
  return {{"schema_version", kSchemaVersion},
          {"a_hat", json_number(r.a_hat)},
          {"k_hat", json_number(r.k_hat)},
          {"rho_hat", json_number(r.rho_hat)},
          {"matched_moments",
           {{"mean", json_number(r.matched_moments[0])},
            {"factorial2", json_number(r.matched_moments[1])},
            {"factorial3", json_number(r.matched_moments[2])}}},
          {"canonical", r.canonical},
          {"converged", r.converged},
          {"sample_size", r.sample_size},
          {"volume", r.volume},
          {"message", r.message}};
}

inline nlohmann::json to_json(const std::vector<LimitPoint>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) j.push_back({{"param", r.param}, {"tv_distance", r.tv_distance}});
  return j;
}

inline nlohmann::json to_json(const std::vector<OrderlinessRow>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) {
    j.push_back({{"volume", r.volume},
                 {"ratio", json_number(r.ratio)},
                 {"p0", json_number(r.p0)},
                 {"p1", json_number(r.p1)},
                 {"printed_atom_constant", json_number(r.printed_atom_constant)},
                 {"small_volume_limit", json_number(r.small_volume_limit)}});
  }
  return j;
}

inline nlohmann::json to_json(const std::vector<ErgodicityRow>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) {
    j.push_back({{"volume", r.volume},
                 {"mean", json_number(r.mean)},
                 {"variance", json_number(r.variance)},
                 {"mean_se", json_number(r.mean_se)},
                 {"ensemble_intensity", json_number(r.ensemble_intensity)},
                 {"theory_variance", json_number(r.theory_variance)},
                 {"poisson_mean", json_number(r.poisson_mean)},
                 {"poisson_variance", json_number(r.poisson_variance)},
                 {"poisson_theory_variance", json_number(r.poisson_theory_variance)}});
  }
  return j;
}

inline nlohmann::json to_json(const PmfTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t n = 0; n < t.size(); ++n) rows.push_back({{"n", n}, {"probability", t.probs[n]}});
  return {{"support_bound", t.size() == 0 ? 0 : t.size() - 1}, {"tail", t.tail}, {"rows", rows}};
}

inline nlohmann::json to_json(const CountField& f) {
  nlohmann::json j = metadata(f);
  j["counts"] = f.counts;
  return j;
}

inline nlohmann::json to_json(const MarkedCountField& f) {
  nlohmann::json j = metadata(f);
  j["counts"] = f.counts;
  return j;
}

/// Reads counts from CSV text. Uses the `count` column when a header names
/// one, otherwise the last column. Blank lines are skipped.
inline std::vector<std::int64_t> read_counts_csv(std::istream& is) {
  std::vector<std::int64_t> out;
  std::string line;
  int column = -1;
  bool first = true;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (first) {
      first = false;
      std::int64_t probe = 0;
      const std::string& c0 = cells.back();
      const auto res = std::from_chars(c0.data(), c0.data() + c0.size(), probe);
      if (res.ec != std::errc() || res.ptr != c0.data() + c0.size()) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
          if (cells[i] == "count") column = static_cast<int>(i);
        }
        if (column < 0) column = static_cast<int>(cells.size()) - 1;
        continue;
      }
    }
    const std::size_t col = column < 0 ? cells.size() - 1 : static_cast<std::size_t>(column);
    if (col >= cells.size()) throw Error("read_counts_csv: short row");
    std::int64_t v = 0;
    const std::string& c = cells[col];
    const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
    if (res.ec != std::errc() || res.ptr != c.data() + c.size()) {
      throw Error("read_counts_csv: not an integer: " + c);
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace gwp::io
