#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dynpart/normal_model.hpp"
#include "dynpart/synthetic.hpp"
#include "dynpart/version.hpp"

namespace dynpart {

// I/O failures carry location information where possible. Validation
// problems (bad cells, shape mismatches) throw std::invalid_argument;
// filesystem problems throw std::runtime_error.

namespace detail {

inline std::string format_double(double x) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

}  // namespace detail

// Wide layout: rows are units, columns are times. Lines starting with
// '#' are comments; an optional first header row is detected by its
// non-numeric cells.
inline DataMatrix read_data_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open data file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  bool header_allowed = true;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto cells = detail::split_csv_line(line);
    std::vector<double> row;
    row.reserve(cells.size());
    bool numeric = true;
    for (const auto& c : cells) {
      double v;
      if (!detail::parse_double(c, v)) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (header_allowed) {
        header_allowed = false;
        continue;  // header row
      }
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": non-numeric cell");
    }
    header_allowed = false;
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected " +
                                  std::to_string(rows.front().size()) +
                                  " columns, found " +
                                  std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().empty())
    throw std::invalid_argument(path + ": no data rows");
  DataMatrix Y(static_cast<int>(rows.size()),
               static_cast<int>(rows.front().size()));
  for (std::size_t u = 0; u < rows.size(); ++u)
    for (std::size_t t = 0; t < rows[u].size(); ++t)
      Y.at(static_cast<int>(u), static_cast<int>(t)) = rows[u][t];
  Y.validate_finite();
  return Y;
}

// Long layout: (unit, time, value) triples with 1-based indices; every
// cell must appear exactly once.
inline DataMatrix read_data_csv_long(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open data file: " + path);
  std::map<std::pair<int, int>, double> cells;
  int max_unit = 0, max_time = 0;
  std::string line;
  int lineno = 0;
  bool header_allowed = true;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 3)
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected unit,time,value");
    double u, t, v;
    if (!detail::parse_double(f[0], u) || !detail::parse_double(f[1], t) ||
        !detail::parse_double(f[2], v)) {
      if (header_allowed) {
        header_allowed = false;
        continue;
      }
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": non-numeric cell");
    }
    header_allowed = false;
    const int ui = static_cast<int>(u), ti = static_cast<int>(t);
    if (ui < 1 || ti < 1)
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": unit and time are 1-based");
    if (!cells.emplace(std::make_pair(ui, ti), v).second)
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": duplicate (unit, time) pair");
    max_unit = std::max(max_unit, ui);
    max_time = std::max(max_time, ti);
  }
  if (cells.empty()) throw std::invalid_argument(path + ": no data rows");
  if (cells.size() != static_cast<std::size_t>(max_unit) * max_time)
    throw std::invalid_argument(path + ": incomplete unit x time grid");
  DataMatrix Y(max_unit, max_time);
  for (const auto& [key, v] : cells) Y.at(key.first - 1, key.second - 1) = v;
  Y.validate_finite();
  return Y;
}

inline void write_data_csv(const std::string& path, const DataMatrix& Y,
                           const std::string& kind = "data") {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write file: " + path);
  os << "# " << kCsvFormatVersion << ' ' << kind << '\n';
  for (int i = 0; i < Y.n(); ++i) {
    for (int t = 0; t < Y.T(); ++t)
      os << (t ? "," : "") << detail::format_double(Y.at(i, t));
    os << '\n';
  }
}

// Per-unit series of possibly unequal lengths (preprocess input): wide
// rows, shorter rows simply end earlier; blank cells are not allowed.
inline std::vector<std::vector<double>> read_series_csv(
    const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open series file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  bool header_allowed = true;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto cells = detail::split_csv_line(line);
    std::vector<double> row;
    bool numeric = true;
    for (const auto& c : cells) {
      if (c.empty()) continue;  // trailing commas from ragged exports
      double v;
      if (!detail::parse_double(c, v)) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (header_allowed) {
        header_allowed = false;
        continue;
      }
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": non-numeric cell");
    }
    header_allowed = false;
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument(path + ": no data rows");
  return rows;
}

inline nlohmann::json scenario_to_json(const Scenario& sc) {
  nlohmann::json j;
  j["format"] = "dynpart-scenario";
  j["format_version"] = kSummaryFormatVersion;
  j["generator"] = sc.generator;
  j["n"] = sc.n;
  j["T"] = sc.T;
  j["seed"] = sc.seed;
  if (!sc.block_lengths.empty()) j["block_lengths"] = sc.block_lengths;
  if (sc.generator == "ar1") j["lambda"] = sc.lambda;
  j["true_changepoints"] =
      std::vector<int>(sc.true_changepoints.begin(), sc.true_changepoints.end());
  auto& parts = j["true_partitions"] = nlohmann::json::array();
  for (const auto& p : sc.true_partitions) {
    std::vector<int> labels(p.labels().begin(), p.labels().end());
    parts.push_back(labels);
  }
  return j;
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario sc;
  if (j.value("format", "") != "dynpart-scenario")
    throw std::invalid_argument("not a dynpart scenario file");
  sc.generator = j.value("generator", "");
  sc.n = j.at("n").get<int>();
  sc.T = j.at("T").get<int>();
  sc.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("block_lengths"))
    sc.block_lengths = j["block_lengths"].get<std::vector<int>>();
  sc.lambda = j.value("lambda", 0.0);
  for (const auto& labels : j.at("true_partitions"))
    sc.true_partitions.push_back(
        Partition::from_labels(labels.get<std::vector<int>>()));
  for (int t : j.at("true_changepoints").get<std::vector<int>>())
    sc.true_changepoints.insert(t);
  if (static_cast<int>(sc.true_partitions.size()) != sc.T)
    throw std::invalid_argument("scenario: true_partitions length != T");
  return sc;
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write file: " + path);
  os << j.dump(2) << '\n';
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open file: " + path);
  nlohmann::json j;
  is >> j;
  return j;
}

}  // namespace dynpart
