#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lproj/series.hpp"

namespace lproj {

struct CsvOptions {
  char delimiter = ',';
  std::string quarter_column = "quarter";
  // Optional rename map: file column name -> dataset series name. Columns
  // not listed keep their header name; an empty map keeps everything.
  std::map<std::string, std::string> schema;
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(trim(field));
  if (!line.empty() && line.back() == delim) out.push_back("");
  return out;
}

inline bool parse_cell(const std::string& cell, double* out) {
  if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == ".") {
    *out = nan_value;
    return true;
  }
  char* end = nullptr;
  *out = std::strtod(cell.c_str(), &end);
  return end != nullptr && *end == '\0';
}

}  // namespace detail

/// Reads a delimiter-separated file with a quarter column and numeric
/// columns into an aligned Dataset. Rows are sorted by quarter; duplicate
/// quarters and interior gaps are ingestion errors. Empty or NA cells are
/// allowed only at the edges of each column.
inline Dataset load_dataset(const std::string& path, const CsvOptions& opt = {}) {
  std::ifstream in(path);
  if (!in) throw ingest_error("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw ingest_error("empty file '" + path + "'");
  auto header = detail::split(line, opt.delimiter);

  long qcol = -1;
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == opt.quarter_column) qcol = static_cast<long>(i);
  if (qcol < 0)
    throw ingest_error("'" + path + "' has no '" + opt.quarter_column + "' column");

  struct Row {
    Quarter q;
    std::vector<double> cells;
    long line_no;
  };
  std::vector<Row> rows;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split(line, opt.delimiter);
    if (cells.size() != header.size())
      throw ingest_error(path + ":" + std::to_string(line_no) + ": expected " +
                         std::to_string(header.size()) + " fields, got " +
                         std::to_string(cells.size()));
    Row r;
    try {
      r.q = Quarter::parse(cells[qcol]);
    } catch (const ingest_error& e) {
      throw ingest_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    r.line_no = line_no;
    for (size_t i = 0; i < cells.size(); ++i) {
      if (static_cast<long>(i) == qcol) continue;
      double v;
      if (!detail::parse_cell(cells[i], &v))
        throw ingest_error(path + ":" + std::to_string(line_no) + ": bad numeric cell '" +
                           cells[i] + "' in column '" + header[i] + "'");
      r.cells.push_back(v);
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw ingest_error("'" + path + "' has no data rows");

  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.q < b.q; });
  for (size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].q == rows[i - 1].q)
      throw ingest_error(path + ": duplicate quarter " + rows[i].q.str() + " (line " +
                         std::to_string(rows[i].line_no) + ")");
    if (rows[i].q - rows[i - 1].q > 1)
      throw ingest_error(path + ": interior gap between " + rows[i - 1].q.str() + " and " +
                         rows[i].q.str() + " (line " + std::to_string(rows[i].line_no) + ")");
  }

  Dataset ds(rows.front().q, static_cast<long>(rows.size()));
  long data_col = 0;
  for (size_t i = 0; i < header.size(); ++i) {
    if (static_cast<long>(i) == qcol) continue;
    Eigen::VectorXd v(static_cast<long>(rows.size()));
    for (size_t r = 0; r < rows.size(); ++r) v[static_cast<long>(r)] = rows[r].cells[data_col];
    // Interior missing values are not representable in a Dataset.
    long first = -1, last = -1;
    for (long t = 0; t < v.size(); ++t)
      if (std::isfinite(v[t])) {
        if (first < 0) first = t;
        last = t;
      }
    for (long t = first; t >= 0 && t <= last; ++t)
      if (!std::isfinite(v[t]))
        throw ingest_error(path + ": interior missing value in column '" + header[i] +
                           "' at " + (rows.front().q + static_cast<int>(t)).str());
    std::string name = header[i];
    if (auto it = opt.schema.find(name); it != opt.schema.end()) name = it->second;
    ds.add(name, std::move(v));
    ++data_col;
  }
  return ds;
}

/// One federal security outstanding in one quarter.
struct SecurityRecord {
  std::string security_id;
  Quarter quarter;
  double outstanding = 0.0;  // amount outstanding
  double coupon_rate = 0.0;  // annual interest fraction
};

/// Reads `security_id,quarter,outstanding,coupon_rate` rows.
inline std::vector<SecurityRecord> load_securities(const std::string& path, char delimiter = ',') {
  std::ifstream in(path);
  if (!in) throw ingest_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ingest_error("empty file '" + path + "'");
  auto header = detail::split(line, delimiter);
  std::map<std::string, long> col;
  for (size_t i = 0; i < header.size(); ++i) col[header[i]] = static_cast<long>(i);
  for (const char* need : {"security_id", "quarter", "outstanding", "coupon_rate"})
    if (!col.count(need))
      throw ingest_error("'" + path + "' is missing column '" + std::string(need) + "'");

  std::vector<SecurityRecord> out;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split(line, delimiter);
    if (cells.size() != header.size())
      throw ingest_error(path + ":" + std::to_string(line_no) + ": malformed row");
    SecurityRecord rec;
    rec.security_id = cells[col["security_id"]];
    rec.quarter = Quarter::parse(cells[col["quarter"]]);
    double b, r;
    if (!detail::parse_cell(cells[col["outstanding"]], &b) ||
        !detail::parse_cell(cells[col["coupon_rate"]], &r) || !std::isfinite(b) ||
        !std::isfinite(r))
      throw ingest_error(path + ":" + std::to_string(line_no) + ": bad numeric cell");
    if (b < 0) throw ingest_error(path + ":" + std::to_string(line_no) + ": negative outstanding");
    if (r < 0) throw ingest_error(path + ":" + std::to_string(line_no) + ": negative coupon rate");
    rec.outstanding = b;
    rec.coupon_rate = r;
    out.push_back(std::move(rec));
  }
  return out;
}

/// Reads a two-column quarter/value file (the shock-series interchange
/// format). Header optional; any first line that fails to parse as a row
/// is treated as a header.
inline Series load_shock_series(const std::string& path, char delimiter = ',') {
  std::ifstream in(path);
  if (!in) throw ingest_error("cannot open '" + path + "'");
  std::vector<std::pair<Quarter, double>> rows;
  std::string line;
  bool first = true;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split(line, delimiter);
    if (cells.size() < 2)
      throw ingest_error(path + ":" + std::to_string(line_no) + ": expected quarter,value");
    Quarter q;
    double v;
    try {
      q = Quarter::parse(cells[0]);
    } catch (const ingest_error&) {
      if (first) { first = false; continue; }
      throw;
    }
    first = false;
    if (!detail::parse_cell(cells[1], &v))
      throw ingest_error(path + ":" + std::to_string(line_no) + ": bad value");
    rows.emplace_back(q, v);
  }
  if (rows.empty()) throw ingest_error("'" + path + "' has no data rows");
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (size_t i = 1; i < rows.size(); ++i)
    if (rows[i].first == rows[i - 1].first)
      throw ingest_error(path + ": duplicate quarter " + rows[i].first.str());
  Quarter start = rows.front().first;
  Eigen::VectorXd v = Eigen::VectorXd::Constant(rows.back().first - start + 1, nan_value);
  for (const auto& [q, x] : rows) v[q - start] = x;
  return Series(start, std::move(v));
}

inline void write_shock_series(const std::string& path, const Series& s) {
  std::ofstream out(path);
  if (!out) throw ingest_error("cannot write '" + path + "'");
  out << "quarter,value\n";
  char buf[64];
  for (long i = 0; i < s.size(); ++i) {
    double v = s.values()[i];
    if (!std::isfinite(v)) continue;
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << (s.start() + static_cast<int>(i)).str() << ',' << buf << '\n';
  }
}

}  // namespace lproj
