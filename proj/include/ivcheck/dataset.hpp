#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ivcheck/errors.hpp"

namespace ivcheck {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Observed variables bound to roles. Candidate instruments are stored jointly
// but always tested one at a time.
struct Dataset {
  Vec x;  // treatment
  Vec y;  // outcome
  Mat z;  // n x m candidate instruments, m >= 1
  Mat w;  // n x q covariates, q >= 0
  std::string x_name = "X";
  std::string y_name = "Y";
  std::vector<std::string> z_names;
  std::vector<std::string> w_names;

  Eigen::Index n() const { return x.size(); }
  Eigen::Index num_candidates() const { return z.cols(); }
  Eigen::Index num_covariates() const { return w.cols(); }
};

struct ColumnRoles {
  std::string x_name;
  std::string y_name;
  std::vector<std::string> z_names;
  std::vector<std::string> w_names;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

// Strict numeric cell parse: the full token must be a finite decimal number.
inline double parse_cell(const std::string& tok, long row, const std::string& col) {
  if (tok.empty()) {
    throw InputError("missing value at row " + std::to_string(row) + ", column '" + col + "'");
  }
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw InputError("non-numeric cell '" + tok + "' at row " + std::to_string(row) +
                     ", column '" + col + "'");
  }
  return v;
}

inline void check_roles(const ColumnRoles& roles) {
  if (roles.x_name.empty() || roles.y_name.empty() || roles.z_names.empty()) {
    throw ConfigError("roles must name x, y, and at least one z column");
  }
  std::vector<std::string> all{roles.x_name, roles.y_name};
  all.insert(all.end(), roles.z_names.begin(), roles.z_names.end());
  all.insert(all.end(), roles.w_names.begin(), roles.w_names.end());
  std::set<std::string> uniq(all.begin(), all.end());
  if (uniq.size() != all.size()) {
    throw ConfigError("role column names must be distinct");
  }
}

}  // namespace detail

inline void validate(const Dataset& d) {
  const Eigen::Index n = d.x.size();
  if (n < 1) throw InputError("dataset has no rows");
  if (d.y.size() != n || d.z.rows() != n || (d.w.size() > 0 && d.w.rows() != n)) {
    throw InputError("dataset columns have inconsistent lengths");
  }
  if (d.z.cols() < 1) throw InputError("dataset needs at least one candidate instrument");
  auto finite = [](double v) { return std::isfinite(v); };
  if (!d.x.unaryExpr([&](double v) { return finite(v) ? 0.0 : 1.0; }).isZero() ||
      !d.y.unaryExpr([&](double v) { return finite(v) ? 0.0 : 1.0; }).isZero() ||
      !d.z.unaryExpr([&](double v) { return finite(v) ? 0.0 : 1.0; }).isZero() ||
      (d.w.size() > 0 && !d.w.unaryExpr([&](double v) { return finite(v) ? 0.0 : 1.0; }).isZero())) {
    throw InputError("dataset contains NaN or Inf entries");
  }
}

inline Dataset load_csv(const std::string& path, const ColumnRoles& roles) {
  detail::check_roles(roles);
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw InputError("empty file '" + path + "'");
  const std::vector<std::string> header = detail::split_csv_line(line);

  auto col_index = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw InputError("missing column '" + name + "' in '" + path + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t xi = col_index(roles.x_name);
  const std::size_t yi = col_index(roles.y_name);
  std::vector<std::size_t> zi, wi;
  for (const auto& nm : roles.z_names) zi.push_back(col_index(nm));
  for (const auto& nm : roles.w_names) wi.push_back(col_index(nm));

  std::vector<double> xs, ys;
  std::vector<std::vector<double>> zs(zi.size()), ws(wi.size());
  long row = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    ++row;
    const std::vector<std::string> cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw InputError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                       " cells, expected " + std::to_string(header.size()));
    }
    xs.push_back(detail::parse_cell(cells[xi], row, roles.x_name));
    ys.push_back(detail::parse_cell(cells[yi], row, roles.y_name));
    for (std::size_t j = 0; j < zi.size(); ++j) {
      zs[j].push_back(detail::parse_cell(cells[zi[j]], row, roles.z_names[j]));
    }
    for (std::size_t j = 0; j < wi.size(); ++j) {
      ws[j].push_back(detail::parse_cell(cells[wi[j]], row, roles.w_names[j]));
    }
  }
  if (row == 0) throw InputError("no data rows in '" + path + "'");

  Dataset d;
  d.x = Eigen::Map<const Vec>(xs.data(), row);
  d.y = Eigen::Map<const Vec>(ys.data(), row);
  d.z.resize(row, static_cast<Eigen::Index>(zs.size()));
  for (std::size_t j = 0; j < zs.size(); ++j) {
    d.z.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Vec>(zs[j].data(), row);
  }
  d.w.resize(row, static_cast<Eigen::Index>(ws.size()));
  for (std::size_t j = 0; j < ws.size(); ++j) {
    d.w.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Vec>(ws[j].data(), row);
  }
  d.x_name = roles.x_name;
  d.y_name = roles.y_name;
  d.z_names = roles.z_names;
  d.w_names = roles.w_names;
  validate(d);
  return d;
}

// 17 significant digits round-trips IEEE doubles exactly through decimal text.
inline std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_csv(const std::string& path, const Dataset& d) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write file '" + path + "'");
  out << d.x_name << ',' << d.y_name;
  for (const auto& nm : d.z_names) out << ',' << nm;
  for (const auto& nm : d.w_names) out << ',' << nm;
  out << '\n';
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    out << format_value(d.x[i]) << ',' << format_value(d.y[i]);
    for (Eigen::Index j = 0; j < d.z.cols(); ++j) out << ',' << format_value(d.z(i, j));
    for (Eigen::Index j = 0; j < d.w.cols(); ++j) out << ',' << format_value(d.w(i, j));
    out << '\n';
  }
  if (!out) throw InputError("failed while writing '" + path + "'");
}

inline Dataset center(const Dataset& d) {
  Dataset out = d;
  out.x.array() -= out.x.mean();
  out.y.array() -= out.y.mean();
  for (Eigen::Index j = 0; j < out.z.cols(); ++j) out.z.col(j).array() -= out.z.col(j).mean();
  for (Eigen::Index j = 0; j < out.w.cols(); ++j) out.w.col(j).array() -= out.w.col(j).mean();
  return out;
}

}  // namespace ivcheck
