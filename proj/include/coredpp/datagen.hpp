#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "coredpp/kernels.hpp"
#include "coredpp/random.hpp"

namespace coredpp {

/// Equal-sized isotropic Gaussian clusters whose means lie on a sphere of
/// radius mean_norm; every sample is rescaled to length target_norm.
struct SyntheticSpec {
  Index n_clusters = 10;
  Index dim = 30;
  Index points_per_cluster = 6;
  double mean_norm = 5.0;
  /// Defaults to max(mean_norm, sqrt(dim)).
  std::optional<double> target_norm;
  std::uint64_t seed = 0;

  double resolved_target_norm() const {
    return target_norm.value_or(std::max(mean_norm, std::sqrt(static_cast<double>(dim))));
  }
};

struct SyntheticData {
  PointSet points;
  /// Generating cluster of each row.
  IndexList labels;
  Matrix means;
};

inline SyntheticData gen_synthetic_labeled(const SyntheticSpec& spec) {
  require(spec.n_clusters >= 1 && spec.dim >= 1 && spec.points_per_cluster >= 1, ErrorCode::InvalidArgument,
          "synthetic counts must be at least 1");
  require(spec.mean_norm > 0.0 && spec.resolved_target_norm() > 0.0, ErrorCode::InvalidArgument,
          "synthetic norms must be positive");
  Rng rng = make_rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix means(spec.n_clusters, spec.dim);
  for (Index c = 0; c < spec.n_clusters; ++c) {
    double norm = 0.0;
    do {
      for (Index j = 0; j < spec.dim; ++j) means(c, j) = gauss(rng);
      norm = means.row(c).norm();
    } while (norm == 0.0);
    means.row(c) *= spec.mean_norm / norm;
  }
  const Index n = spec.n_clusters * spec.points_per_cluster;
  const double target = spec.resolved_target_norm();
  Matrix x(n, spec.dim);
  IndexList labels(static_cast<std::size_t>(n));
  for (Index c = 0; c < spec.n_clusters; ++c) {
    for (Index p = 0; p < spec.points_per_cluster; ++p) {
      const Index row = c * spec.points_per_cluster + p;
      double norm = 0.0;
      do {
        for (Index j = 0; j < spec.dim; ++j) x(row, j) = means(c, j) + gauss(rng);
        norm = x.row(row).norm();
      } while (norm == 0.0);
      x.row(row) *= target / norm;
      labels[static_cast<std::size_t>(row)] = c;
    }
  }
  return {PointSet(std::move(x)), std::move(labels), std::move(means)};
}

inline PointSet gen_synthetic(const SyntheticSpec& spec) { return gen_synthetic_labeled(spec).points; }

// --- CSV ----------------------------------------------------------------------

inline PointSet parse_points(std::istream& in, bool header = false) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (header && line_no == 1) continue;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(field, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      while (used < field.size() && std::isspace(static_cast<unsigned char>(field[used]))) ++used;
      require(used > 0 && used == field.size() && std::isfinite(v), ErrorCode::ParseError,
              "line " + std::to_string(line_no) + ": bad number '" + field + "'");
      row.push_back(v);
    }
    if (!line.empty() && line.back() == ',')
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": trailing comma");
    if (width == 0) width = row.size();
    require(row.size() == width, ErrorCode::ParseError,
            "line " + std::to_string(line_no) + ": expected " + std::to_string(width) + " fields, got " +
                std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), ErrorCode::ParseError, "no data rows");
  Matrix x(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j) x(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return PointSet(std::move(x));
}

inline PointSet load_points(const std::string& path, bool header = false) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot open " + path);
  return parse_points(in, header);
}

inline void write_points(std::ostream& out, const PointSet& points) {
  out << std::setprecision(17);
  for (Index i = 0; i < points.size(); ++i) {
    for (Index j = 0; j < points.dim(); ++j) {
      if (j) out << ',';
      out << points.coords()(i, j);
    }
    out << '\n';
  }
}

inline void write_points(const std::string& path, const PointSet& points) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot write " + path);
  write_points(out, points);
}

}  // namespace coredpp
