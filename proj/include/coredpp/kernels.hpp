#pragma once

// Kernel construction and the dense linear algebra every other module sits on:
// principal minors, elementary symmetric polynomials, Schur conditioning and
// the feature-space distance induced by a kernel.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "coredpp/errors.hpp"

namespace coredpp {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IndexList = std::vector<Index>;

/// Numerical tolerances shared by the whole library.
namespace tol {
inline constexpr double symmetry = 1e-10;
inline constexpr double psd = 1e-8;
inline constexpr double pivot = 1e-12;
inline constexpr double radicand = 1e-10;
inline constexpr double identity = 1e-8;
}  // namespace tol

/// N points in d dimensions, one point per row.
class PointSet {
 public:
  PointSet() = default;

  explicit PointSet(Matrix coords) : coords_(std::move(coords)) {
    require(coords_.cols() >= 1, ErrorCode::InvalidArgument, "point set needs d >= 1");
    require(coords_.allFinite(), ErrorCode::InvalidArgument, "point set has non-finite entries");
  }

  Index size() const { return coords_.rows(); }
  Index dim() const { return coords_.cols(); }
  const Matrix& coords() const { return coords_; }
  auto row(Index i) const { return coords_.row(i); }

 private:
  Matrix coords_;
};

/// Anything that exposes kernel entries on demand. Coreset construction only
/// touches O(N M) entries, so it runs against lazily evaluated kernels too.
template <typename K>
concept KernelAccess = requires(const K& kernel, Index i, Index j) {
  { kernel.size() } -> std::convertible_to<Index>;
  { kernel(i, j) } -> std::convertible_to<double>;
  { kernel.diag(i) } -> std::convertible_to<double>;
};

/// Dense symmetric PSD similarity matrix over the ground set.
class KernelMatrix {
 public:
  enum class Diagonal { Positive, NonNegative };

  KernelMatrix() = default;

  explicit KernelMatrix(Matrix entries, Diagonal diagonal = Diagonal::Positive)
      : entries_(std::move(entries)) {
    require(entries_.rows() == entries_.cols(), ErrorCode::InvalidArgument, "kernel must be square");
    require(entries_.allFinite(), ErrorCode::InvalidArgument, "kernel has non-finite entries");
    const Index n = entries_.rows();
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        const double a = entries_(i, j), b = entries_(j, i);
        require(std::abs(a - b) <= tol::symmetry * std::max(1.0, std::abs(a)), ErrorCode::InvalidArgument,
                "kernel is not symmetric at (" + std::to_string(i) + "," + std::to_string(j) + ")");
        const double mid = 0.5 * (a + b);
        entries_(i, j) = mid;
        entries_(j, i) = mid;
      }
      if (diagonal == Diagonal::Positive) {
        require(entries_(i, i) > 0.0, ErrorCode::NotPSD,
                "diagonal entry " + std::to_string(i) + " is not strictly positive");
      } else {
        require(entries_(i, i) >= -tol::radicand, ErrorCode::NotPSD,
                "diagonal entry " + std::to_string(i) + " is negative");
        entries_(i, i) = std::max(entries_(i, i), 0.0);
      }
    }
  }

  Index size() const { return entries_.rows(); }
  double operator()(Index i, Index j) const { return entries_(i, j); }
  double diag(Index i) const { return entries_(i, i); }
  const Matrix& entries() const { return entries_; }
  double max_diag() const { return size() == 0 ? 0.0 : entries_.diagonal().maxCoeff(); }

 private:
  Matrix entries_;
};

/// Eigendecomposition with eigenvalues sorted nonincreasing; values at the
/// rounding level of the largest one are set to 0.
struct Spectrum {
  Vector eigenvalues;
  Matrix eigenvectors;

  static Spectrum of(const Matrix& symmetric) {
    Spectrum s;
    if (symmetric.rows() == 0) return s;
    Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric);
    require(solver.info() == Eigen::Success, ErrorCode::NotPSD, "eigendecomposition failed");
    const Index n = symmetric.rows();
    s.eigenvalues = solver.eigenvalues().reverse();
    s.eigenvectors = solver.eigenvectors().rowwise().reverse();
    const double top = std::max(s.eigenvalues(0), 0.0);
    require(s.eigenvalues(n - 1) >= -tol::psd * std::max(top, 1e-300), ErrorCode::NotPSD,
            "smallest eigenvalue " + std::to_string(s.eigenvalues(n - 1)) + " below PSD tolerance");
    const double floor = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * top;
    s.eigenvalues = s.eigenvalues.unaryExpr([floor](double v) { return v > floor ? v : 0.0; });
    return s;
  }

  static Spectrum of(const KernelMatrix& kernel) { return of(kernel.entries()); }
};

// --- construction ---------------------------------------------------------

inline KernelMatrix linear_kernel(const PointSet& points) {
  const Matrix& x = points.coords();
  Matrix gram = x * x.transpose();
  for (Index i = 0; i < gram.rows(); ++i) {
    require(gram(i, i) > 0.0, ErrorCode::NotPSD, "point " + std::to_string(i) + " is the zero vector");
  }
  return KernelMatrix(std::move(gram));
}

inline void check_bandwidth(double bandwidth) {
  require(std::isfinite(bandwidth) && bandwidth > 0.0, ErrorCode::InvalidBandwidth,
          "bandwidth must be positive and finite, got " + std::to_string(bandwidth));
}

inline double rbf_entry(const PointSet& points, Index i, Index j, double bandwidth) {
  const double sq = (points.row(i) - points.row(j)).squaredNorm();
  return std::exp(-sq / (2.0 * bandwidth * bandwidth));
}

inline KernelMatrix rbf_kernel(const PointSet& points, double bandwidth) {
  check_bandwidth(bandwidth);
  const Index n = points.size();
  Matrix k(n, n);
  for (Index i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (Index j = i + 1; j < n; ++j) {
      const double v = rbf_entry(points, i, j, bandwidth);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return KernelMatrix(std::move(k));
}

/// Median pairwise Euclidean distance over an evenly strided subsample of at
/// most `max_points` points.
inline double median_bandwidth(const PointSet& points, Index max_points = 1000) {
  const Index n = points.size();
  require(n >= 2, ErrorCode::InvalidArgument, "median heuristic needs at least two points");
  const Index m = std::min(n, max_points);
  IndexList pick(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) pick[static_cast<std::size_t>(i)] = i * n / m;
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
  for (Index a = 0; a < m; ++a)
    for (Index b = a + 1; b < m; ++b)
      dists.push_back((points.row(pick[a]) - points.row(pick[b])).norm());
  auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
  std::nth_element(dists.begin(), mid, dists.end());
  const double med = *mid;
  require(med > 0.0, ErrorCode::InvalidBandwidth, "median pairwise distance is zero");
  return med;
}

enum class KernelKind { Linear, Rbf };

/// Kernel over a point set evaluated on demand; for ground sets too large to
/// hold an N x N matrix.
class PointKernel {
 public:
  PointKernel(PointSet points, KernelKind kind, double bandwidth = 1.0)
      : points_(std::move(points)), kind_(kind), bandwidth_(bandwidth) {
    if (kind_ == KernelKind::Rbf) check_bandwidth(bandwidth_);
    diag_.resize(points_.size());
    for (Index i = 0; i < points_.size(); ++i) {
      diag_(i) = kind_ == KernelKind::Rbf ? 1.0 : points_.row(i).squaredNorm();
      require(diag_(i) > 0.0, ErrorCode::NotPSD, "point " + std::to_string(i) + " is the zero vector");
    }
  }

  Index size() const { return points_.size(); }
  double diag(Index i) const { return diag_(i); }
  double operator()(Index i, Index j) const {
    if (i == j) return diag_(i);
    if (kind_ == KernelKind::Linear) return points_.row(i).dot(points_.row(j));
    return rbf_entry(points_, i, j, bandwidth_);
  }

  const PointSet& points() const { return points_; }
  KernelKind kind() const { return kind_; }
  double bandwidth() const { return bandwidth_; }

  KernelMatrix dense() const {
    return kind_ == KernelKind::Linear ? linear_kernel(points_) : rbf_kernel(points_, bandwidth_);
  }

 private:
  PointSet points_;
  KernelKind kind_;
  double bandwidth_;
  Vector diag_;
};

// --- elementary symmetric polynomials ------------------------------------

/// e_k of the values via the prefix recurrence e_j <- e_j + lambda * e_{j-1}.
inline double elementary_symmetric(std::span<const double> values, Index k) {
  const Index n = static_cast<Index>(values.size());
  require(k >= 0 && k <= n, ErrorCode::KOutOfRange,
          "k = " + std::to_string(k) + " outside [0, " + std::to_string(n) + "]");
  std::vector<double> e(static_cast<std::size_t>(k + 1), 0.0);
  e[0] = 1.0;
  for (Index i = 0; i < n; ++i) {
    const double lambda = values[static_cast<std::size_t>(i)];
    for (Index j = std::min(k, i + 1); j >= 1; --j) e[j] += lambda * e[j - 1];
  }
  return e[k];
}

inline double elementary_symmetric(const Vector& values, Index k) {
  return elementary_symmetric(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())), k);
}

/// Table E(l, m) = e_l(values[0..m)) for l <= k, m <= n.
inline Matrix elementary_symmetric_table(const Vector& values, Index k) {
  const Index n = values.size();
  require(k >= 0 && k <= n, ErrorCode::KOutOfRange, "k outside [0, n]");
  Matrix table = Matrix::Zero(k + 1, n + 1);
  table.row(0).setOnes();
  for (Index m = 1; m <= n; ++m)
    for (Index l = 1; l <= k; ++l) table(l, m) = table(l, m - 1) + values(m - 1) * table(l - 1, m - 1);
  return table;
}

/// e_k of the eigenvalues of a symmetric PSD matrix (sum of its k x k principal minors).
inline double elementary_symmetric_of(const Matrix& symmetric, Index k) {
  require(k >= 0 && k <= symmetric.rows(), ErrorCode::KOutOfRange, "k outside [0, n]");
  if (k == 0) return 1.0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric, Eigen::EigenvaluesOnly);
  const Vector lambda = solver.eigenvalues().cwiseMax(0.0);
  return elementary_symmetric(lambda, k);
}

// --- determinants -----------------------------------------------------------

/// Determinant of a PSD matrix by diagonally pivoted Cholesky. Returns 0 once
/// the best remaining pivot drops under 1e-12 times the largest diagonal.
inline double psd_det(Matrix a) {
  const Index n = a.rows();
  if (n == 0) return 1.0;
  const double floor = tol::pivot * std::max(a.diagonal().maxCoeff(), 0.0);
  double det = 1.0;
  for (Index step = 0; step < n; ++step) {
    Index p = step;
    for (Index i = step + 1; i < n; ++i)
      if (a(i, i) > a(p, p)) p = i;
    const double pivot = a(p, p);
    if (!(pivot > floor) || pivot <= 0.0) return 0.0;
    if (p != step) {
      a.row(p).swap(a.row(step));
      a.col(p).swap(a.col(step));
    }
    det *= pivot;
    const Index rest = n - step - 1;
    if (rest > 0) {
      const Vector col = a.col(step).tail(rest);
      a.bottomRightCorner(rest, rest).noalias() -= col * col.transpose() / pivot;
    }
  }
  return det;
}

/// log det of a PSD matrix; -inf when numerically singular.
inline double log_psd_det(const Matrix& a) {
  const double d = psd_det(a);
  return d > 0.0 ? std::log(d) : -std::numeric_limits<double>::infinity();
}

template <KernelAccess K>
Matrix gather(const K& kernel, std::span<const Index> rows, std::span<const Index> cols) {
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t a = 0; a < rows.size(); ++a)
    for (std::size_t b = 0; b < cols.size(); ++b)
      out(static_cast<Index>(a), static_cast<Index>(b)) = kernel(rows[a], cols[b]);
  return out;
}

/// Principal submatrix over `items`; repeated items are allowed.
template <KernelAccess K>
Matrix gather(const K& kernel, std::span<const Index> items) {
  const Index m = static_cast<Index>(items.size());
  Matrix out(m, m);
  for (Index a = 0; a < m; ++a) {
    out(a, a) = kernel.diag(items[a]);
    for (Index b = a + 1; b < m; ++b) {
      const double v = kernel(items[a], items[b]);
      out(a, b) = v;
      out(b, a) = v;
    }
  }
  return out;
}

inline void check_subset(Index n, std::span<const Index> items) {
  std::vector<Index> sorted(items.begin(), items.end());
  for (Index i : sorted)
    require(i >= 0 && i < n, ErrorCode::IndexOutOfRange, "index " + std::to_string(i) + " out of range");
  std::sort(sorted.begin(), sorted.end());
  require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), ErrorCode::DuplicateIndex,
          "subset contains a repeated index");
}

/// det(L_Y); the empty minor is 1.
template <KernelAccess K>
double principal_minor_det(const K& kernel, std::span<const Index> items) {
  check_subset(kernel.size(), items);
  return psd_det(gather(kernel, items));
}

/// L - L[:,y] L[y,:] / L[y][y] with row and column y removed. Indices above y
/// shift down by one.
inline KernelMatrix schur_condition(const KernelMatrix& kernel, Index y) {
  const Index n = kernel.size();
  require(y >= 0 && y < n, ErrorCode::IndexOutOfRange, "conditioning index out of range");
  const double pivot = kernel.diag(y);
  require(pivot > tol::pivot * kernel.max_diag(), ErrorCode::SingularPivot,
          "pivot L[y][y] = " + std::to_string(pivot) + " is numerically zero");
  IndexList rest;
  rest.reserve(static_cast<std::size_t>(n - 1));
  for (Index i = 0; i < n; ++i)
    if (i != y) rest.push_back(i);
  const Matrix& l = kernel.entries();
  Vector col(n - 1);
  Matrix out(n - 1, n - 1);
  for (Index a = 0; a < n - 1; ++a) col(a) = l(rest[a], y);
  for (Index a = 0; a < n - 1; ++a)
    for (Index b = 0; b < n - 1; ++b) out(a, b) = l(rest[a], rest[b]) - col(a) * col(b) / pivot;
  return KernelMatrix(std::move(out), KernelMatrix::Diagonal::NonNegative);
}

/// Feature-space distance sqrt(L_uu + L_vv - 2 L_uv).
template <KernelAccess K>
double kernel_distance(const K& kernel, Index u, Index v) {
  const Index n = kernel.size();
  require(u >= 0 && u < n && v >= 0 && v < n, ErrorCode::IndexOutOfRange, "distance index out of range");
  if (u == v) return 0.0;
  const double radicand = kernel.diag(u) + kernel.diag(v) - 2.0 * kernel(u, v);
  require(radicand >= -tol::radicand, ErrorCode::NegativeRadicand,
          "negative squared distance " + std::to_string(radicand) + "; kernel is not PSD");
  return std::sqrt(std::max(radicand, 0.0));
}

/// Squared distance without validation, for hot loops.
template <KernelAccess K>
double kernel_distance_sq(const K& kernel, Index u, Index v) {
  if (u == v) return 0.0;
  return std::max(kernel.diag(u) + kernel.diag(v) - 2.0 * kernel(u, v), 0.0);
}

}  // namespace coredpp
