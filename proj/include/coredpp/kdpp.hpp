#pragma once

// Exact k-DPP: probabilities det(L_Y) / e_k(L) and the two-phase spectral
// sampler (eigenvector selection by the e_k recursion, then sequential
// projection sampling).

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "coredpp/kernels.hpp"
#include "coredpp/random.hpp"

namespace coredpp {

struct KDppModel {
  KernelMatrix kernel;
  Spectrum spectrum;
  Index k = 0;
  double normalizer = 0.0;
  /// esym(l, m) = e_l of the first m eigenvalues; drives phase one.
  Matrix esym;

  Index size() const { return kernel.size(); }
};

inline KDppModel build_kdpp(KernelMatrix kernel, Index k) {
  const Index n = kernel.size();
  require(k >= 1 && k <= n, ErrorCode::KOutOfRange,
          "k = " + std::to_string(k) + " must lie in [1, " + std::to_string(n) + "]");
  KDppModel model;
  model.spectrum = Spectrum::of(kernel);
  model.kernel = std::move(kernel);
  model.k = k;
  model.esym = elementary_symmetric_table(model.spectrum.eigenvalues, k);
  model.normalizer = model.esym(k, n);
  require(model.normalizer > 1e-300, ErrorCode::DegenerateModel,
          "e_k(L) vanishes; kernel rank is below k = " + std::to_string(k));
  return model;
}

inline double kdpp_prob(const KDppModel& model, std::span<const Index> items) {
  require(static_cast<Index>(items.size()) == model.k, ErrorCode::WrongCardinality,
          "subset has " + std::to_string(items.size()) + " items, model k = " + std::to_string(model.k));
  return principal_minor_det(model.kernel, items) / model.normalizer;
}

namespace detail {

/// Phase one: choose k eigen-indices with probability proportional to the
/// product of their eigenvalues, walking the e_l table backwards.
inline IndexList select_eigenvectors(const KDppModel& model, Rng& rng) {
  const Vector& lambda = model.spectrum.eigenvalues;
  IndexList chosen;
  chosen.reserve(static_cast<std::size_t>(model.k));
  Index remaining = model.k;
  for (Index m = model.size(); m >= 1 && remaining > 0; --m) {
    const double denom = model.esym(remaining, m);
    const double p = denom > 0.0 ? lambda(m - 1) * model.esym(remaining - 1, m - 1) / denom : 0.0;
    if (m == remaining || uniform01(rng) < p) {
      chosen.push_back(m - 1);
      --remaining;
    }
  }
  return chosen;
}

/// Phase two: sample one item per basis vector from the elementary DPP
/// spanned by the columns of `basis`, projecting out each chosen item.
inline IndexList sample_projection(Matrix basis, Rng& rng) {
  IndexList items;
  const Index n = basis.rows();
  items.reserve(static_cast<std::size_t>(basis.cols()));
  Vector weights(n);
  while (basis.cols() > 0) {
    weights = basis.rowwise().squaredNorm();
    const double total = weights.sum();
    double u = uniform01(rng) * total;
    Index pick = n - 1;
    for (Index i = 0; i < n; ++i) {
      u -= weights(i);
      if (u < 0.0) {
        pick = i;
        break;
      }
    }
    // guard the roundoff fallthrough against picking a zero-weight row
    while (weights(pick) <= 0.0 && pick > 0) --pick;
    items.push_back(pick);

    Index col = 0;
    basis.row(pick).cwiseAbs().maxCoeff(&col);
    const Vector pivot_col = basis.col(col);
    const double pivot = pivot_col(pick);
    const Index last = basis.cols() - 1;
    if (col != last) basis.col(col) = basis.col(last);
    basis.conservativeResize(Eigen::NoChange, last);
    for (Index j = 0; j < basis.cols(); ++j) basis.col(j) -= pivot_col * (basis(pick, j) / pivot);
    // Gram-Schmidt keeps the remaining span orthonormal
    for (Index j = 0; j < basis.cols(); ++j) {
      for (Index i = 0; i < j; ++i) basis.col(j) -= basis.col(i).dot(basis.col(j)) * basis.col(i);
      const double norm = basis.col(j).norm();
      if (norm > 0.0) basis.col(j) /= norm;
    }
  }
  std::sort(items.begin(), items.end());
  return items;
}

}  // namespace detail

/// Exact draw from k-DPP(L); returns k distinct indices in increasing order.
inline IndexList kdpp_sample(const KDppModel& model, Rng& rng) {
  const IndexList eig = detail::select_eigenvectors(model, rng);
  Matrix basis(model.size(), static_cast<Index>(eig.size()));
  for (std::size_t j = 0; j < eig.size(); ++j) basis.col(static_cast<Index>(j)) = model.spectrum.eigenvectors.col(eig[j]);
  return detail::sample_projection(std::move(basis), rng);
}

}  // namespace coredpp
