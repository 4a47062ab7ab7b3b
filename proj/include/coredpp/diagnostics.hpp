#pragma once

// Error analysis of a coreset approximation: exact and estimated total
// variation distance, nonsingularity probability, distortion factor, part
// diameters, complement distances and the resulting TV bound. Everything
// here that enumerates subsets is meant for desk-scale ground sets and
// refuses to run past an explicit budget.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "coredpp/sampler.hpp"

namespace coredpp {

inline constexpr double kDefaultBudget = 2e6;

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

inline void check_budget(double count, double budget, const std::string& what) {
  require(count <= budget, ErrorCode::EnumerationTooLarge,
          what + " needs " + std::to_string(count) + " evaluations, budget is " + std::to_string(budget));
}

/// Z = e_k(L).
inline double normalizer(const KernelMatrix& kernel, Index k) { return elementary_symmetric_of(kernel.entries(), k); }

/// Half the L1 distance between k-DPP(L) and the two-stage law, by
/// enumeration of all k-subsets.
inline double tv_exact(const KernelMatrix& kernel, const CoreModel& model, double budget = kDefaultBudget) {
  const Index n = kernel.size(), k = model.k();
  check_budget(binomial(n, k), budget, "exact TV");
  const double z = normalizer(kernel, k);
  const double zc = model.z_core();
  double total = 0.0;
  IndexList replaced(static_cast<std::size_t>(k));
  for_each_subset(n, k, [&](std::span<const Index> y) {
    const double p = psd_det(gather(kernel, y)) / z;
    double q = 0.0;
    if (is_singular(model.partition, y)) {
      for (Index i = 0; i < k; ++i) replaced[i] = model.coreset[model.partition.part_of(y[i])];
      q = psd_det(gather(kernel, std::span<const Index>(replaced))) / zc;
    }
    total += std::abs(p - q);
  });
  return 0.5 * total;
}

/// Unbiased TV estimate from n_probes uniform k-subsets.
inline Estimate tv_empirical(const KernelMatrix& kernel, const CoreModel& model, Index n_probes, Rng& rng) {
  require(n_probes >= 1, ErrorCode::InvalidArgument, "need at least one probe");
  const Index n = kernel.size(), k = model.k();
  const double z = normalizer(kernel, k);
  const double scale = 0.5 * binomial(n, k);
  IndexList pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  double sum = 0.0, sum_sq = 0.0;
  IndexList y(static_cast<std::size_t>(k));
  for (Index probe = 0; probe < n_probes; ++probe) {
    for (Index i = 0; i < k; ++i) std::swap(pool[i], pool[i + uniform_index(rng, n - i)]);
    std::copy(pool.begin(), pool.begin() + k, y.begin());
    std::sort(y.begin(), y.end());
    const double p = psd_det(gather(kernel, std::span<const Index>(y))) / z;
    const double q = coredpp_prob(kernel, model, y);
    const double term = scale * std::abs(p - q);
    sum += term;
    sum_sq += term * term;
  }
  const double count = static_cast<double>(n_probes);
  const double mean = sum / count;
  const double var = n_probes > 1 ? std::max(sum_sq - count * mean * mean, 0.0) / (count - 1.0) : 0.0;
  return {mean, std::sqrt(var / count)};
}

/// s_k of L over the partition: sum of det(L_Y) over k-singular Y.
inline double singular_sum(const KernelMatrix& kernel, const Partition& partition, Index k, double budget) {
  check_budget(count_singular_subsets(partition, k), budget, "singular-set sum");
  double total = 0.0;
  IndexList buf;
  for_each_singular_subset(partition, k, [&](std::span<const Index> y) { total += psd_det(gather(kernel, y)); });
  return total;
}

/// p_ns = 1 - s_k / e_k: probability that a k-DPP(L) draw puts two items in one part.
inline double nonsingularity_prob_exact(const KernelMatrix& kernel, const Partition& partition, Index k,
                                        double budget = kDefaultBudget) {
  require(k >= 1 && k <= kernel.size(), ErrorCode::KOutOfRange, "need 1 <= k <= N");
  if (k > partition.parts()) return 1.0;
  const double p = 1.0 - singular_sum(kernel, partition, k, budget) / normalizer(kernel, k);
  return std::clamp(p, 0.0, 1.0);
}

/// Fraction of exact k-DPP draws that collide within a part.
inline Estimate nonsingularity_prob_mc(const KDppModel& target, const Partition& partition, Index draws, Rng& rng) {
  require(draws >= 1, ErrorCode::InvalidArgument, "need at least one draw");
  Index hits = 0;
  for (Index i = 0; i < draws; ++i) {
    const IndexList y = kdpp_sample(target, rng);
    if (!is_singular(partition, y)) ++hits;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(draws);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(draws))};
}

/// Per-part extremes of the conditioned squared norm
/// L_uu - L_{u,S} L_S^{-1} L_{S,u} over u in the part and (k-1)-singular S
/// drawn from the other parts.
struct ConditionalExtremes {
  double max_ratio = 1.0;  ///< max over S of max_u r_u / min_v r_v
  double min_norm_sq = std::numeric_limits<double>::infinity();
};

inline std::vector<ConditionalExtremes> conditional_extremes(const KernelMatrix& kernel, const Partition& partition,
                                                             Index k, double budget, bool need_ratio) {
  require(k >= 1, ErrorCode::KOutOfRange, "need k >= 1");
  const Index m = partition.parts();
  double work = 0.0;
  Vector sizes = detail::part_weights(partition);
  for (Index c = 0; c < m; ++c) {
    Vector others(m - 1);
    for (Index a = 0, b = 0; a < m; ++a)
      if (a != c) others(b++) = sizes(a);
    if (k - 1 <= m - 1) work += sizes(c) * elementary_symmetric(others, k - 1);
  }
  check_budget(work, budget, "conditional enumeration");

  std::vector<ConditionalExtremes> out(static_cast<std::size_t>(m));
  for (Index c = 0; c < m; ++c) {
    const IndexList& members = partition.members(c);
    std::vector<const IndexList*> groups;
    for (Index a = 0; a < m; ++a)
      if (a != c) groups.push_back(&partition.members(a));
    auto& ext = out[static_cast<std::size_t>(c)];
    for_each_singular_subset(groups, k - 1, [&](std::span<const Index> s) {
      Vector r(static_cast<Index>(members.size()));
      if (s.empty()) {
        for (std::size_t i = 0; i < members.size(); ++i) r(static_cast<Index>(i)) = kernel.diag(members[i]);
      } else {
        const Matrix ls = gather(kernel, s);
        Eigen::LLT<Matrix> llt(ls);
        if (llt.info() != Eigen::Success || psd_det(ls) <= 0.0) {
          require(!need_ratio, ErrorCode::DegenerateConditional, "complementary set has a singular kernel");
          r.setZero();
        } else {
          const Matrix cross = gather(kernel, s, std::span<const Index>(members));
          const Matrix solved = llt.matrixL().solve(cross);
          for (std::size_t i = 0; i < members.size(); ++i) {
            const Index u = static_cast<Index>(i);
            r(u) = std::max(kernel.diag(members[i]) - solved.col(u).squaredNorm(), 0.0);
          }
        }
      }
      ext.min_norm_sq = std::min(ext.min_norm_sq, r.minCoeff());
      if (need_ratio && members.size() > 1) {
        require(r.minCoeff() >= tol::pivot, ErrorCode::DegenerateConditional,
                "conditioned norm " + std::to_string(r.minCoeff()) + " in part " + std::to_string(c) +
                    " is numerically zero");
        ext.max_ratio = std::max(ext.max_ratio, r.maxCoeff() / r.minCoeff());
      }
    });
  }
  return out;
}

/// epsilon of the distortion factor 1 + epsilon: worst within-part ratio of
/// conditioned determinants, minus one. Zero when no part has two members.
inline double distortion_exact(const KernelMatrix& kernel, const Partition& partition, Index k,
                               double budget = kDefaultBudget) {
  double worst = 1.0;
  for (const auto& ext : conditional_extremes(kernel, partition, k, budget, true)) worst = std::max(worst, ext.max_ratio);
  return worst - 1.0;
}

/// rho_c: largest kernel distance between two members of part c.
inline double part_diameter(const KernelMatrix& kernel, const Partition& partition, Index part) {
  require(part >= 0 && part < partition.parts(), ErrorCode::InvalidArgument, "invalid part id");
  const IndexList& members = partition.members(part);
  double best = 0.0;
  for (std::size_t a = 0; a < members.size(); ++a)
    for (std::size_t b = a + 1; b < members.size(); ++b)
      best = std::max(best, kernel_distance(kernel, members[a], members[b]));
  return best;
}

/// d_c for every part: minimum distance of a member to the span of a
/// (k-1)-singular complementary set.
inline std::vector<double> min_complement_distances(const KernelMatrix& kernel, const Partition& partition, Index k,
                                                    double budget = kDefaultBudget) {
  std::vector<double> out;
  for (const auto& ext : conditional_extremes(kernel, partition, k, budget, false))
    out.push_back(std::sqrt(ext.min_norm_sq));
  return out;
}

inline double min_complement_distance(const KernelMatrix& kernel, const Partition& partition, Index part, Index k,
                                      double budget = kDefaultBudget) {
  require(part >= 0 && part < partition.parts(), ErrorCode::InvalidArgument, "invalid part id");
  return min_complement_distances(kernel, partition, k, budget)[static_cast<std::size_t>(part)];
}

struct PartGeometry {
  double diameter = 0.0;             ///< rho_c
  double complement_distance = 0.0;  ///< d_c
};

inline std::vector<PartGeometry> part_geometry(const KernelMatrix& kernel, const Partition& partition, Index k,
                                               double budget = kDefaultBudget) {
  const std::vector<double> d = min_complement_distances(kernel, partition, k, budget);
  std::vector<PartGeometry> out;
  for (Index c = 0; c < partition.parts(); ++c)
    out.push_back({part_diameter(kernel, partition, c), d[static_cast<std::size_t>(c)]});
  return out;
}

/// Upper bound on epsilon from diameters and complement distances; empty
/// when some part has d_c <= rho_c.
inline std::optional<double> distortion_bound(const std::vector<PartGeometry>& parts) {
  double bound = 0.0;
  for (const auto& p : parts) {
    if (!(p.complement_distance > p.diameter)) return std::nullopt;
    const double gap = p.complement_distance - p.diameter;
    bound = std::max(bound, (2.0 * p.complement_distance - p.diameter) * p.diameter / (gap * gap));
  }
  return bound;
}

inline std::optional<double> distortion_bound(const KernelMatrix& kernel, const Partition& partition, Index k,
                                              double budget = kDefaultBudget) {
  return distortion_bound(part_geometry(kernel, partition, k, budget));
}

/// |1 - Z_C / Z| + k eps + (1 - k eps) p_ns.
inline double tv_bound(double z, double z_core, Index k, double eps, double p_ns) {
  const double ke = static_cast<double>(k) * eps;
  return std::abs(1.0 - z_core / z) + ke + (1.0 - ke) * p_ns;
}

inline double tv_bound(const KernelMatrix& kernel, const CoreModel& model, double eps, double p_ns) {
  return tv_bound(normalizer(kernel, model.k()), model.z_core(), model.k(), eps, p_ns);
}

struct EnvelopeReport {
  double min_ratio = 1.0;
  double max_ratio = 1.0;
  double lower = 1.0;
  double upper = 1.0;
  Index checked = 0;
  bool passed = true;
};

/// Ratios det(L_{C(Y)}) / det(L_Y) over every k-singular Y against the
/// envelope [(1+eps)^-k, (1+eps)^k].
inline EnvelopeReport ratio_envelope_check(const KernelMatrix& kernel, const Partition& partition, const Coreset& coreset,
                                 Index k, double eps, double budget = kDefaultBudget) {
  validate(partition, coreset);
  check_budget(count_singular_subsets(partition, k), budget, "ratio envelope sweep");
  EnvelopeReport rep;
  rep.upper = std::pow(1.0 + eps, static_cast<double>(k));
  rep.lower = 1.0 / rep.upper;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  rep.max_ratio = 0.0;
  IndexList replaced;
  for_each_singular_subset(partition, k, [&](std::span<const Index> y) {
    replaced = core_replace(partition, coreset, y);
    const double den = psd_det(gather(kernel, y));
    require(den > 0.0, ErrorCode::DegenerateConditional, "k-singular set with zero determinant");
    const double ratio = psd_det(gather(kernel, std::span<const Index>(replaced))) / den;
    rep.min_ratio = std::min(rep.min_ratio, ratio);
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    ++rep.checked;
  });
  if (rep.checked == 0) rep.min_ratio = rep.max_ratio = 1.0;
  rep.passed = rep.min_ratio >= rep.lower * (1.0 - tol::identity) && rep.max_ratio <= rep.upper * (1.0 + tol::identity);
  return rep;
}

/// Every diagnostic quantity for one model; fields that would exceed the
/// enumeration budget stay empty.
struct DiagnosticsReport {
  std::optional<double> tv_exact;
  std::optional<Estimate> tv_estimate;
  std::optional<double> p_ns;
  std::optional<double> epsilon;
  std::optional<double> epsilon_bound;
  bool epsilon_bound_applicable = false;
  double z = 0.0;
  double z_core = 0.0;
  std::optional<double> tv_bound;
  std::optional<std::vector<PartGeometry>> per_part;
};

struct DiagnosticsOptions {
  double budget = kDefaultBudget;
  Index n_probes = 10000;
};

inline DiagnosticsReport diagnose(const KernelMatrix& kernel, const CoreModel& model, const DiagnosticsOptions& opts,
                                  Rng& rng) {
  DiagnosticsReport rep;
  const Index k = model.k();
  rep.z = normalizer(kernel, k);
  rep.z_core = model.z_core();
  auto attempt = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EnumerationTooLarge) throw;
    }
  };
  attempt([&] { rep.tv_exact = tv_exact(kernel, model, opts.budget); });
  if (opts.n_probes > 0) rep.tv_estimate = tv_empirical(kernel, model, opts.n_probes, rng);
  attempt([&] { rep.p_ns = nonsingularity_prob_exact(kernel, model.partition, k, opts.budget); });
  attempt([&] { rep.epsilon = distortion_exact(kernel, model.partition, k, opts.budget); });
  attempt([&] {
    auto geometry = part_geometry(kernel, model.partition, k, opts.budget);
    const auto bound = distortion_bound(geometry);
    rep.epsilon_bound_applicable = bound.has_value();
    rep.epsilon_bound = bound;
    rep.per_part = std::move(geometry);
  });
  if (rep.epsilon && rep.p_ns) rep.tv_bound = tv_bound(rep.z, rep.z_core, k, *rep.epsilon, *rep.p_ns);
  return rep;
}

}  // namespace coredpp
