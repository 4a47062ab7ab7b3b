#pragma once

// Comparison methods: the k-means partition baseline (medoid cores) and the
// Metropolis exchange chain for k-DPPs with a Gelman-Rubin stopping rule.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "coredpp/coreset.hpp"

namespace coredpp {

// --- k-means partition ------------------------------------------------------

namespace detail {

/// Euclidean geometry of raw points exposed through KernelAccess, so the
/// kmeans++ seeding routine can be shared.
struct EuclideanAccess {
  const PointSet& points;
  Index size() const { return points.size(); }
  double operator()(Index i, Index j) const { return points.row(i).dot(points.row(j)); }
  double diag(Index i) const { return points.row(i).squaredNorm(); }
};

}  // namespace detail

struct KMeansResult {
  Partition partition;
  Coreset medoids;
  Matrix centers;
  Index iterations = 0;
};

/// Lloyd's k-means from kmeans++ seeds; each part's core is its medoid (the
/// member nearest the centroid).
inline KMeansResult kmeans_partition(const PointSet& points, Index parts, Rng& rng, Index max_iter = 100,
                                     double tol = 1e-6) {
  const Index n = points.size(), d = points.dim();
  require(parts >= 1, ErrorCode::InvalidArgument, "need at least one part");
  require(parts <= n, ErrorCode::TooManyParts, "M = " + std::to_string(parts) + " exceeds N = " + std::to_string(n));
  const detail::EuclideanAccess euclid{points};
  const Coreset seeds = kmeanspp_init(euclid, parts, rng).second;
  Matrix centers(parts, d);
  for (Index c = 0; c < parts; ++c) centers.row(c) = points.row(seeds[c]);

  IndexList assignment(static_cast<std::size_t>(n), 0);
  Vector dist(n);
  Index iter = 0;
  for (; iter < max_iter; ++iter) {
    for (Index y = 0; y < n; ++y) {
      Index best = 0;
      double best_d = (points.row(y) - centers.row(0)).squaredNorm();
      for (Index c = 1; c < parts; ++c) {
        const double dc = (points.row(y) - centers.row(c)).squaredNorm();
        if (dc < best_d) {
          best_d = dc;
          best = c;
        }
      }
      assignment[static_cast<std::size_t>(y)] = best;
      dist(y) = best_d;
    }
    // refill empty clusters with the point farthest from its center
    std::vector<Index> counts(static_cast<std::size_t>(parts), 0);
    for (Index c : assignment) ++counts[static_cast<std::size_t>(c)];
    for (Index c = 0; c < parts; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      Index far = -1;
      for (Index y = 0; y < n; ++y) {
        if (counts[static_cast<std::size_t>(assignment[y])] <= 1) continue;
        if (far < 0 || dist(y) > dist(far)) far = y;
      }
      --counts[static_cast<std::size_t>(assignment[far])];
      assignment[static_cast<std::size_t>(far)] = c;
      counts[static_cast<std::size_t>(c)] = 1;
      dist(far) = 0.0;
    }
    Matrix next = Matrix::Zero(parts, d);
    for (Index y = 0; y < n; ++y) next.row(assignment[y]) += points.row(y);
    for (Index c = 0; c < parts; ++c) next.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    const double shift = (next - centers).rowwise().norm().maxCoeff();
    centers = std::move(next);
    if (shift <= tol) {
      ++iter;
      break;
    }
  }

  Partition partition(std::move(assignment), parts);
  Coreset medoids;
  for (Index c = 0; c < parts; ++c) {
    Index best = -1;
    double best_d = 0.0;
    for (Index y : partition.members(c)) {
      const double dc = (points.row(y) - centers.row(c)).squaredNorm();
      if (best < 0 || dc < best_d) {
        best = y;
        best_d = dc;
      }
    }
    medoids.cores.push_back(best);
  }
  return {std::move(partition), std::move(medoids), std::move(centers), iter};
}

/// The K++ baseline: k-means clusters as parts, medoids as cores.
template <KernelAccess K>
CoreModel kpp_baseline(const PointSet& points, const K& kernel, Index parts, Index k, Rng& rng) {
  require(points.size() == kernel.size(), ErrorCode::InvalidArgument, "points and kernel disagree on N");
  KMeansResult km = kmeans_partition(points, parts, rng);
  return make_core_model(kernel, std::move(km.partition), std::move(km.medoids), k);
}

// --- exchange chain -----------------------------------------------------------

struct ChainState {
  IndexList current;
  double log_det = 0.0;
  Index step_count = 0;
  /// Inverse of L_current, used for O(k^2) exchange ratios.
  Matrix inverse;
};

inline constexpr Index kLogDetRefresh = 1000;

template <KernelAccess K>
ChainState make_chain_state(const K& kernel, IndexList items) {
  check_subset(kernel.size(), items);
  ChainState state;
  state.current = std::move(items);
  const Matrix sub = gather(kernel, std::span<const Index>(state.current));
  state.log_det = log_psd_det(sub);
  require(std::isfinite(state.log_det), ErrorCode::DegenerateModel, "chain state has zero determinant");
  state.inverse = sub.ldlt().solve(Matrix::Identity(sub.rows(), sub.cols()));
  return state;
}

/// Uniform k-subset with positive determinant.
template <KernelAccess K>
ChainState random_chain_state(const K& kernel, Index k, Rng& rng, Index attempts = 1000) {
  const Index n = kernel.size();
  require(k >= 1 && k <= n, ErrorCode::KOutOfRange, "need 1 <= k <= N");
  IndexList pool(static_cast<std::size_t>(n));
  for (Index a = 0; a < attempts; ++a) {
    std::iota(pool.begin(), pool.end(), Index{0});
    for (Index i = 0; i < k; ++i) std::swap(pool[i], pool[i + uniform_index(rng, n - i)]);
    IndexList items(pool.begin(), pool.begin() + k);
    std::sort(items.begin(), items.end());
    if (psd_det(gather(kernel, std::span<const Index>(items))) > 0.0) return make_chain_state(kernel, std::move(items));
  }
  throw Error(ErrorCode::DegenerateModel, "no k-subset with positive determinant found");
}

/// det(L_{Y - y_pos + v}) / det(L_Y) from the cached inverse, as the ratio of
/// two rank-one conditionals on Y without y_pos.
template <KernelAccess K>
double exchange_ratio(const K& kernel, const ChainState& state, Index pos, Index v) {
  const Index k = static_cast<Index>(state.current.size());
  Vector b(k);
  for (Index i = 0; i < k; ++i) b(i) = i == pos ? 0.0 : kernel(state.current[i], v);
  const Matrix& inv = state.inverse;
  const double inv_pp = inv(pos, pos);
  const double quad = b.dot(inv * b);
  const double cross = inv.row(pos).dot(b);
  const double conditional_v = kernel.diag(v) - (quad - cross * cross / inv_pp);
  return std::max(conditional_v, 0.0) * inv_pp;
}

/// One Metropolis exchange step: propose swapping a uniform member for a
/// uniform non-member and accept with min(1, det ratio).
template <KernelAccess K>
ChainState mcmc_kdpp_step(const K& kernel, ChainState state, Rng& rng) {
  const Index n = kernel.size();
  const Index k = static_cast<Index>(state.current.size());
  ++state.step_count;
  if (k == n) return state;
  const Index pos = uniform_index(rng, k);
  Index v;
  do {
    v = uniform_index(rng, n);
  } while (std::find(state.current.begin(), state.current.end(), v) != state.current.end());
  const double ratio = exchange_ratio(kernel, state, pos, v);
  if (ratio >= 1.0 || uniform01(rng) < ratio) {
    state.current[static_cast<std::size_t>(pos)] = v;
    const Matrix sub = gather(kernel, std::span<const Index>(state.current));
    state.inverse = sub.ldlt().solve(Matrix::Identity(k, k));
    state.log_det += std::log(ratio);
  }
  if (state.step_count % kLogDetRefresh == 0) state.log_det = log_psd_det(gather(kernel, std::span<const Index>(state.current)));
  return state;
}

/// Transition probability Y -> Y' of the exchange chain (0 unless the two
/// sets differ by one swap); used to audit detailed balance.
template <KernelAccess K>
double mcmc_transition_prob(const K& kernel, std::span<const Index> from, std::span<const Index> to) {
  const Index n = kernel.size();
  const Index k = static_cast<Index>(from.size());
  IndexList out_items, in_items;
  for (Index y : from)
    if (std::find(to.begin(), to.end(), y) == to.end()) out_items.push_back(y);
  for (Index y : to)
    if (std::find(from.begin(), from.end(), y) == from.end()) in_items.push_back(y);
  if (out_items.size() != 1 || in_items.size() != 1) return 0.0;
  const ChainState state = make_chain_state(kernel, IndexList(from.begin(), from.end()));
  const Index pos = static_cast<Index>(std::find(state.current.begin(), state.current.end(), out_items[0]) -
                                       state.current.begin());
  const double ratio = exchange_ratio(kernel, state, pos, in_items[0]);
  return std::min(1.0, ratio) / (static_cast<double>(k) * static_cast<double>(n - k));
}

/// Gelman-Rubin potential scale reduction factor over the second halves of
/// equal-length traces. Returns 1 for zero within- and between-chain spread
/// and +inf when only the between-chain spread is nonzero.
inline double psrf(const std::vector<std::vector<double>>& chains) {
  require(chains.size() >= 2, ErrorCode::InsufficientChains, "PSRF needs at least two chains");
  const std::size_t len = chains.front().size();
  for (const auto& c : chains)
    require(c.size() == len, ErrorCode::InvalidArgument, "PSRF traces must have equal lengths");
  require(len >= 10, ErrorCode::InvalidArgument, "PSRF traces need at least 10 entries");
  const std::size_t start = len - len / 2;
  const double n = static_cast<double>(len - start);
  const double m = static_cast<double>(chains.size());
  std::vector<double> means;
  double within = 0.0;
  for (const auto& c : chains) {
    double mean = 0.0;
    for (std::size_t i = start; i < len; ++i) mean += c[i];
    mean /= n;
    double var = 0.0;
    for (std::size_t i = start; i < len; ++i) var += (c[i] - mean) * (c[i] - mean);
    within += var / (n - 1.0);
    means.push_back(mean);
  }
  within /= m;
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
  double between = 0.0;
  for (double mu : means) between += (mu - grand) * (mu - grand);
  between *= n / (m - 1.0);
  const double scale = 1e-12 * std::max(1.0, std::abs(grand));
  if (within <= scale * scale) return between <= scale * scale ? 1.0 : std::numeric_limits<double>::infinity();
  const double pooled = (n - 1.0) / n * within + between / n;
  return std::sqrt(pooled / within);
}

struct McmcResult {
  IndexList sample;
  Index iterations = 0;
  bool converged = false;
  double psrf = std::numeric_limits<double>::infinity();
};

struct McmcOptions {
  Index chains = 10;
  double threshold = 1.1;
  Index cap = 100000;
  Index check_every = 100;
};

/// Runs independent exchange chains until the PSRF of their log det(L_Y)
/// traces drops to the threshold or the iteration cap is hit. The sample is
/// chain 0's final state; `converged` is false when the cap was reached.
template <KernelAccess K>
McmcResult mcmc_sample_until_converged(const K& kernel, Index k, const McmcOptions& opts, Rng& rng) {
  require(opts.chains >= 2, ErrorCode::InsufficientChains, "need at least two chains");
  require(opts.check_every >= 1 && opts.cap >= 1, ErrorCode::InvalidArgument, "cap and check interval must be positive");
  std::vector<ChainState> states;
  std::vector<Rng> streams;
  const std::uint64_t root = rng();
  for (Index c = 0; c < opts.chains; ++c) {
    streams.push_back(make_rng(root, static_cast<std::uint64_t>(c)));
    states.push_back(random_chain_state(kernel, k, streams.back()));
  }
  std::vector<std::vector<double>> traces(static_cast<std::size_t>(opts.chains));
  McmcResult out;
  while (out.iterations < opts.cap) {
    const Index batch = std::min(opts.check_every, opts.cap - out.iterations);
    for (std::size_t c = 0; c < states.size(); ++c) {
      for (Index s = 0; s < batch; ++s) {
        states[c] = mcmc_kdpp_step(kernel, std::move(states[c]), streams[c]);
        traces[c].push_back(states[c].log_det);
      }
    }
    out.iterations += batch;
    if (out.iterations >= 10) {
      out.psrf = psrf(traces);
      if (out.psrf <= opts.threshold) {
        out.converged = true;
        break;
      }
    }
  }
  out.sample = states.front().current;
  std::sort(out.sample.begin(), out.sample.end());
  return out;
}

}  // namespace coredpp
