#pragma once

// Partition and coreset construction by local search, plus the rescaled core
// kernel that stage one of the two-stage sampler draws from.
//
// All routines are templated on KernelAccess: the accelerated objective only
// reads kernel rows between an item and the current cores, so construction
// scales to ground sets whose full kernel would not fit in memory.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coredpp/kdpp.hpp"
#include "coredpp/partition.hpp"
#include "coredpp/random.hpp"

namespace coredpp {

/// Immutable sampling artifact: partition, coreset and the k-DPP over the
/// rescaled core kernel.
struct CoreModel {
  Partition partition;
  Coreset coreset;
  KDppModel core_dpp;

  Index k() const { return core_dpp.k; }
  Index parts() const { return partition.parts(); }
  const KernelMatrix& core_kernel() const { return core_dpp.kernel; }
  const Spectrum& core_spectrum() const { return core_dpp.spectrum; }
  /// Z_C = e_k of the rescaled core kernel.
  double z_core() const { return core_dpp.normalizer; }
};

inline double rescale_factor(Index size_a, Index size_b) {
  return std::sqrt(static_cast<double>(size_a) * static_cast<double>(size_b));
}

/// L~[c][c'] = sqrt(|Y_c| |Y_c'|) L[core c][core c'].
template <KernelAccess K>
KernelMatrix rescaled_core_kernel(const K& kernel, const Partition& partition, const Coreset& coreset) {
  validate(partition, coreset);
  const Index m = partition.parts();
  Matrix out(m, m);
  for (Index a = 0; a < m; ++a) {
    out(a, a) = rescale_factor(partition.part_size(a), partition.part_size(a)) * kernel.diag(coreset[a]);
    for (Index b = a + 1; b < m; ++b) {
      const double v = rescale_factor(partition.part_size(a), partition.part_size(b)) * kernel(coreset[a], coreset[b]);
      out(a, b) = v;
      out(b, a) = v;
    }
  }
  return KernelMatrix(std::move(out));
}

/// Assembles a CoreModel from an already rescaled core kernel (e.g. one read
/// back from disk).
inline CoreModel make_core_model(Partition partition, Coreset coreset, KernelMatrix core_kernel, Index k) {
  validate(partition, coreset);
  require(core_kernel.size() == partition.parts(), ErrorCode::InvalidArgument, "core kernel size differs from M");
  require(k >= 1 && k <= partition.parts(), ErrorCode::KOutOfRange,
          "k = " + std::to_string(k) + " exceeds part count " + std::to_string(partition.parts()));
  CoreModel model{std::move(partition), std::move(coreset), build_kdpp(std::move(core_kernel), k)};
  return model;
}

template <KernelAccess K>
CoreModel make_core_model(const K& kernel, Partition partition, Coreset coreset, Index k) {
  KernelMatrix core = rescaled_core_kernel(kernel, partition, coreset);
  return make_core_model(std::move(partition), std::move(coreset), std::move(core), k);
}

// --- initialization ---------------------------------------------------------

/// Assigns every item to its nearest seed (ties to the lower part id); seeds
/// stay in their own part.
template <KernelAccess K>
std::pair<Partition, Coreset> assign_to_nearest(const K& kernel, const IndexList& seeds) {
  const Index n = kernel.size();
  const Index m = static_cast<Index>(seeds.size());
  IndexList assignment(static_cast<std::size_t>(n), -1);
  for (Index c = 0; c < m; ++c) assignment[static_cast<std::size_t>(seeds[c])] = c;
  for (Index y = 0; y < n; ++y) {
    if (assignment[static_cast<std::size_t>(y)] >= 0) continue;
    Index best = 0;
    double best_d = kernel_distance_sq(kernel, y, seeds[0]);
    for (Index c = 1; c < m; ++c) {
      const double d = kernel_distance_sq(kernel, y, seeds[c]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    assignment[static_cast<std::size_t>(y)] = best;
  }
  return {Partition(std::move(assignment), m), Coreset{seeds}};
}

/// kmeans++ seeding in the kernel's feature space: seeds drawn with
/// probability proportional to the squared distance to the nearest seed.
template <KernelAccess K>
std::pair<Partition, Coreset> kmeanspp_init(const K& kernel, Index parts, Rng& rng) {
  const Index n = kernel.size();
  require(parts >= 1, ErrorCode::InvalidArgument, "need at least one part");
  require(parts <= n, ErrorCode::TooManyParts,
          "M = " + std::to_string(parts) + " exceeds N = " + std::to_string(n));
  IndexList seeds;
  seeds.reserve(static_cast<std::size_t>(parts));
  std::vector<char> is_seed(static_cast<std::size_t>(n), 0);
  seeds.push_back(uniform_index(rng, n));
  is_seed[static_cast<std::size_t>(seeds.back())] = 1;
  Vector d2(n);
  for (Index y = 0; y < n; ++y) d2(y) = kernel_distance_sq(kernel, y, seeds[0]);
  while (static_cast<Index>(seeds.size()) < parts) {
    double total = 0.0;
    for (Index y = 0; y < n; ++y)
      if (!is_seed[static_cast<std::size_t>(y)]) total += d2(y);
    Index pick = -1;
    if (total > 0.0) {
      double u = uniform01(rng) * total;
      for (Index y = 0; y < n; ++y) {
        if (is_seed[static_cast<std::size_t>(y)] || d2(y) <= 0.0) continue;
        pick = y;
        u -= d2(y);
        if (u < 0.0) break;
      }
    } else {
      // every remaining item duplicates a seed
      Index r = uniform_index(rng, n - static_cast<Index>(seeds.size()));
      for (Index y = 0; y < n; ++y) {
        if (is_seed[static_cast<std::size_t>(y)]) continue;
        if (r-- == 0) {
          pick = y;
          break;
        }
      }
    }
    seeds.push_back(pick);
    is_seed[static_cast<std::size_t>(pick)] = 1;
    for (Index y = 0; y < n; ++y) d2(y) = std::min(d2(y), kernel_distance_sq(kernel, y, pick));
  }
  return assign_to_nearest(kernel, seeds);
}

/// Uniformly random distinct cores; every other item joins a uniformly
/// random part.
template <KernelAccess K>
std::pair<Partition, Coreset> random_init(const K& kernel, Index parts, Rng& rng) {
  const Index n = kernel.size();
  require(parts >= 1, ErrorCode::InvalidArgument, "need at least one part");
  require(parts <= n, ErrorCode::TooManyParts,
          "M = " + std::to_string(parts) + " exceeds N = " + std::to_string(n));
  IndexList order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  for (Index i = 0; i < parts; ++i) std::swap(order[i], order[i + uniform_index(rng, n - i)]);
  IndexList seeds(order.begin(), order.begin() + parts);
  IndexList assignment(static_cast<std::size_t>(n), -1);
  for (Index c = 0; c < parts; ++c) assignment[static_cast<std::size_t>(seeds[c])] = c;
  for (Index y = 0; y < n; ++y)
    if (assignment[static_cast<std::size_t>(y)] < 0) assignment[static_cast<std::size_t>(y)] = uniform_index(rng, parts);
  return {Partition(std::move(assignment), parts), Coreset{std::move(seeds)}};
}

// --- objectives -------------------------------------------------------------

namespace detail {

/// Core-to-core kernel block, kept in sync with the coreset during search.
template <KernelAccess K>
class CoreBlock {
 public:
  CoreBlock(const K& kernel, const Coreset& coreset) : kernel_(kernel), cores_(coreset.cores) {
    const Index m = static_cast<Index>(cores_.size());
    block_.resize(m, m);
    for (Index a = 0; a < m; ++a) set_row(a);
  }

  void replace(Index part, Index item) {
    cores_[static_cast<std::size_t>(part)] = item;
    set_row(part);
  }

  /// Kernel row between `item` and every core.
  Vector row_to(Index item) const {
    const Index m = static_cast<Index>(cores_.size());
    Vector out(m);
    for (Index a = 0; a < m; ++a) out(a) = kernel_(item, cores_[a]);
    return out;
  }

  const Matrix& block() const { return block_; }
  const IndexList& cores() const { return cores_; }

 private:
  void set_row(Index a) {
    const Index m = static_cast<Index>(cores_.size());
    for (Index b = 0; b < m; ++b) {
      const double v = a == b ? kernel_.diag(cores_[a]) : kernel_(cores_[a], cores_[b]);
      block_(a, b) = v;
      block_(b, a) = v;
    }
  }

  const K& kernel_;
  IndexList cores_;
  Matrix block_;
};

inline Vector part_weights(const Partition& partition) {
  Vector w(partition.parts());
  for (Index c = 0; c < partition.parts(); ++c) w(c) = static_cast<double>(partition.part_size(c));
  return w;
}

/// e_k(D B D) with D = diag(sqrt(weights)).
inline double rescaled_esym(const Matrix& block, const Vector& weights, Index k) {
  if (k == 0) return 1.0;
  if (k > block.rows()) return 0.0;
  const Vector s = weights.cwiseSqrt();
  const Matrix scaled = s.asDiagonal() * block * s.asDiagonal();
  return elementary_symmetric_of(scaled, k);
}

/// L_yy * e_{k-1} of the cores outside `part`, conditioned on y and rescaled
/// by part sizes with y taken out of its current part.
inline double score_from_block(const Matrix& core_block, const Vector& y_row, double y_diag, const Vector& weights,
                               Index part, Index k) {
  require(y_diag > 0.0, ErrorCode::SingularPivot, "L[y][y] is not positive");
  if (k == 1) return y_diag;
  const Index m = core_block.rows();
  if (k - 1 > m - 1) return 0.0;
  IndexList keep;
  keep.reserve(static_cast<std::size_t>(m - 1));
  for (Index a = 0; a < m; ++a)
    if (a != part) keep.push_back(a);
  const Index r = m - 1;
  Matrix cond(r, r);
  Vector w(r);
  for (Index a = 0; a < r; ++a) {
    w(a) = weights(keep[a]);
    for (Index b = 0; b < r; ++b)
      cond(a, b) = core_block(keep[a], keep[b]) - y_row(keep[a]) * y_row(keep[b]) / y_diag;
  }
  return y_diag * rescaled_esym(cond, w, k - 1);
}

inline Vector weights_without(const Partition& partition, Index y) {
  Vector w = part_weights(partition);
  w(partition.part_of(y)) -= 1.0;
  return w;
}

}  // namespace detail

/// Accelerated reassignment score of item y for part c: L_yy times the
/// (k-1)-th singular-set sum of the core-replaced kernel conditioned on y,
/// evaluated through the rescaled core kernel in O(M^3).
template <KernelAccess K>
double assignment_score(const K& kernel, const Partition& partition, const Coreset& coreset, Index y, Index part,
                        Index k) {
  validate(partition, coreset);
  require(y >= 0 && y < kernel.size(), ErrorCode::IndexOutOfRange, "item out of range");
  require(part >= 0 && part < partition.parts(), ErrorCode::InvalidArgument, "invalid part id");
  require(k >= 1 && k <= partition.parts(), ErrorCode::KOutOfRange, "need 1 <= k <= M");
  detail::CoreBlock<K> block(kernel, coreset);
  return detail::score_from_block(block.block(), block.row_to(y), kernel.diag(y),
                                  detail::weights_without(partition, y), part, k);
}

/// Exact reassignment score against the full kernel: the sum of
/// det(L_{S u {y}}) over (k-1)-singular S drawn from parts other than c, with
/// y removed from its current part. Exponential; desk scale only.
template <KernelAccess K>
double exact_assignment_score(const K& kernel, const Partition& partition, Index y, Index part, Index k) {
  std::vector<IndexList> pruned;
  pruned.reserve(static_cast<std::size_t>(partition.parts()));
  for (Index c = 0; c < partition.parts(); ++c) {
    if (c == part) continue;
    IndexList members;
    for (Index v : partition.members(c))
      if (v != y) members.push_back(v);
    pruned.push_back(std::move(members));
  }
  std::vector<const IndexList*> groups;
  for (const auto& g : pruned) groups.push_back(&g);
  double total = 0.0;
  IndexList items;
  for_each_singular_subset(groups, k - 1, [&](std::span<const Index> s) {
    items.assign(s.begin(), s.end());
    items.push_back(y);
    total += psd_det(gather(kernel, std::span<const Index>(items)));
  });
  return total;
}

/// Z_C after replacing the core of part g by j (part sizes unchanged).
template <KernelAccess K>
double core_swap_objective(const K& kernel, const Partition& partition, const Coreset& coreset, Index part,
                           Index candidate, Index k) {
  validate(partition, coreset);
  require(part >= 0 && part < partition.parts(), ErrorCode::InvalidArgument, "invalid part id");
  require(candidate >= 0 && candidate < kernel.size() && partition.part_of(candidate) == part,
          ErrorCode::InvalidArgument, "swap candidate is not a member of the part");
  detail::CoreBlock<K> block(kernel, coreset);
  block.replace(part, candidate);
  return detail::rescaled_esym(block.block(), detail::part_weights(partition), k);
}

/// The nu parts whose cores are nearest to y (ties to the lower part id). The
/// part currently holding y is appended when missing.
template <KernelAccess K>
IndexList nearest_cores(const K& kernel, const Partition& partition, const Coreset& coreset, Index y, Index nu) {
  const Index m = coreset.size();
  require(nu >= 1 && nu <= m, ErrorCode::InvalidArgument, "nu must lie in [1, M]");
  std::vector<std::pair<double, Index>> order;
  order.reserve(static_cast<std::size_t>(m));
  for (Index c = 0; c < m; ++c) order.emplace_back(kernel_distance_sq(kernel, y, coreset[c]), c);
  std::partial_sort(order.begin(), order.begin() + nu, order.end());
  IndexList out;
  out.reserve(static_cast<std::size_t>(nu + 1));
  for (Index i = 0; i < nu; ++i) out.push_back(order[static_cast<std::size_t>(i)].second);
  const Index own = partition.part_of(y);
  if (std::find(out.begin(), out.end(), own) == out.end()) out.push_back(own);
  return out;
}

// --- local search -------------------------------------------------------------

enum class InitMethod { KMeansPP, Random };
enum class Objective {
  /// Core-replaced scores and greedy Z_C growth, O(M^3) per evaluation.
  Accelerated,
  /// Scores against the full kernel and |Z - Z_C| swaps; desk scale only.
  Exact,
};

struct ConstructOptions {
  Index k = 1;
  Index parts = 1;
  Index nu = 1;
  Index max_passes = 1;
  InitMethod init = InitMethod::KMeansPP;
  Objective objective = Objective::Accelerated;
};

struct ConstructStats {
  Index passes = 0;
  Index moves = 0;
  Index swaps = 0;
  bool converged = false;
  /// (before, after) core objective of every accepted swap.
  std::vector<std::pair<double, double>> swap_log;
};

namespace detail {

template <KernelAccess K>
class LocalSearch {
 public:
  LocalSearch(const K& kernel, const ConstructOptions& opts, Partition partition, Coreset coreset)
      : kernel_(kernel), opts_(opts), partition_(std::move(partition)), coreset_(std::move(coreset)),
        block_(kernel, coreset_) {
    if (opts_.objective == Objective::Exact) {
      Matrix full(kernel.size(), kernel.size());
      for (Index i = 0; i < kernel.size(); ++i)
        for (Index j = 0; j < kernel.size(); ++j) full(i, j) = kernel(i, j);
      z_full_ = elementary_symmetric_of(full, opts_.k);
    }
  }

  void run(ConstructStats& stats) {
    for (Index pass = 0; pass < opts_.max_passes; ++pass) {
      bool changed = reassign_pass(stats);
      changed = core_sweep(stats) || changed;
      ++stats.passes;
      if (!changed) {
        stats.converged = true;
        break;
      }
    }
  }

  Partition& partition() { return partition_; }
  Coreset& coreset() { return coreset_; }

 private:
  bool is_core(Index y) const { return coreset_[partition_.part_of(y)] == y; }

  double score(Index y, Index part) const {
    if (opts_.objective == Objective::Exact) return exact_assignment_score(kernel_, partition_, y, part, opts_.k);
    return score_from_block(block_.block(), block_.row_to(y), kernel_.diag(y), weights_without(partition_, y), part,
                            opts_.k);
  }

  /// Z_C with the core of `part` set to `item`.
  double zc_with(Index part, Index item) const {
    const Vector w = part_weights(partition_);
    if (coreset_[part] == item) return rescaled_esym(block_.block(), w, opts_.k);
    Matrix b = block_.block();
    const Vector row = block_.row_to(item);
    b.row(part) = row.transpose();
    b.col(part) = row;
    b(part, part) = kernel_.diag(item);
    return rescaled_esym(b, w, opts_.k);
  }

  /// Larger is better under both objectives.
  double core_value(double zc) const {
    return opts_.objective == Objective::Exact ? -std::abs(z_full_ - zc) : zc;
  }

  void swap_core(Index part, Index item, double before, double after, ConstructStats& stats) {
    coreset_.cores[static_cast<std::size_t>(part)] = item;
    block_.replace(part, item);
    ++stats.swaps;
    stats.swap_log.emplace_back(before, after);
  }

  bool reassign_pass(ConstructStats& stats) {
    bool changed = false;
    for (Index y = 0; y < kernel_.size(); ++y) {
      if (is_core(y)) continue;
      const Index own = partition_.part_of(y);
      const IndexList candidates = nearest_cores(kernel_, partition_, coreset_, y, opts_.nu);
      Index best = -1;
      double best_score = 0.0;
      double own_score = 0.0;
      for (Index g : candidates) {
        const double s = score(y, g);
        if (g == own) own_score = s;
        if (best < 0 || s > best_score || (s == best_score && g < best)) {
          best = g;
          best_score = s;
        }
      }
      // stay unless another part scores strictly higher
      if (best == own || !(best_score > own_score)) continue;
      if (partition_.part_size(own) <= 1) continue;
      partition_.move(y, best);
      ++stats.moves;
      changed = true;
      const double keep = core_value(zc_with(best, coreset_[best]));
      const double promote = core_value(zc_with(best, y));
      if (promote > keep) swap_core(best, y, keep, promote, stats);
    }
    return changed;
  }

  bool core_sweep(ConstructStats& stats) {
    bool changed = false;
    for (Index g = 0; g < partition_.parts(); ++g) {
      const Index incumbent = coreset_[g];
      Index best = incumbent;
      const double start = core_value(zc_with(g, incumbent));
      double best_value = start;
      for (Index j : partition_.members(g)) {
        if (j == incumbent) continue;
        const double v = core_value(zc_with(g, j));
        if (v > best_value) {
          best_value = v;
          best = j;
        }
      }
      if (best != incumbent) {
        swap_core(g, best, start, best_value, stats);
        changed = true;
      }
    }
    return changed;
  }

  const K& kernel_;
  ConstructOptions opts_;
  Partition partition_;
  Coreset coreset_;
  CoreBlock<K> block_;
  double z_full_ = 0.0;
};

}  // namespace detail

/// Runs local search from an explicit starting partition and coreset.
template <KernelAccess K>
CoreModel refine(const K& kernel, const ConstructOptions& opts, Partition partition, Coreset coreset,
                 ConstructStats* stats = nullptr) {
  validate(partition, coreset);
  require(opts.k >= 1 && opts.k <= partition.parts(), ErrorCode::KOutOfRange, "need 1 <= k <= M");
  require(opts.nu >= 1, ErrorCode::InvalidArgument, "nu must be at least 1");
  require(opts.max_passes >= 0, ErrorCode::InvalidArgument, "max_passes must be nonnegative");
  ConstructOptions clamped = opts;
  clamped.nu = std::min(opts.nu, partition.parts());
  ConstructStats local;
  detail::LocalSearch<K> search(kernel, clamped, std::move(partition), std::move(coreset));
  search.run(stats ? *stats : local);
  return make_core_model(kernel, std::move(search.partition()), std::move(search.coreset()), opts.k);
}

/// Builds the partition and coreset: kmeans++ (or random) initialization,
/// then up to max_passes local search passes.
template <KernelAccess K>
CoreModel construct(const K& kernel, const ConstructOptions& opts, Rng& rng, ConstructStats* stats = nullptr) {
  const Index n = kernel.size();
  require(opts.parts >= 1, ErrorCode::InvalidArgument, "M must be at least 1");
  require(opts.parts <= n, ErrorCode::TooManyParts,
          "M = " + std::to_string(opts.parts) + " exceeds N = " + std::to_string(n));
  require(opts.k >= 1 && opts.k <= opts.parts, ErrorCode::KOutOfRange,
          "k = " + std::to_string(opts.k) + " must lie in [1, M]");
  auto [partition, coreset] = opts.init == InitMethod::KMeansPP ? kmeanspp_init(kernel, opts.parts, rng)
                                                                 : random_init(kernel, opts.parts, rng);
  return refine(kernel, opts, std::move(partition), std::move(coreset), stats);
}

}  // namespace coredpp
