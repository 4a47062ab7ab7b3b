#pragma once

// Experiment drivers shared by the command-line tool and the acceptance
// suite: sweep cells over synthetic data and scaling benchmarks.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "coredpp/baselines.hpp"
#include "coredpp/datagen.hpp"
#include "coredpp/diagnostics.hpp"

namespace coredpp {

enum class Method { CoreDpp, CoreDppRandom, CoreDppExact, Kpp };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::CoreDpp: return "coredpp";
    case Method::CoreDppRandom: return "coredpp-r";
    case Method::CoreDppExact: return "coredpp-z";
    case Method::Kpp: return "kpp";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "coredpp") return Method::CoreDpp;
  if (s == "coredpp-r") return Method::CoreDppRandom;
  if (s == "coredpp-z") return Method::CoreDppExact;
  if (s == "kpp") return Method::Kpp;
  throw Error(ErrorCode::InvalidArgument, "unknown method '" + s + "'");
}

inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

inline double median(std::vector<double> v) {
  require(!v.empty(), ErrorCode::InvalidArgument, "median of empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

/// Median wall time of fn() over `reps` measured runs after `warmup` runs.
inline double median_seconds(const std::function<void()>& fn, int warmup, int reps) {
  for (int i = 0; i < warmup; ++i) fn();
  std::vector<double> t;
  for (int i = 0; i < reps; ++i) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    t.push_back(seconds_since(start));
  }
  return median(std::move(t));
}

/// Worker count from COREDPP_THREADS (default: hardware concurrency).
inline unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("COREDPP_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) n = static_cast<unsigned>(v);
  }
  return n;
}

/// Runs job(i) for i in [0, count) on a worker pool; results are indexed by
/// i so ordering never depends on scheduling.
template <typename Job>
void parallel_for(std::size_t count, unsigned workers, Job&& job) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < count; i = next++) job(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// --- model building -------------------------------------------------------------

struct BuildSettings {
  Index k = 4;
  Index parts = 10;
  Index nu = 3;
  Index max_passes = 1;
};

/// Builds a core model with the given method. `points` is needed by K++ only.
template <KernelAccess K>
CoreModel build_model(Method method, const K& kernel, const PointSet& points, const BuildSettings& s, Rng& rng) {
  ConstructOptions opts{s.k, s.parts, s.nu, s.max_passes, InitMethod::KMeansPP, Objective::Accelerated};
  switch (method) {
    case Method::CoreDpp: break;
    case Method::CoreDppRandom: opts.init = InitMethod::Random; break;
    case Method::CoreDppExact: opts.objective = Objective::Exact; break;
    case Method::Kpp: return kpp_baseline(points, kernel, s.parts, s.k, rng);
  }
  return construct(kernel, opts, rng);
}

// --- sweep ----------------------------------------------------------------------

struct SweepCell {
  Index n_clusters = 10;
  double mean_norm = 5.0;
  Index parts = 10;
  Index k = 4;
};

struct SweepRow {
  std::size_t cell = 0;
  SweepCell params;
  std::uint64_t seed = 0;
  Method method = Method::CoreDpp;
  double tv = 0.0;
  double tv_se = 0.0;
  bool tv_is_exact = true;
  double build_seconds = 0.0;
};

struct SweepSettings {
  Index n = 60;
  Index dim = 30;
  Index nu = 3;
  Index max_passes = 1;
  double budget = kDefaultBudget;
  Index n_probes = 10000;
};

/// Builds one model on fixed data and measures its TV distance to the k-DPP:
/// exact when binomial(N, k) fits the budget, estimated otherwise.
inline SweepRow evaluate_sweep_row(const KernelMatrix& kernel, const PointSet& points, std::size_t cell_index,
                                   const SweepCell& cell, std::uint64_t seed, Method method, const SweepSettings& s) {
  Rng rng = make_rng(seed, 1 + static_cast<std::uint64_t>(method));
  SweepRow row{cell_index, cell, seed, method};
  const auto start = std::chrono::steady_clock::now();
  const CoreModel model = build_model(method, kernel, points, {cell.k, cell.parts, s.nu, s.max_passes}, rng);
  row.build_seconds = seconds_since(start);
  if (binomial(kernel.size(), cell.k) <= s.budget) {
    row.tv = tv_exact(kernel, model, s.budget);
  } else {
    Rng probe = make_rng(seed, 100);
    const Estimate est = tv_empirical(kernel, model, s.n_probes, probe);
    row.tv = est.value;
    row.tv_se = est.std_error;
    row.tv_is_exact = false;
  }
  return row;
}

/// One (cell, seed, method) evaluation on synthetic data. Data depend on
/// (cell, seed) only, so all methods of a cell see the same points.
inline SweepRow run_sweep_row(std::size_t cell_index, const SweepCell& cell, std::uint64_t seed, Method method,
                              const SweepSettings& s) {
  require(cell.n_clusters >= 1 && s.n % cell.n_clusters == 0, ErrorCode::InvalidArgument,
          "N = " + std::to_string(s.n) + " is not divisible by nClust = " + std::to_string(cell.n_clusters));
  SyntheticSpec spec;
  spec.n_clusters = cell.n_clusters;
  spec.points_per_cluster = s.n / cell.n_clusters;
  spec.dim = s.dim;
  spec.mean_norm = cell.mean_norm;
  spec.seed = seed;
  const PointSet points = gen_synthetic(spec);
  return evaluate_sweep_row(linear_kernel(points), points, cell_index, cell, seed, method, s);
}

inline std::vector<SweepRow> run_sweep(const std::vector<SweepCell>& cells, const std::vector<std::uint64_t>& seeds,
                                       const std::vector<Method>& methods, const SweepSettings& s,
                                       unsigned workers = worker_count()) {
  const std::size_t per_cell = seeds.size() * methods.size();
  std::vector<SweepRow> rows(cells.size() * per_cell);
  parallel_for(rows.size(), workers, [&](std::size_t i) {
    const std::size_t c = i / per_cell;
    const std::size_t r = i % per_cell;
    rows[i] = run_sweep_row(c, cells[c], seeds[r / methods.size()], methods[r % methods.size()], s);
  });
  return rows;
}

// --- scaling bench -----------------------------------------------------------------

struct BenchSettings {
  Index parts = 40;
  Index k = 5;
  Index nu = 2;
  Index dim = 30;
  Index n_clusters = 40;
  double mean_norm = 9.0;
  std::uint64_t seed = 0;
  int warmup = 5;
  int reps = 20;
  int overhead_reps = 3;
  Index draws_per_rep = 200;
  Index mcmc_chains = 10;
  Index mcmc_cap = 20000;
  double psrf_threshold = 1.1;
};

struct BenchRow {
  Index n = 0;
  std::string method;
  std::string metric;
  double value = 0.0;
};

inline PointSet bench_points(Index n, const BenchSettings& s) {
  SyntheticSpec spec;
  spec.n_clusters = std::min(s.n_clusters, n);
  spec.points_per_cluster = (n + spec.n_clusters - 1) / spec.n_clusters;
  spec.dim = s.dim;
  spec.mean_norm = s.mean_norm;
  spec.seed = s.seed;
  const PointSet all = gen_synthetic(spec);
  return PointSet(all.coords().topRows(n));
}

inline PointKernel bench_kernel(Index n, const BenchSettings& s) {
  PointSet points = bench_points(n, s);
  const double bw = median_bandwidth(points);
  return PointKernel(std::move(points), KernelKind::Rbf, bw);
}

/// Construction overhead (median wall seconds) and the model from the last run.
inline std::pair<double, CoreModel> bench_overhead(const PointKernel& kernel, const BenchSettings& s) {
  ConstructOptions opts{s.k, s.parts, s.nu, 1, InitMethod::KMeansPP, Objective::Accelerated};
  std::vector<double> t;
  std::optional<CoreModel> model;
  for (int r = 0; r < s.overhead_reps; ++r) {
    Rng rng = make_rng(s.seed, 10 + static_cast<std::uint64_t>(r));
    const auto start = std::chrono::steady_clock::now();
    model = construct(kernel, opts, rng);
    t.push_back(seconds_since(start));
  }
  return {median(std::move(t)), std::move(*model)};
}

/// Median seconds per two-stage draw.
inline double bench_coredpp_sample(const CoreModel& model, const BenchSettings& s) {
  Rng rng = make_rng(s.seed, 20);
  Index sink = 0;
  const double batch = median_seconds(
      [&] {
        for (Index i = 0; i < s.draws_per_rep; ++i) sink += coredpp_sample(model, rng).items.front();
      },
      s.warmup, s.reps);
  if (sink < 0) std::abort();
  return batch / static_cast<double>(s.draws_per_rep);
}

/// Median seconds per exact k-DPP draw, excluding the one-off eigendecomposition.
inline double bench_exact_sample(const KDppModel& model, const BenchSettings& s) {
  Rng rng = make_rng(s.seed, 30);
  Index sink = 0;
  const Index draws = std::max<Index>(1, s.draws_per_rep / 10);
  const double batch = median_seconds(
      [&] {
        for (Index i = 0; i < draws; ++i) sink += kdpp_sample(model, rng).front();
      },
      s.warmup, s.reps);
  if (sink < 0) std::abort();
  return batch / static_cast<double>(draws);
}

struct McmcBench {
  Index iterations = 0;
  bool converged = false;
  double seconds_inclusive = 0.0;  ///< chains plus PSRF checks
  double seconds_per_sample = 0.0;  ///< one chain run for the PSRF iteration count
};

inline McmcBench bench_mcmc(const PointKernel& kernel, const BenchSettings& s) {
  McmcBench out;
  Rng rng = make_rng(s.seed, 40);
  McmcOptions opts{s.mcmc_chains, s.psrf_threshold, s.mcmc_cap, 100};
  auto start = std::chrono::steady_clock::now();
  const McmcResult res = mcmc_sample_until_converged(kernel, s.k, opts, rng);
  out.seconds_inclusive = seconds_since(start);
  out.iterations = res.iterations;
  out.converged = res.converged;
  Rng chain_rng = make_rng(s.seed, 41);
  ChainState state = random_chain_state(kernel, s.k, chain_rng);
  start = std::chrono::steady_clock::now();
  for (Index i = 0; i < res.iterations; ++i) state = mcmc_kdpp_step(kernel, std::move(state), chain_rng);
  out.seconds_per_sample = seconds_since(start);
  return out;
}

struct BenchPlan {
  std::vector<Index> coredpp_n{2000, 20000};
  std::vector<Index> exact_n{200, 2000};
  std::vector<Index> overhead_n{4000, 8000};
  std::vector<Index> mcmc_n{200, 2000};
};

/// Runs every timing of the plan. Rows are (N, method, metric, value) with
/// times in seconds.
inline std::vector<BenchRow> run_bench(const BenchPlan& plan, const BenchSettings& s) {
  std::vector<BenchRow> rows;
  for (Index n : plan.coredpp_n) {
    const PointKernel kernel = bench_kernel(n, s);
    Rng rng = make_rng(s.seed, 10);
    const CoreModel model = construct(kernel, {s.k, s.parts, s.nu, 1}, rng);
    rows.push_back({n, "coredpp", "sample_seconds", bench_coredpp_sample(model, s)});
  }
  for (Index n : plan.overhead_n)
    rows.push_back({n, "coredpp", "overhead_seconds", bench_overhead(bench_kernel(n, s), s).first});
  for (Index n : plan.exact_n) {
    const PointKernel kernel = bench_kernel(n, s);
    const auto start = std::chrono::steady_clock::now();
    const KDppModel model = build_kdpp(kernel.dense(), s.k);
    rows.push_back({n, "exact", "setup_seconds", seconds_since(start)});
    rows.push_back({n, "exact", "sample_seconds", bench_exact_sample(model, s)});
  }
  for (Index n : plan.mcmc_n) {
    const McmcBench m = bench_mcmc(bench_kernel(n, s), s);
    rows.push_back({n, "mcmc", "iterations", static_cast<double>(m.iterations)});
    rows.push_back({n, "mcmc", "converged", m.converged ? 1.0 : 0.0});
    rows.push_back({n, "mcmc", "seconds_inclusive", m.seconds_inclusive});
    rows.push_back({n, "mcmc", "seconds_exclusive", m.seconds_per_sample});
  }
  return rows;
}

/// Value of the first row matching (n, method, metric).
inline std::optional<double> bench_value(const std::vector<BenchRow>& rows, Index n, const std::string& method,
                                         const std::string& metric) {
  for (const auto& r : rows)
    if (r.n == n && r.method == method && r.metric == metric) return r.value;
  return std::nullopt;
}

}  // namespace coredpp
