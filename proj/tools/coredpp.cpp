#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "coredpp.hpp"
#include "coredpp/config.hpp"
#include "coredpp/experiment.hpp"
#include "coredpp/io.hpp"

using namespace coredpp;
using nlohmann::json;

namespace {

enum Exit { Ok = 0, Usage = 1, Data = 2, Numeric = 3 };

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::KOutOfRange:
    case ErrorCode::TooManyParts:
    case ErrorCode::InsufficientChains:
      return Usage;
    case ErrorCode::NotPSD:
    case ErrorCode::InvalidBandwidth:
    case ErrorCode::IndexOutOfRange:
    case ErrorCode::DuplicateIndex:
    case ErrorCode::WrongCardinality:
    case ErrorCode::EnumerationTooLarge:
    case ErrorCode::IoError:
    case ErrorCode::ParseError:
      return Data;
    case ErrorCode::SingularPivot:
    case ErrorCode::NegativeRadicand:
    case ErrorCode::DegenerateModel:
    case ErrorCode::DegenerateConditional:
    case ErrorCode::NotConverged:
      return Numeric;
  }
  return Numeric;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const std::string& flag) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream field(item);
    T v{};
    field >> v;
    require(!field.fail() && field.eof(), ErrorCode::InvalidArgument, flag + ": bad list entry '" + item + "'");
    out.push_back(v);
  }
  require(!out.empty(), ErrorCode::InvalidArgument, flag + " must not be empty");
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot write " + path);
  out << std::setprecision(17);
  return out;
}

void emit_json(const json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  open_out(path) << j.dump(2) << '\n';
}

void check_sizes(const RunConfig& c, Index n) {
  require(c.parts <= n, ErrorCode::TooManyParts,
          "M = " + std::to_string(c.parts) + " exceeds N = " + std::to_string(n));
  require(c.k >= 1 && c.k <= c.parts, ErrorCode::KOutOfRange,
          "k = " + std::to_string(c.k) + " must lie in [1, M = " + std::to_string(c.parts) + "]");
}

Method build_method(const RunConfig& c) {
  if (c.sampler == "kpp") return Method::Kpp;
  require(c.sampler == "coredpp", ErrorCode::InvalidArgument, "build supports --sampler coredpp or kpp");
  if (c.exact_objective) return Method::CoreDppExact;
  return c.init == "random" ? Method::CoreDppRandom : Method::CoreDpp;
}

int cmd_build(const RunConfig& c) {
  require(!c.out.empty(), ErrorCode::InvalidArgument, "build needs --out");
  PointSet points = resolve_points(c);
  check_sizes(c, points.size());
  const PointKernel kernel = resolve_kernel(c, points);
  Rng rng = make_rng(c.seed, 1);
  const auto start = std::chrono::steady_clock::now();
  const CoreModel model = build_model(build_method(c), kernel, points, {c.k, c.parts, c.nu, c.passes}, rng);
  const double overhead = seconds_since(start);
  save_model(c.out, model);
  json summary{{"model", c.out}, {"overhead_seconds", overhead}, {"n", points.size()}, {"M", model.parts()},
               {"k", model.k()}, {"z_core", model.z_core()}, {"config", config_to_json(c)}};
  std::cout << summary.dump() << '\n';
  return Ok;
}

CoreModel load_checked_model(const RunConfig& c, std::optional<Index> n) {
  require(c.model_path.has_value(), ErrorCode::InvalidArgument, "--model is required");
  CoreModel model = load_model(*c.model_path);
  if (n)
    require(model.partition.items() == *n, ErrorCode::InvalidArgument,
            "model covers " + std::to_string(model.partition.items()) + " items but the data has " +
                std::to_string(*n));
  return model;
}

int cmd_sample(const RunConfig& c, Index mcmc_cap) {
  require(!c.out.empty(), ErrorCode::InvalidArgument, "sample needs --out");
  require(c.samples >= 0, ErrorCode::InvalidArgument, "--samples must be nonnegative");
  std::vector<IndexList> draws;
  std::vector<double> times;
  double setup = 0.0;
  Index k = c.k;
  Rng rng = make_rng(c.seed, 2);
  auto timed = [&](auto&& draw) {
    for (Index i = 0; i < c.samples; ++i) {
      const auto start = std::chrono::steady_clock::now();
      IndexList y = draw();
      times.push_back(seconds_since(start));
      std::sort(y.begin(), y.end());
      draws.push_back(std::move(y));
    }
  };
  const bool has_data = c.data_path || c.synthetic;
  if (c.sampler == "coredpp" || c.sampler == "kpp") {
    std::optional<Index> n;
    if (has_data) n = resolve_points(c).size();
    const auto start = std::chrono::steady_clock::now();
    const CoreModel model = load_checked_model(c, n);
    setup = seconds_since(start);
    k = model.k();
    timed([&] { return coredpp_sample(model, rng).items; });
  } else if (c.sampler == "exact" || c.sampler == "mcmc") {
    PointSet points = resolve_points(c);
    require(c.k >= 1 && c.k <= points.size(), ErrorCode::KOutOfRange, "k must lie in [1, N]");
    const PointKernel kernel = resolve_kernel(c, points);
    if (c.sampler == "exact") {
      const auto start = std::chrono::steady_clock::now();
      const KDppModel model = build_kdpp(kernel.dense(), c.k);
      setup = seconds_since(start);
      timed([&] { return kdpp_sample(model, rng); });
    } else {
      timed([&] {
        const McmcResult res = mcmc_sample_until_converged(kernel, c.k, {10, 1.1, mcmc_cap, 100}, rng);
        return res.sample;
      });
    }
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown sampler '" + c.sampler + "'");
  }
  {
    std::ofstream out = open_out(c.out);
    for (const auto& y : draws) {
      for (std::size_t i = 0; i < y.size(); ++i) out << (i ? "," : "") << y[i];
      out << '\n';
    }
  }
  double total = 0.0;
  for (double t : times) total += t;
  json sidecar{{"samples_file", c.out},
               {"sampler", c.sampler},
               {"n_samples", c.samples},
               {"k", k},
               {"setup_seconds", setup},
               {"total_seconds", total},
               {"amortized_seconds", c.samples ? (setup + total) / static_cast<double>(c.samples) : 0.0},
               {"per_sample_seconds", times},
               {"config", config_to_json(c)}};
  emit_json(sidecar, c.out + ".json");
  return Ok;
}

int cmd_eval(const RunConfig& c) {
  PointSet points = resolve_points(c);
  const CoreModel model = load_checked_model(c, points.size());
  const KernelMatrix kernel = resolve_kernel(c, std::move(points)).dense();
  Rng rng = make_rng(c.seed, 3);
  const DiagnosticsReport rep = diagnose(kernel, model, {c.budget, c.probes}, rng);
  json j = report_to_json(rep);
  j["n"] = kernel.size();
  j["M"] = model.parts();
  j["k"] = model.k();
  emit_json(j, c.out);
  return Ok;
}

struct SweepFlags {
  std::string nclust = "5,10";
  std::string norms = "5,6,7,8,9";
  std::string parts = "10";
  std::string ks = "4";
  Index seeds = 10;
  std::string methods = "coredpp,kpp";
  Index n = 60;
  Index dim = 30;
};

int cmd_sweep(const RunConfig& c, const SweepFlags& f) {
  require(!c.out.empty(), ErrorCode::InvalidArgument, "sweep needs --out");
  require(f.seeds >= 1, ErrorCode::InvalidArgument, "--seeds must be at least 1");
  std::vector<std::uint64_t> seeds;
  for (Index i = 0; i < f.seeds; ++i) seeds.push_back(c.seed + static_cast<std::uint64_t>(i));
  std::vector<Method> methods;
  for (const auto& m : parse_list<std::string>(f.methods, "--methods")) methods.push_back(parse_method(m));
  SweepSettings s{f.n, f.dim, c.nu, c.passes, c.budget, c.probes};
  const bool data_mode = c.data_path.has_value();
  std::vector<SweepCell> cells;
  const auto part_grid = parse_list<Index>(f.parts, "--grid-M");
  const auto k_grid = parse_list<Index>(f.ks, "--grid-k");
  if (data_mode) {
    for (Index m : part_grid)
      for (Index k : k_grid) cells.push_back({0, 0.0, m, k});
  } else {
    for (Index nc : parse_list<Index>(f.nclust, "--grid-nclust"))
      for (double norm : parse_list<double>(f.norms, "--grid-norm"))
        for (Index m : part_grid)
          for (Index k : k_grid) cells.push_back({nc, norm, m, k});
  }
  std::vector<SweepRow> rows;
  if (data_mode) {
    const PointSet points = resolve_points(c);
    for (const auto& cell : cells) check_sizes({.k = cell.k, .parts = cell.parts}, points.size());
    const KernelMatrix kernel = resolve_kernel(c, points).dense();
    const std::size_t per_cell = seeds.size() * methods.size();
    rows.resize(cells.size() * per_cell);
    parallel_for(rows.size(), worker_count(), [&](std::size_t i) {
      const std::size_t cell = i / per_cell, r = i % per_cell;
      rows[i] = evaluate_sweep_row(kernel, points, cell, cells[cell], seeds[r / methods.size()],
                                   methods[r % methods.size()], s);
    });
  } else {
    for (const auto& cell : cells) check_sizes({.k = cell.k, .parts = cell.parts}, f.n);
    rows = run_sweep(cells, seeds, methods, s);
  }
  std::ofstream out = open_out(c.out);
  out << "cell,n_clusters,mean_norm,M,k,seed,method,tv,tv_se,tv_is_exact,build_seconds\n";
  for (const auto& r : rows) {
    out << r.cell << ',';
    if (data_mode)
      out << ",,";
    else
      out << r.params.n_clusters << ',' << r.params.mean_norm << ',';
    out << r.params.parts << ',' << r.params.k << ',' << r.seed << ',' << to_string(r.method) << ',' << r.tv << ','
        << r.tv_se << ',' << (r.tv_is_exact ? 1 : 0) << ',' << r.build_seconds << '\n';
  }
  return Ok;
}

struct BenchFlags {
  std::string coredpp_n = "2000,20000";
  std::string exact_n = "200,2000";
  std::string overhead_n = "4000,8000";
  std::string mcmc_n = "200,2000";
  int warmup = 5;
  int reps = 20;
  int overhead_reps = 3;
  Index mcmc_cap = 20000;
};

int cmd_bench(const RunConfig& c, const BenchFlags& f) {
  require(!c.out.empty(), ErrorCode::InvalidArgument, "bench needs --out");
  BenchPlan plan{parse_list<Index>(f.coredpp_n, "--n-coredpp"), parse_list<Index>(f.exact_n, "--n-exact"),
                 parse_list<Index>(f.overhead_n, "--n-overhead"), parse_list<Index>(f.mcmc_n, "--n-mcmc")};
  BenchSettings s;
  s.parts = c.parts;
  s.k = c.k;
  s.nu = c.nu;
  s.seed = c.seed;
  s.warmup = f.warmup;
  s.reps = f.reps;
  s.overhead_reps = f.overhead_reps;
  s.mcmc_cap = f.mcmc_cap;
  require(s.warmup >= 0 && s.reps >= 1 && s.overhead_reps >= 1, ErrorCode::InvalidArgument,
          "repetition counts must be positive");
  for (const auto* grid : {&plan.coredpp_n, &plan.overhead_n})
    for (Index n : *grid) check_sizes(c, n);
  const std::vector<BenchRow> rows = run_bench(plan, s);
  std::ofstream out = open_out(c.out);
  out << "n,method,metric,value\n";
  for (const auto& r : rows) out << r.n << ',' << r.method << ',' << r.metric << ',' << r.value << '\n';
  return Ok;
}

void add_data_flags(CLI::App* sub, RunConfig& c, std::string& synthetic, std::string& kernel) {
  sub->add_option_function<std::string>("--data", [&c](const std::string& v) { c.data_path = v; },
                                        "CSV file of points, one row per item");
  sub->add_flag("--header", c.data_header, "CSV has a header row");
  sub->add_option("--synthetic", synthetic, "Synthetic data nClust:perCluster:dim:meanNorm");
  sub->add_option("--kernel", kernel, "linear | rbf | rbf:<bandwidth>")->capture_default_str();
}

void add_model_flags(CLI::App* sub, RunConfig& c) {
  sub->add_option("--k", c.k, "Sample size k")->capture_default_str();
  sub->add_option("--M", c.parts, "Number of parts M")->capture_default_str();
  sub->add_option("--nu", c.nu, "Nearest cores scored per item")->capture_default_str();
  sub->add_option("--passes", c.passes, "Maximum local search passes")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coreset-based approximate k-DPP sampling"};
  app.require_subcommand(1);
  RunConfig c;
  std::string synthetic;
  std::string kernel = "linear";
  SweepFlags sweep;
  BenchFlags bench;
  Index mcmc_cap = 100000;

  auto* build = app.add_subcommand("build", "Construct a partition and coreset and save the model");
  auto* sample = app.add_subcommand("sample", "Draw samples to CSV with a JSON timing sidecar");
  auto* eval = app.add_subcommand("eval", "Diagnostics report of a model against the exact k-DPP");
  auto* sweep_cmd = app.add_subcommand("sweep", "TV sweep over a parameter grid to long-format CSV");
  auto* bench_cmd = app.add_subcommand("bench", "Overhead and per-sample timing versus N");

  for (auto* sub : {build, sample, eval, sweep_cmd, bench_cmd}) {
    sub->add_option("--seed", c.seed, "Root random seed")->capture_default_str();
    sub->add_option("--out", c.out, "Output path");
  }
  for (auto* sub : {build, sample, eval, sweep_cmd}) add_data_flags(sub, c, synthetic, kernel);
  for (auto* sub : {build, sweep_cmd, bench_cmd}) add_model_flags(sub, c);
  sample->add_option("--k", c.k, "Sample size for exact and mcmc samplers")->capture_default_str();

  build->add_option("--init", c.init, "kmeanspp | random")
      ->check(CLI::IsMember({"kmeanspp", "random"}))
      ->capture_default_str();
  build->add_option("--sampler", c.sampler, "coredpp | kpp")->capture_default_str();
  build->add_flag("--exact-objective", c.exact_objective, "Score against the full kernel (desk scale only)");

  sample->add_option("--sampler", c.sampler, "coredpp | exact | mcmc | kpp")
      ->check(CLI::IsMember({"coredpp", "exact", "mcmc", "kpp"}))
      ->capture_default_str();
  sample->add_option("--samples", c.samples, "Number of samples")->capture_default_str();
  sample->add_option("--mcmc-cap", mcmc_cap, "Iteration cap per MCMC sample")->capture_default_str();
  sample->add_option_function<std::string>("--model", [&c](const std::string& v) { c.model_path = v; },
                                           "Model JSON from build");

  eval->add_option_function<std::string>("--model", [&c](const std::string& v) { c.model_path = v; },
                                         "Model JSON from build");
  for (auto* sub : {eval, sweep_cmd}) {
    sub->add_option("--budget", c.budget, "Enumeration budget")->capture_default_str();
    sub->add_option("--probes", c.probes, "Uniform probes for the TV estimate")->capture_default_str();
  }

  sweep_cmd->add_option("--grid-nclust", sweep.nclust, "Comma-separated nClust values")->capture_default_str();
  sweep_cmd->add_option("--grid-norm", sweep.norms, "Comma-separated mean_norm values")->capture_default_str();
  sweep_cmd->add_option("--grid-M", sweep.parts, "Comma-separated M values")->capture_default_str();
  sweep_cmd->add_option("--grid-k", sweep.ks, "Comma-separated k values")->capture_default_str();
  sweep_cmd->add_option("--seeds", sweep.seeds, "Seeds per cell, counting up from --seed")->capture_default_str();
  sweep_cmd->add_option("--methods", sweep.methods, "coredpp, coredpp-r, coredpp-z, kpp")->capture_default_str();
  sweep_cmd->add_option("--n", sweep.n, "Synthetic N")->capture_default_str();
  sweep_cmd->add_option("--dim", sweep.dim, "Synthetic dimension")->capture_default_str();

  bench_cmd->add_option("--n-coredpp", bench.coredpp_n, "N grid for CoreDpp sampling")->capture_default_str();
  bench_cmd->add_option("--n-exact", bench.exact_n, "N grid for the exact sampler")->capture_default_str();
  bench_cmd->add_option("--n-overhead", bench.overhead_n, "N grid for construction overhead")
      ->capture_default_str();
  bench_cmd->add_option("--n-mcmc", bench.mcmc_n, "N grid for MCMC")->capture_default_str();
  bench_cmd->add_option("--warmup", bench.warmup, "Warmup repetitions")->capture_default_str();
  bench_cmd->add_option("--reps", bench.reps, "Measured repetitions")->capture_default_str();
  bench_cmd->add_option("--overhead-reps", bench.overhead_reps, "Construction repetitions")->capture_default_str();
  bench_cmd->add_option("--mcmc-cap", bench.mcmc_cap, "MCMC iteration cap")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? Ok : Usage;
  }

  try {
    c.kernel = parse_kernel(kernel);
    if (!synthetic.empty()) c.synthetic = parse_synthetic(synthetic);
    if (*build) {
      c.command = "build";
      return cmd_build(c);
    }
    if (*sample) {
      c.command = "sample";
      return cmd_sample(c, mcmc_cap);
    }
    if (*eval) {
      c.command = "eval";
      return cmd_eval(c);
    }
    if (*sweep_cmd) {
      c.command = "sweep";
      return cmd_sweep(c, sweep);
    }
    c.command = "bench";
    return cmd_bench(c, bench);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return Numeric;
  }
}
