#pragma once

// Run configuration of the command-line tool, serializable to JSON so every
// output can record exactly what produced it.

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "coredpp/experiment.hpp"

namespace coredpp {

struct KernelChoice {
  KernelKind kind = KernelKind::Linear;
  /// RBF bandwidth; empty means the median heuristic.
  std::optional<double> bandwidth;

  friend bool operator==(const KernelChoice&, const KernelChoice&) = default;
};

/// "linear", "rbf" or "rbf:<bandwidth>".
inline KernelChoice parse_kernel(const std::string& text) {
  if (text == "linear") return {KernelKind::Linear, std::nullopt};
  if (text == "rbf") return {KernelKind::Rbf, std::nullopt};
  if (text.rfind("rbf:", 0) == 0) {
    std::size_t used = 0;
    double bw = 0.0;
    try {
      bw = std::stod(text.substr(4), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used > 0 && used == text.size() - 4, ErrorCode::InvalidArgument, "bad kernel spec '" + text + "'");
    check_bandwidth(bw);
    return {KernelKind::Rbf, bw};
  }
  throw Error(ErrorCode::InvalidArgument, "unknown kernel '" + text + "' (expected linear, rbf or rbf:<bw>)");
}

inline std::string format_kernel(const KernelChoice& k) {
  if (k.kind == KernelKind::Linear) return "linear";
  if (!k.bandwidth) return "rbf";
  std::ostringstream os;
  os.precision(17);
  os << "rbf:" << *k.bandwidth;
  return os.str();
}

struct SyntheticSource {
  Index n_clusters = 10;
  Index per_cluster = 6;
  Index dim = 30;
  double mean_norm = 5.0;

  friend bool operator==(const SyntheticSource&, const SyntheticSource&) = default;
};

/// "nClust:perCluster:dim:meanNorm".
inline SyntheticSource parse_synthetic(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  require(parts.size() == 4, ErrorCode::InvalidArgument,
          "--synthetic expects nClust:perCluster:dim:meanNorm, got '" + text + "'");
  try {
    SyntheticSource s{std::stol(parts[0]), std::stol(parts[1]), std::stol(parts[2]), std::stod(parts[3])};
    require(s.n_clusters >= 1 && s.per_cluster >= 1 && s.dim >= 1 && s.mean_norm > 0.0, ErrorCode::InvalidArgument,
            "--synthetic fields must be positive");
    return s;
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::InvalidArgument, "--synthetic has a non-numeric field: '" + text + "'");
  }
}

struct RunConfig {
  std::string command;
  std::optional<std::string> data_path;
  bool data_header = false;
  std::optional<SyntheticSource> synthetic;
  KernelChoice kernel;
  Index k = 4;
  Index parts = 10;
  Index nu = 3;
  Index passes = 1;
  std::string init = "kmeanspp";
  std::string sampler = "coredpp";
  bool exact_objective = false;
  Index samples = 1;
  std::uint64_t seed = 0;
  std::string out;
  std::optional<std::string> model_path;
  double budget = kDefaultBudget;
  Index probes = 10000;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

inline nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["command"] = c.command;
  j["data"] = c.data_path ? nlohmann::json(*c.data_path) : nlohmann::json(nullptr);
  j["header"] = c.data_header;
  if (c.synthetic) {
    j["synthetic"] = {{"n_clusters", c.synthetic->n_clusters},
                      {"per_cluster", c.synthetic->per_cluster},
                      {"dim", c.synthetic->dim},
                      {"mean_norm", c.synthetic->mean_norm}};
  } else {
    j["synthetic"] = nullptr;
  }
  j["kernel"] = format_kernel(c.kernel);
  j["k"] = c.k;
  j["M"] = c.parts;
  j["nu"] = c.nu;
  j["passes"] = c.passes;
  j["init"] = c.init;
  j["sampler"] = c.sampler;
  j["exact_objective"] = c.exact_objective;
  j["samples"] = c.samples;
  j["seed"] = c.seed;
  j["out"] = c.out;
  j["model"] = c.model_path ? nlohmann::json(*c.model_path) : nlohmann::json(nullptr);
  j["budget"] = c.budget;
  j["probes"] = c.probes;
  return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  c.command = j.at("command").get<std::string>();
  if (!j.at("data").is_null()) c.data_path = j.at("data").get<std::string>();
  c.data_header = j.at("header").get<bool>();
  if (!j.at("synthetic").is_null()) {
    const auto& s = j.at("synthetic");
    c.synthetic = SyntheticSource{s.at("n_clusters").get<Index>(), s.at("per_cluster").get<Index>(),
                                  s.at("dim").get<Index>(), s.at("mean_norm").get<double>()};
  }
  c.kernel = parse_kernel(j.at("kernel").get<std::string>());
  c.k = j.at("k").get<Index>();
  c.parts = j.at("M").get<Index>();
  c.nu = j.at("nu").get<Index>();
  c.passes = j.at("passes").get<Index>();
  c.init = j.at("init").get<std::string>();
  c.sampler = j.at("sampler").get<std::string>();
  c.exact_objective = j.at("exact_objective").get<bool>();
  c.samples = j.at("samples").get<Index>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.out = j.at("out").get<std::string>();
  if (!j.at("model").is_null()) c.model_path = j.at("model").get<std::string>();
  c.budget = j.at("budget").get<double>();
  c.probes = j.at("probes").get<Index>();
  return c;
}

/// Loads or generates the configured point set.
inline PointSet resolve_points(const RunConfig& c) {
  require(c.data_path.has_value() != c.synthetic.has_value(), ErrorCode::InvalidArgument,
          "give exactly one of --data and --synthetic");
  if (c.data_path) return load_points(*c.data_path, c.data_header);
  SyntheticSpec spec;
  spec.n_clusters = c.synthetic->n_clusters;
  spec.points_per_cluster = c.synthetic->per_cluster;
  spec.dim = c.synthetic->dim;
  spec.mean_norm = c.synthetic->mean_norm;
  spec.seed = c.seed;
  return gen_synthetic(spec);
}

inline PointKernel resolve_kernel(const RunConfig& c, PointSet points) {
  if (c.kernel.kind == KernelKind::Linear) return PointKernel(std::move(points), KernelKind::Linear);
  const double bw = c.kernel.bandwidth ? *c.kernel.bandwidth : median_bandwidth(points);
  return PointKernel(std::move(points), KernelKind::Rbf, bw);
}

}  // namespace coredpp
