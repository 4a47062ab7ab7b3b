#pragma once

// JSON envelopes for core models and diagnostics reports.

#include <fstream>
#include <string>

#include <json.hpp>

#include "coredpp/diagnostics.hpp"

namespace coredpp {

using json = nlohmann::json;

inline constexpr const char* kModelFormat = "coredpp-model";
inline constexpr int kModelVersion = 1;
inline constexpr const char* kNotComputed = "NotComputed";
inline constexpr const char* kNotApplicable = "NotApplicable";

/// Partition, cores, part sizes, rescaled core kernel and k. The spectrum is
/// recomputed on load.
inline json model_to_json(const CoreModel& model) {
  json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["k"] = model.k();
  j["n"] = model.partition.items();
  j["parts"] = model.parts();
  j["assignment"] = model.partition.assignment();
  j["cores"] = model.coreset.cores;
  json sizes = json::array();
  for (Index c = 0; c < model.parts(); ++c) sizes.push_back(model.partition.part_size(c));
  j["part_sizes"] = sizes;
  json rows = json::array();
  for (Index a = 0; a < model.parts(); ++a) {
    json row = json::array();
    for (Index b = 0; b < model.parts(); ++b) row.push_back(model.core_kernel()(a, b));
    rows.push_back(std::move(row));
  }
  j["core_kernel"] = std::move(rows);
  return j;
}

inline CoreModel model_from_json(const json& j) {
  try {
    require(j.at("format").get<std::string>() == kModelFormat, ErrorCode::ParseError, "not a core model file");
    require(j.at("version").get<int>() == kModelVersion, ErrorCode::ParseError, "unsupported model version");
    const Index parts = j.at("parts").get<Index>();
    Partition partition(j.at("assignment").get<IndexList>(), parts);
    require(partition.items() == j.at("n").get<Index>(), ErrorCode::ParseError, "assignment length differs from n");
    const IndexList sizes = j.at("part_sizes").get<IndexList>();
    for (Index c = 0; c < parts; ++c)
      require(sizes.at(static_cast<std::size_t>(c)) == partition.part_size(c), ErrorCode::ParseError,
              "part_sizes disagree with assignment");
    Coreset coreset{j.at("cores").get<IndexList>()};
    const auto& rows = j.at("core_kernel");
    require(static_cast<Index>(rows.size()) == parts, ErrorCode::ParseError, "core kernel has wrong size");
    Matrix core(parts, parts);
    for (Index a = 0; a < parts; ++a) {
      require(static_cast<Index>(rows.at(a).size()) == parts, ErrorCode::ParseError, "core kernel is not square");
      for (Index b = 0; b < parts; ++b) core(a, b) = rows.at(a).at(b).get<double>();
    }
    return make_core_model(std::move(partition), std::move(coreset), KernelMatrix(std::move(core)),
                           j.at("k").get<Index>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed model file: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument) throw Error(ErrorCode::ParseError, e.what());
    throw;
  }
}

inline void save_model(const std::string& path, const CoreModel& model) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot write " + path);
  out << model_to_json(model).dump(2) << '\n';
}

inline CoreModel load_model(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("model file is not JSON: ") + e.what());
  }
  return model_from_json(j);
}

namespace detail {

template <typename T>
json or_marker(const std::optional<T>& value, const char* marker) {
  return value ? json(*value) : json(marker);
}

}  // namespace detail

inline json report_to_json(const DiagnosticsReport& rep) {
  json j;
  j["tv_exact"] = detail::or_marker(rep.tv_exact, kNotComputed);
  if (rep.tv_estimate) {
    j["tv_estimate"] = rep.tv_estimate->value;
    j["tv_estimate_se"] = rep.tv_estimate->std_error;
  } else {
    j["tv_estimate"] = kNotComputed;
    j["tv_estimate_se"] = kNotComputed;
  }
  j["p_ns"] = detail::or_marker(rep.p_ns, kNotComputed);
  j["epsilon"] = detail::or_marker(rep.epsilon, kNotComputed);
  if (!rep.per_part) {
    j["epsilon_bound"] = kNotComputed;
  } else {
    j["epsilon_bound"] = detail::or_marker(rep.epsilon_bound, kNotApplicable);
  }
  j["z"] = rep.z;
  j["z_core"] = rep.z_core;
  j["tv_bound"] = detail::or_marker(rep.tv_bound, kNotComputed);
  if (rep.per_part) {
    json parts = json::array();
    for (const auto& p : *rep.per_part) parts.push_back({{"rho", p.diameter}, {"d", p.complement_distance}});
    j["per_part"] = std::move(parts);
  } else {
    j["per_part"] = kNotComputed;
  }
  return j;
}

}  // namespace coredpp
