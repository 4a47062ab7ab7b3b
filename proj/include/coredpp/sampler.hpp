#pragma once

// Two-stage approximate k-DPP sampling: draw k parts from the k-DPP over the
// rescaled core kernel, then one uniform member from each drawn part.

#include <algorithm>
#include <span>

#include "coredpp/coreset.hpp"

namespace coredpp {

struct CoreSample {
  /// Ground-set items; items[i] was drawn from part core_trace[i].
  IndexList items;
  /// Part ids drawn in stage one, increasing.
  IndexList core_trace;
};

inline CoreSample coredpp_sample(const CoreModel& model, Rng& rng) {
  CoreSample out;
  out.core_trace = kdpp_sample(model.core_dpp, rng);
  out.items.reserve(out.core_trace.size());
  for (Index part : out.core_trace) {
    const IndexList& members = model.partition.members(part);
    out.items.push_back(members[static_cast<std::size_t>(uniform_index(rng, static_cast<Index>(members.size())))]);
  }
  return out;
}

namespace detail {

inline void check_query(const CoreModel& model, std::span<const Index> items) {
  require(static_cast<Index>(items.size()) == model.k(), ErrorCode::WrongCardinality,
          "subset has " + std::to_string(items.size()) + " items, model k = " + std::to_string(model.k()));
  check_subset(model.partition.items(), items);
}

}  // namespace detail

/// P_{C,k}(Y) = det(L_{C(Y)}) / e_k(L~); zero unless Y is k-singular.
template <KernelAccess K>
double coredpp_prob(const K& kernel, const CoreModel& model, std::span<const Index> items) {
  detail::check_query(model, items);
  if (!is_singular(model.partition, items)) return 0.0;
  const IndexList replaced = core_replace(model.partition, model.coreset, items);
  return psd_det(gather(kernel, std::span<const Index>(replaced))) / model.z_core();
}

/// Same law evaluated from the model alone through the rescaled core kernel:
/// det(L~_parts) / (e_k(L~) prod |Y_c|).
inline double coredpp_prob(const CoreModel& model, std::span<const Index> items) {
  detail::check_query(model, items);
  if (!is_singular(model.partition, items)) return 0.0;
  IndexList parts;
  double sizes = 1.0;
  for (Index y : items) {
    const Index c = model.partition.part_of(y);
    parts.push_back(c);
    sizes *= static_cast<double>(model.partition.part_size(c));
  }
  return psd_det(gather(model.core_kernel(), std::span<const Index>(parts))) / (model.z_core() * sizes);
}

}  // namespace coredpp
