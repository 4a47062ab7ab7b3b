#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "coredpp/errors.hpp"
#include "coredpp/kernels.hpp"

namespace coredpp {

/// Assignment of each ground-set item to one of M non-empty parts.
class Partition {
 public:
  Partition() = default;

  Partition(IndexList assignment, Index parts) : assignment_(std::move(assignment)) {
    require(parts >= 1, ErrorCode::InvalidArgument, "partition needs at least one part");
    members_.assign(static_cast<std::size_t>(parts), {});
    for (std::size_t y = 0; y < assignment_.size(); ++y) {
      const Index c = assignment_[y];
      require(c >= 0 && c < parts, ErrorCode::InvalidArgument,
              "item " + std::to_string(y) + " assigned to invalid part " + std::to_string(c));
      members_[static_cast<std::size_t>(c)].push_back(static_cast<Index>(y));
    }
    for (std::size_t c = 0; c < members_.size(); ++c)
      require(!members_[c].empty(), ErrorCode::InvalidArgument, "part " + std::to_string(c) + " is empty");
  }

  static Partition singletons(Index n) {
    IndexList assignment(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) assignment[static_cast<std::size_t>(i)] = i;
    return Partition(std::move(assignment), n);
  }

  Index items() const { return static_cast<Index>(assignment_.size()); }
  Index parts() const { return static_cast<Index>(members_.size()); }
  Index part_of(Index y) const { return assignment_[static_cast<std::size_t>(y)]; }
  const IndexList& members(Index c) const { return members_[static_cast<std::size_t>(c)]; }
  Index part_size(Index c) const { return static_cast<Index>(members(c).size()); }
  const IndexList& assignment() const { return assignment_; }

  /// Moves y into part `to`; refuses to empty its current part.
  void move(Index y, Index to) {
    const Index from = part_of(y);
    if (from == to) return;
    auto& src = members_[static_cast<std::size_t>(from)];
    require(src.size() > 1, ErrorCode::InvalidArgument, "move would empty part " + std::to_string(from));
    src.erase(std::lower_bound(src.begin(), src.end(), y));
    auto& dst = members_[static_cast<std::size_t>(to)];
    dst.insert(std::lower_bound(dst.begin(), dst.end(), y), y);
    assignment_[static_cast<std::size_t>(y)] = to;
  }

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  IndexList assignment_;
  std::vector<IndexList> members_;
};

/// One representative item per part: cores[c] is a member of part c.
struct Coreset {
  IndexList cores;

  Index size() const { return static_cast<Index>(cores.size()); }
  Index operator[](Index c) const { return cores[static_cast<std::size_t>(c)]; }
  friend bool operator==(const Coreset&, const Coreset&) = default;
};

inline void validate(const Partition& partition, const Coreset& coreset) {
  require(coreset.size() == partition.parts(), ErrorCode::InvalidArgument, "coreset size differs from part count");
  for (Index c = 0; c < coreset.size(); ++c) {
    const Index core = coreset[c];
    require(core >= 0 && core < partition.items() && partition.part_of(core) == c, ErrorCode::InvalidArgument,
            "core of part " + std::to_string(c) + " is not one of its members");
  }
}

/// C(Y): each item replaced by the core of its part; repeats are kept.
inline IndexList core_replace(const Partition& partition, const Coreset& coreset, std::span<const Index> items) {
  IndexList out;
  out.reserve(items.size());
  for (Index y : items) {
    require(y >= 0 && y < partition.items(), ErrorCode::IndexOutOfRange, "item out of range");
    out.push_back(coreset[partition.part_of(y)]);
  }
  return out;
}

/// True when no two items share a part.
inline bool is_singular(const Partition& partition, std::span<const Index> items) {
  std::vector<Index> parts;
  parts.reserve(items.size());
  for (Index y : items) parts.push_back(partition.part_of(y));
  std::sort(parts.begin(), parts.end());
  return std::adjacent_find(parts.begin(), parts.end()) == parts.end();
}

// --- enumeration ------------------------------------------------------------

inline double binomial(Index n, Index k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double out = 1.0;
  for (Index i = 1; i <= k; ++i) out = out * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(out);
}

/// Calls fn(span of k increasing indices) for every k-subset of [0, n).
template <typename Fn>
void for_each_subset(Index n, Index k, Fn&& fn) {
  if (k < 0 || k > n) return;
  IndexList idx(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    fn(std::span<const Index>(idx));
    Index i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (Index j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

namespace detail {

template <typename Fn>
void singular_recurse(const std::vector<const IndexList*>& groups, std::size_t start, Index left, IndexList& buf,
                      Fn& fn) {
  if (left == 0) {
    fn(std::span<const Index>(buf));
    return;
  }
  if (groups.size() - start < static_cast<std::size_t>(left)) return;
  for (std::size_t g = start; g + static_cast<std::size_t>(left) <= groups.size(); ++g) {
    for (Index item : *groups[g]) {
      buf.push_back(item);
      singular_recurse(groups, g + 1, left - 1, buf, fn);
      buf.pop_back();
    }
  }
}

}  // namespace detail

/// Calls fn(span) for every set holding exactly one item from each of `size`
/// distinct groups. Items arrive in group order, not sorted.
template <typename Fn>
void for_each_singular_subset(const std::vector<const IndexList*>& groups, Index size, Fn&& fn) {
  IndexList buf;
  buf.reserve(static_cast<std::size_t>(std::max<Index>(size, 0)));
  if (size < 0) return;
  detail::singular_recurse(groups, 0, size, buf, fn);
}

/// Every k-singular subset with respect to all parts of the partition.
template <typename Fn>
void for_each_singular_subset(const Partition& partition, Index size, Fn&& fn) {
  std::vector<const IndexList*> groups;
  for (Index c = 0; c < partition.parts(); ++c) groups.push_back(&partition.members(c));
  for_each_singular_subset(groups, size, std::forward<Fn>(fn));
}

/// Number of k-singular sets: e_k of the part sizes.
inline double count_singular_subsets(const Partition& partition, Index size) {
  Vector sizes(partition.parts());
  for (Index c = 0; c < partition.parts(); ++c) sizes(c) = static_cast<double>(partition.part_size(c));
  if (size > sizes.size()) return 0.0;
  return elementary_symmetric(sizes, size);
}

}  // namespace coredpp
