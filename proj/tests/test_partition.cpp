#include <gtest/gtest.h>

#include <set>

#include "support/oracles.hpp"

using namespace coredpp;

TEST(Partition, MembersFollowAssignment) {
  const Partition p({1, 0, 1, 2, 0}, 3);
  EXPECT_EQ(p.items(), 5);
  EXPECT_EQ(p.parts(), 3);
  EXPECT_EQ(p.members(0), (IndexList{1, 4}));
  EXPECT_EQ(p.members(1), (IndexList{0, 2}));
  EXPECT_EQ(p.members(2), (IndexList{3}));
  EXPECT_EQ(p.part_of(3), 2);
}

TEST(Partition, RejectsEmptyPartAndBadIds) {
  EXPECT_THROW(Partition({0, 0, 2}, 3), Error);
  EXPECT_THROW(Partition({0, 3}, 3), Error);
}

TEST(Partition, MoveKeepsPartsNonEmpty) {
  Partition p({0, 0, 1}, 2);
  EXPECT_THROW(p.move(2, 0), Error);
  p.move(1, 1);
  EXPECT_EQ(p.members(1), (IndexList{1, 2}));
  EXPECT_EQ(p.members(0), (IndexList{0}));
}

TEST(Coreset, ValidateChecksMembership) {
  const Partition p({0, 0, 1}, 2);
  EXPECT_NO_THROW(validate(p, Coreset{{1, 2}}));
  EXPECT_THROW(validate(p, Coreset{{2, 1}}), Error);
  EXPECT_THROW(validate(p, Coreset{{0}}), Error);
}

TEST(CoreReplace, Examples) {
  const Partition p({0, 0, 1, 1, 2}, 3);
  const Coreset c{{1, 3, 4}};
  EXPECT_EQ(core_replace(p, c, c.cores), c.cores);
  EXPECT_EQ(core_replace(p, c, IndexList{0, 1}), (IndexList{1, 1}));
  const IndexList r = core_replace(p, c, IndexList{0, 2, 4});
  EXPECT_EQ(r, (IndexList{1, 3, 4}));
  EXPECT_TRUE(is_singular(p, IndexList{0, 2, 4}));
  EXPECT_FALSE(is_singular(p, IndexList{0, 1}));
}

TEST(Binomial, SmallValues) {
  EXPECT_EQ(binomial(5, 2), 10.0);
  EXPECT_EQ(binomial(60, 4), 487635.0);
  EXPECT_EQ(binomial(3, 4), 0.0);
}

TEST(Enumeration, SubsetsMatchOracle) {
  std::vector<IndexList> seen;
  for_each_subset(6, 3, [&](std::span<const Index> s) { seen.emplace_back(s.begin(), s.end()); });
  EXPECT_EQ(seen, oracle::subsets(6, 3));
}

TEST(Enumeration, SingularSubsetsMatchFilter) {
  const Partition p({0, 1, 1, 2, 2, 2, 3}, 4);
  for (Index k = 0; k <= 5; ++k) {
    std::set<IndexList> seen;
    for_each_singular_subset(p, k, [&](std::span<const Index> s) {
      IndexList y(s.begin(), s.end());
      std::sort(y.begin(), y.end());
      EXPECT_TRUE(seen.insert(y).second);
    });
    std::set<IndexList> want;
    for (const auto& y : oracle::subsets(7, k))
      if (is_singular(p, y)) want.insert(y);
    EXPECT_EQ(seen, want) << "k=" << k;
    EXPECT_EQ(count_singular_subsets(p, k), static_cast<double>(want.size()));
  }
}
