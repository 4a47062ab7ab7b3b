#include <gtest/gtest.h>

#include "support/oracles.hpp"

using namespace coredpp;

namespace {

struct Instance {
  Matrix l;
  CoreModel model;
};

Instance random_setup(Index n, Index m, Index k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix l = oracle::random_psd(n, rng);
  auto [pi, cores] = oracle::random_partition(n, m, rng);
  CoreModel model = make_core_model(KernelMatrix(l), std::move(pi), std::move(cores), k);
  return {std::move(l), std::move(model)};
}

}  // namespace

TEST(CoredppSample, TraceAndSupport) {
  const Instance s = random_setup(12, 4, 3, 1);
  Rng rng = make_rng(1);
  for (int i = 0; i < 2000; ++i) {
    const CoreSample draw = coredpp_sample(s.model, rng);
    ASSERT_EQ(draw.items.size(), 3u);
    ASSERT_EQ(draw.core_trace.size(), 3u);
    EXPECT_TRUE(std::is_sorted(draw.core_trace.begin(), draw.core_trace.end()));
    for (std::size_t j = 0; j < 3; ++j)
      EXPECT_EQ(s.model.partition.part_of(draw.items[j]), draw.core_trace[j]);
    EXPECT_TRUE(is_singular(s.model.partition, draw.items));
  }
}

TEST(CoredppSample, MatchesEnumeratedLaw) {
  const Instance s = random_setup(12, 4, 2, 2);
  const oracle::Law law = oracle::two_stage_law(s.l, s.model.partition, s.model.coreset, 2);
  Rng rng = make_rng(2);
  std::map<IndexList, long> counts;
  const long draws = 200000;
  for (long i = 0; i < draws; ++i) {
    IndexList y = coredpp_sample(s.model, rng).items;
    std::sort(y.begin(), y.end());
    ++counts[y];
  }
  EXPECT_LE(oracle::l1(law, counts, draws), 0.03);
  EXPECT_GT(oracle::chi_square_pvalue(law, counts, draws), 0.001);
}

TEST(CoredppSample, SingletonsReproduceKdpp) {
  std::mt19937_64 gen(3);
  const Matrix l = oracle::random_psd(5, gen);
  const CoreModel model = make_core_model(KernelMatrix(l), Partition::singletons(5), Coreset{{0, 1, 2, 3, 4}}, 2);
  const KDppModel target = build_kdpp(KernelMatrix(l), 2);
  for (const auto& y : oracle::subsets(5, 2)) {
    EXPECT_NEAR(coredpp_prob(KernelMatrix(l), model, y), kdpp_prob(target, y), 1e-12);
    EXPECT_NEAR(coredpp_prob(model, y), kdpp_prob(target, y), 1e-12);
  }
  Rng rng = make_rng(3);
  std::map<IndexList, long> counts;
  const long draws = 100000;
  for (long i = 0; i < draws; ++i) ++counts[coredpp_sample(model, rng).items];
  EXPECT_GT(oracle::chi_square_pvalue(oracle::kdpp_law(l, 2), counts, draws), 0.001);
}

TEST(CoredppProb, NonsingularIsZero) {
  const Instance s = random_setup(10, 4, 2, 4);
  const IndexList& big = s.model.partition.members(0).size() > 1 ? s.model.partition.members(0)
                                                                   : s.model.partition.members(1);
  if (big.size() > 1) {
    const IndexList pair{big[0], big[1]};
    EXPECT_EQ(coredpp_prob(KernelMatrix(s.l), s.model, pair), 0.0);
    EXPECT_EQ(coredpp_prob(s.model, pair), 0.0);
  }
}

TEST(CoredppProb, NormalizesAndRoutesAgree) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Instance s = random_setup(10, 4, 2, 100 + seed);
    const KernelMatrix l(s.l);
    const oracle::Law law = oracle::two_stage_law(s.l, s.model.partition, s.model.coreset, 2);
    double total = 0.0;
    for (const auto& y : oracle::subsets(10, 2)) {
      const double a = coredpp_prob(l, s.model, y);
      const double b = coredpp_prob(s.model, y);
      EXPECT_NEAR(a, b, 1e-10 * std::max(a, 1e-12));
      EXPECT_NEAR(a, law.at(y), 1e-8 * std::max(law.at(y), 1e-12));
      EXPECT_EQ(a > 0.0, is_singular(s.model.partition, y));
      total += a;
    }
    EXPECT_NEAR(total, 1.0, 1e-8);
  }
}

TEST(CoredppProb, Errors) {
  const Instance s = random_setup(8, 3, 2, 5);
  auto code = [&](IndexList y) {
    try {
      coredpp_prob(s.model, y);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  EXPECT_EQ(code({0, 1, 2}), ErrorCode::WrongCardinality);
  EXPECT_EQ(code({3, 3}), ErrorCode::DuplicateIndex);
  EXPECT_EQ(code({0, 8}), ErrorCode::IndexOutOfRange);
}
