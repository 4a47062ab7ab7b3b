#include <gtest/gtest.h>

#include "support/oracles.hpp"

using namespace coredpp;

namespace {

struct Instance {
  Matrix l;
  Partition pi;
  Coreset cores;
};

Instance random_instance(Index n, Index m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix l = oracle::random_psd(n, rng);
  auto [pi, cores] = oracle::random_partition(n, m, rng);
  return {std::move(l), std::move(pi), std::move(cores)};
}

/// Sum over (k-1)-subsets of parts other than `part` of the core-replaced
/// minor with y appended, weighted by part sizes excluding y.
double score_oracle(const Matrix& l, const Partition& pi, const Coreset& cores, Index y, Index part, Index k) {
  IndexList others;
  for (Index c = 0; c < pi.parts(); ++c)
    if (c != part) others.push_back(c);
  double total = 0.0;
  for (const auto& pick : oracle::subsets(static_cast<Index>(others.size()), k - 1)) {
    IndexList items;
    double weight = 1.0;
    for (Index i : pick) {
      const Index c = others[static_cast<std::size_t>(i)];
      items.push_back(cores[c]);
      weight *= static_cast<double>(pi.part_size(c) - (pi.part_of(y) == c ? 1 : 0));
    }
    items.push_back(y);
    total += weight * oracle::minor(l, items);
  }
  return total;
}

Matrix line_points(std::initializer_list<double> xs) {
  Matrix x(static_cast<Index>(xs.size()), 1);
  Index i = 0;
  for (double v : xs) x(i++, 0) = v;
  return x;
}

}  // namespace

TEST(RescaledCoreKernel, SingletonsGiveRestriction) {
  const Instance in = random_instance(5, 5, 1);
  const Partition pi = Partition::singletons(5);
  const Coreset cores{{0, 1, 2, 3, 4}};
  EXPECT_EQ(rescaled_core_kernel(KernelMatrix(in.l), pi, cores).entries(), KernelMatrix(in.l).entries());
}

TEST(RescaledCoreKernel, OnePartOfFour) {
  Matrix l = Matrix::Identity(4, 4);
  l(2, 2) = 2.0;
  const KernelMatrix tilde = rescaled_core_kernel(KernelMatrix(l), Partition({0, 0, 0, 0}, 1), Coreset{{2}});
  ASSERT_EQ(tilde.size(), 1);
  EXPECT_DOUBLE_EQ(tilde(0, 0), 8.0);
}

TEST(RescaledCoreKernel, NormalizerIsSingularSum) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Instance in = random_instance(8, 3, 100 + seed);
    const KernelMatrix tilde = rescaled_core_kernel(KernelMatrix(in.l), in.pi, in.cores);
    for (Index k = 1; k <= 3; ++k) {
      double sum = 0.0;
      for (const auto& y : oracle::subsets(8, k))
        if (is_singular(in.pi, y)) sum += oracle::minor(in.l, core_replace(in.pi, in.cores, y));
      EXPECT_NEAR(elementary_symmetric_of(tilde.entries(), k), sum, 1e-8 * sum);
    }
  }
}

TEST(CoreModel, RebuildIsBitExact) {
  const Instance in = random_instance(9, 4, 3);
  const KernelMatrix l(in.l);
  const CoreModel model = make_core_model(l, in.pi, in.cores, 2);
  for (Index a = 0; a < 4; ++a)
    for (Index b = 0; b < 4; ++b)
      EXPECT_EQ(model.core_kernel()(a, b),
                std::sqrt(double(in.pi.part_size(a)) * double(in.pi.part_size(b))) * l(in.cores[a], in.cores[b]));
  EXPECT_GT(model.z_core(), 0.0);
  EXPECT_THROW(make_core_model(l, in.pi, in.cores, 5), Error);
}

TEST(KmeansppInit, AllSingletons) {
  const Instance in = random_instance(7, 1, 5);
  Rng rng = make_rng(1);
  const auto [pi, cores] = kmeanspp_init(KernelMatrix(in.l), 7, rng);
  EXPECT_EQ(pi.parts(), 7);
  for (Index c = 0; c < 7; ++c) EXPECT_EQ(pi.members(c), IndexList{cores[c]});
  const CoreModel model = make_core_model(KernelMatrix(in.l), pi, cores, 2);
  EXPECT_NEAR(tv_exact(KernelMatrix(in.l), model), 0.0, 1e-12);
}

TEST(KmeansppInit, OnePart) {
  const Instance in = random_instance(7, 1, 6);
  Rng rng = make_rng(2);
  const auto [pi, cores] = kmeanspp_init(KernelMatrix(in.l), 1, rng);
  EXPECT_EQ(pi.members(0).size(), 7u);
  validate(pi, cores);
}

TEST(KmeansppInit, TooManyParts) {
  const Instance in = random_instance(4, 1, 7);
  Rng rng = make_rng(3);
  try {
    kmeanspp_init(KernelMatrix(in.l), 5, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooManyParts);
  }
}

TEST(KmeansppInit, RecoversTwoClusters) {
  std::mt19937_64 gen(9);
  const PointSet points(oracle::clustered_points(2, 5, 3, 0.3, 8.0, gen));
  const KernelMatrix l = linear_kernel(points);
  int recovered = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng = make_rng(seed);
    const auto [pi, cores] = kmeanspp_init(l, 2, rng);
    bool ok = true;
    for (Index y = 0; y < 10; ++y) ok = ok && (pi.part_of(y) == pi.part_of(0)) == (y < 5);
    recovered += ok;
  }
  EXPECT_GE(recovered, 95);
}

TEST(RandomInit, ValidAndSeeded) {
  const Instance in = random_instance(12, 1, 8);
  Rng a = make_rng(4), b = make_rng(4);
  const auto first = random_init(KernelMatrix(in.l), 5, a);
  const auto second = random_init(KernelMatrix(in.l), 5, b);
  validate(first.first, first.second);
  EXPECT_EQ(first.first, second.first);
  EXPECT_EQ(first.second, second.second);
}

TEST(AssignmentScore, KOneIsDiagonal) {
  const Instance in = random_instance(9, 3, 10);
  const KernelMatrix l(in.l);
  for (Index y = 0; y < 9; ++y)
    for (Index c = 0; c < 3; ++c) EXPECT_NEAR(assignment_score(l, in.pi, in.cores, y, c, 1), l(y, y), 1e-14);
}

TEST(AssignmentScore, MatchesEnumeration) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Instance in = random_instance(6, 3, 200 + seed);
    const KernelMatrix l(in.l);
    for (Index k = 1; k <= 3; ++k)
      for (Index y = 0; y < 6; ++y)
        for (Index c = 0; c < 3; ++c) {
          const double want = score_oracle(in.l, in.pi, in.cores, y, c, k);
          EXPECT_NEAR(assignment_score(l, in.pi, in.cores, y, c, k), want, 1e-8 * want + 1e-12)
              << "seed=" << seed << " y=" << y << " c=" << c << " k=" << k;
        }
  }
}

TEST(AssignmentScore, DuplicateOfCore) {
  Matrix x(6, 3);
  x << 1, 0, 0, 0.9, 0.1, 0, 0, 1, 0, 0.1, 0.8, 0.3, 0, 0, 1, 0, 1, 0;
  // item 5 duplicates item 2, the core of part 1
  const KernelMatrix l = linear_kernel(PointSet(x));
  const Partition pi({0, 0, 1, 1, 2, 0}, 3);
  const Coreset cores{{0, 2, 4}};
  for (Index c : {0, 2}) {
    const double got = assignment_score(l, pi, cores, 5, c, 2);
    EXPECT_NEAR(got, score_oracle(l.entries(), pi, cores, 5, c, 2), 1e-10);
  }
  // with part 1's core in the complement the duplicate contributes zero
  const double part0 = assignment_score(l, pi, cores, 5, 0, 2);
  const double only_part2 = 1.0 * oracle::minor(l.entries(), {4, 5});
  EXPECT_NEAR(part0, only_part2, 1e-10);
}

TEST(AssignmentScore, SingletonCoresMatchExactScore) {
  const Instance in = random_instance(7, 7, 11);
  const KernelMatrix l(in.l);
  const Partition pi = Partition::singletons(7);
  const Coreset cores{{0, 1, 2, 3, 4, 5, 6}};
  for (Index y = 0; y < 7; ++y)
    for (Index c = 0; c < 7; ++c)
      EXPECT_NEAR(assignment_score(l, pi, cores, y, c, 3), exact_assignment_score(l, pi, y, c, 3),
                  1e-8 * std::max(1e-10, exact_assignment_score(l, pi, y, c, 3)));
}

TEST(ExactAssignmentScore, MatchesEnumeration) {
  const Instance in = random_instance(8, 3, 12);
  const KernelMatrix l(in.l);
  for (Index y = 0; y < 8; ++y)
    for (Index c = 0; c < 3; ++c) {
      double want = 0.0;
      for (Index u = 0; u < 8; ++u) {
        if (u == y || in.pi.part_of(u) == c) continue;
        want += oracle::minor(in.l, {u, y});
      }
      EXPECT_NEAR(exact_assignment_score(l, in.pi, y, c, 2), want, 1e-10 * std::max(want, 1.0));
    }
}

TEST(CoreSwapObjective, IdentitySwap) {
  const Instance in = random_instance(8, 3, 13);
  const KernelMatrix l(in.l);
  const double zc = make_core_model(l, in.pi, in.cores, 2).z_core();
  for (Index g = 0; g < 3; ++g) EXPECT_NEAR(core_swap_objective(l, in.pi, in.cores, g, in.cores[g], 2), zc, 1e-12 * zc);
}

TEST(CoreSwapObjective, Singletons) {
  const Instance in = random_instance(5, 1, 14);
  const KernelMatrix l(in.l);
  const Partition pi = Partition::singletons(5);
  const Coreset cores{{0, 1, 2, 3, 4}};
  for (Index g = 0; g < 5; ++g)
    EXPECT_NEAR(core_swap_objective(l, pi, cores, g, g, 2), elementary_symmetric_of(in.l, 2), 1e-10);
}

TEST(CoreSwapObjective, MatchesEnumeration) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Instance in = random_instance(8, 3, 300 + seed);
    const KernelMatrix l(in.l);
    for (Index g = 0; g < 3; ++g)
      for (Index j : in.pi.members(g)) {
        Coreset swapped = in.cores;
        swapped.cores[static_cast<std::size_t>(g)] = j;
        double want = 0.0;
        for (const auto& parts : oracle::subsets(3, 2)) {
          IndexList items;
          double w = 1.0;
          for (Index c : parts) {
            items.push_back(swapped[c]);
            w *= static_cast<double>(in.pi.part_size(c));
          }
          want += w * oracle::minor(in.l, items);
        }
        EXPECT_NEAR(core_swap_objective(l, in.pi, in.cores, g, j, 2), want, 1e-8 * want);
      }
  }
}

TEST(CoreSwapObjective, RejectsNonMember) {
  const Instance in = random_instance(8, 3, 15);
  const Index outsider = in.pi.members(1).front();
  EXPECT_THROW(core_swap_objective(KernelMatrix(in.l), in.pi, in.cores, 0, outsider, 2), Error);
}

TEST(NearestCores, AllParts) {
  const Instance in = random_instance(8, 4, 16);
  IndexList got = nearest_cores(KernelMatrix(in.l), in.pi, in.cores, 5, 4);
  std::sort(got.begin(), got.end());
  EXPECT_EQ(got, (IndexList{0, 1, 2, 3}));
}

TEST(NearestCores, CoreComesFirst) {
  const Instance in = random_instance(8, 4, 17);
  for (Index c = 0; c < 4; ++c) EXPECT_EQ(nearest_cores(KernelMatrix(in.l), in.pi, in.cores, in.cores[c], 2).front(), c);
}

TEST(NearestCores, PointsOnALine) {
  const PointSet p(line_points({0.0, 1.0, 2.5, 4.5, 7.0, 9.5}));
  const KernelMatrix l = rbf_kernel(p, 3.0);
  const Partition pi({0, 1, 2, 3, 3, 0}, 4);
  const Coreset cores{{0, 1, 2, 4}};
  // item 3 sits at 4.5: nearest cores are at 2.5 (part 2) and 7.0 (part 3)
  EXPECT_EQ(nearest_cores(l, pi, cores, 3, 2), (IndexList{2, 3}));
  // item 5 at 9.5 belongs to part 0 whose core is far away, so part 0 is appended
  EXPECT_EQ(nearest_cores(l, pi, cores, 5, 2), (IndexList{3, 2, 0}));
}

TEST(Construct, AllSingletonsIsExact) {
  const Instance in = random_instance(8, 1, 18);
  const KernelMatrix l(in.l);
  Rng rng = make_rng(5);
  ConstructStats stats;
  const CoreModel model = construct(l, {2, 8, 3, 5}, rng, &stats);
  EXPECT_NEAR(tv_exact(l, model), 0.0, 1e-12);
  EXPECT_EQ(stats.moves, 0);
  EXPECT_EQ(stats.passes, 1);
  EXPECT_TRUE(stats.converged);
}

TEST(Construct, DeterministicAndValid) {
  std::mt19937_64 gen(19);
  const KernelMatrix l = linear_kernel(PointSet(oracle::clustered_points(5, 8, 6, 0.6, 3.0, gen)));
  for (InitMethod init : {InitMethod::KMeansPP, InitMethod::Random}) {
    const ConstructOptions opts{3, 6, 2, 3, init};
    Rng a = make_rng(7), b = make_rng(7);
    const CoreModel first = construct(l, opts, a);
    const CoreModel second = construct(l, opts, b);
    EXPECT_EQ(first.partition, second.partition);
    EXPECT_EQ(first.coreset, second.coreset);
    EXPECT_EQ(first.core_kernel().entries(), second.core_kernel().entries());
    validate(first.partition, first.coreset);
    EXPECT_EQ(first.parts(), 6);
  }
}

TEST(Construct, SwapsNeverDecreaseCoreNormalizer) {
  std::mt19937_64 gen(20);
  const KernelMatrix l = linear_kernel(PointSet(oracle::clustered_points(6, 10, 5, 0.8, 2.5, gen)));
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng = make_rng(seed);
    ConstructStats stats;
    construct(l, {3, 8, 3, 4, InitMethod::Random}, rng, &stats);
    EXPECT_EQ(static_cast<Index>(stats.swap_log.size()), stats.swaps);
    for (const auto& [before, after] : stats.swap_log) EXPECT_GE(after, before);
  }
}

TEST(Construct, ExactObjectiveRuns) {
  std::mt19937_64 gen(21);
  const KernelMatrix l = linear_kernel(PointSet(oracle::clustered_points(4, 4, 5, 0.5, 3.0, gen)));
  Rng rng = make_rng(8);
  const CoreModel model = construct(l, {2, 4, 2, 2, InitMethod::KMeansPP, Objective::Exact}, rng);
  validate(model.partition, model.coreset);
  const double tv = tv_exact(l, model);
  EXPECT_GE(tv, 0.0);
  EXPECT_LE(tv, 1.0);
}

TEST(Construct, Errors) {
  const Instance in = random_instance(6, 1, 22);
  const KernelMatrix l(in.l);
  Rng rng = make_rng(9);
  auto code = [&](ConstructOptions o) {
    try {
      construct(l, o, rng);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  EXPECT_EQ(code({2, 7, 1, 1}), ErrorCode::TooManyParts);
  EXPECT_EQ(code({4, 3, 1, 1}), ErrorCode::KOutOfRange);
}

TEST(Construct, LazyKernelMatchesDense) {
  std::mt19937_64 gen(23);
  const PointSet points(oracle::clustered_points(4, 6, 3, 0.5, 2.0, gen));
  const PointKernel lazy(points, KernelKind::Rbf, 1.5);
  const KernelMatrix dense = rbf_kernel(points, 1.5);
  Rng a = make_rng(10), b = make_rng(10);
  const CoreModel m1 = construct(lazy, {2, 5, 2, 2}, a);
  const CoreModel m2 = construct(dense, {2, 5, 2, 2}, b);
  EXPECT_EQ(m1.partition, m2.partition);
  EXPECT_EQ(m1.coreset, m2.coreset);
}
