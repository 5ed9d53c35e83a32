#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "smdd/design.hpp"
#include "smdd/error.hpp"
#include "smdd/random.hpp"

using namespace smdd;

namespace {

// Integer cell indices of every column; each column must be a permutation of 0..n-1.
bool has_lhd_projection(const DesignMatrix& d, Eigen::Index grid) {
  for (Eigen::Index k = 0; k < d.cols(); ++k) {
    std::set<long> cells;
    for (Eigen::Index i = 0; i < d.rows(); ++i) cells.insert(static_cast<long>(std::floor(d(i, k) * grid)));
    if (static_cast<Eigen::Index>(cells.size()) != grid || *cells.begin() != 0 || *cells.rbegin() != grid - 1)
      return false;
  }
  return true;
}

double brute_phi(const DesignMatrix& d, double q) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = i + 1; j < d.rows(); ++j) {
      double r2 = 0.0;
      for (Eigen::Index k = 0; k < d.cols(); ++k) r2 += (d(i, k) - d(j, k)) * (d(i, k) - d(j, k));
      s += std::pow(std::sqrt(r2), -q);
    }
  return std::pow(s, 1.0 / q);
}

double min_distance(const DesignMatrix& d) {
  double best = INFINITY;
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = i + 1; j < d.rows(); ++j) best = std::min(best, (d.row(i) - d.row(j)).norm());
  return best;
}

}  // namespace

TEST(EuclideanDistance, HandValues) {
  Eigen::RowVector2d a(0, 0), b(0.6, 0.8), c(0.1, 0.2), e(0.4, 0.6);
  EXPECT_DOUBLE_EQ(euclidean_distance(a, a), 0.0);
  EXPECT_NEAR(euclidean_distance(a, b), 1.0, 1e-15);
  EXPECT_NEAR(euclidean_distance(c, e), 0.5, 1e-15);
}

TEST(EuclideanDistance, DimensionMismatchThrows) {
  Eigen::RowVector2d a(0, 0);
  Eigen::RowVector3d b(0, 0, 0);
  EXPECT_THROW(euclidean_distance(a, b), Error);
}

TEST(EuclideanDistance, WorksForFloatScalar) {
  Eigen::RowVector2f a(0.f, 0.f), b(3.f, 4.f);
  EXPECT_FLOAT_EQ(euclidean_distance(a, b), 5.f);
}

TEST(PhiQ, HandValues) {
  const std::vector<double> one{2.0}, ones{1.0, 1.0}, mixed{1.0, 2.0};
  EXPECT_NEAR(phi_q(one, 15.0), 0.5, 1e-15);
  EXPECT_NEAR(phi_q(ones, 1.0), 2.0, 1e-15);
  EXPECT_NEAR(phi_q(mixed, 2.0), std::sqrt(1.25), 1e-15);
}

TEST(PhiQ, ZeroDistanceIsDegenerate) {
  const std::vector<double> d{1.0, 0.0};
  try {
    phi_q(d, 15.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::degenerate_distance);
  }
}

TEST(PhiQ, LargeExponentDoesNotOverflow) {
  const std::vector<double> d{1e-3, 2e-3, 0.5};
  const double direct = std::pow(std::pow(1e-3, -50.0) + std::pow(2e-3, -50.0) + std::pow(0.5, -50.0), 1.0 / 50.0);
  EXPECT_NEAR(phi_q(d, 50.0) / direct, 1.0, 1e-12);
}

TEST(GenerateLhd, RejectsBadSizes) {
  EXPECT_THROW(generate_lhd(1, 2, LevelStyle::midpoint, 0), Error);
  EXPECT_THROW(generate_lhd(4, 0, LevelStyle::midpoint, 0), Error);
}

TEST(GenerateLhd, MidpointGridForN4) {
  const DesignMatrix d = generate_lhd(4, 1, LevelStyle::midpoint, 3).points;
  std::vector<double> col(d.data(), d.data() + 4);
  std::sort(col.begin(), col.end());
  EXPECT_EQ(col, (std::vector<double>{0.125, 0.375, 0.625, 0.875}));
}

TEST(GenerateLhd, ProjectionPropertyAcrossSeedsAndStyles) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    for (LevelStyle style : {LevelStyle::midpoint, LevelStyle::random_in_cell}) {
      const DesignMatrix d = generate_lhd(10, 3, style, seed).points;
      EXPECT_TRUE(has_lhd_projection(d, 10)) << "seed " << seed;
      EXPECT_GE(d.minCoeff(), 0.0);
      EXPECT_LE(d.maxCoeff(), 1.0);
    }
  }
}

TEST(GenerateLhd, Deterministic) {
  const DesignMatrix a = generate_lhd(30, 4, LevelStyle::random_in_cell, 99).points;
  const DesignMatrix b = generate_lhd(30, 4, LevelStyle::random_in_cell, 99).points;
  EXPECT_TRUE((a.array() == b.array()).all());
  const DesignMatrix c = generate_lhd(30, 4, LevelStyle::random_in_cell, 100).points;
  EXPECT_FALSE((a.array() == c.array()).all());
}

TEST(ValidateDesign, RejectsNearDuplicates) {
  DesignMatrix d(3, 2);
  d << 0.1, 0.2, 0.5, 0.5, 0.1, 0.2 + 1e-14;
  EXPECT_THROW(validate_design(d), Error);
  d(2, 1) = 0.9;
  EXPECT_NO_THROW(validate_design(d));
}

TEST(OptimizeMmlhd, TwoPointDesignIsAlreadyOptimal) {
  const LhdDesign d = optimize_mmlhd(2, 1, AnnealOptions{}, 5);
  std::vector<double> col{d.points(0, 0), d.points(1, 0)};
  std::sort(col.begin(), col.end());
  EXPECT_EQ(col, (std::vector<double>{0.25, 0.75}));
}

TEST(OptimizeMmlhd, NeverWorseThanStart) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    AnnealOptions opt;
    opt.budget = 10000;
    // optimize_mmlhd starts from generate_lhd(derive_seed(seed, 0)).
    const DesignMatrix start = generate_lhd(20, 2, LevelStyle::midpoint, derive_seed(seed, 0)).points;
    const DesignMatrix best = optimize_mmlhd(20, 2, opt, seed).points;
    EXPECT_LE(brute_phi(best, 15.0), brute_phi(start, 15.0) * (1 + 1e-12));
    EXPECT_TRUE(has_lhd_projection(best, 20));
  }
}

TEST(OptimizeMmlhd, ZeroBudgetReturnsStart) {
  AnnealOptions opt;
  opt.budget = 0;
  const DesignMatrix start = generate_lhd(12, 3, LevelStyle::midpoint, derive_seed(4, 0)).points;
  const DesignMatrix out = optimize_mmlhd(12, 3, opt, 4).points;
  EXPECT_TRUE((start.array() == out.array()).all());
}

TEST(OptimizeMmlhd, ReportedPhiMatchesBruteForce) {
  const DesignMatrix d = optimize_mmlhd(15, 3, AnnealOptions{}, 8).points;
  EXPECT_NEAR(design_phi_q(d, 15.0) / brute_phi(d, 15.0), 1.0, 1e-12);
}

TEST(OptimizeMmlhd, MatchesExhaustiveOptimumFiveByTwo) {
  // First column fixed at the midpoint levels, second column over all 120 permutations.
  std::vector<int> perm{0, 1, 2, 3, 4};
  double best = INFINITY;
  do {
    DesignMatrix d(5, 2);
    for (int i = 0; i < 5; ++i) {
      d(i, 0) = (i + 0.5) / 5.0;
      d(i, 1) = (perm[static_cast<std::size_t>(i)] + 0.5) / 5.0;
    }
    best = std::min(best, brute_phi(d, 15.0));
  } while (std::next_permutation(perm.begin(), perm.end()));

  AnnealOptions exhaustive;
  exhaustive.budget = 200000;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DesignMatrix d = optimize_mmlhd(5, 2, exhaustive, seed).points;
    EXPECT_NEAR(brute_phi(d, 15.0), best, 1e-12) << "seed " << seed;
  }
}

TEST(OptimizeMmlhd, Deterministic) {
  const DesignMatrix a = optimize_mmlhd(20, 3, AnnealOptions{}, 17).points;
  const DesignMatrix b = optimize_mmlhd(20, 3, AnnealOptions{}, 17).points;
  EXPECT_TRUE((a.array() == b.array()).all());
}

TEST(PhiRanking, AgreesWithMaximinOnMostRandomPairs) {
  Rng rng(2024);
  int agree = 0, total = 0;
  for (int trial = 0; trial < 500; ++trial) {
    DesignMatrix a(5, 2), b(5, 2);
    for (Eigen::Index i = 0; i < 10; ++i) {
      a(i % 5, i / 5) = uniform01(rng);
      b(i % 5, i / 5) = uniform01(rng);
    }
    const double dphi = brute_phi(a, 15.0) - brute_phi(b, 15.0);
    const double dmin = min_distance(b) - min_distance(a);
    if (dphi == 0.0 || dmin == 0.0) continue;
    ++total;
    if ((dphi > 0) == (dmin > 0)) ++agree;
  }
  EXPECT_GE(static_cast<double>(agree) / total, 0.9);
}

TEST(GenerateSlhd, SingleSliceIsAnLhd) {
  const SlicedCandidateSet s = generate_slhd(1, 12, 2, 3);
  EXPECT_EQ(s.points.rows(), 12);
  EXPECT_TRUE(has_lhd_projection(s.points, 12));
}

TEST(GenerateSlhd, TwoSlicesOfThreeInOneDimension) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SlicedCandidateSet s = generate_slhd(2, 3, 1, seed);
    ASSERT_EQ(s.points.rows(), 6);
    EXPECT_TRUE(has_lhd_projection(s.points, 6));
    for (Eigen::Index t = 0; t < 2; ++t) EXPECT_TRUE(has_lhd_projection(s.slice(t), 3));
  }
}

TEST(GenerateSlhd, UnionAndSlicesKeepProjectionProperty) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SlicedCandidateSet s = generate_slhd(4, 25, 2, seed);
    ASSERT_EQ(s.points.rows(), 100);
    EXPECT_TRUE(has_lhd_projection(s.points, 100));
    for (Eigen::Index t = 0; t < 4; ++t) EXPECT_TRUE(has_lhd_projection(s.slice(t), 25));
    EXPECT_NO_THROW(validate_design(s.points));
  }
}

TEST(GenerateSlhd, AnnealingImprovesOnUnoptimizedPool) {
  AnnealOptions none;
  none.budget = 0;
  const SlicedCandidateSet raw = generate_slhd(5, 10, 2, 1, none);
  const SlicedCandidateSet opt = generate_slhd(5, 10, 2, 1);
  EXPECT_LT(design_phi_q(opt.points, 15.0), design_phi_q(raw.points, 15.0));
}

TEST(GenerateSlhd, RejectsOverflow) {
  const Eigen::Index huge = Eigen::Index{1} << 40;
  EXPECT_THROW(generate_slhd(huge, huge, 1, 0), Error);
}
