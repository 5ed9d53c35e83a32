#include <gtest/gtest.h>

#include <cmath>

#include "smdd/error.hpp"
#include "smdd/pca.hpp"
#include "smdd/random.hpp"

using namespace smdd;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index n, Eigen::Index l, Rng& rng) {
  Eigen::MatrixXd m(n, l);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < l; ++j) m(i, j) = standard_normal(rng);
  return m;
}

Eigen::MatrixXd row_distances(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd d(m.rows(), m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.rows(); ++j) d(i, j) = (m.row(i) - m.row(j)).norm();
  return d;
}

PcaModel model_with_fractions(std::initializer_list<double> fractions, Eigen::Index runs = 100) {
  PcaModel m;
  const auto L = static_cast<Eigen::Index>(fractions.size());
  m.loadings = Eigen::MatrixXd::Identity(L, L);
  m.variance_fractions.resize(L);
  m.cumulative_fractions.resize(L);
  Eigen::Index i = 0;
  double c = 0.0;
  for (double f : fractions) {
    m.variance_fractions(i) = f;
    c += f;
    m.cumulative_fractions(i++) = c;
  }
  m.runs = runs;
  return m;
}

}  // namespace

TEST(Standardize, SymmetricColumn) {
  Eigen::MatrixXd y(3, 1);
  y << 1, 2, 3;
  const Standardized s = standardize(y);
  EXPECT_DOUBLE_EQ(s.means(0), 2.0);
  EXPECT_DOUBLE_EQ(s.sds(0), 1.0);
  EXPECT_DOUBLE_EQ(s.values(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(s.values(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(s.values(2, 0), 1.0);
}

TEST(Standardize, HandArithmetic) {
  Eigen::MatrixXd y(4, 1);
  y << 0, 0, 3, 5;
  const Standardized s = standardize(y);
  EXPECT_DOUBLE_EQ(s.means(0), 2.0);
  // deviations (-2, -2, 1, 3): squared sum 18 over n - 1 = 3
  EXPECT_NEAR(s.sds(0), std::sqrt(6.0), 1e-15);
  EXPECT_NEAR(s.values.sum(), 0.0, 1e-14);
  EXPECT_NEAR(s.values.squaredNorm() / 3.0, 1.0, 1e-14);
}

TEST(Standardize, ConstantColumnReportsIndex) {
  Eigen::MatrixXd y(4, 3);
  y << 1, 7, 2, 2, 7, 3, 3, 7, 5, 4, 7, 1;
  try {
    standardize(y);
    FAIL();
  } catch (const DegenerateOutputDimension& e) {
    EXPECT_EQ(e.code(), Errc::degenerate_output_dimension);
    EXPECT_EQ(e.column(), 1);
  }
  const auto constant = constant_columns(y);
  ASSERT_EQ(constant.size(), 1u);
  EXPECT_EQ(constant[0], 1);
  EXPECT_EQ(drop_columns(y, constant).cols(), 2);
}

TEST(FitPca, RankOneCarriesAllVariance) {
  Rng rng(1);
  Eigen::MatrixXd y(10, 2);
  for (Eigen::Index i = 0; i < 10; ++i) y(i, 0) = y(i, 1) = standard_normal(rng);
  const PcaModel m = fit_pca(standardize(y));
  EXPECT_NEAR(m.variance_fractions(0), 1.0, 1e-10);
  EXPECT_NEAR(m.singular_values(1), 0.0, 1e-10);
}

TEST(FitPca, OrthogonalEqualNormColumns) {
  Eigen::MatrixXd y(4, 2);
  y << 1, 1, -1, 1, 1, -1, -1, -1;
  const PcaModel m = fit_pca(y);
  EXPECT_NEAR(m.variance_fractions(0), 0.5, 1e-12);
  EXPECT_NEAR(m.variance_fractions(1), 0.5, 1e-12);
}

TEST(FitPca, FullReconstruction) {
  Rng rng(2);
  const Eigen::MatrixXd ystar = standardize(random_matrix(20, 5, rng)).values;
  const PcaModel m = fit_pca(ystar);
  const Eigen::MatrixXd recon = scores(m, ystar, 5) * m.loadings.transpose();
  EXPECT_LT((recon - ystar).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FitPca, RejectsNonFinite) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Random(5, 2);
  y(2, 1) = NAN;
  EXPECT_THROW(fit_pca(y), Error);
}

TEST(FitPca, OrthonormalSortedAndSignFixed) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd ystar = standardize(random_matrix(15, 4, rng)).values;
    const PcaModel m = fit_pca(ystar);
    EXPECT_LT((m.loadings.transpose() * m.loadings - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-10);
    for (Eigen::Index c = 0; c < 4; ++c) {
      Eigen::Index arg;
      m.loadings.col(c).cwiseAbs().maxCoeff(&arg);
      EXPECT_GT(m.loadings(arg, c), 0.0);
    }
    const Eigen::MatrixXd s = scores(m, ystar, 4);
    Eigen::VectorXd var = s.colwise().squaredNorm().transpose();
    for (Eigen::Index c = 1; c < 4; ++c) EXPECT_LE(var(c), var(c - 1) * (1 + 1e-12));
    EXPECT_NEAR(m.variance_fractions.sum(), 1.0, 1e-12);
  }
}

TEST(SelectNumPcs, ReferenceVarianceSplit) {
  EXPECT_EQ(select_num_pcs(model_with_fractions({0.848, 0.152})), 2);
}

TEST(SelectNumPcs, ThresholdCases) {
  EXPECT_EQ(select_num_pcs(model_with_fractions({0.95, 0.05})), 1);
  EXPECT_EQ(select_num_pcs(model_with_fractions({0.5, 0.3, 0.15, 0.05})), 3);
}

TEST(SelectNumPcs, CappedByRunsMinusOne) {
  EXPECT_EQ(select_num_pcs(model_with_fractions({0.3, 0.3, 0.2, 0.2}, 3)), 2);
}

TEST(Scores, FullRankDistancesMatchStandardizedRows) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::MatrixXd ystar = standardize(random_matrix(20, 5, rng)).values;
    const PcaModel m = fit_pca(ystar);
    const Eigen::MatrixXd diff = row_distances(scores(m, ystar, 5)) - row_distances(ystar);
    EXPECT_LT(diff.cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Scores, RankOneSingleComponentPreservesDistances) {
  Rng rng(5);
  Eigen::MatrixXd y(12, 3);
  for (Eigen::Index i = 0; i < 12; ++i) {
    const double t = standard_normal(rng);
    y.row(i) << t, 2.0 * t + 1.0, -t;
  }
  const Eigen::MatrixXd ystar = standardize(y).values;
  const PcaModel m = fit_pca(ystar);
  EXPECT_LT((row_distances(scores(m, ystar, 1)) - row_distances(ystar)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Scores, TruncationErrorBoundedByDiscardedVariance) {
  Rng rng(6);
  const Eigen::MatrixXd ystar = standardize(random_matrix(20, 5, rng)).values;
  const PcaModel m = fit_pca(ystar);
  // Squared distances lose exactly the discarded components' squared differences.
  const Eigen::MatrixXd full = scores(m, ystar, 5), kept = scores(m, ystar, 3);
  double lost = 0.0, total = 0.0;
  for (Eigen::Index i = 0; i < 20; ++i)
    for (Eigen::Index j = i + 1; j < 20; ++j) {
      const double d2 = (ystar.row(i) - ystar.row(j)).squaredNorm();
      const double k2 = (kept.row(i) - kept.row(j)).squaredNorm();
      EXPECT_LE(k2, d2 * (1 + 1e-12));
      EXPECT_NEAR(d2 - k2, (full.rightCols(2).row(i) - full.rightCols(2).row(j)).squaredNorm(), 1e-10);
      lost += d2 - k2;
      total += d2;
    }
  // Summed over pairs, the lost share equals the discarded variance fraction.
  EXPECT_NEAR(lost / total, 1.0 - m.cumulative_fractions(2), 1e-10);
}

TEST(Scores, CountOutOfRange) {
  Rng rng(7);
  const Eigen::MatrixXd ystar = standardize(random_matrix(10, 3, rng)).values;
  const PcaModel m = fit_pca(ystar);
  EXPECT_THROW(scores(m, ystar, 0), Error);
  EXPECT_THROW(scores(m, ystar, 4), Error);
}

TEST(FitPca, ScaleEquivariance) {
  Rng rng(8);
  Eigen::MatrixXd y = random_matrix(15, 4, rng);
  const PcaModel a = fit_pca(standardize(y));
  y.col(2) *= 37.5;
  const PcaModel b = fit_pca(standardize(y));
  EXPECT_LT((a.loadings - b.loadings).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((a.variance_fractions - b.variance_fractions).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(b.col_sds(2) / a.col_sds(2), 37.5, 1e-12);
}

TEST(Project, RawResponsesMapLikeStandardizedScores) {
  Rng rng(9);
  const Eigen::MatrixXd y = random_matrix(12, 3, rng);
  const Standardized s = standardize(y);
  const PcaModel m = fit_pca(s);
  EXPECT_LT((project(m, y, 2) - scores(m, s.values, 2)).cwiseAbs().maxCoeff(), 1e-12);
}
