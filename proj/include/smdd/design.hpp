#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "smdd/error.hpp"

namespace smdd {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// n x K matrix whose rows are points of the unit hypercube.
using DesignMatrix = Eigen::MatrixXd;

/// Pairs closer than this are treated as duplicated points.
inline constexpr double kDuplicateTolerance = 1e-12;

enum class LevelStyle { midpoint, random_in_cell };

struct LhdDesign {
  DesignMatrix points;
  LevelStyle style = LevelStyle::midpoint;

  Eigen::Index runs() const { return points.rows(); }
  Eigen::Index dims() const { return points.cols(); }
};

/// Candidate pool made of `slices` blocks of `slice_size` consecutive rows.
/// Every block is an LHD on a slice_size grid and the whole pool is an LHD
/// on a slices * slice_size grid.
struct SlicedCandidateSet {
  DesignMatrix points;
  Eigen::Index slices = 0;
  Eigen::Index slice_size = 0;

  auto slice(Eigen::Index s) const { return points.middleRows(s * slice_size, slice_size); }
};

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar euclidean_distance(const Eigen::MatrixBase<DerivedA>& a,
                                             const Eigen::MatrixBase<DerivedB>& b) {
  require(a.size() == b.size(), "euclidean_distance: dimension mismatch");
  typename DerivedA::Scalar sum(0);
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const auto diff = a.derived().coeff(k) - b.derived().coeff(k);
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

/// Symmetric matrix of pairwise Euclidean distances between the rows of `points`.
template <typename Derived>
Matrix<typename Derived::Scalar> pairwise_distances(const Eigen::MatrixBase<Derived>& points) {
  const Eigen::Index n = points.rows();
  Matrix<typename Derived::Scalar> d = Matrix<typename Derived::Scalar>::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      d(i, j) = d(j, i) = (points.row(i) - points.row(j)).norm();
    }
  }
  return d;
}

/// (sum_i d_i^-q)^(1/q). Evaluated relative to the smallest distance so that
/// q = 15 on short distances cannot overflow.
double phi_q(std::span<const double> distances, double q);

/// phi_q over all unordered row pairs of a design (Morris-Mitchell criterion).
double design_phi_q(const Eigen::Ref<const DesignMatrix>& points, double q);

/// Throws invalid_data if an entry leaves [0,1] and degenerate_distance if two
/// rows are closer than kDuplicateTolerance.
void validate_design(const Eigen::Ref<const DesignMatrix>& points);

LhdDesign generate_lhd(Eigen::Index n, Eigen::Index dims, LevelStyle style, std::uint64_t seed);

struct AnnealOptions {
  double q = 15.0;
  /// Number of proposed swaps; defaults to 10^4 * K when unset.
  std::optional<std::size_t> budget;
  /// Fraction of worsening moves accepted at the start temperature.
  double initial_acceptance = 0.5;
  double cooling_ratio = 0.95;
};

/// Maximin LHD by simulated annealing of phi_q over within-column swaps,
/// followed by a first-improvement pass. Never worse than the random start.
LhdDesign optimize_mmlhd(Eigen::Index n, Eigen::Index dims, const AnnealOptions& options,
                         std::uint64_t seed, LevelStyle style = LevelStyle::midpoint);

/// Improve an existing LHD in place of a random start.
LhdDesign anneal_lhd(LhdDesign start, const AnnealOptions& options, std::uint64_t seed);

/// Sliced maximin LHD: t slices of m points each.
SlicedCandidateSet generate_slhd(Eigen::Index slices, Eigen::Index slice_size, Eigen::Index dims,
                                 std::uint64_t seed, const AnnealOptions& options = {});

}  // namespace smdd
