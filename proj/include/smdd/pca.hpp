#pragma once

#include <Eigen/Dense>

#include <vector>

#include "smdd/error.hpp"

namespace smdd {

/// n x L matrix of inner outputs; column l holds output l over the n runs.
using InnerResponseMatrix = Eigen::MatrixXd;

struct Standardized {
  Eigen::MatrixXd values;     // n x L, each column mean 0 and sample variance 1
  Eigen::RowVectorXd means;   // L
  Eigen::RowVectorXd sds;     // L, sample standard deviations
};

inline constexpr double kConstantColumnTolerance = 1e-12;

/// Column-wise standardization across runs. Throws DegenerateOutputDimension
/// naming the first column whose sample sd is below kConstantColumnTolerance.
Standardized standardize(const Eigen::Ref<const Eigen::MatrixXd>& y);

/// Indices of columns standardize() would reject.
std::vector<Eigen::Index> constant_columns(const Eigen::Ref<const Eigen::MatrixXd>& y);

/// Copy of y without the given columns (indices ascending).
Eigen::MatrixXd drop_columns(const Eigen::Ref<const Eigen::MatrixXd>& y, const std::vector<Eigen::Index>& columns);

struct PcaModel {
  Eigen::RowVectorXd col_means;
  Eigen::RowVectorXd col_sds;
  Eigen::MatrixXd loadings;          // L x L, orthonormal columns
  Eigen::VectorXd singular_values;   // min(n, L), descending
  Eigen::VectorXd variance_fractions;
  Eigen::VectorXd cumulative_fractions;
  Eigen::Index runs = 0;
  Eigen::Index selected = 0;         // L_pc

  Eigen::Index outputs() const { return loadings.rows(); }
  Eigen::Index max_components() const;
};

/// SVD of an already standardized n x L matrix. Loading signs are fixed so
/// that each column's largest-magnitude entry is positive. `selected` is set
/// with the given cumulative-variation threshold.
PcaModel fit_pca(const Eigen::Ref<const Eigen::MatrixXd>& ystar, double threshold = 0.90);

/// Same, carrying the standardization constants along.
PcaModel fit_pca(const Standardized& standardized, double threshold = 0.90);

/// Smallest count whose cumulative variance fraction exceeds the threshold,
/// capped at min(L, n - 1).
Eigen::Index select_num_pcs(const PcaModel& model, double threshold = 0.90);

/// Scores Ystar * Gamma[:, :count] (n x count).
Eigen::MatrixXd scores(const PcaModel& model, const Eigen::Ref<const Eigen::MatrixXd>& ystar, Eigen::Index count);

/// Standardize raw responses with the model's constants, then project.
Eigen::MatrixXd project(const PcaModel& model, const Eigen::Ref<const Eigen::MatrixXd>& y, Eigen::Index count);

}  // namespace smdd
