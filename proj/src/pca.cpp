#include "smdd/pca.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>

namespace smdd {

namespace {

Eigen::RowVectorXd column_sds(const Eigen::Ref<const Eigen::MatrixXd>& y, const Eigen::RowVectorXd& means) {
  const double denom = static_cast<double>(y.rows() - 1);
  return ((y.rowwise() - means).array().square().colwise().sum() / denom).sqrt().matrix();
}

}  // namespace

std::vector<Eigen::Index> constant_columns(const Eigen::Ref<const Eigen::MatrixXd>& y) {
  require(y.rows() >= 2, "constant_columns: need at least two runs");
  const Eigen::RowVectorXd means = y.colwise().mean();
  const Eigen::RowVectorXd sds = column_sds(y, means);
  std::vector<Eigen::Index> out;
  for (Eigen::Index l = 0; l < y.cols(); ++l)
    if (!(sds(l) > kConstantColumnTolerance)) out.push_back(l);
  return out;
}

Eigen::MatrixXd drop_columns(const Eigen::Ref<const Eigen::MatrixXd>& y, const std::vector<Eigen::Index>& columns) {
  Eigen::MatrixXd out(y.rows(), y.cols() - static_cast<Eigen::Index>(columns.size()));
  Eigen::Index c = 0;
  for (Eigen::Index l = 0; l < y.cols(); ++l)
    if (std::find(columns.begin(), columns.end(), l) == columns.end()) out.col(c++) = y.col(l);
  return out;
}

Standardized standardize(const Eigen::Ref<const Eigen::MatrixXd>& y) {
  require(y.rows() >= 3, "standardize: need at least three runs");
  require(y.cols() >= 1, "standardize: no output columns");
  if (!y.allFinite()) fail(Errc::invalid_data, "standardize: non-finite response");
  Standardized out;
  out.means = y.colwise().mean();
  out.sds = column_sds(y, out.means);
  for (Eigen::Index l = 0; l < y.cols(); ++l)
    if (!(out.sds(l) > kConstantColumnTolerance))
      throw DegenerateOutputDimension(static_cast<int>(l),
                                      "standardize: output column " + std::to_string(l) + " is constant");
  out.values = (y.rowwise() - out.means).array().rowwise() / out.sds.array();
  return out;
}

Eigen::Index PcaModel::max_components() const {
  return std::max<Eigen::Index>(1, std::min(outputs(), runs - 1));
}

PcaModel fit_pca(const Eigen::Ref<const Eigen::MatrixXd>& ystar, double threshold) {
  require(ystar.rows() >= 2 && ystar.cols() >= 1, "fit_pca: empty matrix");
  if (!ystar.allFinite()) fail(Errc::invalid_data, "fit_pca: non-finite entry");
  const Eigen::Index n = ystar.rows(), L = ystar.cols();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(ystar, Eigen::ComputeFullV);
  PcaModel model;
  model.runs = n;
  model.col_means = Eigen::RowVectorXd::Zero(L);
  model.col_sds = Eigen::RowVectorXd::Ones(L);
  model.singular_values = svd.singularValues();
  model.loadings = svd.matrixV();
  for (Eigen::Index c = 0; c < L; ++c) {
    Eigen::Index arg;
    model.loadings.col(c).cwiseAbs().maxCoeff(&arg);
    if (model.loadings(arg, c) < 0.0) model.loadings.col(c) *= -1.0;
  }

  const Eigen::VectorXd eig = model.singular_values.array().square();
  const double total = eig.sum();
  model.variance_fractions = total > 0.0 ? Eigen::VectorXd(eig / total) : Eigen::VectorXd::Zero(eig.size());
  model.cumulative_fractions.resize(eig.size());
  double acc = 0.0;
  for (Eigen::Index l = 0; l < eig.size(); ++l) {
    acc += model.variance_fractions(l);
    model.cumulative_fractions(l) = acc;
  }
  model.selected = select_num_pcs(model, threshold);
  return model;
}

PcaModel fit_pca(const Standardized& standardized, double threshold) {
  PcaModel model = fit_pca(standardized.values, threshold);
  model.col_means = standardized.means;
  model.col_sds = standardized.sds;
  return model;
}

Eigen::Index select_num_pcs(const PcaModel& model, double threshold) {
  require(threshold > 0.0 && threshold <= 1.0, "select_num_pcs: threshold must lie in (0, 1]");
  const Eigen::Index cap = model.max_components();
  for (Eigen::Index l = 0; l < model.cumulative_fractions.size() && l < cap; ++l)
    if (model.cumulative_fractions(l) > threshold) return l + 1;
  return cap;
}

Eigen::MatrixXd scores(const PcaModel& model, const Eigen::Ref<const Eigen::MatrixXd>& ystar, Eigen::Index count) {
  require(count >= 1 && count <= model.outputs(), "scores: component count out of range");
  require(ystar.cols() == model.outputs(), "scores: column count differs from the model");
  return ystar * model.loadings.leftCols(count);
}

Eigen::MatrixXd project(const PcaModel& model, const Eigen::Ref<const Eigen::MatrixXd>& y, Eigen::Index count) {
  require(y.cols() == model.outputs(), "project: column count differs from the model");
  const Eigen::MatrixXd ystar = (y.rowwise() - model.col_means).array().rowwise() / model.col_sds.array();
  return scores(model, ystar, count);
}

}  // namespace smdd
