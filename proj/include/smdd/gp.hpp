#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <optional>

#include "smdd/design.hpp"

namespace smdd {

enum class KernelFamily { gaussian, matern };

/// Isotropic correlation function with a single scale parameter shared by
/// every input dimension.
///   gaussian: exp(-theta r^2)
///   matern:   2^(1-nu)/Gamma(nu) s^nu K_nu(s),  s = 2 sqrt(nu) r / theta
struct Kernel {
  KernelFamily family = KernelFamily::matern;
  double theta = 1.0;
  double nu = 2.5;
};

/// Correlation at Euclidean distance r >= 0.
double correlation(const Kernel& kernel, double r);

template <typename DerivedA, typename DerivedB>
double kernel_eval(const Kernel& kernel, const Eigen::MatrixBase<DerivedA>& x,
                   const Eigen::MatrixBase<DerivedB>& y) {
  return correlation(kernel, euclidean_distance(x, y));
}

/// Regression basis b(x). Only the constant basis b(x) = 1 is provided.
struct BasisSpec {
  enum class Kind { constant };
  Kind kind = Kind::constant;

  Eigen::Index size() const { return 1; }
  Eigen::VectorXd eval(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Eigen::MatrixXd design(const Eigen::Ref<const DesignMatrix>& points) const;
};

struct GpFitOptions {
  double log_theta_min = std::log(1e-2);
  double log_theta_max = std::log(1e3);
  int grid_points = 20;
  double log_theta_tolerance = 1e-4;
  double jitter = 1e-8;
  double max_jitter = 1e-4;
  /// When set, the search is skipped and this theta is used.
  std::optional<double> fixed_theta;
};

struct Posterior {
  double mean = 0.0;
  double variance = 0.0;
};

/// Universal kriging model for one scalar response. Immutable once fitted.
class GpModel {
 public:
  Posterior posterior(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

  const Kernel& kernel() const { return kernel_; }
  const BasisSpec& basis() const { return basis_; }
  const Eigen::VectorXd& beta() const { return beta_; }
  double sigma2() const { return sigma2_; }
  /// Diagonal term actually added to R before factorization.
  double jitter() const { return jitter_; }
  double log_likelihood() const { return log_likelihood_; }
  const DesignMatrix& inputs() const { return x_; }
  const Eigen::VectorXd& targets() const { return y_; }
  Eigen::Index runs() const { return x_.rows(); }

  /// Correlation vector r(x) = R(x, X); entries at training inputs include the jitter.
  Eigen::VectorXd cross_correlation(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

 private:
  friend GpModel fit_gp_fixed(const Eigen::Ref<const DesignMatrix>&, const Eigen::Ref<const Eigen::VectorXd>&,
                              const Kernel&, const BasisSpec&, const GpFitOptions&);

  DesignMatrix x_;
  Eigen::VectorXd y_;
  Kernel kernel_;
  BasisSpec basis_;
  Eigen::VectorXd beta_;
  double sigma2_ = 0.0;
  double jitter_ = 0.0;
  double log_likelihood_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> chol_;        // R + jitter I
  Eigen::VectorXd alpha_;                   // R^-1 (y - B beta)
  Eigen::MatrixXd rinv_basis_;              // R^-1 B
  Eigen::LLT<Eigen::MatrixXd> basis_gram_;  // B^T R^-1 B
};

/// Fit with theta chosen by maximizing the profile likelihood over
/// log theta in [log_theta_min, log_theta_max] (grid, then golden section).
GpModel fit_gp(const Eigen::Ref<const DesignMatrix>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
               KernelFamily family, double nu = 2.5, const BasisSpec& basis = {},
               const GpFitOptions& options = {});

/// Fit with a given kernel (no hyperparameter search).
GpModel fit_gp_fixed(const Eigen::Ref<const DesignMatrix>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                     const Kernel& kernel, const BasisSpec& basis = {}, const GpFitOptions& options = {});

/// Profile log-likelihood -(n log sigma2 + log det R)/2 at a given theta, or
/// -infinity when R cannot be factorized.
double profile_log_likelihood(const Eigen::Ref<const DesignMatrix>& x,
                              const Eigen::Ref<const Eigen::VectorXd>& y, const Kernel& kernel,
                              const BasisSpec& basis = {}, const GpFitOptions& options = {});

/// Correlation matrix R(X, X) without jitter.
Eigen::MatrixXd correlation_matrix(const Kernel& kernel, const Eigen::Ref<const DesignMatrix>& x);

}  // namespace smdd
