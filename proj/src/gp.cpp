#include "smdd/gp.hpp"

#include <limits>
#include <string>

namespace smdd {

double correlation(const Kernel& kernel, double r) {
  require(kernel.theta > 0.0 && kernel.nu > 0.0, "kernel: theta and nu must be positive");
  if (kernel.family == KernelFamily::gaussian) return std::exp(-kernel.theta * r * r);

  const double nu = kernel.nu;
  const double s = 2.0 * std::sqrt(nu) * r / kernel.theta;
  if (s == 0.0) return 1.0;
  if (nu == 0.5) return std::exp(-s);
  if (nu == 1.5) return (1.0 + s) * std::exp(-s);
  if (nu == 2.5) return (1.0 + s + s * s / 3.0) * std::exp(-s);
  if (s > 700.0) return 0.0;
  return std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::pow(s, nu) * std::cyl_bessel_k(nu, s);
}

Eigen::VectorXd BasisSpec::eval(const Eigen::Ref<const Eigen::RowVectorXd>&) const {
  return Eigen::VectorXd::Ones(1);
}

Eigen::MatrixXd BasisSpec::design(const Eigen::Ref<const DesignMatrix>& points) const {
  return Eigen::MatrixXd::Ones(points.rows(), 1);
}

Eigen::MatrixXd correlation_matrix(const Kernel& kernel, const Eigen::Ref<const DesignMatrix>& x) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd r(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    r(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j)
      r(i, j) = r(j, i) = correlation(kernel, (x.row(i) - x.row(j)).norm());
  }
  return r;
}

namespace {

struct Factorization {
  Eigen::LLT<Eigen::MatrixXd> chol;
  double jitter = 0.0;
};

std::optional<Factorization> factorize(const Eigen::MatrixXd& distances, const Kernel& kernel,
                                       const GpFitOptions& options) {
  const Eigen::Index n = distances.rows();
  Eigen::MatrixXd r(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    r(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) r(i, j) = r(j, i) = correlation(kernel, distances(i, j));
  }
  for (double jitter = options.jitter; jitter <= options.max_jitter * (1.0 + 1e-9); jitter *= 10.0) {
    Eigen::MatrixXd a = r;
    a.diagonal().array() += jitter;
    Factorization f{Eigen::LLT<Eigen::MatrixXd>(a), jitter};
    if (f.chol.info() == Eigen::Success && f.chol.matrixLLT().diagonal().minCoeff() > 0.0)
      return f;
  }
  return std::nullopt;
}

struct Regression {
  Eigen::VectorXd beta;
  Eigen::VectorXd alpha;
  Eigen::MatrixXd rinv_basis;
  Eigen::LLT<Eigen::MatrixXd> gram;
  double quad = 0.0;  // (y - B beta)^T R^-1 (y - B beta)
};

Regression regress(const Factorization& f, const Eigen::MatrixXd& basis, const Eigen::VectorXd& y) {
  Regression out;
  out.rinv_basis = f.chol.solve(basis);
  out.gram.compute(basis.transpose() * out.rinv_basis);
  out.beta = out.gram.solve(out.rinv_basis.transpose() * y);
  const Eigen::VectorXd resid = y - basis * out.beta;
  out.alpha = f.chol.solve(resid);
  out.quad = std::max(0.0, resid.dot(out.alpha));
  return out;
}

double log_det(const Factorization& f) {
  return 2.0 * f.chol.matrixLLT().diagonal().array().log().sum();
}

double profile_value(double quad, double logdet, Eigen::Index n) {
  const double sigma2 = std::max(quad / static_cast<double>(n), std::numeric_limits<double>::min());
  return -0.5 * (static_cast<double>(n) * std::log(sigma2) + logdet);
}

void check_training_data(const Eigen::Ref<const DesignMatrix>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                         const BasisSpec& basis) {
  require(x.rows() == y.size(), "fit_gp: input and target counts differ");
  require(x.rows() >= basis.size() + 2, "fit_gp: need at least q + 2 training points");
  if (!y.allFinite()) fail(Errc::invalid_data, "fit_gp: non-finite target");
  if (!x.allFinite()) fail(Errc::invalid_data, "fit_gp: non-finite input");
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = i + 1; j < x.rows(); ++j)
      if ((x.row(i) - x.row(j)).norm() < kDuplicateTolerance)
        fail(Errc::ill_conditioned_design,
             "fit_gp: training rows " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
}

}  // namespace

double profile_log_likelihood(const Eigen::Ref<const DesignMatrix>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                              const Kernel& kernel, const BasisSpec& basis, const GpFitOptions& options) {
  const auto f = factorize(pairwise_distances(x), kernel, options);
  if (!f) return -std::numeric_limits<double>::infinity();
  const Regression reg = regress(*f, basis.design(x), y);
  return profile_value(reg.quad, log_det(*f), x.rows());
}

GpModel fit_gp_fixed(const Eigen::Ref<const DesignMatrix>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                     const Kernel& kernel, const BasisSpec& basis, const GpFitOptions& options) {
  check_training_data(x, y, basis);
  auto f = factorize(pairwise_distances(x), kernel, options);
  if (!f) fail(Errc::ill_conditioned_design, "fit_gp: correlation matrix singular after jitter");

  const Eigen::MatrixXd b = basis.design(x);
  Regression reg = regress(*f, b, y);
  const Eigen::Index n = x.rows();

  GpModel model;
  model.x_ = x;
  model.y_ = y;
  model.kernel_ = kernel;
  model.basis_ = basis;
  model.beta_ = reg.beta;
  model.sigma2_ = reg.quad / static_cast<double>(n - 1);
  model.jitter_ = f->jitter;
  model.log_likelihood_ = profile_value(reg.quad, log_det(*f), n);
  model.chol_ = std::move(f->chol);
  model.alpha_ = std::move(reg.alpha);
  model.rinv_basis_ = std::move(reg.rinv_basis);
  model.basis_gram_ = std::move(reg.gram);
  return model;
}

GpModel fit_gp(const Eigen::Ref<const DesignMatrix>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
               KernelFamily family, double nu, const BasisSpec& basis, const GpFitOptions& options) {
  check_training_data(x, y, basis);
  Kernel kernel{family, 1.0, nu};
  if (options.fixed_theta) {
    kernel.theta = *options.fixed_theta;
    return fit_gp_fixed(x, y, kernel, basis, options);
  }
  require(options.grid_points >= 2, "fit_gp: need at least two grid points");
  require(options.log_theta_max > options.log_theta_min, "fit_gp: empty theta search interval");

  const Eigen::MatrixXd distances = pairwise_distances(x);
  const Eigen::MatrixXd b = basis.design(x);
  const Eigen::VectorXd target = y;
  auto objective = [&](double log_theta) {
    Kernel k = kernel;
    k.theta = std::exp(log_theta);
    const auto f = factorize(distances, k, options);
    if (!f) return -std::numeric_limits<double>::infinity();
    return profile_value(regress(*f, b, target).quad, log_det(*f), x.rows());
  };

  const int grid = options.grid_points;
  const double step = (options.log_theta_max - options.log_theta_min) / (grid - 1);
  int best = -1;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int g = 0; g < grid; ++g) {
    const double v = objective(options.log_theta_min + step * g);
    if (v > best_value) {
      best_value = v;
      best = g;
    }
  }
  if (best < 0) fail(Errc::ill_conditioned_design, "fit_gp: correlation matrix singular for every theta");

  // Golden-section refinement on the bracket around the best grid point.
  double lo = options.log_theta_min + step * std::max(best - 1, 0);
  double hi = options.log_theta_min + step * std::min(best + 1, grid - 1);
  double best_log_theta = options.log_theta_min + step * best;
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - ratio * (hi - lo), d = lo + ratio * (hi - lo);
  double fc = objective(c), fd = objective(d);
  while (hi - lo > options.log_theta_tolerance) {
    if (fc >= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - ratio * (hi - lo);
      fc = objective(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + ratio * (hi - lo);
      fd = objective(d);
    }
  }
  const double mid = 0.5 * (lo + hi);
  const double fmid = objective(mid);
  if (fmid > best_value) best_log_theta = mid;

  kernel.theta = std::exp(best_log_theta);
  return fit_gp_fixed(x, y, kernel, basis, options);
}

Eigen::VectorXd GpModel::cross_correlation(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  require(x.size() == x_.cols(), "posterior: dimension mismatch");
  Eigen::VectorXd r(x_.rows());
  for (Eigen::Index i = 0; i < x_.rows(); ++i) {
    const double d = (x_.row(i) - x).norm();
    // At a training input the jittered diagonal keeps the model an exact interpolator.
    r(i) = d < kDuplicateTolerance ? 1.0 + jitter_ : correlation(kernel_, d);
  }
  return r;
}

Posterior GpModel::posterior(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  const Eigen::VectorXd r = cross_correlation(x);
  const Eigen::VectorXd bx = basis_.eval(x);
  Posterior out;
  out.mean = bx.dot(beta_) + r.dot(alpha_);
  const Eigen::VectorXd v = chol_.matrixL().solve(r);
  const Eigen::VectorXd u = bx - rinv_basis_.transpose() * r;
  const double reduced = 1.0 - v.squaredNorm() + u.dot(basis_gram_.solve(u));
  out.variance = std::max(0.0, sigma2_ * reduced);
  return out;
}

}  // namespace smdd
