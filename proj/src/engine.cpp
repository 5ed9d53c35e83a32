#include "smdd/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "smdd/random.hpp"

namespace smdd {

namespace {

// Seed streams derived from SmddConfig::seed.
constexpr std::uint64_t kInitialStream = 10;
constexpr std::uint64_t kCandidateStream = 11;
constexpr std::uint64_t kEngineStream = 12;

DesignMatrix remove_row(const DesignMatrix& m, Eigen::Index row) {
  DesignMatrix out(m.rows() - 1, m.cols());
  out.topRows(row) = m.topRows(row);
  out.bottomRows(m.rows() - row - 1) = m.bottomRows(m.rows() - row - 1);
  return out;
}

void append_row(Eigen::MatrixXd& m, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  if (m.size() == 0) m.resize(0, row.size());
  m.conservativeResize(m.rows() + 1, Eigen::NoChange);
  m.row(m.rows() - 1) = row;
}

double min_input_distance(const Eigen::Ref<const DesignMatrix>& design, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  if (design.rows() == 0) return std::numeric_limits<double>::infinity();
  return (design.rowwise() - x).rowwise().norm().minCoeff();
}

}  // namespace

Eigen::Index SmddConfig::initial_size() const { return n0.value_or(std::max<Eigen::Index>(10 * K, 3 * L)); }

Eigen::Index SmddConfig::candidate_count() const {
  return static_cast<Eigen::Index>(std::ceil(a * static_cast<double>((N - initial_size()) * K)));
}

void SmddConfig::validate() const {
  require(K >= 1, "config: K must be at least 1");
  require(L >= 1, "config: L must be at least 1");
  require(initial_size() >= 3, "config: n0 must be at least 3");
  require(initial_size() < N, "config: n0 must be smaller than N");
  require(q > 0.0, "config: q must be positive");
  require(a >= 1.0, "config: a must be at least 1");
  require(pc_threshold > 0.0 && pc_threshold <= 1.0, "config: pc_threshold must lie in (0, 1]");
  require(nu > 0.0, "config: nu must be positive");
  if (w) require(*w >= 0.0 && *w <= 1.0, "config: w must lie in [0, 1]");
  if (mode == AcquisitionMode::weighted) require(w.has_value(), "config: weighted mode needs an explicit w");
}

double mixed_distance_sq_h(const MixedDistanceTerms& terms) {
  return terms.mu.squaredNorm() + terms.tau2.sum();
}

double mixed_distance_outer(double input_distance, double output_distance, double w) {
  require(w >= 0.0 && w <= 1.0, "mixed_distance_outer: w must lie in [0, 1]");
  return w * output_distance + (1.0 - w) * input_distance;
}

Surrogate fit_surrogate(const Eigen::Ref<const DesignMatrix>& x, const Eigen::Ref<const InnerResponseMatrix>& y,
                        const SmddConfig& config, const std::vector<double>& previous_theta) {
  require(x.rows() == y.rows(), "fit_surrogate: design and response row counts differ");
  if (!y.allFinite()) fail(Errc::invalid_data, "fit_surrogate: non-finite response");

  Surrogate out;
  const std::vector<Eigen::Index> constant = constant_columns(y);
  for (Eigen::Index l : constant)
    out.warnings.push_back("output " + std::to_string(l) + " is constant and was excluded");
  for (Eigen::Index l = 0; l < y.cols(); ++l)
    if (std::find(constant.begin(), constant.end(), l) == constant.end()) out.kept_outputs.push_back(l);
  if (out.kept_outputs.empty()) fail(Errc::degenerate_output_dimension, "fit_surrogate: every output is constant");

  out.standardization = standardize(drop_columns(y, constant));
  Eigen::MatrixXd all_scores;
  if (config.skip_pca) {
    all_scores = out.standardization.values;
    out.selected = all_scores.cols();
  } else {
    out.pca = fit_pca(out.standardization, config.pc_threshold);
    out.selected = out.pca->selected;
    all_scores = scores(*out.pca, out.standardization.values, out.selected);
  }

  std::vector<Eigen::Index> fitted;
  for (Eigen::Index c = 0; c < out.selected; ++c) {
    GpFitOptions options;
    if (config.warm_start && static_cast<std::size_t>(c) < previous_theta.size()) {
      const double centre = std::log(previous_theta[static_cast<std::size_t>(c)]);
      options.log_theta_min = std::max(options.log_theta_min, centre - 1.0);
      options.log_theta_max = std::min(options.log_theta_max, centre + 1.0);
    }
    try {
      out.gps.push_back(fit_gp(x, all_scores.col(c), config.kernel, config.nu, {}, options));
      fitted.push_back(c);
    } catch (const Error& e) {
      if (e.code() != Errc::ill_conditioned_design) throw;
      out.warnings.push_back("component " + std::to_string(c) + " dropped: " + e.what());
    }
  }
  if (out.gps.empty()) fail(Errc::ill_conditioned_design, "fit_surrogate: no component could be fitted");
  out.components = fitted;
  out.scores.resize(x.rows(), static_cast<Eigen::Index>(fitted.size()));
  for (std::size_t c = 0; c < fitted.size(); ++c)
    out.scores.col(static_cast<Eigen::Index>(c)) = all_scores.col(fitted[c]);
  return out;
}

PointPrediction predict(const Surrogate& surrogate, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  PointPrediction out{Eigen::VectorXd(surrogate.size()), Eigen::VectorXd(surrogate.size())};
  for (Eigen::Index c = 0; c < surrogate.size(); ++c) {
    const Posterior p = surrogate.gps[static_cast<std::size_t>(c)].posterior(x);
    out.mean(c) = p.mean;
    out.variance(c) = p.variance;
  }
  return out;
}

MixedDistanceTerms distance_terms(const Surrogate& surrogate, const PointPrediction& prediction,
                                  Eigen::Index observed) {
  require(observed >= 0 && observed < surrogate.scores.rows(), "distance_terms: observed index out of range");
  return {prediction.mean - surrogate.scores.row(observed).transpose(), prediction.variance};
}

double dist_h(const Surrogate& surrogate, const Eigen::Ref<const Eigen::RowVectorXd>& x, Eigen::Index observed,
              DistanceVariant variant) {
  if (surrogate.gps.empty()) fail(Errc::invalid_state, "dist_h: surrogate not fitted");
  MixedDistanceTerms terms = distance_terms(surrogate, predict(surrogate, x), observed);
  if (variant == DistanceVariant::deterministic) terms.tau2.setZero();
  return std::sqrt(mixed_distance_sq_h(terms));
}

Eigen::VectorXd dist_h_all(const Surrogate& surrogate, const PointPrediction& prediction, DistanceVariant variant) {
  const double spread = variant == DistanceVariant::stochastic ? prediction.variance.sum() : 0.0;
  const Eigen::VectorXd sq =
      (surrogate.scores.rowwise() - prediction.mean.transpose()).rowwise().squaredNorm().array() + spread;
  return sq.array().sqrt();
}

double acquisition_phi_q(const Surrogate& surrogate, const Eigen::Ref<const DesignMatrix>& design,
                         const Eigen::Ref<const Eigen::RowVectorXd>& x, double q, DistanceVariant variant) {
  if (surrogate.gps.empty()) fail(Errc::invalid_state, "acquisition: surrogate not fitted");
  if (min_input_distance(design, x) < kDuplicateTolerance) return std::numeric_limits<double>::infinity();
  const Eigen::VectorXd d = dist_h_all(surrogate, predict(surrogate, x), variant);
  if (!(d.minCoeff() > 0.0)) return std::numeric_limits<double>::infinity();
  return phi_q(std::span<const double>(d.data(), static_cast<std::size_t>(d.size())), q);
}

DesignMatrix initial_design(const SmddConfig& config) {
  config.validate();
  AnnealOptions options{config.q, config.anneal_budget};
  return optimize_mmlhd(config.initial_size(), config.K, options, derive_seed(config.seed, kInitialStream)).points;
}

SlicedCandidateSet candidate_pool(const SmddConfig& config) {
  config.validate();
  const Eigen::Index total = config.candidate_count();
  const Eigen::Index slice_size = std::max<Eigen::Index>(2, config.N - config.initial_size());
  const Eigen::Index slices = std::max<Eigen::Index>(1, (total + slice_size - 1) / slice_size);
  AnnealOptions options{config.q, config.anneal_budget};
  return generate_slhd(slices, slice_size, config.K, derive_seed(config.seed, kCandidateStream), options);
}

SmddState make_state(const SmddConfig& config, const Eigen::Ref<const DesignMatrix>& initial) {
  config.validate();
  require(initial.rows() == config.initial_size(), "make_state: initial design must have n0 rows");
  require(initial.cols() == config.K, "make_state: initial design must have K columns");
  validate_design(initial);

  SmddState state;
  state.config = config;
  state.x.resize(0, config.K);
  state.y.resize(0, config.L);
  state.initial_queue = initial;
  state.candidates = candidate_pool(config).points;
  state.rng_state = rng_state(Rng(derive_seed(config.seed, kEngineStream)));
  return state;
}

const Surrogate& current_surrogate(SmddState& state) {
  if (!state.cache) {
    std::vector<double> previous;
    if (state.config.warm_start && state.summary) previous = state.summary->theta;
    state.cache = fit_surrogate(state.x, state.y, state.config, previous);
    FitSummary summary;
    for (const GpModel& gp : state.cache->gps) {
      summary.theta.push_back(gp.kernel().theta);
      summary.beta.push_back(gp.beta()(0));
      summary.sigma2.push_back(gp.sigma2());
    }
    if (state.cache->pca) summary.variance_fractions = state.cache->pca->variance_fractions;
    summary.lpc = state.cache->size();
    state.summary = summary;
  }
  return *state.cache;
}

Selection propose(SmddState& state) {
  if (state.initial_queue.rows() > 0) fail(Errc::invalid_state, "propose: initial design not fully evaluated");
  if (state.candidates.rows() == 0) fail(Errc::exhausted_candidates, "propose: candidate pool is empty");
  const Surrogate& surrogate = current_surrogate(state);
  const SmddConfig& config = state.config;
  const bool weighted = config.mode == AcquisitionMode::weighted;

  Selection best;
  best.phi = std::numeric_limits<double>::infinity();
  best.criterion = -std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < state.candidates.rows(); ++c) {
    const Eigen::RowVectorXd x = state.candidates.row(c);
    const double dmin_x = min_input_distance(state.x, x);
    if (dmin_x < kDuplicateTolerance) continue;
    const Eigen::VectorXd d = dist_h_all(surrogate, predict(surrogate, x), config.distance);
    if (!(d.minCoeff() > 0.0)) continue;
    const double phi = phi_q(std::span<const double>(d.data(), static_cast<std::size_t>(d.size())), config.q);

    bool better;
    double criterion = 0.0;
    if (weighted) {
      const Eigen::VectorXd dx = (state.x.rowwise() - x).rowwise().norm();
      criterion = (*config.w * d + (1.0 - *config.w) * dx).minCoeff();
      better = criterion > best.criterion;
    } else {
      better = phi < best.phi;
    }
    if (better) {
      best.candidate = c;
      best.point = x;
      best.phi = phi;
      best.min_dist_h = d.minCoeff();
      best.criterion = weighted ? criterion : -phi;
    }
  }
  if (best.candidate < 0) fail(Errc::exhausted_candidates, "propose: every candidate duplicates a design point");
  best.lpc = surrogate.size();
  return best;
}

Selection select_next(SmddState& state) {
  Selection s = propose(state);
  state.candidates = remove_row(state.candidates, s.candidate);
  return s;
}

Eigen::RowVectorXd ask(SmddState& state) {
  if (state.pending) return state.pending->point;
  if (state.finished()) fail(Errc::finished, "ask: design already has N runs");
  if (state.initial_queue.rows() > 0) {
    state.pending = PendingAsk{state.initial_queue.row(0), std::nullopt};
  } else {
    Selection s = propose(state);
    state.pending = PendingAsk{s.point, s};
  }
  return state.pending->point;
}

void tell(SmddState& state, const Eigen::Ref<const Eigen::RowVectorXd>& point,
          const Eigen::Ref<const Eigen::RowVectorXd>& outputs) {
  if (!state.pending) fail(Errc::protocol_violation, "tell: no outstanding ask");
  const Eigen::RowVectorXd& asked = state.pending->point;
  if (point.size() != asked.size() || (point - asked).cwiseAbs().maxCoeff() > kTellTolerance)
    fail(Errc::protocol_violation, "tell: point differs from the last asked point");
  if (outputs.size() != state.config.L) fail(Errc::invalid_data, "tell: expected L output values");
  if (!outputs.allFinite()) fail(Errc::invalid_data, "tell: non-finite output value");

  append_row(state.x, asked);
  append_row(state.y, outputs);
  if (state.pending->selection) {
    const Selection& s = *state.pending->selection;
    state.candidates = remove_row(state.candidates, s.candidate);
    state.trace.push_back({state.runs() - state.config.initial_size(), s.point, s.min_dist_h, s.phi, s.lpc});
  } else {
    state.initial_queue = remove_row(state.initial_queue, 0);
  }
  state.iteration = std::max<Eigen::Index>(0, state.runs() - state.config.initial_size());
  state.pending.reset();
  state.cache.reset();
}

StepStatus step(SmddState& state, const InnerFunction& inner) {
  if (state.finished()) return StepStatus::finished;
  const Eigen::RowVectorXd x = ask(state);
  const Eigen::RowVectorXd h = inner(x);
  tell(state, x, h);
  return StepStatus::advanced;
}

void run_to_completion(SmddState& state, const InnerFunction& inner) {
  while (step(state, inner) == StepStatus::advanced) {
  }
}

}  // namespace smdd
