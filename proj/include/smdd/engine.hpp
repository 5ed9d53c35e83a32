#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "smdd/design.hpp"
#include "smdd/gp.hpp"
#include "smdd/pca.hpp"

namespace smdd {

enum class AcquisitionMode {
  candidate,  // minimize phi_q of output-space distances over the candidate pool
  weighted,   // maximize min_i w d_h + (1 - w) d_x over the candidate pool
};

enum class DistanceVariant {
  stochastic,     // sum of squared mean differences plus posterior variances
  deterministic,  // posterior means only
};

struct SmddConfig {
  Eigen::Index K = 0;
  Eigen::Index L = 0;
  /// Initial design size; max(10K, 3L) when unset.
  std::optional<Eigen::Index> n0;
  Eigen::Index N = 0;
  /// Candidate multiplier, N_c = a (N - n0) K.
  double a = 5.0;
  double q = 15.0;
  std::optional<double> w;
  AcquisitionMode mode = AcquisitionMode::candidate;
  double pc_threshold = 0.90;
  KernelFamily kernel = KernelFamily::matern;
  double nu = 2.5;
  /// Model each standardized output with its own GP instead of PC scores.
  bool skip_pca = false;
  DistanceVariant distance = DistanceVariant::stochastic;
  std::uint64_t seed = 0;
  /// Restrict each theta search to a neighbourhood of the previous estimate.
  bool warm_start = false;
  /// Annealing budget for the initial MmLHD and the candidate SLHD (default 10^4 K).
  std::optional<std::size_t> anneal_budget;

  Eigen::Index initial_size() const;
  Eigen::Index candidate_count() const;
  void validate() const;
};

/// Per-PC posterior mean differences and posterior variances between a
/// candidate and one observed design point.
struct MixedDistanceTerms {
  Eigen::VectorXd mu;
  Eigen::VectorXd tau2;
};

/// sum_l mu_l^2 + tau_l^2.
double mixed_distance_sq_h(const MixedDistanceTerms& terms);

/// w d_h + (1 - w) d_x.
double mixed_distance_outer(double input_distance, double output_distance, double w);

/// Fitted PCA plus one GP per retained component.
struct Surrogate {
  std::vector<Eigen::Index> kept_outputs;  // output columns that were not constant
  Standardized standardization;
  std::optional<PcaModel> pca;             // absent in skip_pca mode
  Eigen::Index selected = 0;               // L_pc before any GP was dropped
  std::vector<Eigen::Index> components;    // component modelled by gps[c]
  Eigen::MatrixXd scores;                  // n x gps.size(), observed scores
  std::vector<GpModel> gps;
  std::vector<std::string> warnings;

  Eigen::Index size() const { return static_cast<Eigen::Index>(gps.size()); }
};

/// Refit from scratch: standardization, PCA, component selection, per-PC GPs.
/// `previous_theta` seeds the search when warm starting.
Surrogate fit_surrogate(const Eigen::Ref<const DesignMatrix>& x, const Eigen::Ref<const InnerResponseMatrix>& y,
                        const SmddConfig& config, const std::vector<double>& previous_theta = {});

struct PointPrediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

PointPrediction predict(const Surrogate& surrogate, const Eigen::Ref<const Eigen::RowVectorXd>& x);

MixedDistanceTerms distance_terms(const Surrogate& surrogate, const PointPrediction& prediction,
                                  Eigen::Index observed);

/// Output-space distance between an unobserved x and observed design point i.
double dist_h(const Surrogate& surrogate, const Eigen::Ref<const Eigen::RowVectorXd>& x, Eigen::Index observed,
              DistanceVariant variant);

/// dist_h from x to every observed point.
Eigen::VectorXd dist_h_all(const Surrogate& surrogate, const PointPrediction& prediction, DistanceVariant variant);

/// phi_q of the output-space distances from x to the design; +infinity when
/// x duplicates a design point in input or output space.
double acquisition_phi_q(const Surrogate& surrogate, const Eigen::Ref<const DesignMatrix>& design,
                         const Eigen::Ref<const Eigen::RowVectorXd>& x, double q, DistanceVariant variant);

struct TraceRow {
  Eigen::Index iteration = 0;
  Eigen::RowVectorXd point;
  double min_dist_h = 0.0;
  double phi = 0.0;
  Eigen::Index lpc = 0;
};

struct Selection {
  Eigen::Index candidate = -1;  // row in the remaining pool
  Eigen::RowVectorXd point;
  double phi = 0.0;
  double min_dist_h = 0.0;
  /// Weighted mode: min_i of the mixed distance (larger is better).
  double criterion = 0.0;
  Eigen::Index lpc = 0;
};

struct PendingAsk {
  Eigen::RowVectorXd point;
  /// Set for sequential points; unset while the initial design is being evaluated.
  std::optional<Selection> selection;
};

struct FitSummary {
  std::vector<double> theta;
  std::vector<double> beta;
  std::vector<double> sigma2;
  Eigen::VectorXd variance_fractions;
  Eigen::Index lpc = 0;
};

/// Sequential design state. X and Y hold evaluated runs only; initial points
/// still waiting for responses sit in initial_queue.
struct SmddState {
  SmddConfig config;
  DesignMatrix x;
  InnerResponseMatrix y;
  DesignMatrix initial_queue;
  DesignMatrix candidates;
  Eigen::Index iteration = 0;
  std::string rng_state;
  std::vector<TraceRow> trace;
  std::optional<PendingAsk> pending;
  std::optional<FitSummary> summary;
  /// Fitted artifacts for the current data; not persisted.
  std::optional<Surrogate> cache;

  Eigen::Index runs() const { return x.rows(); }
  bool finished() const { return x.rows() >= config.N; }
};

/// Initial design ID1: a maximin LHD of size n0 seeded from the config.
DesignMatrix initial_design(const SmddConfig& config);

/// Sliced candidate pool of size about a (N - n0) K.
SlicedCandidateSet candidate_pool(const SmddConfig& config);

/// Fresh state awaiting responses for `initial`.
SmddState make_state(const SmddConfig& config, const Eigen::Ref<const DesignMatrix>& initial);

/// Surrogate for the current data, fitted on demand.
const Surrogate& current_surrogate(SmddState& state);

/// Best remaining candidate; does not modify the pool or the data.
Selection propose(SmddState& state);

/// propose() and remove the chosen candidate from the pool.
Selection select_next(SmddState& state);

/// Next point to evaluate (an initial point first, then sequential picks).
/// Repeated asks without a tell return the same point.
Eigen::RowVectorXd ask(SmddState& state);

/// Record the inner outputs for the last asked point.
void tell(SmddState& state, const Eigen::Ref<const Eigen::RowVectorXd>& point,
          const Eigen::Ref<const Eigen::RowVectorXd>& outputs);

inline constexpr double kTellTolerance = 1e-9;

using InnerFunction = std::function<Eigen::RowVectorXd(const Eigen::Ref<const Eigen::RowVectorXd>&)>;

enum class StepStatus { advanced, finished };

/// One ask/evaluate/tell cycle.
StepStatus step(SmddState& state, const InnerFunction& inner);

void run_to_completion(SmddState& state, const InnerFunction& inner);

}  // namespace smdd
