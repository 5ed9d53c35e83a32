#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "smdd/engine.hpp"
#include "smdd/metrics.hpp"

namespace smdd::bench {

/// Camel problem inner model: three-hump and six-hump camel functions on the
/// rescaled square [-1,1]^2.
Eigen::RowVectorXd camel_inner(const Eigen::Ref<const Eigen::RowVectorXd>& x);

/// Highdim problem inner model: ten correlated outputs of an 8-input function.
Eigen::RowVectorXd highdim_inner(const Eigen::Ref<const Eigen::RowVectorXd>& x);

/// Coefficient a_{l,j} of the highdim model, l in [0,10), j in [0,4).
double highdim_coefficient(int l, int j);

/// Branin-Hoo variant with a 5 h1 cosine term, on [-5,10] x [0,15].
double branin_mod_outer(double h1, double h2);

/// Piecewise-linear zigzag on [0,1]^2.
double zigzag_outer(double h1, double h2);

/// Synthetic K = 10, L = 53 stand-in for a large-output inner simulator.
Eigen::RowVectorXd assembly_standin_inner(const Eigen::Ref<const Eigen::RowVectorXd>& x);

using OuterFunction = std::function<Eigen::RowVectorXd(const Eigen::Ref<const Eigen::RowVectorXd>&)>;

struct TestProblem {
  std::string name;
  Eigen::Index K = 0;
  Eigen::Index L = 0;
  Eigen::Index M = 0;
  InnerFunction inner;
  OuterFunction outer;  // may be empty
  /// Default n0 override (unset: max(10K, 3L)).
  std::optional<Eigen::Index> n0;
  bool skip_pca = false;
  /// Poorly-filled initial designs avoid {x : sum_k x_k < threshold}.
  double id2_threshold = 0.0;
};

/// Built-in problems: "camel", "highdim", "assembly". Throws invalid_argument otherwise.
TestProblem problem(const std::string& name);
std::vector<std::string> problem_names();

/// Evaluate the inner model on every row.
InnerResponseMatrix evaluate_inner(const TestProblem& problem, const Eigen::Ref<const DesignMatrix>& x);

/// Poorly space-filled initial design: a maximin LHD whose points all satisfy
/// sum_k x_k >= problem.id2_threshold.
DesignMatrix poorly_filled_design(const TestProblem& problem, Eigen::Index n, std::uint64_t seed,
                                  const AnnealOptions& options = {});

enum class Method { smdd, smdd_det, mmlhd };
enum class Initial { id1, id2 };

std::string to_string(Method m);
std::string to_string(Initial i);
Method parse_method(const std::string& s);
Initial parse_initial(const std::string& s);

struct ReplicationPlan {
  std::vector<Method> methods{Method::smdd, Method::smdd_det, Method::mmlhd};
  std::vector<Initial> initials{Initial::id1, Initial::id2};
  int replicates = 20;
  std::uint64_t base_seed = 1;
  std::optional<Eigen::Index> n0;
  std::vector<Eigen::Index> sizes;  // final sizes N
  Eigen::Index test_size = 500;
  double a = 5.0;
  double q = 15.0;
  KernelFamily kernel = KernelFamily::matern;
  double nu = 2.5;
  std::optional<std::size_t> anneal_budget;
  /// Reference sample size for the AID_h output frame.
  Eigen::Index frame_size = 2000;

  void validate() const;
};

struct BenchRow {
  std::string problem;
  Method method = Method::smdd;
  Initial initial = Initial::id1;
  MetricReport report;
};

/// Engine configuration for one sequential run of the given method.
SmddConfig run_config(const ReplicationPlan& plan, const TestProblem& problem, Method method, Eigen::Index N,
                      std::uint64_t seed);

/// Output frame shared by all designs of a problem (reference LHD sample).
OutputFrame reference_frame(const TestProblem& problem, Eigen::Index size, double threshold = 0.90);

/// ID1 (maximin LHD from the config seed) or ID2 (poorly filled) of size n0.
DesignMatrix starting_design(const TestProblem& problem, const SmddConfig& config, Initial initial);

/// Maximin LHD of test points for MPV, derived from the replicate seed.
DesignMatrix test_design(const TestProblem& problem, Eigen::Index size, std::uint64_t seed,
                         const AnnealOptions& options = {});

/// Sequential design for one (method, initial, N, seed); returns the final state.
SmddState run_sequential(const ReplicationPlan& plan, const TestProblem& problem, Method method, Initial initial,
                         Eigen::Index N, std::uint64_t seed);

/// Rows ordered by seed, then N, then method, then initial design.
std::vector<BenchRow> run_replication(const ReplicationPlan& plan, const TestProblem& problem);

}  // namespace smdd::bench
