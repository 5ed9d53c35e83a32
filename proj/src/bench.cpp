#include "smdd/bench.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "smdd/random.hpp"

namespace smdd::bench {

namespace {

void require_unit_box(const Eigen::Ref<const Eigen::RowVectorXd>& x, Eigen::Index dims, const char* who) {
  require(x.size() == dims, std::string(who) + ": wrong input dimension");
  require(x.allFinite() && (x.array() >= 0.0).all() && (x.array() <= 1.0).all(),
          std::string(who) + ": input outside [0,1]^K");
}

// Row j holds a_{1j}, ..., a_{10j}.
constexpr std::array<std::array<double, 10>, 4> kHighdimAT{{
    {0.614, 0.453, 0.264, 0.354, 0.850, 0.514, 0.040, 0.958, 0.142, 0.717},
    {0.965, 0.400, 0.189, 0.574, 0.323, 0.791, 0.093, 0.813, 0.617, 0.221},
    {0.761, 0.410, 0.691, 0.872, 0.248, 0.574, 0.386, 0.086, 0.135, 0.938},
    {0.296, 0.189, 0.561, 0.775, 0.945, 0.002, 0.356, 0.615, 0.819, 0.435},
}};

constexpr std::uint64_t kTestPointStream = 30;
constexpr std::uint64_t kBaselineStream = 40;
constexpr std::uint64_t kPoorDesignStream = 20;
constexpr std::uint64_t kFrameSeed = 20240601;

}  // namespace

Eigen::RowVectorXd camel_inner(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  require_unit_box(x, 2, "camel_inner");
  const double u = 2.0 * x(0) - 1.0;
  const double v = 2.0 * x(1) - 1.0;
  const double u2 = u * u, u4 = u2 * u2, u6 = u4 * u2, v2 = v * v;
  Eigen::RowVectorXd h(2);
  h(0) = 2.0 * u2 - 1.05 * u4 + u6 / 6.0 + u * v + v2;
  h(1) = (4.0 - 2.1 * u2 + u4 / 3.0) * u2 + u * v + (-4.0 + 4.0 * v2) * v2;
  return h;
}

double highdim_coefficient(int l, int j) {
  require(l >= 0 && l < 10 && j >= 0 && j < 4, "highdim_coefficient: index out of range");
  return kHighdimAT[static_cast<std::size_t>(j)][static_cast<std::size_t>(l)];
}

Eigen::RowVectorXd highdim_inner(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  require_unit_box(x, 8, "highdim_inner");
  const double t1 = x(0) - 2.0 + 8.0 * x(1) - 8.0 * x(1) * x(1);
  const double t2 = 3.0 - 4.0 * x(1);
  const double t3 = std::sqrt(x(2) + 1.0) * (2.0 * x(2) - 1.0) * (2.0 * x(2) - 1.0);
  // sum_{i=1}^{8} i ln(1 + sum_{j=3}^{i} x_j); the inner sum is empty for i < 3.
  double t4 = 0.0, partial = 0.0;
  for (int i = 3; i <= 8; ++i) {
    partial += x(i - 1);
    t4 += i * std::log1p(partial);
  }
  Eigen::RowVectorXd h(10);
  for (int l = 0; l < 10; ++l) {
    h(l) = 4.0 * highdim_coefficient(l, 0) * t1 * t1 + highdim_coefficient(l, 1) * t2 * t2 +
           16.0 * highdim_coefficient(l, 2) * t3 + highdim_coefficient(l, 3) * t4;
  }
  return h;
}

double branin_mod_outer(double h1, double h2) {
  require(h1 >= -5.0 && h1 <= 10.0 && h2 >= 0.0 && h2 <= 15.0, "branin_mod_outer: input outside [-5,10]x[0,15]");
  using std::numbers::pi;
  const double a = h2 - 5.1 / (4.0 * pi * pi) * h1 * h1 + 5.0 / pi * h1 - 6.0;
  return a * a + 10.0 * (1.0 - 1.0 / (8.0 * pi)) * std::cos(5.0 * h1) + 10.0;
}

double zigzag_outer(double h1, double h2) {
  return h1 + 2.0 * h2 - std::floor(0.5 + h1) - std::floor(0.4 + h2);
}

Eigen::RowVectorXd assembly_standin_inner(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  static constexpr int kInputs = 10, kOutputs = 53;
  require_unit_box(x, kInputs, "assembly_standin_inner");
  // Smooth, mildly coupled responses: each output mixes a few sinusoids and
  // one pairwise product, with coefficients drawn once from a fixed seed.
  struct Coefficients {
    Eigen::MatrixXd amp, freq, phase;
    Eigen::VectorXd cross;
    std::vector<std::array<int, 2>> pair;
  };
  static const Coefficients c = [] {
    Rng rng(53);
    Coefficients out{Eigen::MatrixXd(kOutputs, kInputs), Eigen::MatrixXd(kOutputs, kInputs),
                     Eigen::MatrixXd(kOutputs, kInputs), Eigen::VectorXd(kOutputs), {}};
    for (int l = 0; l < kOutputs; ++l) {
      for (int k = 0; k < kInputs; ++k) {
        out.amp(l, k) = uniform01(rng) * (k < 4 ? 1.0 : 0.3);
        out.freq(l, k) = 0.5 + 1.5 * uniform01(rng);
        out.phase(l, k) = 2.0 * std::numbers::pi * uniform01(rng);
      }
      out.cross(l) = 2.0 * uniform01(rng) - 1.0;
      const int a = static_cast<int>(uniform_index(rng, kInputs));
      const int b = static_cast<int>(uniform_index(rng, kInputs));
      out.pair.push_back({a, b});
    }
    return out;
  }();
  Eigen::RowVectorXd h(kOutputs);
  for (int l = 0; l < kOutputs; ++l) {
    double v = c.cross(l) * x(c.pair[static_cast<std::size_t>(l)][0]) * x(c.pair[static_cast<std::size_t>(l)][1]);
    for (int k = 0; k < kInputs; ++k) v += c.amp(l, k) * std::sin(std::numbers::pi * c.freq(l, k) * x(k) + c.phase(l, k));
    h(l) = v;
  }
  return h;
}

TestProblem problem(const std::string& name) {
  if (name == "camel") {
    TestProblem p{"camel", 2, 2, 1, camel_inner,
                  [](const Eigen::Ref<const Eigen::RowVectorXd>& h) {
                    Eigen::RowVectorXd g(1);
                    g(0) = branin_mod_outer(h(0), h(1));
                    return g;
                  },
                  std::nullopt};
    p.id2_threshold = 0.5;
    return p;
  }
  if (name == "highdim") {
    TestProblem p{"highdim", 8, 10, 0, highdim_inner, {}, std::nullopt};
    p.id2_threshold = 8.0 / 4.0;
    return p;
  }
  if (name == "assembly") {
    TestProblem p{"assembly", 10, 53, 0, assembly_standin_inner, {}, std::nullopt};
    p.n0 = 30;
    p.skip_pca = true;
    p.id2_threshold = 10.0 / 4.0;
    return p;
  }
  fail(Errc::invalid_argument, "unknown problem '" + name + "'");
}

std::vector<std::string> problem_names() { return {"camel", "highdim", "assembly"}; }

InnerResponseMatrix evaluate_inner(const TestProblem& problem, const Eigen::Ref<const DesignMatrix>& x) {
  InnerResponseMatrix y(x.rows(), problem.L);
  for (Eigen::Index i = 0; i < x.rows(); ++i) y.row(i) = problem.inner(x.row(i));
  return y;
}

DesignMatrix poorly_filled_design(const TestProblem& problem, Eigen::Index n, std::uint64_t seed,
                                  const AnnealOptions& options) {
  require(n >= 2, "poorly_filled_design: n must be at least 2");
  Eigen::Index size = n;
  for (std::uint64_t attempt = 0;; ++attempt) {
    const DesignMatrix lhd = optimize_mmlhd(size, problem.K, options, derive_seed(seed, attempt)).points;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < lhd.rows(); ++i)
      if (lhd.row(i).sum() >= problem.id2_threshold) keep.push_back(i);
    const auto count = static_cast<Eigen::Index>(keep.size());
    if (count < n) {
      size += std::max<Eigen::Index>(1, (n - count) * size / std::max<Eigen::Index>(count, 1));
      continue;
    }
    // Thin to n points by repeatedly dropping one end of the closest pair.
    while (static_cast<Eigen::Index>(keep.size()) > n) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t drop = 0;
      for (std::size_t a = 0; a < keep.size(); ++a)
        for (std::size_t b = a + 1; b < keep.size(); ++b) {
          const double d = (lhd.row(keep[a]) - lhd.row(keep[b])).norm();
          if (d < best) {
            best = d;
            drop = b;
          }
        }
      keep.erase(keep.begin() + static_cast<std::ptrdiff_t>(drop));
    }
    DesignMatrix out(n, problem.K);
    for (Eigen::Index i = 0; i < n; ++i) out.row(i) = lhd.row(keep[static_cast<std::size_t>(i)]);
    return out;
  }
}

std::string to_string(Method m) {
  switch (m) {
    case Method::smdd: return "SMDD";
    case Method::smdd_det: return "SMDD-Det";
    case Method::mmlhd: return "MmLHD";
  }
  return "?";
}

std::string to_string(Initial i) { return i == Initial::id1 ? "ID1" : "ID2"; }

Method parse_method(const std::string& s) {
  if (s == "SMDD") return Method::smdd;
  if (s == "SMDD-Det") return Method::smdd_det;
  if (s == "MmLHD") return Method::mmlhd;
  fail(Errc::invalid_argument, "unknown method '" + s + "'");
}

Initial parse_initial(const std::string& s) {
  if (s == "ID1") return Initial::id1;
  if (s == "ID2") return Initial::id2;
  fail(Errc::invalid_argument, "unknown initial design '" + s + "'");
}

void ReplicationPlan::validate() const {
  require(!methods.empty(), "plan: methods must not be empty");
  require(!initials.empty(), "plan: initials must not be empty");
  require(replicates >= 1, "plan: replicates must be at least 1");
  require(!sizes.empty(), "plan: at least one final size N is required");
  require(test_size >= 1, "plan: test_size must be positive");
  require(frame_size >= 3, "plan: frame_size must be at least 3");
}

SmddConfig run_config(const ReplicationPlan& plan, const TestProblem& problem, Method method, Eigen::Index N,
                      std::uint64_t seed) {
  SmddConfig config;
  config.K = problem.K;
  config.L = problem.L;
  config.n0 = plan.n0 ? plan.n0 : problem.n0;
  config.N = N;
  config.a = plan.a;
  config.q = plan.q;
  config.kernel = plan.kernel;
  config.nu = plan.nu;
  config.skip_pca = problem.skip_pca;
  config.distance = method == Method::smdd_det ? DistanceVariant::deterministic : DistanceVariant::stochastic;
  config.seed = seed;
  config.anneal_budget = plan.anneal_budget;
  return config;
}

OutputFrame reference_frame(const TestProblem& problem, Eigen::Index size, double threshold) {
  const DesignMatrix reference = generate_lhd(size, problem.K, LevelStyle::midpoint, kFrameSeed).points;
  InnerResponseMatrix y = evaluate_inner(problem, reference);
  const std::vector<Eigen::Index> constant = constant_columns(y);
  require(constant.empty(), "reference_frame: constant inner output");
  return make_frame(y, threshold, problem.skip_pca);
}

DesignMatrix starting_design(const TestProblem& problem, const SmddConfig& config, Initial initial) {
  if (initial == Initial::id1) return initial_design(config);
  return poorly_filled_design(problem, config.initial_size(), derive_seed(config.seed, kPoorDesignStream),
                              AnnealOptions{config.q, config.anneal_budget});
}

DesignMatrix test_design(const TestProblem& problem, Eigen::Index size, std::uint64_t seed,
                         const AnnealOptions& options) {
  return optimize_mmlhd(size, problem.K, options, derive_seed(seed, kTestPointStream)).points;
}

SmddState run_sequential(const ReplicationPlan& plan, const TestProblem& problem, Method method, Initial initial,
                         Eigen::Index N, std::uint64_t seed) {
  require(method != Method::mmlhd, "run_sequential: MmLHD is not a sequential method");
  const SmddConfig config = run_config(plan, problem, method, N, seed);
  SmddState state = make_state(config, starting_design(problem, config, initial));
  run_to_completion(state, problem.inner);
  return state;
}

std::vector<BenchRow> run_replication(const ReplicationPlan& plan, const TestProblem& problem) {
  plan.validate();
  const OutputFrame frame = reference_frame(problem, plan.frame_size);
  const AnnealOptions anneal{plan.q, plan.anneal_budget};
  std::vector<BenchRow> rows;
  for (int r = 0; r < plan.replicates; ++r) {
    const std::uint64_t seed = plan.base_seed + static_cast<std::uint64_t>(r);
    const DesignMatrix test_points = test_design(problem, plan.test_size, seed, anneal);
    for (Eigen::Index N : plan.sizes) {
      for (Method method : plan.methods) {
        const SmddConfig config = run_config(plan, problem, method, N, seed);
        if (method == Method::mmlhd) {
          const DesignMatrix x =
              optimize_mmlhd(N, problem.K, anneal, derive_seed(seed, kBaselineStream + static_cast<std::uint64_t>(N)))
                  .points;
          const MetricReport report =
              evaluate_design(to_string(method), seed, x, evaluate_inner(problem, x), config, test_points, &frame);
          for (Initial initial : plan.initials) rows.push_back({problem.name, method, initial, report});
          continue;
        }
        for (Initial initial : plan.initials) {
          const SmddState state = run_sequential(plan, problem, method, initial, N, seed);
          rows.push_back({problem.name, method, initial,
                          evaluate_design(to_string(method), seed, state.x, state.y, config, test_points, &frame)});
        }
      }
    }
  }
  return rows;
}

}  // namespace smdd::bench
