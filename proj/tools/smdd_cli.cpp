#include <CLI11.hpp>

#include <fcntl.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "smdd/bench.hpp"
#include "smdd/design.hpp"
#include "smdd/engine.hpp"
#include "smdd/io.hpp"
#include "smdd/metrics.hpp"

namespace fs = std::filesystem;
using namespace smdd;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitCorrupt = 3;
constexpr int kExitProtocol = 4;

int exit_code(Errc code) {
  switch (code) {
    case Errc::corrupt_state:
      return kExitCorrupt;
    case Errc::protocol_violation:
    case Errc::finished:
    case Errc::invalid_state:
    case Errc::exhausted_candidates:
      return kExitProtocol;
    default:
      return kExitUsage;
  }
}

fs::path default_output_dir() {
  if (const char* env = std::getenv("SMDD_OUTPUT_DIR"); env && *env) return env;
  return ".";
}

// Exclusive lock next to a state file, released on scope exit.
class StateLock {
 public:
  explicit StateLock(const fs::path& state) : path_(state.string() + ".lock") {
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) fail(Errc::protocol_violation, "state file is locked by another process (" + path_.string() + ")");
  }
  ~StateLock() {
    ::close(fd_);
    std::error_code ec;
    fs::remove(path_, ec);
  }
  StateLock(const StateLock&) = delete;
  StateLock& operator=(const StateLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

void write_design(const fs::path& out, const DesignMatrix& x) {
  if (out.empty()) {
    io::write_matrix_csv(std::cout, x, "x");
  } else {
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    io::write_matrix_csv(out, x, "x");
  }
}

std::string method_label(const SmddConfig& config) {
  return bench::to_string(config.distance == DistanceVariant::deterministic ? bench::Method::smdd_det
                                                                            : bench::Method::smdd);
}

// Metrics for a finished design; built-in problems use the shared reference frame.
MetricReport design_metrics(const io::RunConfigFile& run, const DesignMatrix& x, const InnerResponseMatrix& y,
                            const std::string& method) {
  const AnnealOptions anneal{run.config.q, run.config.anneal_budget};
  if (run.problem == "external") {
    bench::TestProblem shape;
    shape.K = run.config.K;
    const DesignMatrix test = bench::test_design(shape, run.test_size, run.config.seed, anneal);
    return evaluate_design(method, run.config.seed, x, y, run.config, test);
  }
  const bench::TestProblem p = bench::problem(run.problem);
  const DesignMatrix test = bench::test_design(p, run.test_size, run.config.seed, anneal);
  const OutputFrame frame = bench::reference_frame(p, 2000, run.config.pc_threshold);
  return evaluate_design(method, run.config.seed, x, y, run.config, test, &frame);
}

void write_run_outputs(const fs::path& dir, const io::RunConfigFile& run, const SmddState& state) {
  fs::create_directories(dir);
  io::write_matrix_csv(dir / "design.csv", state.x, "x");
  io::write_matrix_csv(dir / "responses.csv", state.y, "h");
  io::write_trace_csv(dir / "trace.csv", state.trace);
  const fs::path metrics = dir / "metrics.csv";
  fs::remove(metrics);
  io::append_metrics_csv(metrics, design_metrics(run, state.x, state.y, method_label(state.config)));
}

io::RunConfigFile load_run_config(const fs::path& path) { return io::run_config_from_json(io::read_json(path)); }

SmddState initial_state(const io::RunConfigFile& run, const fs::path& design_file) {
  if (!design_file.empty()) {
    const DesignMatrix start = io::read_matrix_csv(design_file);
    return make_state(run.config, start);
  }
  if (run.problem == "external") {
    require(run.initial == bench::Initial::id1, "ID2 needs a built-in problem; pass --design instead");
    return make_state(run.config, initial_design(run.config));
  }
  return make_state(run.config, bench::starting_design(bench::problem(run.problem), run.config, run.initial));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential mixed-distance designs for two-layer simulators"};
  app.require_subcommand(1);

  // lhd
  auto* lhd = app.add_subcommand("lhd", "Latin hypercube or maximin LHD");
  Eigen::Index lhd_n = 0, lhd_k = 0;
  bool lhd_maximin = false, lhd_random = false;
  double lhd_q = 15.0;
  std::uint64_t lhd_seed = 0;
  std::optional<std::size_t> lhd_budget;
  std::string lhd_out;
  lhd->add_option("--n", lhd_n, "Number of points")->required();
  lhd->add_option("--k", lhd_k, "Number of inputs")->required();
  lhd->add_flag("--maximin", lhd_maximin, "Optimize phi_q by simulated annealing");
  lhd->add_flag("--random-levels", lhd_random, "Uniform position inside each cell instead of the midpoint");
  lhd->add_option("--q", lhd_q, "phi_q exponent");
  lhd->add_option("--seed", lhd_seed, "Random seed");
  lhd->add_option("--budget", lhd_budget, "Annealing budget (default 10^4 K)");
  lhd->add_option("--out", lhd_out, "Output CSV (stdout when omitted)");

  // slhd
  auto* slhd = app.add_subcommand("slhd", "Sliced maximin LHD");
  Eigen::Index slhd_t = 0, slhd_m = 0, slhd_k = 0;
  double slhd_q = 15.0;
  std::uint64_t slhd_seed = 0;
  std::optional<std::size_t> slhd_budget;
  std::string slhd_out;
  slhd->add_option("--slices", slhd_t, "Number of slices")->required();
  slhd->add_option("--size", slhd_m, "Points per slice")->required();
  slhd->add_option("--k", slhd_k, "Number of inputs")->required();
  slhd->add_option("--q", slhd_q, "phi_q exponent");
  slhd->add_option("--seed", slhd_seed, "Random seed");
  slhd->add_option("--budget", slhd_budget, "Annealing budget (default 10^4 K)");
  slhd->add_option("--out", slhd_out, "Output CSV (stdout when omitted)");

  // run
  auto* run = app.add_subcommand("run", "Full sequential design against a built-in problem");
  std::string run_config, run_out;
  run->add_option("config", run_config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out-dir", run_out, "Output directory (overrides the config and SMDD_OUTPUT_DIR)");

  // init / ask / tell
  auto* init = app.add_subcommand("init", "Create a state file for an ask/tell session");
  std::string init_config, init_state, init_design;
  init->add_option("config", init_config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  init->add_option("--state", init_state, "State file to create")->required();
  init->add_option("--design", init_design, "Initial design CSV (default: from the config)")
      ->check(CLI::ExistingFile);

  auto* ask_cmd = app.add_subcommand("ask", "Print the next point to evaluate");
  std::string ask_state;
  ask_cmd->add_option("--state", ask_state, "State file")->required();

  auto* tell_cmd = app.add_subcommand("tell", "Record inner outputs for the last asked point");
  std::string tell_state, tell_point, tell_values;
  tell_cmd->add_option("--state", tell_state, "State file")->required();
  tell_cmd->add_option("--point", tell_point, "Point as printed by ask")->required();
  tell_cmd->add_option("--values", tell_values, "Comma-separated inner outputs h1..hL")->required();

  // metrics
  auto* metrics = app.add_subcommand("metrics", "AID_x, AID_h and MPV for a design");
  std::string met_state, met_config, met_design, met_responses, met_out, met_method;
  metrics->add_option("--state", met_state, "State file; writes design, responses, trace and metrics CSVs");
  metrics->add_option("--config", met_config, "Run configuration (JSON) for --design/--responses");
  metrics->add_option("--design", met_design, "Design CSV");
  metrics->add_option("--responses", met_responses, "Inner response CSV");
  metrics->add_option("--method", met_method, "Method label for the metrics row");
  metrics->add_option("--out", met_out, "With --state: output directory. Otherwise: metrics CSV to append to");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Replication study");
  std::string bench_plan, bench_out;
  bench_cmd->add_option("plan", bench_plan, "Replication plan (JSON)")->required()->check(CLI::ExistingFile);
  bench_cmd->add_option("--out", bench_out, "Output CSV (default SMDD_OUTPUT_DIR/bench.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*lhd) {
      require(lhd_n >= 2, "lhd: --n must be at least 2");
      require(lhd_k >= 1, "lhd: --k must be at least 1");
      const LevelStyle style = lhd_random ? LevelStyle::random_in_cell : LevelStyle::midpoint;
      const LhdDesign d = lhd_maximin ? optimize_mmlhd(lhd_n, lhd_k, AnnealOptions{lhd_q, lhd_budget}, lhd_seed, style)
                                      : generate_lhd(lhd_n, lhd_k, style, lhd_seed);
      write_design(lhd_out, d.points);
    } else if (*slhd) {
      require(slhd_t >= 1 && slhd_m >= 2 && slhd_k >= 1, "slhd: need --slices >= 1, --size >= 2, --k >= 1");
      const SlicedCandidateSet s = generate_slhd(slhd_t, slhd_m, slhd_k, slhd_seed, AnnealOptions{slhd_q, slhd_budget});
      Eigen::MatrixXd table(s.points.rows(), s.points.cols() + 1);
      table.leftCols(s.points.cols()) = s.points;
      for (Eigen::Index i = 0; i < table.rows(); ++i) table(i, s.points.cols()) = static_cast<double>(i / s.slice_size);
      std::ostringstream csv;
      io::write_matrix_csv(csv, table, "x");
      // Last column is the slice index.
      std::string text = csv.str();
      const auto header_end = text.find('\n');
      const auto last_comma = text.rfind(',', header_end);
      text.replace(last_comma + 1, header_end - last_comma - 1, "slice");
      if (slhd_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream out(slhd_out);
        if (!out) fail(Errc::invalid_argument, "cannot write " + slhd_out);
        out << text;
      }
    } else if (*run) {
      const io::RunConfigFile cfg = load_run_config(run_config);
      require(cfg.problem != "external", "run: needs a built-in problem (" + [] {
        std::string names;
        for (const auto& n : bench::problem_names()) names += (names.empty() ? "" : ", ") + n;
        return names;
      }() + "); use init/ask/tell for external simulators");
      const bench::TestProblem p = bench::problem(cfg.problem);
      SmddState state = initial_state(cfg, {});
      run_to_completion(state, p.inner);
      const fs::path dir = !run_out.empty() ? fs::path(run_out) : !cfg.output_dir.empty() ? cfg.output_dir
                                                                                         : default_output_dir();
      write_run_outputs(dir, cfg, state);
      std::cerr << "wrote " << state.runs() << " runs to " << dir.string() << '\n';
    } else if (*init) {
      const io::RunConfigFile cfg = load_run_config(init_config);
      const fs::path state_path = init_state;
      if (state_path.has_parent_path()) fs::create_directories(state_path.parent_path());
      StateLock lock(state_path);
      if (fs::exists(state_path)) fail(Errc::invalid_argument, "state file already exists: " + state_path.string());
      io::save_state(state_path, initial_state(cfg, init_design));
    } else if (*ask_cmd) {
      StateLock lock(ask_state);
      SmddState state = io::load_state(ask_state);
      const bool was_pending = state.pending.has_value();
      const Eigen::RowVectorXd x = ask(state);
      if (!was_pending) io::save_state(ask_state, state);
      std::cout << io::format_vector(x) << '\n';
    } else if (*tell_cmd) {
      StateLock lock(tell_state);
      SmddState state = io::load_state(tell_state);
      const Eigen::RowVectorXd point = io::parse_vector(tell_point);
      const Eigen::RowVectorXd values = io::parse_vector(tell_values);
      tell(state, point, values);
      io::save_state(tell_state, state);
      std::cerr << "runs " << state.runs() << '/' << state.config.N << (state.finished() ? " (finished)" : "")
                << '\n';
    } else if (*metrics) {
      if (!met_state.empty()) {
        StateLock lock(met_state);
        SmddState state = io::load_state(met_state);
        io::RunConfigFile cfg;
        cfg.config = state.config;
        if (!met_config.empty()) {
          cfg = load_run_config(met_config);
          cfg.config = state.config;
        }
        const fs::path dir = met_out.empty() ? default_output_dir() : fs::path(met_out);
        write_run_outputs(dir, cfg, state);
      } else {
        require(!met_config.empty() && !met_design.empty() && !met_responses.empty(),
                "metrics: pass --state, or --config with --design and --responses");
        const io::RunConfigFile cfg = load_run_config(met_config);
        const DesignMatrix x = io::read_matrix_csv(fs::path(met_design));
        const InnerResponseMatrix y = io::read_matrix_csv(fs::path(met_responses));
        require(x.cols() == cfg.config.K && y.cols() == cfg.config.L && x.rows() == y.rows(),
                "metrics: design/response shapes do not match the config");
        const MetricReport report =
            design_metrics(cfg, x, y, met_method.empty() ? method_label(cfg.config) : met_method);
        if (met_out.empty()) {
          const fs::path tmp = default_output_dir() / "metrics.csv";
          io::append_metrics_csv(tmp, report);
        } else {
          io::append_metrics_csv(met_out, report);
        }
      }
    } else if (*bench_cmd) {
      std::string name;
      const bench::ReplicationPlan plan = io::plan_from_json(io::read_json(bench_plan), name);
      const bench::TestProblem p = bench::problem(name);
      const auto rows = bench::run_replication(plan, p);
      const fs::path out = bench_out.empty() ? default_output_dir() / "bench.csv" : fs::path(bench_out);
      if (out.has_parent_path()) fs::create_directories(out.parent_path());
      io::write_bench_csv(out, rows);
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}
