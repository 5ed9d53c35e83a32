#include "smdd/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace smdd::io {

namespace {

[[noreturn]] void corrupt(const std::string& what) { fail(Errc::corrupt_state, "state file: " + what); }

json matrix_rows(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd rows_matrix(const json& rows, Eigen::Index cols) {
  if (!rows.is_array()) corrupt("expected an array of rows");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const json& row = rows[i];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) corrupt("row has the wrong length");
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (!row[k].is_number()) corrupt("non-numeric matrix entry");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k].get<double>();
    }
  }
  return m;
}

json vector_json(const Eigen::Ref<const Eigen::VectorXd>& v) { return std::vector<double>(v.begin(), v.end()); }

Eigen::RowVectorXd json_row(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::RowVectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::string split_trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(split_trim(cell));
  return out;
}

double parse_double(const std::string& cell) {
  double v = 0.0;
  const char* begin = cell.data();
  const char* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end) fail(Errc::invalid_data, "not a number: '" + cell + "'");
  return v;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_matrix_csv(std::ostream& out, const Eigen::Ref<const Eigen::MatrixXd>& m, const std::string& prefix) {
  for (Eigen::Index k = 0; k < m.cols(); ++k) out << (k ? "," : "") << prefix << (k + 1);
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) out << (k ? "," : "") << format_double(m(i, k));
    out << '\n';
  }
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::Ref<const Eigen::MatrixXd>& m,
                      const std::string& prefix) {
  std::ofstream out(path);
  if (!out) fail(Errc::invalid_argument, "cannot write " + path.string());
  write_matrix_csv(out, m, prefix);
}

Eigen::MatrixXd read_matrix_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(Errc::invalid_data, "empty CSV");
  const std::size_t cols = split(line).size();
  std::vector<double> values;
  Eigen::Index rows = 0;
  while (std::getline(in, line)) {
    if (split_trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != cols) fail(Errc::invalid_data, "CSV row " + std::to_string(rows + 1) + " has the wrong width");
    for (const auto& c : cells) values.push_back(parse_double(c));
    ++rows;
  }
  Eigen::MatrixXd m(rows, static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k) m(i, k) = values[static_cast<std::size_t>(i * m.cols() + k)];
  return m;
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::invalid_argument, "cannot read " + path.string());
  return read_matrix_csv(in);
}

Eigen::RowVectorXd parse_vector(const std::string& text) {
  const auto cells = split(text);
  require(!cells.empty(), "empty vector");
  Eigen::RowVectorXd v(static_cast<Eigen::Index>(cells.size()));
  for (std::size_t i = 0; i < cells.size(); ++i) v(static_cast<Eigen::Index>(i)) = parse_double(cells[i]);
  return v;
}

std::string format_vector(const Eigen::Ref<const Eigen::RowVectorXd>& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v(i));
  return out;
}

json config_to_json(const SmddConfig& c) {
  json j;
  j["K"] = c.K;
  j["L"] = c.L;
  j["n0"] = c.n0 ? json(*c.n0) : json(nullptr);
  j["N"] = c.N;
  j["a"] = c.a;
  j["q"] = c.q;
  j["w"] = c.w ? json(*c.w) : json(nullptr);
  j["mode"] = c.mode == AcquisitionMode::candidate ? "candidate" : "weighted";
  j["pc_threshold"] = c.pc_threshold;
  j["kernel"] = c.kernel == KernelFamily::matern ? "matern" : "gaussian";
  j["nu"] = c.nu;
  j["skip_pca"] = c.skip_pca;
  j["distance"] = c.distance == DistanceVariant::stochastic ? "stochastic" : "deterministic";
  j["seed"] = c.seed;
  j["warm_start"] = c.warm_start;
  j["anneal_budget"] = c.anneal_budget ? json(*c.anneal_budget) : json(nullptr);
  return j;
}

SmddConfig config_from_json(const json& j) {
  if (!j.is_object()) fail(Errc::invalid_argument, "config must be a JSON object");
  SmddConfig c;
  try {
    c.K = get_or<Eigen::Index>(j, "K", 0);
    c.L = get_or<Eigen::Index>(j, "L", 0);
    if (j.contains("n0") && !j["n0"].is_null()) c.n0 = j["n0"].get<Eigen::Index>();
    c.N = get_or<Eigen::Index>(j, "N", 0);
    c.a = get_or<double>(j, "a", c.a);
    c.q = get_or<double>(j, "q", c.q);
    if (j.contains("w") && !j["w"].is_null()) c.w = j["w"].get<double>();
    const auto mode = get_or<std::string>(j, "mode", "candidate");
    if (mode == "candidate") c.mode = AcquisitionMode::candidate;
    else if (mode == "weighted") c.mode = AcquisitionMode::weighted;
    else fail(Errc::invalid_argument, "config: unknown mode '" + mode + "'");
    c.pc_threshold = get_or<double>(j, "pc_threshold", c.pc_threshold);
    const auto kernel = get_or<std::string>(j, "kernel", "matern");
    if (kernel == "matern") c.kernel = KernelFamily::matern;
    else if (kernel == "gaussian") c.kernel = KernelFamily::gaussian;
    else fail(Errc::invalid_argument, "config: unknown kernel '" + kernel + "'");
    c.nu = get_or<double>(j, "nu", c.nu);
    c.skip_pca = get_or<bool>(j, "skip_pca", false);
    const auto distance = get_or<std::string>(j, "distance", "stochastic");
    if (distance == "stochastic") c.distance = DistanceVariant::stochastic;
    else if (distance == "deterministic") c.distance = DistanceVariant::deterministic;
    else fail(Errc::invalid_argument, "config: unknown distance variant '" + distance + "'");
    c.seed = get_or<std::uint64_t>(j, "seed", 0);
    c.warm_start = get_or<bool>(j, "warm_start", false);
    if (j.contains("anneal_budget") && !j["anneal_budget"].is_null())
      c.anneal_budget = j["anneal_budget"].get<std::size_t>();
  } catch (const json::exception& e) {
    fail(Errc::invalid_argument, std::string("config: ") + e.what());
  }
  return c;
}

json state_to_json(const SmddState& s) {
  json j;
  j["format"] = "smdd-state";
  j["version"] = 1;
  j["config"] = config_to_json(s.config);
  j["X"] = matrix_rows(s.x);
  j["Y"] = matrix_rows(s.y);
  j["initial_queue"] = matrix_rows(s.initial_queue);
  j["candidates"] = matrix_rows(s.candidates);
  j["iteration"] = s.iteration;
  j["rng_state"] = s.rng_state;
  json trace = json::array();
  for (const TraceRow& t : s.trace)
    trace.push_back({{"iteration", t.iteration},
                     {"point", vector_json(t.point.transpose())},
                     {"min_dist_h", t.min_dist_h},
                     {"phi", t.phi},
                     {"lpc", t.lpc}});
  j["trace"] = trace;
  if (s.pending) {
    json p{{"point", vector_json(s.pending->point.transpose())}, {"selection", nullptr}};
    if (s.pending->selection) {
      const Selection& sel = *s.pending->selection;
      p["selection"] = {{"candidate", sel.candidate},
                        {"phi", sel.phi},
                        {"min_dist_h", sel.min_dist_h},
                        {"criterion", sel.criterion},
                        {"lpc", sel.lpc}};
    }
    j["pending"] = p;
  } else {
    j["pending"] = nullptr;
  }
  if (s.summary) {
    j["fitted"] = {{"theta", s.summary->theta},
                   {"beta", s.summary->beta},
                   {"sigma2", s.summary->sigma2},
                   {"variance_fractions", vector_json(s.summary->variance_fractions)},
                   {"lpc", s.summary->lpc}};
  } else {
    j["fitted"] = nullptr;
  }
  return j;
}

SmddState state_from_json(const json& j) {
  SmddState s;
  try {
    if (!j.is_object() || j.value("format", "") != "smdd-state") corrupt("not an smdd state document");
    if (j.at("version").get<int>() != 1) corrupt("unsupported version");
    try {
      s.config = config_from_json(j.at("config"));
      s.config.validate();
    } catch (const Error& e) {
      corrupt(std::string("invalid config: ") + e.what());
    }
    const Eigen::Index K = s.config.K, L = s.config.L;
    s.x = rows_matrix(j.at("X"), K);
    s.y = rows_matrix(j.at("Y"), L);
    s.initial_queue = rows_matrix(j.at("initial_queue"), K);
    s.candidates = rows_matrix(j.at("candidates"), K);
    s.iteration = j.at("iteration").get<Eigen::Index>();
    s.rng_state = j.at("rng_state").get<std::string>();
    for (const json& t : j.at("trace")) {
      s.trace.push_back({t.at("iteration").get<Eigen::Index>(), json_row(t.at("point")),
                         t.at("min_dist_h").get<double>(), t.at("phi").get<double>(),
                         t.at("lpc").get<Eigen::Index>()});
    }
    const json& p = j.at("pending");
    if (!p.is_null()) {
      PendingAsk pending{json_row(p.at("point")), std::nullopt};
      const json& sel = p.at("selection");
      if (!sel.is_null()) {
        Selection selection;
        selection.candidate = sel.at("candidate").get<Eigen::Index>();
        selection.point = pending.point;
        selection.phi = sel.at("phi").get<double>();
        selection.min_dist_h = sel.at("min_dist_h").get<double>();
        selection.criterion = sel.at("criterion").get<double>();
        selection.lpc = sel.at("lpc").get<Eigen::Index>();
        if (selection.candidate < 0 || selection.candidate >= s.candidates.rows() ||
            (s.candidates.row(selection.candidate) - pending.point).cwiseAbs().maxCoeff() != 0.0)
          corrupt("pending selection does not match the candidate pool");
        pending.selection = selection;
      }
      if (pending.point.size() != K) corrupt("pending point has the wrong dimension");
      s.pending = pending;
    }
    const json& f = j.at("fitted");
    if (!f.is_null()) {
      FitSummary summary;
      summary.theta = f.at("theta").get<std::vector<double>>();
      summary.beta = f.at("beta").get<std::vector<double>>();
      summary.sigma2 = f.at("sigma2").get<std::vector<double>>();
      const auto fractions = f.at("variance_fractions").get<std::vector<double>>();
      summary.variance_fractions =
          Eigen::Map<const Eigen::VectorXd>(fractions.data(), static_cast<Eigen::Index>(fractions.size()));
      summary.lpc = f.at("lpc").get<Eigen::Index>();
      s.summary = summary;
    }
  } catch (const json::exception& e) {
    corrupt(e.what());
  }
  if (s.x.rows() != s.y.rows()) corrupt("X and Y row counts differ");
  if (s.x.rows() + s.initial_queue.rows() < s.config.initial_size() && s.x.rows() < s.config.initial_size())
    corrupt("initial design is incomplete");
  if (s.iteration != std::max<Eigen::Index>(0, s.x.rows() - s.config.initial_size()))
    corrupt("iteration does not match the run count");
  if (!s.y.allFinite()) corrupt("non-finite response");
  return s;
}

void save_state(const std::filesystem::path& path, const SmddState& state) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) fail(Errc::invalid_argument, "cannot write " + tmp.string());
    out << state_to_json(state).dump(1) << '\n';
    out.flush();
    if (!out) fail(Errc::invalid_argument, "failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::invalid_argument, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(Errc::invalid_argument, path.string() + ": " + e.what());
  }
}

SmddState load_state(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::corrupt_state, "cannot read state file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    corrupt(e.what());
  }
  return state_from_json(j);
}

RunConfigFile run_config_from_json(const json& j) {
  if (!j.is_object()) fail(Errc::invalid_argument, "run config must be a JSON object");
  RunConfigFile out;
  out.problem = j.value("problem", std::string("external"));
  json cfg = j;
  if (out.problem != "external") {
    const bench::TestProblem p = bench::problem(out.problem);
    if (!cfg.contains("K")) cfg["K"] = p.K;
    if (!cfg.contains("L")) cfg["L"] = p.L;
    if (!cfg.contains("skip_pca")) cfg["skip_pca"] = p.skip_pca;
    if ((!cfg.contains("n0") || cfg["n0"].is_null()) && p.n0) cfg["n0"] = *p.n0;
    require(cfg["K"].get<Eigen::Index>() == p.K && cfg["L"].get<Eigen::Index>() == p.L,
            "run config: K and L do not match problem '" + out.problem + "'");
  }
  out.config = config_from_json(cfg);
  out.config.validate();
  out.initial = bench::parse_initial(j.value("initial", std::string("ID1")));
  out.output_dir = j.value("output_dir", std::string{});
  out.test_size = j.value("test_size", Eigen::Index{500});
  require(out.test_size >= 1, "run config: test_size must be positive");
  return out;
}

bench::ReplicationPlan plan_from_json(const json& j, std::string& problem_name) {
  if (!j.is_object()) fail(Errc::invalid_argument, "plan must be a JSON object");
  bench::ReplicationPlan plan;
  try {
    problem_name = j.at("problem").get<std::string>();
    if (j.contains("methods")) {
      plan.methods.clear();
      for (const auto& m : j["methods"]) plan.methods.push_back(bench::parse_method(m.get<std::string>()));
    }
    if (j.contains("initials")) {
      plan.initials.clear();
      for (const auto& i : j["initials"]) plan.initials.push_back(bench::parse_initial(i.get<std::string>()));
    }
    plan.replicates = j.value("replicates", plan.replicates);
    plan.base_seed = j.value("seed", plan.base_seed);
    if (j.contains("n0") && !j["n0"].is_null()) plan.n0 = j["n0"].get<Eigen::Index>();
    const json& sizes = j.at("N");
    if (sizes.is_array()) plan.sizes = sizes.get<std::vector<Eigen::Index>>();
    else plan.sizes = {sizes.get<Eigen::Index>()};
    plan.test_size = j.value("test_size", plan.test_size);
    plan.a = j.value("a", plan.a);
    plan.q = j.value("q", plan.q);
    const auto kernel = j.value("kernel", std::string("matern"));
    if (kernel == "gaussian") plan.kernel = KernelFamily::gaussian;
    else if (kernel != "matern") fail(Errc::invalid_argument, "plan: unknown kernel '" + kernel + "'");
    plan.nu = j.value("nu", plan.nu);
    if (j.contains("anneal_budget") && !j["anneal_budget"].is_null())
      plan.anneal_budget = j["anneal_budget"].get<std::size_t>();
    plan.frame_size = j.value("frame_size", plan.frame_size);
  } catch (const json::exception& e) {
    fail(Errc::invalid_argument, std::string("plan: ") + e.what());
  }
  plan.validate();
  return plan;
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace) {
  std::ofstream out(path);
  if (!out) fail(Errc::invalid_argument, "cannot write " + path.string());
  const Eigen::Index K = trace.empty() ? 0 : trace.front().point.size();
  out << "iteration";
  for (Eigen::Index k = 0; k < K; ++k) out << ",x" << (k + 1);
  out << ",min_dist_h,phi_q,L_pc\n";
  for (const TraceRow& t : trace) {
    out << t.iteration;
    for (Eigen::Index k = 0; k < K; ++k) out << ',' << format_double(t.point(k));
    out << ',' << format_double(t.min_dist_h) << ',' << format_double(t.phi) << ',' << t.lpc << '\n';
  }
}

void append_metrics_csv(const std::filesystem::path& path, const MetricReport& r) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) fail(Errc::invalid_argument, "cannot write " + path.string());
  if (fresh) {
    out << "method,seed,N,aid_x,aid_h";
    for (std::size_t l = 0; l < r.mpv.size(); ++l) out << ",mpv_" << (l + 1);
    out << '\n';
  }
  out << r.method << ',' << r.seed << ',' << r.n << ',' << format_double(r.aid_x) << ',' << format_double(r.aid_h);
  for (double v : r.mpv) out << ',' << format_double(v);
  out << '\n';
}

void write_bench_csv(std::ostream& out, const std::vector<bench::BenchRow>& rows) {
  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.report.mpv.size());
  out << "problem,method,initial,seed,N,aid_x,aid_h";
  for (std::size_t l = 0; l < width; ++l) out << ",mpv_" << (l + 1);
  out << '\n';
  for (const auto& r : rows) {
    out << r.problem << ',' << bench::to_string(r.method) << ',' << bench::to_string(r.initial) << ','
        << r.report.seed << ',' << r.report.n << ',' << format_double(r.report.aid_x) << ','
        << format_double(r.report.aid_h);
    for (std::size_t l = 0; l < width; ++l)
      out << ',' << (l < r.report.mpv.size() ? format_double(r.report.mpv[l]) : std::string{});
    out << '\n';
  }
}

void write_bench_csv(const std::filesystem::path& path, const std::vector<bench::BenchRow>& rows) {
  std::ofstream out(path);
  if (!out) fail(Errc::invalid_argument, "cannot write " + path.string());
  write_bench_csv(out, rows);
}

}  // namespace smdd::io
