#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "smdd/bench.hpp"
#include "smdd/error.hpp"
#include "smdd/io.hpp"

using namespace smdd;
using namespace smdd::io;
namespace fs = std::filesystem;

namespace {

SmddConfig camel_config() {
  SmddConfig c;
  c.K = 2;
  c.L = 2;
  c.n0 = 20;
  c.N = 30;
  c.seed = 5;
  return c;
}

SmddState midway_state() {
  SmddState s = make_state(camel_config(), initial_design(camel_config()));
  while (s.initial_queue.rows() > 0) step(s, bench::camel_inner);
  step(s, bench::camel_inner);
  step(s, bench::camel_inner);
  ask(s);
  return s;
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("smdd_test_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::invalid_argument;
}

}  // namespace

TEST(Csv, RoundTripIsExact) {
  Eigen::MatrixXd m(3, 2);
  m << 0.1, 1.0 / 3.0, -2.5e-17, 123456.789, std::nextafter(1.0, 2.0), 0.0;
  std::stringstream ss;
  write_matrix_csv(ss, m, "x");
  EXPECT_EQ(ss.str().substr(0, 6), "x1,x2\n");
  const Eigen::MatrixXd back = read_matrix_csv(ss);
  EXPECT_TRUE((back.array() == m.array()).all());
}

TEST(Csv, RejectsMalformedInput) {
  std::stringstream ragged("x1,x2\n0.1,0.2\n0.3\n");
  EXPECT_EQ(code_of([&] { read_matrix_csv(ragged); }), Errc::invalid_data);
  std::stringstream text("x1\nabc\n");
  EXPECT_EQ(code_of([&] { read_matrix_csv(text); }), Errc::invalid_data);
}

TEST(Vector, ParseAndFormat) {
  const Eigen::RowVectorXd v = parse_vector("0.25, 0.75,1e-3");
  ASSERT_EQ(v.size(), 3);
  EXPECT_DOUBLE_EQ(v(2), 1e-3);
  EXPECT_TRUE((parse_vector(format_vector(v)).array() == v.array()).all());
  EXPECT_THROW(parse_vector("0.1,,0.2"), Error);
  EXPECT_THROW(parse_vector(""), Error);
}

TEST(Config, JsonRoundTrip) {
  SmddConfig c = camel_config();
  c.mode = AcquisitionMode::weighted;
  c.w = 0.4;
  c.kernel = KernelFamily::gaussian;
  c.distance = DistanceVariant::deterministic;
  c.anneal_budget = 1234;
  const SmddConfig d = config_from_json(config_to_json(c));
  EXPECT_EQ(config_to_json(d), config_to_json(c));
  EXPECT_EQ(d.w, 0.4);
  EXPECT_EQ(d.kernel, KernelFamily::gaussian);
}

TEST(Config, RejectsUnknownEnum) {
  json j = config_to_json(camel_config());
  j["kernel"] = "cubic";
  EXPECT_THROW(config_from_json(j), Error);
}

TEST(RunConfig, FillsProblemDimensions) {
  const json j = {{"problem", "camel"}, {"N", 40}, {"seed", 3}};
  const RunConfigFile r = run_config_from_json(j);
  EXPECT_EQ(r.config.K, 2);
  EXPECT_EQ(r.config.L, 2);
  EXPECT_EQ(r.config.initial_size(), 20);
  EXPECT_THROW(run_config_from_json(json{{"problem", "camel"}, {"N", 20}}), Error);
  EXPECT_THROW(run_config_from_json(json{{"problem", "nope"}, {"N", 40}}), Error);
}

TEST(State, JsonRoundTripPreservesNextAsk) {
  SmddState s = midway_state();
  SmddState t = state_from_json(state_to_json(s));
  EXPECT_EQ(state_to_json(t), state_to_json(s));
  EXPECT_TRUE((ask(t).array() == ask(s).array()).all());

  // Same next selection once the pending point is answered.
  const Eigen::RowVectorXd x = ask(s);
  tell(s, x, bench::camel_inner(x));
  tell(t, x, bench::camel_inner(x));
  EXPECT_TRUE((ask(t).array() == ask(s).array()).all());
}

TEST(State, SaveAndLoad) {
  const fs::path dir = temp_dir("save");
  const SmddState s = midway_state();
  save_state(dir / "s.json", s);
  EXPECT_FALSE(fs::exists(dir / "s.json.tmp"));
  EXPECT_EQ(state_to_json(load_state(dir / "s.json")), state_to_json(s));
  fs::remove_all(dir);
}

TEST(State, CorruptFilesAreReported) {
  const fs::path dir = temp_dir("corrupt");
  std::ofstream(dir / "garbage.json") << "{ not json";
  EXPECT_EQ(code_of([&] { load_state(dir / "garbage.json"); }), Errc::corrupt_state);

  json j = state_to_json(midway_state());
  j["Y"].erase(0);
  EXPECT_EQ(code_of([&] { state_from_json(j); }), Errc::corrupt_state);

  j = state_to_json(midway_state());
  j["format"] = "other";
  EXPECT_EQ(code_of([&] { state_from_json(j); }), Errc::corrupt_state);
  fs::remove_all(dir);
}

TEST(Plan, ParsesFields) {
  std::string name;
  const json j = {{"problem", "camel"}, {"methods", {"SMDD", "MmLHD"}}, {"initials", {"ID2"}},
                  {"replicates", 3},    {"N", {30, 40}},                 {"n0", 20}};
  const bench::ReplicationPlan plan = plan_from_json(j, name);
  EXPECT_EQ(name, "camel");
  EXPECT_EQ(plan.methods.size(), 2u);
  EXPECT_EQ(plan.initials.front(), bench::Initial::id2);
  EXPECT_EQ(plan.sizes, (std::vector<Eigen::Index>{30, 40}));
  json empty = j;
  empty["methods"] = json::array();
  EXPECT_THROW(plan_from_json(empty, name), Error);
}

TEST(MetricsCsv, AppendsHeaderOnce) {
  const fs::path dir = temp_dir("metrics");
  MetricReport r{"SMDD", 2, 40, 0.5, 1.25, {0.1, 0.2}};
  append_metrics_csv(dir / "m.csv", r);
  append_metrics_csv(dir / "m.csv", r);
  std::ifstream in(dir / "m.csv");
  std::string header, a, b, extra;
  std::getline(in, header);
  std::getline(in, a);
  std::getline(in, b);
  EXPECT_EQ(header, "method,seed,N,aid_x,aid_h,mpv_1,mpv_2");
  EXPECT_EQ(a, b);
  EXPECT_FALSE(std::getline(in, extra));
  fs::remove_all(dir);
}
