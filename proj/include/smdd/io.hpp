#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "smdd/bench.hpp"
#include "smdd/engine.hpp"
#include "smdd/metrics.hpp"

namespace smdd::io {

using json = nlohmann::json;

/// Shortest form that round-trips a double (17 significant digits).
std::string format_double(double v);

/// CSV with header prefix1..prefixK and one row per matrix row.
void write_matrix_csv(std::ostream& out, const Eigen::Ref<const Eigen::MatrixXd>& m, const std::string& prefix);
void write_matrix_csv(const std::filesystem::path& path, const Eigen::Ref<const Eigen::MatrixXd>& m,
                      const std::string& prefix);
Eigen::MatrixXd read_matrix_csv(std::istream& in);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

/// Comma-separated list of numbers, e.g. "0.25,0.75".
Eigen::RowVectorXd parse_vector(const std::string& text);
std::string format_vector(const Eigen::Ref<const Eigen::RowVectorXd>& v);

json config_to_json(const SmddConfig& config);
SmddConfig config_from_json(const json& j);

json state_to_json(const SmddState& state);
/// Throws Error(corrupt_state) on schema or invariant violations.
SmddState state_from_json(const json& j);

/// Write to a temporary sibling, then rename over the target.
void save_state(const std::filesystem::path& path, const SmddState& state);
SmddState load_state(const std::filesystem::path& path);

/// Run description: SmddConfig fields plus problem, initial design and outputs.
struct RunConfigFile {
  SmddConfig config;
  std::string problem = "external";
  bench::Initial initial = bench::Initial::id1;
  std::filesystem::path output_dir;
  Eigen::Index test_size = 500;
};

/// K and L default to the built-in problem's dimensions. Validates the config.
RunConfigFile run_config_from_json(const json& j);

bench::ReplicationPlan plan_from_json(const json& j, std::string& problem_name);

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace);

/// Appends one row, writing the header when the file is new.
void append_metrics_csv(const std::filesystem::path& path, const MetricReport& report);

void write_bench_csv(std::ostream& out, const std::vector<bench::BenchRow>& rows);
void write_bench_csv(const std::filesystem::path& path, const std::vector<bench::BenchRow>& rows);

json read_json(const std::filesystem::path& path);

}  // namespace smdd::io
