#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "smdd/engine.hpp"
#include "smdd/gp.hpp"
#include "smdd/pca.hpp"

namespace smdd {

/// Mean of metric(row_i, row_j) over all unordered pairs of rows.
template <typename Derived, typename Metric>
double aid(const Eigen::MatrixBase<Derived>& points, Metric&& metric) {
  const Eigen::Index n = points.rows();
  require(n >= 2, "aid: need at least two points");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) sum += metric(points.row(i), points.row(j));
  return 2.0 * sum / (static_cast<double>(n) * static_cast<double>(n - 1));
}

template <typename Derived>
double aid(const Eigen::MatrixBase<Derived>& points) {
  return aid(points, [](const auto& a, const auto& b) { return (a - b).norm(); });
}

/// Mean posterior variance of a fitted GP over a set of test points.
double mpv(const GpModel& gp, const Eigen::Ref<const DesignMatrix>& test_points);

/// Fixed coordinate system for comparing inner outputs across designs:
/// standardization constants and (optionally) PCA loadings from a reference sample.
struct OutputFrame {
  Eigen::RowVectorXd means;
  Eigen::RowVectorXd sds;
  std::optional<PcaModel> pca;
  Eigen::Index components = 0;

  /// Map raw responses (n x L) to frame coordinates (n x components).
  Eigen::MatrixXd map(const Eigen::Ref<const InnerResponseMatrix>& y) const;
};

/// Frame fitted on a reference response sample; skip_pca keeps standardized outputs.
OutputFrame make_frame(const Eigen::Ref<const InnerResponseMatrix>& reference, double threshold = 0.90,
                       bool skip_pca = false);

struct MetricReport {
  std::string method;
  std::uint64_t seed = 0;
  Eigen::Index n = 0;
  double aid_x = 0.0;
  double aid_h = 0.0;
  std::vector<double> mpv;
};

/// AID_x on the design, AID_h on realized output coordinates (the frame when
/// given, otherwise the design's own PC scores), and one MPV per component of
/// a surrogate refitted on the design.
MetricReport evaluate_design(const std::string& method, std::uint64_t seed,
                             const Eigen::Ref<const DesignMatrix>& x, const Eigen::Ref<const InnerResponseMatrix>& y,
                             const SmddConfig& config, const Eigen::Ref<const DesignMatrix>& test_points,
                             const OutputFrame* frame = nullptr);

}  // namespace smdd
