#include "smdd/metrics.hpp"

namespace smdd {

double mpv(const GpModel& gp, const Eigen::Ref<const DesignMatrix>& test_points) {
  require(test_points.rows() >= 1, "mpv: empty test set");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < test_points.rows(); ++i) sum += gp.posterior(test_points.row(i)).variance;
  return sum / static_cast<double>(test_points.rows());
}

Eigen::MatrixXd OutputFrame::map(const Eigen::Ref<const InnerResponseMatrix>& y) const {
  require(y.cols() == means.size(), "OutputFrame: output count differs from the frame");
  const Eigen::MatrixXd ystar = (y.rowwise() - means).array().rowwise() / sds.array();
  if (!pca) return ystar;
  return scores(*pca, ystar, components);
}

OutputFrame make_frame(const Eigen::Ref<const InnerResponseMatrix>& reference, double threshold, bool skip_pca) {
  const Standardized s = standardize(reference);
  OutputFrame frame{s.means, s.sds, std::nullopt, reference.cols()};
  if (!skip_pca) {
    frame.pca = fit_pca(s, threshold);
    frame.components = frame.pca->selected;
  }
  return frame;
}

MetricReport evaluate_design(const std::string& method, std::uint64_t seed,
                             const Eigen::Ref<const DesignMatrix>& x, const Eigen::Ref<const InnerResponseMatrix>& y,
                             const SmddConfig& config, const Eigen::Ref<const DesignMatrix>& test_points,
                             const OutputFrame* frame) {
  MetricReport report;
  report.method = method;
  report.seed = seed;
  report.n = x.rows();
  report.aid_x = aid(x);

  const Surrogate surrogate = fit_surrogate(x, y, config);
  report.aid_h = frame ? aid(frame->map(y)) : aid(surrogate.scores);
  for (const GpModel& gp : surrogate.gps) report.mpv.push_back(mpv(gp, test_points));
  return report;
}

}  // namespace smdd
