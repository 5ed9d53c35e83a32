#include "smdd/design.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <string>

#include "smdd/random.hpp"

namespace smdd {

double phi_q(std::span<const double> distances, double q) {
  require(q > 0.0, "phi_q: q must be positive");
  require(!distances.empty(), "phi_q: no distances");
  double dmin = std::numeric_limits<double>::infinity();
  for (double d : distances) {
    if (!(d > 0.0)) fail(Errc::degenerate_distance, "phi_q: non-positive distance (duplicated point)");
    dmin = std::min(dmin, d);
  }
  double sum = 0.0;
  for (double d : distances) sum += std::pow(dmin / d, q);
  return std::pow(sum, 1.0 / q) / dmin;
}

double design_phi_q(const Eigen::Ref<const DesignMatrix>& points, double q) {
  const Eigen::Index n = points.rows();
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) d.push_back((points.row(i) - points.row(j)).norm());
  return phi_q(d, q);
}

void validate_design(const Eigen::Ref<const DesignMatrix>& points) {
  if (!points.allFinite() || (points.array() < 0.0).any() || (points.array() > 1.0).any())
    fail(Errc::invalid_data, "design entries must lie in [0,1]");
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    for (Eigen::Index j = i + 1; j < points.rows(); ++j)
      if ((points.row(i) - points.row(j)).norm() < kDuplicateTolerance)
        fail(Errc::degenerate_distance,
             "rows " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
}

LhdDesign generate_lhd(Eigen::Index n, Eigen::Index dims, LevelStyle style, std::uint64_t seed) {
  require(n >= 2, "generate_lhd: n must be at least 2");
  require(dims >= 1, "generate_lhd: K must be at least 1");
  Rng rng(seed);
  LhdDesign out{DesignMatrix(n, dims), style};
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < dims; ++k) {
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    shuffle(std::span(perm), rng);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double offset = style == LevelStyle::midpoint ? 0.5 : uniform01(rng);
      out.points(i, k) = (static_cast<double>(perm[static_cast<std::size_t>(i)]) + offset) /
                         static_cast<double>(n);
    }
  }
  return out;
}

namespace {

// Annealing state over a design whose rows may be grouped into slices. A move
// swaps the entries of two rows in one column, which keeps every column's set
// of values unchanged and therefore preserves the LHD structure.
class PhiAnnealer {
 public:
  PhiAnnealer(DesignMatrix points, Eigen::Index slices, Eigen::Index slice_size, double q)
      : x_(std::move(points)), slices_(slices), slice_size_(slice_size), q_(q) {
    n_ = x_.rows();
    dims_ = x_.cols();
    if (slices_ > 1) {
      // Coarse cell of each entry on the slice_size grid.
      block_.resize(n_, dims_);
      for (Eigen::Index i = 0; i < n_; ++i)
        for (Eigen::Index k = 0; k < dims_; ++k)
          block_(i, k) = static_cast<Eigen::Index>(std::floor(x_(i, k) * static_cast<double>(slice_size_)));
      fine_.resize(n_, dims_);
      const double total = static_cast<double>(n_);
      row_of_level_.assign(static_cast<std::size_t>(dims_), std::vector<Eigen::Index>(static_cast<std::size_t>(n_)));
      for (Eigen::Index i = 0; i < n_; ++i)
        for (Eigen::Index k = 0; k < dims_; ++k) {
          fine_(i, k) = static_cast<Eigen::Index>(std::floor(x_(i, k) * total));
          row_of_level_[static_cast<std::size_t>(k)][static_cast<std::size_t>(fine_(i, k))] = i;
        }
    }
    rebuild();
    new_pi_.resize(n_);
    new_pj_.resize(n_);
  }

  void rebuild() {
    pow_.setZero(n_, n_);
    sum_all_ = 0.0;
    slice_sum_.assign(static_cast<std::size_t>(std::max<Eigen::Index>(slices_, 1)), 0.0);
    for (Eigen::Index i = 0; i < n_; ++i)
      for (Eigen::Index j = i + 1; j < n_; ++j) {
        const double p = inverse_power((x_.row(i) - x_.row(j)).squaredNorm());
        pow_(i, j) = pow_(j, i) = p;
        sum_all_ += p;
        if (slice_of(i) == slice_of(j)) slice_sum_[static_cast<std::size_t>(slice_of(i))] += p;
      }
  }

  double objective() const { return objective_from(sum_all_, slice_sum_); }

  Eigen::Index runs() const { return n_; }
  Eigen::Index dims() const { return dims_; }
  Eigen::Index slices() const { return slices_; }
  const DesignMatrix& points() const { return x_; }

  bool valid_swap(Eigen::Index k, Eigen::Index i, Eigen::Index j) const {
    if (i == j) return false;
    if (slices_ <= 1) return true;
    return slice_of(i) == slice_of(j) || block_(i, k) == block_(j, k);
  }

  /// Random structure-preserving move.
  void propose(Rng& rng, Eigen::Index& k, Eigen::Index& i, Eigen::Index& j) const {
    k = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(dims_)));
    if (slices_ <= 1) {
      i = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(n_)));
      j = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(n_ - 1)));
      if (j >= i) ++j;
      return;
    }
    if (uniform01(rng) < 0.5) {
      const auto s = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(slices_)));
      const auto a = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(slice_size_)));
      auto b = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(slice_size_ - 1)));
      if (b >= a) ++b;
      i = s * slice_size_ + a;
      j = s * slice_size_ + b;
    } else {
      i = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(n_)));
      const Eigen::Index level = fine_(i, k);
      const Eigen::Index base = (level / slices_) * slices_;
      auto off = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(slices_ - 1)));
      if (base + off >= level) ++off;
      j = row_of_level_[static_cast<std::size_t>(k)][static_cast<std::size_t>(base + off)];
    }
  }

  /// Objective after swapping column k of rows i and j; caches the new terms
  /// so that a following apply() does not recompute them.
  double evaluate(Eigen::Index k, Eigen::Index i, Eigen::Index j) {
    double all = sum_all_;
    trial_slice_ = slice_sum_;
    const double xi = x_(i, k), xj = x_(j, k);
    const Eigen::Index si = slice_of(i), sj = slice_of(j);
    for (Eigen::Index l = 0; l < n_; ++l) {
      if (l == i || l == j) continue;
      double di = 0.0, dj = 0.0;
      for (Eigen::Index c = 0; c < dims_; ++c) {
        const double vi = c == k ? xj : x_(i, c);
        const double vj = c == k ? xi : x_(j, c);
        di += (vi - x_(l, c)) * (vi - x_(l, c));
        dj += (vj - x_(l, c)) * (vj - x_(l, c));
      }
      new_pi_(l) = inverse_power(di);
      new_pj_(l) = inverse_power(dj);
      const double delta_i = new_pi_(l) - pow_(i, l);
      const double delta_j = new_pj_(l) - pow_(j, l);
      all += delta_i + delta_j;
      const Eigen::Index sl = slice_of(l);
      if (sl == si) trial_slice_[static_cast<std::size_t>(si)] += delta_i;
      if (sl == sj) trial_slice_[static_cast<std::size_t>(sj)] += delta_j;
    }
    trial_all_ = all;
    return objective_from(trial_all_, trial_slice_);
  }

  void apply(Eigen::Index k, Eigen::Index i, Eigen::Index j) {
    std::swap(x_(i, k), x_(j, k));
    if (slices_ > 1) {
      std::swap(block_(i, k), block_(j, k));
      std::swap(fine_(i, k), fine_(j, k));
      row_of_level_[static_cast<std::size_t>(k)][static_cast<std::size_t>(fine_(i, k))] = i;
      row_of_level_[static_cast<std::size_t>(k)][static_cast<std::size_t>(fine_(j, k))] = j;
    }
    for (Eigen::Index l = 0; l < n_; ++l) {
      if (l == i || l == j) continue;
      pow_(i, l) = pow_(l, i) = new_pi_(l);
      pow_(j, l) = pow_(l, j) = new_pj_(l);
    }
    sum_all_ = trial_all_;
    slice_sum_ = trial_slice_;
  }

  void reset(const DesignMatrix& points) {
    x_ = points;
    if (slices_ > 1) {
      const double total = static_cast<double>(n_);
      for (Eigen::Index i = 0; i < n_; ++i)
        for (Eigen::Index k = 0; k < dims_; ++k) {
          block_(i, k) = static_cast<Eigen::Index>(std::floor(x_(i, k) * static_cast<double>(slice_size_)));
          fine_(i, k) = static_cast<Eigen::Index>(std::floor(x_(i, k) * total));
          row_of_level_[static_cast<std::size_t>(k)][static_cast<std::size_t>(fine_(i, k))] = i;
        }
    }
    rebuild();
  }

 private:
  Eigen::Index slice_of(Eigen::Index row) const { return slices_ > 1 ? row / slice_size_ : 0; }

  double inverse_power(double squared) const { return std::pow(squared, -0.5 * q_); }

  double objective_from(double all, const std::vector<double>& per_slice) const {
    const double whole = std::pow(all, 1.0 / q_);
    if (slices_ <= 1) return whole;
    double mean = 0.0;
    for (double s : per_slice) mean += std::pow(s, 1.0 / q_);
    mean /= static_cast<double>(per_slice.size());
    return 0.5 * (whole + mean);
  }

  DesignMatrix x_;
  Eigen::Index n_ = 0, dims_ = 0, slices_ = 1, slice_size_ = 0;
  double q_;
  Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic> block_, fine_;
  std::vector<std::vector<Eigen::Index>> row_of_level_;
  Eigen::MatrixXd pow_;
  Eigen::VectorXd new_pi_, new_pj_;
  double sum_all_ = 0.0, trial_all_ = 0.0;
  std::vector<double> slice_sum_, trial_slice_;
};

void run_annealing(PhiAnnealer& state, const AnnealOptions& options, Rng& rng) {
  const std::size_t budget =
      options.budget.value_or(static_cast<std::size_t>(10000 * state.dims()));
  if (budget == 0) return;

  const double start_value = state.objective();
  const DesignMatrix start = state.points();

  // Start temperature: about initial_acceptance of the sampled worsening moves pass.
  std::vector<double> worsening;
  const double current = state.objective();
  for (int s = 0; s < 100; ++s) {
    Eigen::Index k, i, j;
    state.propose(rng, k, i, j);
    const double delta = state.evaluate(k, i, j) - current;
    if (delta > 1e-10 * current) worsening.push_back(delta);
  }
  double temperature = 1e-12 * std::max(current, 1.0);
  if (!worsening.empty()) {
    auto accepted = [&](double t) {
      double a = 0.0;
      for (double d : worsening) a += std::exp(-d / t);
      return a / static_cast<double>(worsening.size());
    };
    double lo = std::log(*std::min_element(worsening.begin(), worsening.end())) - 10.0;
    double hi = std::log(*std::max_element(worsening.begin(), worsening.end())) + 10.0;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (accepted(std::exp(mid)) < options.initial_acceptance ? lo : hi) = mid;
    }
    temperature = std::exp(0.5 * (lo + hi));
  }

  // Budget beyond 500 n K moves buys independent restarts from scrambled
  // designs; small designs have deep local optima a single schedule cannot leave.
  const std::size_t cycle_cap = static_cast<std::size_t>(500 * state.runs() * state.dims());
  const std::size_t cycles = std::max<std::size_t>(1, budget / cycle_cap);
  const std::size_t moves = budget / cycles;
  const std::size_t stage = std::max<std::size_t>(1, moves / 150);
  const double start_temperature = temperature;
  double value = current;
  double best_value = value;
  DesignMatrix best = state.points();
  for (std::size_t cycle = 0; cycle < cycles; ++cycle) {
    if (cycle > 0) {
      for (Eigen::Index r = 0; r < 4 * state.runs() * state.dims(); ++r) {
        Eigen::Index k, i, j;
        state.propose(rng, k, i, j);
        value = state.evaluate(k, i, j);
        state.apply(k, i, j);
      }
      temperature = start_temperature;
    }
    for (std::size_t move = 0; move < moves; ++move) {
      Eigen::Index k, i, j;
      state.propose(rng, k, i, j);
      const double trial = state.evaluate(k, i, j);
      const double delta = trial - value;
      if (delta <= 0.0 || uniform01(rng) < std::exp(-delta / temperature)) {
        state.apply(k, i, j);
        value = trial;
        if (value < best_value) {
          best_value = value;
          best = state.points();
        }
      }
      if ((move + 1) % stage == 0) temperature *= options.cooling_ratio;
    }
  }
  state.reset(best);

  // First-improvement polish over a shuffled list of all swaps.
  const Eigen::Index n = state.runs();
  const std::size_t pair_count = static_cast<std::size_t>(n * (n - 1) / 2 * state.dims());
  if (pair_count <= 4 * budget) {
    std::vector<std::array<Eigen::Index, 3>> moves;
    moves.reserve(pair_count);
    for (Eigen::Index k = 0; k < state.dims(); ++k)
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) moves.push_back({k, i, j});
    std::size_t evaluations = 0;
    value = state.objective();
    bool improved = true;
    while (improved && evaluations < budget) {
      improved = false;
      shuffle(std::span(moves), rng);
      for (const auto& [k, i, j] : moves) {
        if (evaluations >= budget) break;
        if (!state.valid_swap(k, i, j)) continue;
        ++evaluations;
        const double trial = state.evaluate(k, i, j);
        if (trial < value * (1.0 - 1e-13)) {
          state.apply(k, i, j);
          value = trial;
          improved = true;
        }
      }
    }
  }

  // Exact recomputation guards against drift in the incremental sums.
  state.rebuild();
  if (state.objective() > start_value) {
    state.reset(start);
  }
}

}  // namespace

LhdDesign anneal_lhd(LhdDesign start, const AnnealOptions& options, std::uint64_t seed) {
  require(start.runs() >= 2, "anneal_lhd: need at least two runs");
  require(options.q > 0.0, "anneal_lhd: q must be positive");
  if (options.budget && *options.budget == 0) return start;
  Rng rng(seed);
  PhiAnnealer state(std::move(start.points), 1, 0, options.q);
  run_annealing(state, options, rng);
  start.points = state.points();
  return start;
}

LhdDesign optimize_mmlhd(Eigen::Index n, Eigen::Index dims, const AnnealOptions& options,
                         std::uint64_t seed, LevelStyle style) {
  LhdDesign start = generate_lhd(n, dims, style, derive_seed(seed, 0));
  return anneal_lhd(std::move(start), options, derive_seed(seed, 1));
}

SlicedCandidateSet generate_slhd(Eigen::Index slices, Eigen::Index slice_size, Eigen::Index dims,
                                 std::uint64_t seed, const AnnealOptions& options) {
  require(slices >= 1, "generate_slhd: need at least one slice");
  require(slice_size >= 2, "generate_slhd: slices need at least two points");
  require(dims >= 1, "generate_slhd: K must be at least 1");
  require(slices <= std::numeric_limits<Eigen::Index>::max() / slice_size,
          "generate_slhd: slice count times slice size overflows");
  require(options.q > 0.0, "generate_slhd: q must be positive");

  Rng rng(derive_seed(seed, 2));
  const Eigen::Index total = slices * slice_size;
  DesignMatrix points(total, dims);
  std::vector<Eigen::Index> offsets(static_cast<std::size_t>(slices));
  std::vector<Eigen::Index> cells(static_cast<std::size_t>(slice_size));
  // assigned(b, s): fine level that slice s owns inside coarse cell b.
  Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic> assigned(slice_size, slices);
  for (Eigen::Index k = 0; k < dims; ++k) {
    for (Eigen::Index b = 0; b < slice_size; ++b) {
      std::iota(offsets.begin(), offsets.end(), Eigen::Index{0});
      shuffle(std::span(offsets), rng);
      for (Eigen::Index s = 0; s < slices; ++s)
        assigned(b, s) = b * slices + offsets[static_cast<std::size_t>(s)];
    }
    for (Eigen::Index s = 0; s < slices; ++s) {
      std::iota(cells.begin(), cells.end(), Eigen::Index{0});
      shuffle(std::span(cells), rng);
      for (Eigen::Index r = 0; r < slice_size; ++r) {
        const Eigen::Index level = assigned(cells[static_cast<std::size_t>(r)], s);
        points(s * slice_size + r, k) = (static_cast<double>(level) + 0.5) / static_cast<double>(total);
      }
    }
  }

  if (!(options.budget && *options.budget == 0)) {
    PhiAnnealer state(std::move(points), slices, slice_size, options.q);
    run_annealing(state, options, rng);
    points = state.points();
  }
  return {std::move(points), slices, slice_size};
}

}  // namespace smdd
