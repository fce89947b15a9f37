#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sdde/models.hpp"
#include "sdde/paths.hpp"
#include "sdde/rng.hpp"
#include "sdde/solver.hpp"

namespace sdde {

/// Discrete probability measure on the line: strictly sorted atoms with
/// positive total mass, normalized at construction so the stored weights sum
/// to one within 1e-12. Duplicate atoms are merged.
class EmpiricalMeasure1D {
 public:
  EmpiricalMeasure1D(std::vector<double> atoms, std::vector<double> weights) {
    if (atoms.size() != weights.size())
      throw std::invalid_argument("EmpiricalMeasure1D: atoms/weights size mismatch");
    if (atoms.empty()) throw std::invalid_argument("EmpiricalMeasure1D: needs at least one atom");
    long double total = 0.0L;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (!std::isfinite(atoms[i]))
        throw std::invalid_argument("EmpiricalMeasure1D: atoms must be finite");
      if (!(weights[i] >= 0.0) || !std::isfinite(weights[i]))
        throw std::invalid_argument("EmpiricalMeasure1D: weights must be nonnegative");
      total += weights[i];
    }
    if (!(total > 0.0L))
      throw std::invalid_argument("EmpiricalMeasure1D: total weight must be positive");

    std::vector<std::size_t> order(atoms.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });
    atoms_.reserve(atoms.size());
    weights_.reserve(atoms.size());
    for (std::size_t k : order) {
      if (!atoms_.empty() && atoms_.back() == atoms[k])
        weights_.back() += weights[k];
      else {
        atoms_.push_back(atoms[k]);
        weights_.push_back(weights[k]);
      }
    }
    // Idempotent normalization: inputs already summing to one (uniform
    // sample weights, weights of a previously normalized measure) are kept
    // bit-for-bit, so re-wrapping a measure never perturbs it.
    if (std::fabs(double(total) - 1.0) > 1e-12)
      for (double& w : weights_) w = double(w / total);
  }

  static EmpiricalMeasure1D from_samples(const std::vector<double>& values) {
    if (values.empty())
      throw std::invalid_argument("EmpiricalMeasure1D: needs at least one sample");
    return EmpiricalMeasure1D(values,
                              std::vector<double>(values.size(), 1.0 / double(values.size())));
  }

  [[nodiscard]] const std::vector<double>& atoms() const noexcept { return atoms_; }
  [[nodiscard]] const std::vector<double>& weights() const noexcept { return weights_; }
  [[nodiscard]] std::size_t size() const noexcept { return atoms_.size(); }

  [[nodiscard]] double mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) m += atoms_[i] * weights_[i];
    return m;
  }

  /// Probability assigned to (-inf, x].
  [[nodiscard]] double cdf(double x) const {
    double f = 0.0;
    for (std::size_t i = 0; i < atoms_.size() && atoms_[i] <= x; ++i) f += weights_[i];
    return f;
  }

 private:
  std::vector<double> atoms_;
  std::vector<double> weights_;
};

/// Exact Wasserstein-1 distance between two atom measures via the integrated
/// CDF difference.
inline double wasserstein1(const EmpiricalMeasure1D& mu, const EmpiricalMeasure1D& nu) {
  const auto& xa = mu.atoms();
  const auto& xb = nu.atoms();
  std::size_t i = 0, j = 0;
  double Fa = 0.0, Fb = 0.0, dist = 0.0;
  double prev = std::min(xa.front(), xb.front());
  while (i < xa.size() || j < xb.size()) {
    double x;
    if (j == xb.size() || (i < xa.size() && xa[i] <= xb[j]))
      x = xa[i];
    else
      x = xb[j];
    dist += std::fabs(Fa - Fb) * (x - prev);
    while (i < xa.size() && xa[i] == x) Fa += mu.weights()[i++];
    while (j < xb.size() && xb[j] == x) Fb += nu.weights()[j++];
    prev = x;
  }
  return dist;
}

/// Pools several measures into one, scaling each part's weights by the given
/// part weight (uniform when omitted) and renormalizing once at the end.
inline EmpiricalMeasure1D merge_measures(const std::vector<EmpiricalMeasure1D>& parts,
                                         const std::vector<double>& part_weights = {}) {
  if (parts.empty()) throw std::invalid_argument("merge_measures: no measures given");
  if (!part_weights.empty() && part_weights.size() != parts.size())
    throw std::invalid_argument("merge_measures: part weight count mismatch");
  std::vector<double> atoms, weights;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const double scale = part_weights.empty() ? 1.0 : part_weights[p];
    for (std::size_t i = 0; i < parts[p].size(); ++i) {
      atoms.push_back(parts[p].atoms()[i]);
      weights.push_back(scale * parts[p].weights()[i]);
    }
  }
  return EmpiricalMeasure1D(std::move(atoms), std::move(weights));
}

/// Weighted collection of delay segments sharing one window length. The
/// evaluation-at-zero push-forward reproduces the paired scalar measure
/// exactly when both were sampled on the same times.
class EmpiricalSegmentMeasure {
 public:
  EmpiricalSegmentMeasure(std::vector<Segment> segments, std::vector<double> weights)
      : segments_(std::move(segments)) {
    if (segments_.empty())
      throw std::invalid_argument("EmpiricalSegmentMeasure: needs at least one segment");
    if (segments_.size() != weights.size())
      throw std::invalid_argument("EmpiricalSegmentMeasure: segments/weights size mismatch");
    const double tau0 = segments_.front().tau;
    long double total = 0.0L;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      if (std::fabs(segments_[i].tau - tau0) > 1e-12 * std::max(1.0, tau0))
        throw std::invalid_argument("EmpiricalSegmentMeasure: segments must share tau");
      if (!(weights[i] >= 0.0) || !std::isfinite(weights[i]))
        throw std::invalid_argument("EmpiricalSegmentMeasure: weights must be nonnegative");
      total += weights[i];
    }
    if (!(total > 0.0L))
      throw std::invalid_argument("EmpiricalSegmentMeasure: total weight must be positive");
    weights_ = std::move(weights);
    if (std::fabs(double(total) - 1.0) > 1e-12)
      for (double& w : weights_) w = double(w / total);
  }

  [[nodiscard]] const std::vector<Segment>& segments() const noexcept { return segments_; }
  [[nodiscard]] const std::vector<double>& weights() const noexcept { return weights_; }
  [[nodiscard]] std::size_t size() const noexcept { return segments_.size(); }
  [[nodiscard]] double tau() const { return segments_.front().tau; }

  /// Distribution of the segment value at the window's right end.
  [[nodiscard]] EmpiricalMeasure1D evaluation_pushforward() const {
    std::vector<double> values;
    values.reserve(segments_.size());
    for (const auto& s : segments_) values.push_back(s.back());
    return EmpiricalMeasure1D(std::move(values), weights_);
  }

 private:
  std::vector<Segment> segments_;
  std::vector<double> weights_;
};

namespace detail {

// Grid indices of the path inside [t_start, t_end], thinned to every
// stride-th point starting from the first; shared by the scalar and segment
// samplers so their sample times coincide exactly.
inline std::vector<std::size_t> strided_window_indices(const CadlagPath& path, double t_start,
                                                       double t_end, std::size_t stride) {
  if (stride == 0)
    throw std::invalid_argument("time averaging: stride must be a positive integer");
  if (!(t_end > t_start)) throw std::invalid_argument("time averaging: empty window");
  const auto& ts = path.times();
  const double eps = 1e-9 * std::max(1.0, std::fabs(t_end));
  if (ts.back() < t_end - eps)
    throw std::out_of_range("time averaging: window extends past the trajectory");
  std::vector<std::size_t> idx;
  std::size_t i =
      std::size_t(std::lower_bound(ts.begin(), ts.end(), t_start - eps) - ts.begin());
  for (; i < ts.size() && ts[i] <= t_end + eps; i += stride) idx.push_back(i);
  if (idx.empty()) throw std::invalid_argument("time averaging: no sample times in the window");
  return idx;
}

inline void require_unexploded_window(const Trajectory& traj, double t_end) {
  if (traj.explosion_time && *traj.explosion_time <= t_end)
    throw std::runtime_error("time averaging: window touches the exploded region");
}

}  // namespace detail

/// Uniform-weight empirical distribution of the path values on the strided
/// grid over [t_start, t_end].
inline EmpiricalMeasure1D time_average_distribution(const Trajectory& traj, double t_start,
                                                    double t_end, std::size_t stride) {
  if (t_start < 0.0)
    throw std::invalid_argument("time_average_distribution: t_start must be nonnegative");
  detail::require_unexploded_window(traj, t_end);
  const auto idx = detail::strided_window_indices(traj.path, t_start, t_end, stride);
  std::vector<double> values;
  values.reserve(idx.size());
  for (std::size_t i : idx) values.push_back(traj.path.values()[i]);
  return EmpiricalMeasure1D::from_samples(values);
}

/// Segment-valued counterpart of time_average_distribution on the same
/// strided times. Sampling must not start before one full delay window.
inline EmpiricalSegmentMeasure segment_time_average(const Trajectory& traj, double tau,
                                                    double t_start, double t_end,
                                                    std::size_t stride) {
  if (t_start < tau * (1.0 - 1e-12))
    throw std::invalid_argument("segment_time_average: t_start must be at least tau");
  detail::require_unexploded_window(traj, t_end);
  const auto idx = detail::strided_window_indices(traj.path, t_start, t_end, stride);
  std::vector<Segment> segments;
  segments.reserve(idx.size());
  for (std::size_t i : idx) segments.push_back(segment_at(traj.path, traj.path.times()[i], tau));
  const double w = 1.0 / double(segments.size());
  return EmpiricalSegmentMeasure(std::move(segments), std::vector<double>(idx.size(), w));
}

/// Subsampling stride keeping roughly one segment per ten delay windows.
inline std::size_t default_segment_stride(double tau, double dt) {
  if (!(tau > 0.0) || !(dt > 0.0))
    throw std::invalid_argument("default_segment_stride: tau, dt must be positive");
  return std::size_t(std::max(1.0, std::round(10.0 * tau / dt)));
}

/// Empirical exceedance table P(quantity > R at t) over a level grid and a
/// probe-time grid, with the ensemble size it was computed from.
struct ProbabilityProfile {
  std::vector<double> R_grid;
  std::vector<double> t_grid;
  std::vector<std::vector<double>> exceedance;  // indexed [time][level]
  std::size_t ensemble_size = 0;

  /// Worst exceedance over probe times, per level.
  [[nodiscard]] std::vector<double> max_over_t() const {
    std::vector<double> out(R_grid.size(), 0.0);
    for (const auto& row : exceedance)
      for (std::size_t j = 0; j < row.size(); ++j) out[j] = std::max(out[j], row[j]);
    return out;
  }
};

enum class BoundednessQuantity { value, segment_sup_norm };

namespace detail {

inline void validate_profile_grids(const std::vector<double>& R_grid,
                                   const std::vector<double>& t_grid) {
  if (R_grid.empty() || t_grid.empty())
    throw std::invalid_argument("probability profile: grids must be non-empty");
  for (std::size_t i = 1; i < R_grid.size(); ++i)
    if (!(R_grid[i] > R_grid[i - 1]))
      throw std::invalid_argument("probability profile: level grid must be increasing");
}

inline double ensemble_tau(const std::vector<Trajectory>& ensemble) {
  const double tau = ensemble.front().tau;
  for (const auto& traj : ensemble)
    if (std::fabs(traj.tau - tau) > 1e-12 * std::max(1.0, tau))
      throw std::invalid_argument("ensemble diagnostics: trajectories must share tau");
  return tau;
}

}  // namespace detail

/// Boundedness-in-probability diagnostic: exceedance frequencies of |X(t)|
/// (value mode) or of the delay-window sup norm (segment mode) over the level
/// grid, per probe time. Paths that exploded by the probe time exceed every
/// level. Requires at least 100 paths.
inline ProbabilityProfile boundedness_profile(const std::vector<Trajectory>& ensemble,
                                              BoundednessQuantity quantity,
                                              const std::vector<double>& R_grid,
                                              const std::vector<double>& t_grid) {
  if (ensemble.size() < 100)
    throw std::invalid_argument("boundedness_profile: needs at least 100 paths");
  detail::validate_profile_grids(R_grid, t_grid);
  const double tau = detail::ensemble_tau(ensemble);

  ProbabilityProfile prof;
  prof.R_grid = R_grid;
  prof.t_grid = t_grid;
  prof.ensemble_size = ensemble.size();
  prof.exceedance.assign(t_grid.size(), std::vector<double>(R_grid.size(), 0.0));

  for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
    const double t = t_grid[ti];
    if (quantity == BoundednessQuantity::segment_sup_norm && t < tau * (1.0 - 1e-12))
      throw std::invalid_argument("boundedness_profile: segment probes need t >= tau");
    std::vector<std::size_t> counts(R_grid.size(), 0);
    for (const auto& traj : ensemble) {
      double q;
      if (traj.explosion_time && *traj.explosion_time <= t)
        q = std::numeric_limits<double>::infinity();
      else if (quantity == BoundednessQuantity::value)
        q = std::fabs(traj.path.value_at(t));
      else
        q = sup_norm(segment_at(traj.path, t, tau));
      for (std::size_t j = 0; j < R_grid.size() && q > R_grid[j]; ++j) ++counts[j];
    }
    for (std::size_t j = 0; j < R_grid.size(); ++j)
      prof.exceedance[ti][j] = double(counts[j]) / double(ensemble.size());
  }
  return prof;
}

namespace detail {

// A profile row "decays" when it is monotone in the expected direction within
// sampling slack and its small end is either genuinely small or at most half
// the large end.
inline bool exceedance_decays(std::vector<double> toward_small_end, std::size_t n) {
  const double slack = 2.0 / std::sqrt(double(n));
  for (std::size_t i = 1; i < toward_small_end.size(); ++i)
    if (toward_small_end[i] > toward_small_end[i - 1] + slack) return false;
  return toward_small_end.back() <= 0.02 ||
         toward_small_end.back() <= 0.5 * toward_small_end.front();
}

}  // namespace detail

/// Both halves of the segment-space tightness criterion, empirically: the
/// sup-norm exceedance profile and the partition-modulus exceedance
/// P(varpi(X_t, delta) >= epsilon) per probe time and delta.
struct TightnessReport {
  ProbabilityProfile sup_norm;
  std::vector<double> delta_grid;
  double epsilon = 0.0;
  std::vector<std::vector<double>> modulus_exceedance;  // indexed [time][delta]
  bool sup_norm_decays = false;
  bool modulus_decays = false;
};

inline TightnessReport tightness_diagnostic(const std::vector<Trajectory>& ensemble, double tau,
                                            const std::vector<double>& R_grid,
                                            const std::vector<double>& delta_grid,
                                            const std::vector<double>& t_grid,
                                            double epsilon = 0.1) {
  if (!(epsilon > 0.0))
    throw std::invalid_argument("tightness_diagnostic: epsilon must be positive");
  detail::validate_profile_grids(delta_grid, t_grid);
  for (double d : delta_grid)
    if (!(d > 0.0) || !(d < tau))
      throw std::invalid_argument("tightness_diagnostic: deltas must lie in (0, tau)");

  TightnessReport rep;
  rep.sup_norm = boundedness_profile(ensemble, BoundednessQuantity::segment_sup_norm, R_grid,
                                     t_grid);
  rep.delta_grid = delta_grid;
  rep.epsilon = epsilon;
  rep.modulus_exceedance.assign(t_grid.size(), std::vector<double>(delta_grid.size(), 0.0));

  for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
    std::vector<std::size_t> counts(delta_grid.size(), 0);
    for (const auto& traj : ensemble) {
      if (traj.explosion_time && *traj.explosion_time <= t_grid[ti]) {
        for (auto& c : counts) ++c;
        continue;
      }
      const Segment seg = segment_at(traj.path, t_grid[ti], tau);
      for (std::size_t j = 0; j < delta_grid.size(); ++j) {
        double v;
        try {
          v = modulus_varpi(seg, delta_grid[j]);
        } catch (const std::invalid_argument&) {
          // No admissible partition at this delta: cannot certify smallness.
          v = std::numeric_limits<double>::infinity();
        }
        if (v >= epsilon) ++counts[j];
      }
    }
    for (std::size_t j = 0; j < delta_grid.size(); ++j)
      rep.modulus_exceedance[ti][j] = double(counts[j]) / double(ensemble.size());
  }

  const auto worst_R = rep.sup_norm.max_over_t();
  rep.sup_norm_decays = detail::exceedance_decays(worst_R, ensemble.size());
  std::vector<double> worst_delta(delta_grid.size(), 0.0);
  for (const auto& row : rep.modulus_exceedance)
    for (std::size_t j = 0; j < row.size(); ++j)
      worst_delta[j] = std::max(worst_delta[j], row[j]);
  std::reverse(worst_delta.begin(), worst_delta.end());  // small deltas last
  rep.modulus_decays = detail::exceedance_decays(worst_delta, ensemble.size());
  return rep;
}

/// Time integral of exp(-(Gamma(t) - Gamma(s))) for s from 0 to t, computed
/// exactly per constant piece of the rate and safe from overflow since every
/// exponent is nonpositive.
inline double discounted_exposure(const RateFunction& gamma, double t) {
  if (t <= 0.0) return 0.0;
  const double Gt = gamma.integral(t);
  const auto& ks = gamma.knots();
  const auto& ls = gamma.levels();
  double acc = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const double a = ks[i];
    if (a >= t) break;
    const double b = (i + 1 < ks.size()) ? std::min(ks[i + 1], t) : t;
    if (b <= a) continue;
    const double rate = ls[i];
    acc += std::exp(gamma.integral(b) - Gt) * (-std::expm1(-rate * (b - a))) / rate;
  }
  return acc;
}

/// Exact decay-plus-influx majorant of the ensemble mean: exp(-Gamma(t))
/// E[X(0)] + r_sup M discounted_exposure(gamma, t).
inline double mean_majorant(const RateFunction& gamma, double mean_x0, double r_sup, double M,
                            double t) {
  return std::exp(-gamma.integral(t)) * mean_x0 + r_sup * M * discounted_exposure(gamma, t);
}

struct MeanBoundReport {
  std::vector<double> t_grid;
  std::vector<double> means;
  std::vector<double> std_errors;
  std::vector<double> xi;
  double asymptotic_bound = 0.0;
  double tail_start = 0.0;
  std::size_t negative_paths = 0;
  bool mean_below_xi = true;
  bool tail_below_asymptote = true;
};

/// Compares ensemble means of a nonnegative original-frame model against the
/// exact majorant curve and its asymptote r_sup M / gamma_inf. margin_abs
/// widens the per-probe allowance (4 standard errors) by a flat amount, for
/// deterministic ensembles where the scheme bias dominates.
inline MeanBoundReport mean_bound_check(const std::vector<Trajectory>& ensemble,
                                        const FeedbackSpec& spec,
                                        const std::vector<double>& t_grid,
                                        double margin_abs = 0.0) {
  if (ensemble.empty()) throw std::invalid_argument("mean_bound_check: empty ensemble");
  if (spec.frame != Frame::original)
    throw std::invalid_argument("mean_bound_check: needs an original-frame model");
  if (t_grid.empty()) throw std::invalid_argument("mean_bound_check: empty probe grid");

  MeanBoundReport rep;
  rep.t_grid = t_grid;
  const double r_sup = spec.r.sup_value();
  const double gamma_inf = spec.gamma.inf_value();
  const double M = spec.f.sup();
  rep.asymptotic_bound = r_sup * M / gamma_inf;
  rep.tail_start = 20.0 / gamma_inf;

  const double t_max = *std::max_element(t_grid.begin(), t_grid.end());
  for (const auto& traj : ensemble)
    if (traj.explosion_time && *traj.explosion_time <= t_max)
      throw std::runtime_error("mean_bound_check: ensemble contains exploded paths");

  double mean_x0 = 0.0;
  for (const auto& traj : ensemble) mean_x0 += traj.path.value_at(0.0);
  mean_x0 /= double(ensemble.size());

  std::vector<bool> went_negative(ensemble.size(), false);
  const double n = double(ensemble.size());
  for (double t : t_grid) {
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t p = 0; p < ensemble.size(); ++p) {
      const double x = ensemble[p].path.value_at(t);
      if (x < 0.0) went_negative[p] = true;
      sum += x;
      sumsq += x * x;
    }
    const double mean = sum / n;
    const double var = std::max(0.0, sumsq / n - mean * mean);
    const double se = ensemble.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    const double xi_t = mean_majorant(spec.gamma, mean_x0, r_sup, M, t);
    rep.means.push_back(mean);
    rep.std_errors.push_back(se);
    rep.xi.push_back(xi_t);
    if (mean > xi_t + 4.0 * se + margin_abs) rep.mean_below_xi = false;
    if (t >= rep.tail_start && mean > rep.asymptotic_bound + 4.0 * se + margin_abs)
      rep.tail_below_asymptote = false;
  }
  rep.negative_paths = std::size_t(std::count(went_negative.begin(), went_negative.end(), true));
  return rep;
}

/// Fraction of paths whose delay window ending at t_probe stays strictly
/// below the threshold (pre-jump left limits included). Exploded paths count
/// as not extinct.
inline double extinction_probability(const std::vector<Trajectory>& ensemble, double threshold,
                                     double t_probe) {
  if (ensemble.empty()) throw std::invalid_argument("extinction_probability: empty ensemble");
  if (!(threshold > 0.0))
    throw std::invalid_argument("extinction_probability: threshold must be positive");
  const double tau = detail::ensemble_tau(ensemble);
  std::size_t extinct = 0;
  for (const auto& traj : ensemble) {
    if (traj.explosion_time && *traj.explosion_time <= t_probe) continue;
    const Segment seg = segment_at(traj.path, t_probe, tau);
    double top = -std::numeric_limits<double>::infinity();
    for (double v : seg.path.values()) top = std::max(top, v);
    for (const auto& e : seg.path.jumps()) top = std::max(top, e.left_value);
    if (top < threshold) ++extinct;
  }
  return double(extinct) / double(ensemble.size());
}

struct StationarityReport {
  double w1_distance = 0.0;
  double tol = 0.0;
  double bootstrap_mean = 0.0;
  double bootstrap_sd = 0.0;
  bool pass = false;
  std::size_t n_window1 = 0;
  std::size_t n_window2 = 0;
};

namespace detail {

// W1 between two equal-size uniform empirical samples is the mean absolute
// difference of sorted order statistics.
inline double w1_equal_samples(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return s / double(a.size());
}

inline std::vector<double> block_resample(const std::vector<double>& x, std::size_t block,
                                          CounterRng& rng) {
  std::vector<double> out;
  out.reserve(x.size());
  const std::size_t span = x.size() - block;
  while (out.size() < x.size()) {
    const std::size_t start = std::size_t(rng.next_uniform() * double(span + 1));
    const std::size_t take = std::min(block, x.size() - out.size());
    out.insert(out.end(), x.begin() + std::ptrdiff_t(start),
               x.begin() + std::ptrdiff_t(start + take));
  }
  return out;
}

}  // namespace detail

/// Compares the time-average distributions of two disjoint windows (each at
/// least 50 delay lengths long) in Wasserstein-1. The tolerance is calibrated
/// from a block bootstrap of the first window: B pairs of block resamples
/// give a null sample of within-window W1 values, and the check passes when
/// the observed distance is at most mean + 3 standard deviations of that
/// null. Deterministic in master_seed.
inline StationarityReport stationarity_check(const Trajectory& traj,
                                             std::pair<double, double> window1,
                                             std::pair<double, double> window2,
                                             std::size_t stride, std::uint64_t master_seed,
                                             std::size_t n_bootstrap = 200) {
  const double tau = traj.tau;
  for (const auto& w : {window1, window2})
    if (w.second - w.first < 50.0 * tau * (1.0 - 1e-9))
      throw std::invalid_argument("stationarity_check: windows must span at least 50 tau");
  if (std::max(window1.first, window2.first) < std::min(window1.second, window2.second))
    throw std::invalid_argument("stationarity_check: windows overlap");
  detail::require_unexploded_window(traj, std::max(window1.second, window2.second));
  if (n_bootstrap < 2)
    throw std::invalid_argument("stationarity_check: needs at least two bootstrap replicates");

  const auto idx1 = detail::strided_window_indices(traj.path, window1.first, window1.second, stride);
  const auto idx2 = detail::strided_window_indices(traj.path, window2.first, window2.second, stride);
  std::vector<double> x1, x2;
  x1.reserve(idx1.size());
  x2.reserve(idx2.size());
  for (std::size_t i : idx1) x1.push_back(traj.path.values()[i]);
  for (std::size_t i : idx2) x2.push_back(traj.path.values()[i]);

  StationarityReport rep;
  rep.n_window1 = x1.size();
  rep.n_window2 = x2.size();
  rep.w1_distance =
      wasserstein1(EmpiricalMeasure1D::from_samples(x1), EmpiricalMeasure1D::from_samples(x2));

  const std::size_t block = std::max<std::size_t>(1, x1.size() / 50);
  CounterRng rng(master_seed, 0, StreamRole::bootstrap);
  std::vector<double> null_w1;
  null_w1.reserve(n_bootstrap);
  for (std::size_t b = 0; b < n_bootstrap; ++b) {
    auto r1 = detail::block_resample(x1, block, rng);
    auto r2 = detail::block_resample(x1, block, rng);
    null_w1.push_back(detail::w1_equal_samples(std::move(r1), std::move(r2)));
  }
  double m = 0.0;
  for (double v : null_w1) m += v;
  m /= double(null_w1.size());
  double s2 = 0.0;
  for (double v : null_w1) s2 += (v - m) * (v - m);
  rep.bootstrap_mean = m;
  rep.bootstrap_sd = std::sqrt(s2 / (double(null_w1.size()) - 1.0));
  rep.tol = rep.bootstrap_mean + 3.0 * rep.bootstrap_sd;
  rep.pass = rep.w1_distance <= rep.tol;
  return rep;
}

}  // namespace sdde
