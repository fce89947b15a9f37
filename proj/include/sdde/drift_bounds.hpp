#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/beta.hpp>

#include "sdde/noise.hpp"
#include "sdde/solver.hpp"

namespace sdde {

/// Parameter block for the negative-drift tail bounds: drift floor alpha,
/// noise coefficient bound beta, and the driver's (sigma, lambda_N, zeta).
/// kappa1/kappa2/R0 are resolved lazily where a bound needs them.
struct NegativeDriftParams {
  double alpha = 0.0;
  double beta = 0.0;
  double sigma = 0.0;
  double lambda_N = 0.0;
  double zeta = 0.0;
  std::optional<double> kappa1;
  std::optional<double> kappa2;
  std::optional<double> R0;
};

/// Sentinel returned by solve_kappa1 when the jump term is absent: the
/// exp(-kappa1 R) term can then be driven below any tolerance.
inline constexpr double kKappa1Sentinel = 1e12;

/// P(reverse-time supremum >= R) for Brownian forcing with drift floor alpha
/// and coefficient bound beta.
inline double bound_brownian_reverse_sup(double alpha, double beta, double R) {
  if (!(alpha > 0.0) || !(beta > 0.0))
    throw std::invalid_argument("bound_brownian_reverse_sup: alpha, beta must be positive");
  if (R < 0.0) throw std::invalid_argument("bound_brownian_reverse_sup: R must be nonnegative");
  const double b2 = beta * beta;
  return 4.0 * std::exp(-R * R / (64.0 * b2)) +
         4.0 * std::exp(-alpha * R / (64.0 * b2)) /
             (1.0 - std::exp(-alpha * alpha / (128.0 * b2)));
}

/// P(sup over a window of length T of the Brownian stochastic integral >= R).
inline double bound_brownian_interval_sup(double beta, double T, double R) {
  if (!(beta > 0.0) || !(T > 0.0))
    throw std::invalid_argument("bound_brownian_interval_sup: beta, T must be positive");
  if (R < 0.0) throw std::invalid_argument("bound_brownian_interval_sup: R must be nonnegative");
  return 2.0 * std::exp(-R * R / (16.0 * beta * beta * T));
}

namespace detail {

// Equal-split exponential-moment rate (lambda_N / kappa) (e^{kappa zeta beta / q} - 1):
// increasing in kappa with limit lambda_N zeta beta / q at kappa -> 0.
inline double kappa1_rate(double kappa, double lambda_N, double zeta, double beta, double q) {
  return lambda_N / kappa * std::expm1(kappa * zeta * beta / q);
}

}  // namespace detail

/// Largest kappa1 whose jump exponential-moment rate stays below the drift
/// floor alpha; bisection on a doubling bracket to relative tolerance 1e-10.
/// Without jumps (lambda_N = 0 or zeta = 0) any kappa1 works and the sentinel
/// is returned.
inline double solve_kappa1(double alpha, double beta, double zeta, double lambda_N, double q) {
  if (!(alpha > 0.0) || !(beta > 0.0))
    throw std::invalid_argument("solve_kappa1: alpha, beta must be positive");
  if (!(q > 0.0) || !(q < 1.0)) throw std::invalid_argument("solve_kappa1: q must be in (0,1)");
  if (lambda_N < 0.0 || zeta < 0.0)
    throw std::invalid_argument("solve_kappa1: lambda_N, zeta must be nonnegative");
  if (lambda_N == 0.0 || zeta == 0.0) return kKappa1Sentinel;
  if (!(alpha > lambda_N * zeta * beta / q))
    throw std::invalid_argument("solve_kappa1: infeasible, need alpha > lambda_N zeta beta / q");

  auto rate = [&](double k) { return detail::kappa1_rate(k, lambda_N, zeta, beta, q); };
  double lo = 1e-12;
  double hi = 1.0;
  while (rate(hi) <= alpha) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) return kKappa1Sentinel;
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= 1e-10 * mid) break;
    if (rate(mid) <= alpha)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

/// P(reverse-time supremum >= R) for a driver with a Brownian part and
/// regulated jumps. The split behind the formula needs sigma > 0; kappa1 is
/// resolved with the q = 1/2 split unless the caller supplied one.
inline double bound_levy_reverse_sup(const NegativeDriftParams& params, double R) {
  if (!(params.sigma > 0.0))
    throw std::invalid_argument("bound_levy_reverse_sup: requires sigma > 0");
  if (!(params.alpha > 0.0) || !(params.beta > 0.0))
    throw std::invalid_argument("bound_levy_reverse_sup: alpha, beta must be positive");
  if (R < 0.0) throw std::invalid_argument("bound_levy_reverse_sup: R must be nonnegative");
  double kappa1;
  if (params.kappa1) {
    if (!(params.alpha > params.lambda_N * params.zeta * params.beta))
      throw std::invalid_argument(
          "bound_levy_reverse_sup: need alpha > lambda_N zeta beta");
    kappa1 = *params.kappa1;
  } else {
    kappa1 = solve_kappa1(params.alpha, params.beta, params.zeta, params.lambda_N, 0.5);
  }
  const double d = params.beta * params.beta * params.sigma * params.sigma;
  return 4.0 * std::exp(-R * R / (256.0 * d)) +
         4.0 * std::exp(-params.alpha * R / (256.0 * d)) /
             (1.0 - std::exp(-params.alpha * params.alpha / (512.0 * d))) +
         std::exp(-kappa1 * R);
}

/// Default level floor R0 for the interval bound: zero for a martingale
/// driver, otherwise large enough to absorb the compensator drift over the
/// window (a toolkit convention, 4 lambda_N |E Z| T).
inline double default_interval_R0(const RegulatedLevySpec& spec, double T) {
  if (spec.drift_mode == LevyDriftMode::martingale || spec.lambda_N == 0.0) return 0.0;
  return 4.0 * spec.lambda_N * std::fabs(spec.jump_law.mean) * T;
}

/// P(sup over a window of length T of the jump-diffusion stochastic integral
/// >= R), valid for R >= R0. kappa2 defaults to 1.
inline double bound_levy_interval_sup(const NegativeDriftParams& params, double T, double R) {
  if (!(params.sigma > 0.0))
    throw std::invalid_argument("bound_levy_interval_sup: requires sigma > 0");
  if (!(params.beta > 0.0) || !(T > 0.0))
    throw std::invalid_argument("bound_levy_interval_sup: beta, T must be positive");
  if (R < 0.0) throw std::invalid_argument("bound_levy_interval_sup: R must be nonnegative");
  const double kappa2 = params.kappa2.value_or(1.0);
  if (!(kappa2 > 0.0))
    throw std::invalid_argument("bound_levy_interval_sup: kappa2 must be positive");
  const double R0 = params.R0.value_or(0.0);
  const double zb = params.zeta * params.beta;
  const double C = std::exp(4.0 * kappa2 * params.lambda_N * zb * T) *
                   std::exp(params.lambda_N * T * std::expm1(4.0 * kappa2 * zb));
  double bound = 2.0 * std::exp(-R * R /
                                (64.0 * params.beta * params.beta * params.sigma *
                                 params.sigma * T)) +
                 C * std::exp(-kappa2 * R);
  if (R < R0) bound += 1.0;
  return bound;
}

/// Reverse-supremum bound via a time-change argument, with the sharper 8/16
/// constants; beta1 is the upper noise bound of the two-sided envelope.
inline double bound_d1_reverse_sup(double alpha, double beta1, double R) {
  if (!(alpha > 0.0) || !(beta1 > 0.0))
    throw std::invalid_argument("bound_d1_reverse_sup: alpha, beta1 must be positive");
  if (R < 0.0) throw std::invalid_argument("bound_d1_reverse_sup: R must be nonnegative");
  const double b2 = beta1 * beta1;
  return 2.0 * std::exp(-R * R / (8.0 * b2)) +
         2.0 * std::exp(-alpha * R / (8.0 * b2)) /
             (1.0 - std::exp(-alpha * alpha / (16.0 * b2)));
}

/// One-sided 99% Clopper-Pearson upper confidence limit for k exceedances in
/// n trials.
inline double clopper_pearson_upper99(std::size_t k, std::size_t n) {
  if (n == 0) throw std::invalid_argument("clopper_pearson_upper99: n must be positive");
  if (k > n) throw std::invalid_argument("clopper_pearson_upper99: k exceeds n");
  if (k == n) return 1.0;
  const boost::math::beta_distribution<double> dist(double(k) + 1.0, double(n - k));
  return boost::math::quantile(dist, 0.99);
}

struct TailEstimate {
  double estimate = 0.0;
  double ci_upper_99 = 0.0;
  std::size_t n_exceed = 0;
  std::size_t n_paths = 0;
};

inline TailEstimate tail_estimate_from_stats(const std::vector<double>& stats, double R) {
  TailEstimate out;
  out.n_paths = stats.size();
  for (double s : stats)
    if (s >= R) ++out.n_exceed;
  out.estimate = double(out.n_exceed) / double(out.n_paths);
  out.ci_upper_99 = clopper_pearson_upper99(out.n_exceed, out.n_paths);
  return out;
}

namespace detail {

// Walk Y over the sampled driver's own jump-adapted grid, reporting the
// terminal value and the running minimum / maximum including pre-jump left
// limits. accumulate_from skips contributions before that time (for windowed
// statistics with stationary increments).
struct DriftedWalk {
  double terminal = 0.0;
  double min_value = 0.0;
  double max_value = 0.0;
};

template <typename DriftFn, typename NoiseFn>
DriftedWalk walk_drifted_integral(const NoisePath& np, DriftFn&& drift_fn, NoiseFn&& noise_fn,
                                  double accumulate_from) {
  const auto& ts = np.base.times();
  const auto& vs = np.base.values();
  const auto& js = np.base.jumps();
  std::size_t jp = 0;
  DriftedWalk w;
  double y = 0.0;
  for (std::size_t i = 1; i < ts.size(); ++i) {
    while (jp < js.size() && js[jp].index < i) ++jp;
    const bool jump = jp < js.size() && js[jp].index == i;
    const double t_prev = ts[i - 1];
    if (ts[i] <= accumulate_from) continue;
    const double t_from = std::max(t_prev, accumulate_from);
    const double a = drift_fn(t_from);
    const double b = noise_fn(t_from);
    const double L_prev = vs[i - 1];
    const double L_left = jump ? js[jp].left_value : vs[i];
    const double y_left = y - a * (ts[i] - t_from) + b * (L_left - L_prev);
    w.min_value = std::min(w.min_value, y_left);
    w.max_value = std::max(w.max_value, y_left);
    y = jump ? y_left + b * (vs[i] - js[jp].left_value) : y_left;
    w.min_value = std::min(w.min_value, y);
    w.max_value = std::max(w.max_value, y);
  }
  w.terminal = y;
  return w;
}

}  // namespace detail

/// Per-path reverse-time supremum statistics sup_{0<=theta<=l}(Y(l) - Y(theta))
/// for Y(t) = -int a ds + int b dL, one entry per path. Feeding several R
/// thresholds through tail_estimate_from_stats reuses one simulation pass.
inline std::vector<double> sample_reverse_sup_stats(
    const std::function<double(double)>& drift_fn, const std::function<double(double)>& noise_fn,
    const RegulatedLevySpec& levy, double l, std::size_t n_paths, double dt,
    std::uint64_t master_seed) {
  if (n_paths == 0) throw std::invalid_argument("sample_reverse_sup_stats: n_paths must be positive");
  if (!drift_fn || !noise_fn)
    throw std::invalid_argument("sample_reverse_sup_stats: drift_fn and noise_fn required");
  if (l < 0.0) throw std::invalid_argument("sample_reverse_sup_stats: l must be nonnegative");
  std::vector<double> stats(n_paths, 0.0);
  if (l == 0.0) return stats;
  for (std::size_t p = 0; p < n_paths; ++p) {
    const auto np = sample_levy(levy, l, dt, master_seed, p);
    const auto w = detail::walk_drifted_integral(np, drift_fn, noise_fn, 0.0);
    stats[p] = w.terminal - w.min_value;
  }
  return stats;
}

/// Per-path forward window suprema sup_{t0<=t<=t0+T} int_{t0}^{t} b dL.
inline std::vector<double> sample_interval_sup_stats(
    const std::function<double(double)>& noise_fn, const RegulatedLevySpec& levy, double t0,
    double T, std::size_t n_paths, double dt, std::uint64_t master_seed) {
  if (n_paths == 0)
    throw std::invalid_argument("sample_interval_sup_stats: n_paths must be positive");
  if (!noise_fn) throw std::invalid_argument("sample_interval_sup_stats: noise_fn required");
  if (t0 < 0.0 || !(T > 0.0))
    throw std::invalid_argument("sample_interval_sup_stats: need t0 >= 0 and T > 0");
  const double steps = t0 / dt;
  if (std::fabs(steps - std::round(steps)) > 1e-9)
    throw std::invalid_argument("sample_interval_sup_stats: t0 must sit on the dt grid");
  std::vector<double> stats(n_paths, 0.0);
  auto zero_drift = [](double) { return 0.0; };
  for (std::size_t p = 0; p < n_paths; ++p) {
    const auto np = sample_levy(levy, t0 + T, dt, master_seed, p);
    const auto w = detail::walk_drifted_integral(np, zero_drift, noise_fn, t0);
    stats[p] = w.max_value;
  }
  return stats;
}

/// Monte Carlo exceedance of the reverse-time supremum at level R, with its
/// one-sided 99% Clopper-Pearson upper confidence limit.
inline TailEstimate estimate_reverse_sup_tail(const std::function<double(double)>& drift_fn,
                                              const std::function<double(double)>& noise_fn,
                                              const RegulatedLevySpec& levy, double l, double R,
                                              std::size_t n_paths, double dt,
                                              std::uint64_t master_seed) {
  return tail_estimate_from_stats(
      sample_reverse_sup_stats(drift_fn, noise_fn, levy, l, n_paths, dt, master_seed), R);
}

/// Monte Carlo exceedance of the forward window supremum at level R.
inline TailEstimate estimate_interval_sup_tail(const std::function<double(double)>& noise_fn,
                                               const RegulatedLevySpec& levy, double t0, double T,
                                               double R, std::size_t n_paths, double dt,
                                               std::uint64_t master_seed) {
  return tail_estimate_from_stats(
      sample_interval_sup_stats(noise_fn, levy, t0, T, n_paths, dt, master_seed), R);
}

}  // namespace sdde
