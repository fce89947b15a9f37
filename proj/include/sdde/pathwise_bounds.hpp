#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sdde/models.hpp"
#include "sdde/paths.hpp"
#include "sdde/solver.hpp"

namespace sdde {

/// Certified constants for the trajectory envelopes. The upper envelope uses
/// (R, zeta, gamma_tilde, r_tilde, M); the lower one uses (R, zeta, C_F,
/// beta_drift, delta). drift_sup is a certified bound on the non-forcing
/// drift magnitude along the path and only widens the discretization
/// tolerance. delay_factor scales the lower envelope's drop term for delays
/// other than one.
struct BoundParams {
  double R = 0.0;
  double zeta = 0.0;
  double gamma_tilde = 0.0;
  double r_tilde = 0.0;
  double M = 0.0;
  double C_F = 0.0;
  double beta_drift = 0.0;
  double delta = 0.0;
  double delay_factor = 1.0;
  double drift_sup = 0.0;

  /// Decay rate of the upper envelope beyond the level R.
  [[nodiscard]] double alpha() const { return gamma_tilde - r_tilde * M * std::exp(-R); }

  /// Lower-envelope parameters for feedback with f(0) > 0 and constant
  /// gamma: the drop constant C_F + beta_drift collapses to gamma.
  static BoundParams persistent_feedback(double gamma, double zeta, double R, double delta) {
    BoundParams p;
    p.R = R;
    p.zeta = zeta;
    p.C_F = 0.0;
    p.beta_drift = gamma;
    p.delta = delta;
    return p;
  }
};

enum class CrossingDirection { below, above };

namespace detail {

inline bool on_correct_side(double value, double R, CrossingDirection dir) {
  return dir == CrossingDirection::below ? value < R : value > -R;
}

}  // namespace detail

/// Last grid time s in [t0, t] at which z(s) is strictly below R (below mode)
/// or strictly above -R (above mode). Values exactly at the level count as
/// the wrong side. Throws if z(t0) itself is on the wrong side.
inline double crossing_time(const CadlagPath& z, double R, double t0, double t,
                            CrossingDirection dir) {
  if (t < t0) throw std::invalid_argument("crossing_time: t must not precede t0");
  if (z.front_time() > t0 + 1e-12 || z.back_time() < t - 1e-12)
    throw std::out_of_range("crossing_time: path does not cover [t0, t]");
  if (!detail::on_correct_side(z.value_at(t0), R, dir))
    throw std::runtime_error("crossing_time: z(t0) is on the wrong side of the level");
  double best = t0;
  const auto& ts = z.times();
  const auto& vs = z.values();
  const auto begin = std::upper_bound(ts.begin(), ts.end(), t0);
  for (auto it = begin; it != ts.end() && (*it <= t || CadlagPath::same_time(*it, t)); ++it) {
    const std::size_t i = std::size_t(it - ts.begin());
    if (detail::on_correct_side(vs[i], R, dir)) best = ts[i];
  }
  if (t < z.back_time() && !CadlagPath::same_time(best, t) &&
      detail::on_correct_side(z.value_at(t), R, dir))
    best = t;
  return best;
}

struct EnvelopeMarginRecord {
  double time = 0.0;
  double value = 0.0;
  double bound = 0.0;
  double margin = 0.0;
  bool at_left_limit = false;
};

/// Outcome of sweeping one envelope along a path: margin > 0 means the value
/// ended on the wrong side of the envelope; within tol it is counted as
/// grid-marginal, beyond tol as a violation.
struct EnvelopeReport {
  std::size_t checks = 0;
  std::size_t marginal = 0;
  std::size_t violations = 0;
  double worst_margin = -std::numeric_limits<double>::infinity();
  double alpha = 0.0;
  double tol = 0.0;
  std::vector<EnvelopeMarginRecord> flagged;

  [[nodiscard]] bool clean() const { return violations == 0; }
};

namespace detail {

inline void classify_margin(EnvelopeReport& rep, double time, double value, double bound,
                            double margin, bool at_left) {
  ++rep.checks;
  rep.worst_margin = std::max(rep.worst_margin, margin);
  if (margin <= 0.0) return;
  if (margin <= rep.tol)
    ++rep.marginal;
  else
    ++rep.violations;
  rep.flagged.push_back({time, value, bound, margin, at_left});
}

// Largest spacing of the grid past t0; the discretization tolerance scales
// with it.
inline double max_grid_step(const std::vector<double>& ts, double t0) {
  double dt = 0.0;
  for (std::size_t i = 1; i < ts.size(); ++i)
    if (ts[i] > t0) dt = std::max(dt, ts[i] - std::max(ts[i - 1], t0));
  return dt;
}

// Index of v's grid point matching time ti, advancing a caller-held cursor.
inline std::size_t aligned_index(const CadlagPath& v, double ti, std::size_t& cursor) {
  while (cursor + 1 < v.size() && v.times()[cursor] < ti &&
         !CadlagPath::same_time(v.times()[cursor], ti))
    ++cursor;
  if (!CadlagPath::same_time(v.times()[cursor], ti))
    throw std::invalid_argument("pathwise bounds: trajectory and forcing grids are not aligned");
  return cursor;
}

}  // namespace detail

/// Sweeps the decay envelope z(t) <= max{R, R + zeta - alpha (t - a^t) + v(t)
/// - v(a^t)} over all grid times after t0, where a^t is the last grid time
/// with z < R. Checks post-jump values everywhere and left limits at jump
/// times. Requires z(t0) < R.
inline EnvelopeReport verify_upper_bound(const CadlagPath& z, const CadlagPath& v,
                                         const BoundParams& params, double t0) {
  if (!(params.gamma_tilde > 0.0) || !(params.r_tilde > 0.0) || !(params.M > 0.0))
    throw std::invalid_argument("verify_upper_bound: gamma_tilde, r_tilde, M must be positive");
  if (params.R < 0.0 || params.zeta < 0.0 || params.drift_sup < 0.0)
    throw std::invalid_argument("verify_upper_bound: R, zeta, drift_sup must be nonnegative");
  const double z0 = z.value_at(t0);
  if (!(z0 < params.R))
    throw std::runtime_error("verify_upper_bound: z(t0) must start below R");

  EnvelopeReport rep;
  rep.alpha = params.alpha();
  rep.tol = 5.0 * detail::max_grid_step(z.times(), t0) *
            (std::fabs(rep.alpha) + params.drift_sup);

  double a_time = t0;
  double a_forcing = v.value_at(t0);
  std::size_t cursor = 0;
  const auto& ts = z.times();
  const auto& vs = z.values();
  const auto begin = std::upper_bound(ts.begin(), ts.end(), t0);
  for (auto it = begin; it != ts.end(); ++it) {
    const std::size_t i = std::size_t(it - ts.begin());
    const double ti = ts[i];
    const std::size_t jv = detail::aligned_index(v, ti, cursor);
    if (z.jump_at(i) != nullptr) {
      const double z_left = z.left_limit_at_index(i);
      const double v_left = v.left_limit_at_index(jv);
      const double bound = std::max(
          params.R, params.R + params.zeta - rep.alpha * (ti - a_time) + v_left - a_forcing);
      detail::classify_margin(rep, ti, z_left, bound, z_left - bound, true);
    }
    if (vs[i] < params.R) {
      a_time = ti;
      a_forcing = v.values()[jv];
    }
    const double bound = std::max(
        params.R, params.R + params.zeta - rep.alpha * (ti - a_time) + v.values()[jv] - a_forcing);
    detail::classify_margin(rep, ti, vs[i], bound, vs[i] - bound, false);
  }
  return rep;
}

/// Sweeps the floor envelope z(t) >= min{-R, -R - (C_F + beta_drift)
/// delay_factor - zeta + v(t) - v(a^t)} with a^t the last grid time with
/// z > -R. Requires z(t0) > -R and exp(-R) < delta.
inline EnvelopeReport verify_lower_bound(const CadlagPath& z, const CadlagPath& v,
                                         const BoundParams& params, double t0) {
  if (!(params.delta > 0.0))
    throw std::invalid_argument("verify_lower_bound: delta must be positive");
  if (params.C_F < 0.0 || params.beta_drift < 0.0 || params.R < 0.0 || params.zeta < 0.0 ||
      params.drift_sup < 0.0 || !(params.delay_factor > 0.0))
    throw std::invalid_argument("verify_lower_bound: invalid envelope constants");
  if (!(std::exp(-params.R) < params.delta))
    throw std::invalid_argument("verify_lower_bound: requires exp(-R) < delta");
  const double z0 = z.value_at(t0);
  if (!(z0 > -params.R))
    throw std::runtime_error("verify_lower_bound: z(t0) must start above -R");

  EnvelopeReport rep;
  const double drop = (params.C_F + params.beta_drift) * params.delay_factor;
  rep.alpha = drop;
  rep.tol = 5.0 * detail::max_grid_step(z.times(), t0) * (drop + params.drift_sup);

  double a_forcing = v.value_at(t0);
  std::size_t cursor = 0;
  const auto& ts = z.times();
  const auto& vs = z.values();
  const auto begin = std::upper_bound(ts.begin(), ts.end(), t0);
  for (auto it = begin; it != ts.end(); ++it) {
    const std::size_t i = std::size_t(it - ts.begin());
    const double ti = ts[i];
    const std::size_t jv = detail::aligned_index(v, ti, cursor);
    if (z.jump_at(i) != nullptr) {
      const double z_left = z.left_limit_at_index(i);
      const double v_left = v.left_limit_at_index(jv);
      const double floor_env =
          std::min(-params.R, -params.R - drop - params.zeta + v_left - a_forcing);
      detail::classify_margin(rep, ti, z_left, floor_env, floor_env - z_left, true);
    }
    if (vs[i] > -params.R) a_forcing = v.values()[jv];
    const double floor_env =
        std::min(-params.R, -params.R - drop - params.zeta + v.values()[jv] - a_forcing);
    detail::classify_margin(rep, ti, vs[i], floor_env, floor_env - vs[i], false);
  }
  return rep;
}

/// Outcome of integrating the deterministic delayed feedback system: running
/// infimum from time zero, and for constant rates the value band over the
/// second half of the horizon. Precondition failures are reported as
/// warnings, not errors.
struct PersistenceReport {
  double inf_value = 0.0;
  std::optional<std::pair<double, double>> band;
  std::vector<std::string> warnings;
  Trajectory trajectory;
};

/// Integrates x'(t) = -gamma(t) x(t) + r(t) x(t-1) / (1 + x(t-1)^p) from the
/// segment phi and reports how far the solution stays from zero. The
/// persistence conditions (p > 1, phi strictly positive, eventual r/gamma
/// ratio above one) are checked and violations downgraded to warnings.
inline PersistenceReport verify_mg_persistence(double p, const RateFunction& gamma,
                                               const RateFunction& r, const Segment& phi,
                                               double horizon, double dt) {
  if (!(p > 0.0)) throw std::invalid_argument("verify_mg_persistence: p must be positive");
  if (std::fabs(phi.tau - 1.0) > 1e-9)
    throw std::invalid_argument("verify_mg_persistence: the feedback delay is one");

  PersistenceReport out;
  if (!(p > 1.0)) out.warnings.push_back("persistence needs p > 1");
  const double phi_min = *std::min_element(phi.path.values().begin(), phi.path.values().end());
  if (!(phi_min > 0.0)) out.warnings.push_back("persistence needs a strictly positive history");
  if (!(r.levels().back() > gamma.levels().back()))
    out.warnings.push_back("persistence needs the eventual r/gamma ratio above one");

  FunctionalCoefficients coeffs;
  coeffs.drift = [&gamma, &r, p](const Segment& seg, double t) {
    const double x = seg.back();
    const double xd = std::max(seg.value(-1.0), 0.0);
    return -gamma(t) * x + r(t) * xd / (1.0 + std::pow(xd, p));
  };
  coeffs.noise = [](const Segment&, double) { return 0.0; };

  SolverConfig config;
  config.dt = dt;
  config.horizon = horizon;
  out.trajectory = integrate_sdde(coeffs, phi, null_noise(horizon), config);

  const auto& ts = out.trajectory.path.times();
  const auto& vs = out.trajectory.path.values();
  double inf_value = std::numeric_limits<double>::infinity();
  double half_min = std::numeric_limits<double>::infinity();
  double half_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (ts[i] < 0.0) continue;
    inf_value = std::min(inf_value, vs[i]);
    if (ts[i] >= 0.5 * horizon) {
      half_min = std::min(half_min, vs[i]);
      half_max = std::max(half_max, vs[i]);
    }
  }
  out.inf_value = inf_value;
  if (gamma.is_constant() && r.is_constant()) out.band = std::make_pair(half_min, half_max);
  return out;
}

}  // namespace sdde
