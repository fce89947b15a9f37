#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sdde/noise.hpp"
#include "sdde/paths.hpp"

namespace sdde {

/// Caller-declared envelope for the coefficients: drift in [-alpha_min,
/// alpha_max], squared noise coefficient at most beta^2. Violations during a
/// run are logged, not fatal, so a run can certify (or refute) the envelope
/// it was claimed to satisfy.
struct DeclaredBounds {
  double alpha_max = 0.0;
  double alpha_min = 0.0;
  double beta = 0.0;
};

/// Segment-functional drift and noise coefficients a(phi, t), b(phi, t).
/// `forcing_drift` optionally names the part of the drift whose time integral
/// belongs to the recorded forcing path (corrections and other bounded terms,
/// as opposed to the structural feedback part); it must already be included
/// in `drift`.
struct FunctionalCoefficients {
  std::function<double(const Segment&, double)> drift;
  std::function<double(const Segment&, double)> noise;
  std::function<double(const Segment&, double)> forcing_drift;
  std::optional<DeclaredBounds> declared_bounds;
};

struct SolverConfig {
  double dt = 0.0;
  double horizon = 0.0;
  double explosion_threshold = 1e8;
  /// Interpolation for delayed lookups between solver grid points.
  Interpolation interpolation = Interpolation::linear;
  /// Track crossings of -explosion_threshold too (log frame: blowdown to
  /// -infinity is the extinction surrogate).
  bool two_sided_explosion = false;
  /// Record the realized forcing path: integral of forcing_drift plus the
  /// full noise contribution, jumps included.
  bool record_forcing = false;

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt))
      throw std::invalid_argument("SolverConfig: dt must be positive");
    if (!(horizon > 0.0) || !std::isfinite(horizon))
      throw std::invalid_argument("SolverConfig: horizon must be positive");
    if (dt > horizon) throw std::invalid_argument("SolverConfig: dt exceeds horizon");
    if (!(explosion_threshold > 0.0))
      throw std::invalid_argument("SolverConfig: explosion threshold must be positive");
  }
};

struct BoundViolation {
  double time = 0.0;
  std::string kind;
  double value = 0.0;
};

/// One integrated path on [-tau, horizon]. If the threshold was crossed,
/// explosion_time marks the in-step crossing instant, the path shows the
/// crossing value at the next grid point and is frozen at 0 afterwards, so
/// downstream time averages stay well-defined while the event stays visible.
struct Trajectory {
  double tau = 0.0;
  CadlagPath path;
  std::optional<double> explosion_time;
  int explosion_direction = 0;  // +1 upward crossing, -1 downward (two-sided mode)
  std::vector<BoundViolation> violations;
  double max_abs_drift = 0.0;
  double max_abs_noise_coeff = 0.0;
  std::optional<CadlagPath> forcing;

  [[nodiscard]] double horizon() const { return path.back_time(); }
  [[nodiscard]] Segment segment(double t) const { return segment_at(path, t, tau); }
};

/// Zero driver on [0, horizon], for deterministic (ODE) integration.
inline NoisePath null_noise(double horizon) {
  NoisePath p;
  p.base = CadlagPath({0.0, horizon}, {0.0, 0.0}, {}, Interpolation::step);
  p.sigma = 0.0;
  return p;
}

namespace detail {

struct GridPoint {
  double t;
  std::ptrdiff_t jump = -1;  // index into the noise path's jump list
};

// Uniform step-dt grid on (0, horizon] merged with the driver's jump times;
// a uniform point within rounding of a jump time yields to the exact jump
// time so the driver's recorded left limits stay addressable.
inline std::vector<GridPoint> merged_grid(double dt, double horizon,
                                          const std::vector<double>& jump_times) {
  std::vector<GridPoint> grid;
  const auto n_steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-12));
  grid.reserve(n_steps + jump_times.size() + 1);
  const double snap = 1e-9 * dt;
  std::size_t k = 0;
  while (k < jump_times.size() && jump_times[k] <= snap) ++k;  // defensive
  auto push_uniform = [&](double tu) {
    while (k < jump_times.size() && jump_times[k] < tu - snap &&
           jump_times[k] <= horizon + snap) {
      grid.push_back({jump_times[k], static_cast<std::ptrdiff_t>(k)});
      ++k;
    }
    if (k < jump_times.size() && std::fabs(jump_times[k] - tu) <= snap) {
      grid.push_back({jump_times[k], static_cast<std::ptrdiff_t>(k)});
      ++k;
      return;
    }
    grid.push_back({tu, -1});
  };
  for (std::size_t i = 1; i < n_steps; ++i) push_uniform(double(i) * dt);
  push_uniform(horizon);
  return grid;
}

// Delay window [t - tau, t] of a partially built path, re-anchored to
// [-tau, 0]. Same semantics as segment_at, but works on the growing arrays
// without materializing the full path each step.
inline Segment window_segment(const std::vector<double>& ts, const std::vector<double>& vs,
                              const std::vector<JumpEvent>& js, Interpolation interp,
                              double tau, std::size_t now) {
  const double t = ts[now];
  const double lo = t - tau;
  auto it = std::upper_bound(ts.begin(), ts.begin() + static_cast<std::ptrdiff_t>(now) + 1, lo);
  std::size_t i0 = static_cast<std::size_t>(it - ts.begin());
  if (i0 == 0)
    throw std::out_of_range("window_segment: delay window precedes recorded history");
  --i0;
  if (i0 + 1 <= now && CadlagPath::same_time(ts[i0 + 1], lo)) ++i0;
  const bool lo_on_grid = CadlagPath::same_time(ts[i0], lo);

  auto jump_lb = std::lower_bound(js.begin(), js.end(), i0 + 1,
                                  [](const JumpEvent& e, std::size_t k) { return e.index < k; });

  std::vector<double> st, sv;
  std::vector<JumpEvent> sj;
  st.reserve(now - i0 + 2);
  sv.reserve(now - i0 + 2);

  double v0 = vs[i0];
  if (!lo_on_grid && interp == Interpolation::linear && i0 + 1 <= now) {
    double target = vs[i0 + 1];
    if (jump_lb != js.end() && jump_lb->index == i0 + 1) target = jump_lb->left_value;
    const double w = (lo - ts[i0]) / (ts[i0 + 1] - ts[i0]);
    v0 += w * (target - vs[i0]);
  }
  st.push_back(-tau);
  sv.push_back(v0);

  for (std::size_t j = i0 + 1; j <= now; ++j) {
    st.push_back(j == now ? 0.0 : ts[j] - t);
    sv.push_back(vs[j]);
    while (jump_lb != js.end() && jump_lb->index < j) ++jump_lb;
    if (jump_lb != js.end() && jump_lb->index == j)
      sj.push_back({st.size() - 1, jump_lb->left_value});
  }
  return Segment{tau, CadlagPath(std::move(st), std::move(sv), std::move(sj), interp)};
}

inline void check_finite(double value, const char* what, double t) {
  if (!std::isfinite(value))
    throw std::runtime_error(std::string("integrate_sdde: non-finite ") + what +
                             " evaluation at t = " + std::to_string(t));
}

}  // namespace detail

/// Explicit Euler-Maruyama on the uniform grid merged with the driver's jump
/// times: X_{n+1} = X_n + a(X_{t_n}, t_n) dt_n + b(X_{t_n}, t_n) dL_n. The
/// coefficient of a jump landing at t_{n+1} is thus evaluated on the segment
/// at t_n, which never contains that jump.
inline Trajectory integrate_sdde(const FunctionalCoefficients& coeffs, const Segment& initial,
                                 const NoisePath& noise, const SolverConfig& config) {
  config.validate();
  if (!coeffs.drift || !coeffs.noise)
    throw std::invalid_argument("integrate_sdde: drift and noise coefficients required");
  const double tau = initial.tau;
  if (!(tau > 0.0)) throw std::invalid_argument("integrate_sdde: initial segment needs tau > 0");
  if (config.dt > tau * (1.0 + 1e-12))
    throw std::invalid_argument("integrate_sdde: dt must not exceed the delay tau");
  if (!CadlagPath::same_time(initial.path.back_time(), 0.0))
    throw std::invalid_argument("integrate_sdde: initial segment must be anchored at time 0");
  if (!CadlagPath::same_time(initial.path.front_time(), -tau))
    throw std::invalid_argument("integrate_sdde: initial segment must span [-tau, 0]");
  if (noise.horizon() < config.horizon * (1.0 - 1e-12))
    throw std::invalid_argument("integrate_sdde: noise horizon shorter than solve horizon");
  if (sup_norm(initial) >= config.explosion_threshold)
    throw std::invalid_argument(
        "integrate_sdde: explosion threshold must exceed the initial sup norm");

  const auto grid = detail::merged_grid(config.dt, config.horizon, noise.jump_times);

  std::vector<double> ts = initial.path.times();
  std::vector<double> vs = initial.path.values();
  std::vector<JumpEvent> js = initial.path.jumps();
  ts.reserve(ts.size() + grid.size());
  vs.reserve(vs.size() + grid.size());

  std::vector<double> fts, fvs;
  std::vector<JumpEvent> fjs;
  if (config.record_forcing) {
    fts.reserve(grid.size() + 1);
    fvs.reserve(grid.size() + 1);
    fts.push_back(0.0);
    fvs.push_back(0.0);
  }

  Trajectory out;
  out.tau = tau;

  double x = vs.back();
  double fv = 0.0;
  bool exploded = false;
  bool freeze_jump_recorded = false;

  for (const auto& gp : grid) {
    const std::size_t now = ts.size() - 1;
    const double t_prev = ts[now];
    const double t_next = gp.t;
    const double dtn = t_next - t_prev;

    if (exploded) {
      ts.push_back(t_next);
      if (!freeze_jump_recorded) {
        js.push_back({vs.size(), vs.back()});
        freeze_jump_recorded = true;
      }
      vs.push_back(0.0);
      if (config.record_forcing) {
        fts.push_back(t_next);
        fvs.push_back(fv);
      }
      continue;
    }

    const Segment seg = detail::window_segment(ts, vs, js, config.interpolation, tau, now);
    const double a = coeffs.drift(seg, t_prev);
    const double b = coeffs.noise(seg, t_prev);
    detail::check_finite(a, "drift", t_prev);
    detail::check_finite(b, "noise coefficient", t_prev);
    out.max_abs_drift = std::max(out.max_abs_drift, std::fabs(a));
    out.max_abs_noise_coeff = std::max(out.max_abs_noise_coeff, std::fabs(b));
    if (coeffs.declared_bounds) {
      const auto& db = *coeffs.declared_bounds;
      if (a > db.alpha_max) out.violations.push_back({t_prev, "drift above alpha_max", a});
      if (a < -db.alpha_min) out.violations.push_back({t_prev, "drift below -alpha_min", a});
      if (b * b > db.beta * db.beta)
        out.violations.push_back({t_prev, "noise coefficient above beta", b});
    }

    const double L_prev = noise.base.value_at(t_prev);
    const double L_left =
        gp.jump >= 0 ? noise.base.left_limit_at(t_next) : noise.base.value_at(t_next);
    const double dL_cont = L_left - L_prev;

    const double x_left = x + a * dtn + b * dL_cont;
    double x_next = x_left;
    if (gp.jump >= 0) x_next = x_left + b * noise.jump_sizes[static_cast<std::size_t>(gp.jump)];
    detail::check_finite(x_next, "state update", t_next);

    ts.push_back(t_next);
    vs.push_back(x_next);
    if (gp.jump >= 0) js.push_back({vs.size() - 1, x_left});

    if (config.record_forcing) {
      const double fd = coeffs.forcing_drift ? coeffs.forcing_drift(seg, t_prev) : 0.0;
      detail::check_finite(fd, "forcing drift", t_prev);
      const double f_left = fv + fd * dtn + b * dL_cont;
      fv = f_left;
      fts.push_back(t_next);
      if (gp.jump >= 0) {
        fv = f_left + b * noise.jump_sizes[static_cast<std::size_t>(gp.jump)];
        fjs.push_back({fvs.size(), f_left});
      }
      fvs.push_back(fv);
    }

    const double thr = config.explosion_threshold;
    const bool up_left = x_left >= thr, up_next = x_next >= thr;
    const bool dn_left = config.two_sided_explosion && x_left <= -thr;
    const bool dn_next = config.two_sided_explosion && x_next <= -thr;
    if (up_left || up_next || dn_left || dn_next) {
      exploded = true;
      if (up_left || dn_left) {
        const double target = up_left ? thr : -thr;
        const double s = (target - x) / (x_left - x);
        out.explosion_time = t_prev + s * dtn;
        out.explosion_direction = up_left ? +1 : -1;
      } else {
        out.explosion_time = t_next;
        out.explosion_direction = up_next ? +1 : -1;
      }
    }
    x = x_next;
  }

  out.path = CadlagPath(std::move(ts), std::move(vs), std::move(js), Interpolation::linear);
  if (config.record_forcing)
    out.forcing = CadlagPath(std::move(fts), std::move(fvs), std::move(fjs),
                             Interpolation::linear);
  return out;
}

/// Picard iteration for the same discretized integral equation:
/// X^{n+1}(t_k) = phi(0) + sum a(X^n_{t_j}, t_j) dt_j + sum b(X^n_{t_j}, t_j) dL_j,
/// left-endpoint sums on the same jump-adapted grid as integrate_sdde.
/// Returns n_iters + 1 trajectories: the constant extension X^0 first, then
/// each iterate. Iterates assume the caller-certified Lipschitz setting and
/// do not track explosions.
inline std::vector<Trajectory> picard_iterate(const FunctionalCoefficients& coeffs,
                                              const Segment& initial, const NoisePath& noise,
                                              std::size_t n_iters, const SolverConfig& config) {
  config.validate();
  if (n_iters == 0) throw std::invalid_argument("picard_iterate: n_iters must be positive");
  if (!coeffs.drift || !coeffs.noise)
    throw std::invalid_argument("picard_iterate: drift and noise coefficients required");
  const double tau = initial.tau;
  if (config.dt > tau * (1.0 + 1e-12))
    throw std::invalid_argument("picard_iterate: dt must not exceed the delay tau");

  const auto grid = detail::merged_grid(config.dt, config.horizon, noise.jump_times);
  const double x0 = initial.path.values().back();

  std::vector<Trajectory> iterates;
  iterates.reserve(n_iters + 1);
  {
    std::vector<double> ts = initial.path.times();
    std::vector<double> vs = initial.path.values();
    std::vector<JumpEvent> js = initial.path.jumps();
    for (const auto& gp : grid) {
      ts.push_back(gp.t);
      vs.push_back(x0);
    }
    Trajectory t0;
    t0.tau = tau;
    t0.path = CadlagPath(std::move(ts), std::move(vs), std::move(js), Interpolation::linear);
    iterates.push_back(std::move(t0));
  }

  for (std::size_t it = 1; it <= n_iters; ++it) {
    const Trajectory& prev = iterates.back();
    std::vector<double> ts = initial.path.times();
    std::vector<double> vs = initial.path.values();
    std::vector<JumpEvent> js = initial.path.jumps();
    double acc = x0;
    double t_prev = 0.0;
    for (const auto& gp : grid) {
      const Segment seg = segment_at(prev.path, t_prev, tau);
      const double a = coeffs.drift(seg, t_prev);
      const double b = coeffs.noise(seg, t_prev);
      detail::check_finite(a, "drift", t_prev);
      detail::check_finite(b, "noise coefficient", t_prev);
      const double L_prev = noise.base.value_at(t_prev);
      const double L_left =
          gp.jump >= 0 ? noise.base.left_limit_at(gp.t) : noise.base.value_at(gp.t);
      const double acc_left = acc + a * (gp.t - t_prev) + b * (L_left - L_prev);
      acc = acc_left;
      if (gp.jump >= 0) acc = acc_left + b * noise.jump_sizes[static_cast<std::size_t>(gp.jump)];
      ts.push_back(gp.t);
      vs.push_back(acc);
      if (gp.jump >= 0) js.push_back({vs.size() - 1, acc_left});
      t_prev = gp.t;
    }
    Trajectory next;
    next.tau = tau;
    next.path = CadlagPath(std::move(ts), std::move(vs), std::move(js), Interpolation::linear);
    iterates.push_back(std::move(next));
  }
  return iterates;
}

/// Pointwise exponential of a trajectory (x = e^y), clamped at |y| = 700 to
/// stay inside double range. The post-explosion freeze-at-0 convention is
/// preserved rather than mapped to e^0.
inline Trajectory transform_exp(const Trajectory& traj) {
  const auto& p = traj.path;
  std::vector<double> vs(p.values().size());
  auto safe_exp = [](double y) { return std::exp(std::clamp(y, -700.0, 700.0)); };
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const bool frozen = traj.explosion_time && p.values()[i] == 0.0 &&
                        p.times()[i] > *traj.explosion_time;
    vs[i] = frozen ? 0.0 : safe_exp(p.values()[i]);
  }
  std::vector<JumpEvent> js = p.jumps();
  for (auto& e : js) e.left_value = safe_exp(e.left_value);
  Trajectory out;
  out.tau = traj.tau;
  out.path = CadlagPath(p.times(), std::move(vs), std::move(js), p.interpolation());
  out.explosion_time = traj.explosion_time;
  out.explosion_direction = traj.explosion_direction;
  out.violations = traj.violations;
  return out;
}

/// Constant initial history at a given level.
inline Segment constant_segment(double tau, double value, std::size_t n_cells = 8) {
  if (!(tau > 0.0)) throw std::invalid_argument("constant_segment: tau must be positive");
  if (n_cells == 0) throw std::invalid_argument("constant_segment: need at least one cell");
  std::vector<double> ts(n_cells + 1), vs(n_cells + 1, value);
  for (std::size_t i = 0; i <= n_cells; ++i)
    ts[i] = -tau + tau * double(i) / double(n_cells);
  ts.front() = -tau;
  ts.back() = 0.0;
  return Segment{tau, CadlagPath(std::move(ts), std::move(vs), {}, Interpolation::linear)};
}

}  // namespace sdde
