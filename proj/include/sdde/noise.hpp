#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sdde/paths.hpp"
#include "sdde/rng.hpp"

namespace sdde {

/// Whether the deterministic part of the driver is dropped (no continuous
/// drift) or chosen to compensate the jump mean so the process is a
/// martingale. Martingale mode with active jumps additionally demands a
/// centered jump law, so the compensating term -lambda_N * E[Z1] * t is zero
/// for every spec that validates; it is still written out explicitly.
enum class LevyDriftMode { no_continuous_drift, martingale };

/// Jump-size distribution with declared closed-form moments. The declared
/// values feed the analytic rate formulas, so custom laws must certify them
/// along with a support bound.
struct JumpLaw {
  std::string name = "point_mass";
  double mean = 0.0;
  double second_moment = 0.0;
  /// E[Z * 1{|Z| <= 1}], the truncated first moment used by drift corrections.
  double mean_within_unit = 0.0;
  double support_bound = 0.0;
  std::function<double(CounterRng&)> sample = [](CounterRng&) { return 0.0; };

  static JumpLaw point_mass(double c) {
    JumpLaw law;
    law.name = "point_mass";
    law.mean = c;
    law.second_moment = c * c;
    law.mean_within_unit = std::fabs(c) <= 1.0 ? c : 0.0;
    law.support_bound = std::fabs(c);
    law.sample = [c](CounterRng&) { return c; };
    return law;
  }

  static JumpLaw uniform_symmetric(double zeta) {
    if (!(zeta >= 0.0) || !std::isfinite(zeta))
      throw std::invalid_argument("JumpLaw: uniform law needs nonnegative finite zeta");
    JumpLaw law;
    law.name = "uniform";
    law.mean = 0.0;
    law.second_moment = zeta * zeta / 3.0;
    law.mean_within_unit = 0.0;
    law.support_bound = zeta;
    law.sample = [zeta](CounterRng& rng) { return zeta * (2.0 * rng.next_uniform() - 1.0); };
    return law;
  }

  static JumpLaw two_point(double zeta) {
    if (!(zeta >= 0.0) || !std::isfinite(zeta))
      throw std::invalid_argument("JumpLaw: two-point law needs nonnegative finite zeta");
    JumpLaw law;
    law.name = "two_point";
    law.mean = 0.0;
    law.second_moment = zeta * zeta;
    law.mean_within_unit = 0.0;
    law.support_bound = zeta;
    law.sample = [zeta](CounterRng& rng) { return rng.next_uniform() < 0.5 ? -zeta : zeta; };
    return law;
  }

  static JumpLaw custom(std::string name, double mean, double second_moment,
                        double mean_within_unit, double support_bound,
                        std::function<double(CounterRng&)> sample) {
    JumpLaw law;
    law.name = std::move(name);
    law.mean = mean;
    law.second_moment = second_moment;
    law.mean_within_unit = mean_within_unit;
    law.support_bound = support_bound;
    law.sample = std::move(sample);
    return law;
  }
};

/// Finite-intensity jump diffusion: sigma * W(t) + sum of bounded jumps, plus
/// an optional compensating drift. Infinite-activity drivers are rejected by
/// construction since every quantitative bound downstream assumes a finite
/// jump rate and a hard jump bound.
struct RegulatedLevySpec {
  double sigma = 0.0;
  double lambda_N = 0.0;
  double zeta = 0.0;
  JumpLaw jump_law = JumpLaw::point_mass(0.0);
  LevyDriftMode drift_mode = LevyDriftMode::no_continuous_drift;

  static RegulatedLevySpec brownian(double sigma) {
    RegulatedLevySpec spec;
    spec.sigma = sigma;
    spec.validate();
    return spec;
  }

  void validate() const {
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
      throw std::invalid_argument("RegulatedLevySpec: sigma must be a nonnegative finite real");
    if (!(lambda_N >= 0.0) || !std::isfinite(lambda_N))
      throw std::invalid_argument("RegulatedLevySpec: lambda_N must be a nonnegative finite real");
    if (!(zeta >= 0.0) || !std::isfinite(zeta))
      throw std::invalid_argument("RegulatedLevySpec: zeta must be a nonnegative finite real");
    if (lambda_N > 0.0) {
      if (!std::isfinite(jump_law.mean) || !std::isfinite(jump_law.second_moment))
        throw std::invalid_argument("RegulatedLevySpec: jump law must declare finite moments");
      if (jump_law.second_moment + 1e-15 < jump_law.mean * jump_law.mean)
        throw std::invalid_argument("RegulatedLevySpec: declared jump moments are inconsistent");
      if (jump_law.support_bound > zeta * (1.0 + 1e-12))
        throw std::invalid_argument("RegulatedLevySpec: jump law support exceeds the bound zeta");
      if (drift_mode == LevyDriftMode::martingale && jump_law.mean != 0.0)
        throw std::invalid_argument(
            "RegulatedLevySpec: martingale mode with active jumps requires a centered jump law");
      if (!jump_law.sample)
        throw std::invalid_argument("RegulatedLevySpec: jump law sampler missing");
    }
  }
};

/// One realized driver path: the path itself (step interpolation, jump events
/// recorded) plus the jump bookkeeping the solver and the quadratic-variation
/// accounting need.
struct NoisePath {
  CadlagPath base;
  std::vector<double> jump_times;
  std::vector<double> jump_sizes;
  double sigma = 0.0;

  [[nodiscard]] double horizon() const { return base.back_time(); }
};

/// Expected increase rate of the quadratic-variation compensator:
/// sigma^2 + lambda_N * E[Z1^2].
inline double compensator_rate(const RegulatedLevySpec& spec) {
  spec.validate();
  return spec.sigma * spec.sigma +
         (spec.lambda_N > 0.0 ? spec.lambda_N * spec.jump_law.second_moment : 0.0);
}

/// Expected drift per unit time of the driver itself: lambda_N * E[Z1] without
/// continuous drift, zero in martingale mode (the compensator cancels it).
inline double mean_rate(const RegulatedLevySpec& spec) {
  spec.validate();
  if (spec.drift_mode == LevyDriftMode::martingale || spec.lambda_N == 0.0) return 0.0;
  return spec.lambda_N * spec.jump_law.mean;
}

/// Sample one driver realization on [0, horizon]: a uniform grid of step dt
/// merged with exact Poisson jump times. Separate counter streams per role
/// keep the draw deterministic in (spec, horizon, dt, seed, path index) and
/// independent of scheduling.
inline NoisePath sample_levy(const RegulatedLevySpec& spec, double horizon, double dt,
                             std::uint64_t master_seed, std::uint64_t path_index = 0) {
  spec.validate();
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("sample_levy: dt must be positive (degenerate grid)");
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw std::invalid_argument("sample_levy: horizon must be positive");
  if (dt > horizon) throw std::invalid_argument("sample_levy: dt exceeds horizon");

  std::vector<double> jump_times, jump_sizes;
  if (spec.lambda_N > 0.0) {
    CounterRng arrivals(master_seed, path_index, StreamRole::poisson);
    CounterRng sizes(master_seed, path_index, StreamRole::jump_size);
    const double min_sep = 1e-12 * std::max(1.0, horizon);
    double t = arrivals.next_exponential(spec.lambda_N);
    while (t < horizon) {
      if (!jump_times.empty() && t < jump_times.back() + min_sep)
        t = jump_times.back() + min_sep;
      if (t >= horizon) break;
      const double z = spec.jump_law.sample(sizes);
      if (std::fabs(z) > spec.zeta * (1.0 + 1e-12) + 1e-300)
        throw std::logic_error("sample_levy: sampled jump magnitude exceeds zeta");
      jump_times.push_back(t);
      jump_sizes.push_back(z);
      t += arrivals.next_exponential(spec.lambda_N);
    }
  }

  // Merge the uniform grid with the jump times; a uniform point landing on a
  // jump time (within rounding) yields to the exact jump time.
  struct MergedPoint {
    double t;
    std::ptrdiff_t jump = -1;
  };
  std::vector<MergedPoint> merged;
  const auto n_steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-12));
  merged.reserve(n_steps + jump_times.size() + 2);
  const double snap = 1e-9 * dt;
  std::size_t k = 0;
  auto push_uniform = [&](double tu) {
    while (k < jump_times.size() && jump_times[k] < tu - snap) {
      merged.push_back({jump_times[k], static_cast<std::ptrdiff_t>(k)});
      ++k;
    }
    if (k < jump_times.size() && std::fabs(jump_times[k] - tu) <= snap) {
      merged.push_back({jump_times[k], static_cast<std::ptrdiff_t>(k)});
      ++k;
      return;
    }
    merged.push_back({tu, -1});
  };
  merged.push_back({0.0, -1});
  for (std::size_t i = 1; i < n_steps; ++i) push_uniform(double(i) * dt);
  push_uniform(horizon);

  const double comp_drift =
      spec.drift_mode == LevyDriftMode::martingale && spec.lambda_N > 0.0
          ? -spec.lambda_N * spec.jump_law.mean
          : 0.0;

  CounterRng gauss(master_seed, path_index, StreamRole::gaussian);
  std::vector<double> times, values;
  std::vector<JumpEvent> events;
  times.reserve(merged.size());
  values.reserve(merged.size());
  double v = 0.0;
  for (std::size_t i = 0; i < merged.size(); ++i) {
    if (i > 0) {
      const double step = merged[i].t - merged[i - 1].t;
      v += comp_drift * step;
      if (spec.sigma > 0.0) v += spec.sigma * std::sqrt(step) * gauss.next_gaussian();
      if (merged[i].jump >= 0) {
        const double left = v;
        v += jump_sizes[static_cast<std::size_t>(merged[i].jump)];
        events.push_back({times.size(), left});
      }
    }
    times.push_back(merged[i].t);
    values.push_back(v);
  }

  NoisePath out;
  out.base = CadlagPath(std::move(times), std::move(values), std::move(events),
                        Interpolation::step);
  out.jump_times = std::move(jump_times);
  out.jump_sizes = std::move(jump_sizes);
  out.sigma = spec.sigma;
  return out;
}

/// Realized quadratic variation at time t: sigma^2 * t plus the squared jumps
/// up to t. Equals the compensator rate times t in expectation.
inline double realized_quadratic_variation(const NoisePath& path, double t) {
  const double slack = 1e-9 * std::max(1.0, path.horizon());
  if (t < -slack || t > path.horizon() + slack)
    throw std::out_of_range("realized_quadratic_variation: t outside [0, horizon]");
  double qv = path.sigma * path.sigma * t;
  for (std::size_t i = 0; i < path.jump_times.size() && path.jump_times[i] <= t + slack; ++i)
    qv += path.jump_sizes[i] * path.jump_sizes[i];
  return qv;
}

/// Companion CSV for NoisePath serialization: one row per jump event.
inline std::string write_jump_events_csv(const NoisePath& path) {
  std::string out = "time,size\n";
  for (std::size_t i = 0; i < path.jump_times.size(); ++i) {
    detail::append_double(out, path.jump_times[i]);
    out.push_back(',');
    detail::append_double(out, path.jump_sizes[i]);
    out.push_back('\n');
  }
  return out;
}

}  // namespace sdde
