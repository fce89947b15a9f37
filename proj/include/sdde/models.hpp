#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sdde/noise.hpp"
#include "sdde/solver.hpp"

namespace sdde {

/// Piecewise-constant right-continuous rate: levels_[i] on [knots_[i], knots_[i+1]).
/// Queries left of the first knot return the first level.
class RateFunction {
 public:
  RateFunction() : RateFunction(1.0) {}
  explicit RateFunction(double constant) : knots_{0.0}, levels_{constant} { check(); }
  RateFunction(std::vector<double> knots, std::vector<double> levels)
      : knots_(std::move(knots)), levels_(std::move(levels)) {
    if (knots_.empty() || knots_.size() != levels_.size())
      throw std::invalid_argument("RateFunction: knots and levels must match and be nonempty");
    if (knots_.front() != 0.0)
      throw std::invalid_argument("RateFunction: first knot must be 0");
    for (std::size_t i = 1; i < knots_.size(); ++i)
      if (!(knots_[i] > knots_[i - 1]))
        throw std::invalid_argument("RateFunction: knots must increase strictly");
    check();
  }

  double operator()(double t) const {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    if (it == knots_.begin()) return levels_.front();
    return levels_[static_cast<std::size_t>(it - knots_.begin()) - 1];
  }

  [[nodiscard]] double inf_value() const {
    return *std::min_element(levels_.begin(), levels_.end());
  }
  [[nodiscard]] double sup_value() const {
    return *std::max_element(levels_.begin(), levels_.end());
  }
  [[nodiscard]] bool is_constant() const { return levels_.size() == 1; }

  /// Exact integral over [0, t], t >= 0.
  [[nodiscard]] double integral(double t) const {
    if (t < 0.0) throw std::invalid_argument("RateFunction: integral needs t >= 0");
    double acc = 0.0;
    for (std::size_t i = 0; i < knots_.size(); ++i) {
      const double lo = knots_[i];
      if (lo >= t) break;
      const double hi = (i + 1 < knots_.size()) ? std::min(knots_[i + 1], t) : t;
      acc += levels_[i] * (hi - lo);
    }
    return acc;
  }

  [[nodiscard]] const std::vector<double>& knots() const noexcept { return knots_; }
  [[nodiscard]] const std::vector<double>& levels() const noexcept { return levels_; }

 private:
  void check() const {
    for (double v : levels_)
      if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument("RateFunction: levels must be positive and finite");
  }
  std::vector<double> knots_;
  std::vector<double> levels_;
};

enum class NonlinearityKind { mackey_glass, nicholson, custom };

/// Feedback nonlinearity with certified metadata: the supremum M (needed by
/// trajectory bounds), f(0), and f'(0) when it is finite.
class Nonlinearity {
 public:
  static Nonlinearity mackey_glass(double p, double q) {
    if (!(p > 0.0) || !(q >= 0.0) || !(p >= q))
      throw std::invalid_argument("mackey_glass: requires p > 0 and 0 <= q <= p");
    Nonlinearity f;
    f.kind_ = NonlinearityKind::mackey_glass;
    f.p_ = p;
    f.q_ = q;
    if (q == 0.0) {
      f.sup_ = 1.0;
      f.sup_attained_ = true;
    } else if (q == p) {
      f.sup_ = 1.0;  // x^p/(1+x^p) increases to 1, never attained
      f.sup_attained_ = false;
    } else {
      const double xs = std::pow(q / (p - q), 1.0 / p);
      f.sup_ = std::pow(xs, q) * (p - q) / p;
      f.sup_attained_ = true;
    }
    f.f0_ = (q == 0.0) ? 1.0 : 0.0;
    if (q == 1.0)
      f.fp0_ = 1.0;
    else if (q > 1.0)
      f.fp0_ = 0.0;
    else if (q == 0.0)
      f.fp0_ = (p == 1.0) ? -1.0 : 0.0;
    else
      f.fp0_finite_ = false;  // 0 < q < 1: slope q x^{q-1} diverges at 0
    return f;
  }

  static Nonlinearity nicholson(double p) {
    if (!(p > 0.0)) throw std::invalid_argument("nicholson: requires p > 0");
    Nonlinearity f;
    f.kind_ = NonlinearityKind::nicholson;
    f.p_ = p;
    f.sup_ = 1.0 / (p * std::exp(1.0));
    f.sup_attained_ = true;
    f.f0_ = 0.0;
    f.fp0_ = 1.0;
    return f;
  }

  static Nonlinearity custom(std::function<double(double)> fn, double sup_bound, double f0,
                             double fprime0) {
    if (!fn) throw std::invalid_argument("custom nonlinearity: function required");
    if (!(sup_bound > 0.0) || !std::isfinite(sup_bound))
      throw std::invalid_argument("custom nonlinearity: certified supremum must be positive");
    Nonlinearity f;
    f.kind_ = NonlinearityKind::custom;
    f.fn_ = std::move(fn);
    f.sup_ = sup_bound;
    f.sup_attained_ = false;  // declared bound, attainment unknown
    f.f0_ = f0;
    f.fp0_ = fprime0;
    return f;
  }

  double operator()(double x) const {
    if (x < 0.0) throw std::domain_error("nonlinearity: negative population argument");
    switch (kind_) {
      case NonlinearityKind::mackey_glass:
        // For x > 1 rewrite as x^{q-p} / (x^{-p} + 1) so large arguments
        // decay instead of overflowing the direct x^q / (1 + x^p) form.
        if (x <= 1.0) return std::pow(x, q_) / (1.0 + std::pow(x, p_));
        return std::pow(x, q_ - p_) / (std::pow(x, -p_) + 1.0);
      case NonlinearityKind::nicholson:
        return x * std::exp(-p_ * x);
      case NonlinearityKind::custom:
        return fn_(x);
    }
    throw std::logic_error("nonlinearity: unreachable");
  }

  [[nodiscard]] double sup() const { return sup_; }
  [[nodiscard]] bool sup_attained() const { return sup_attained_; }
  [[nodiscard]] double at_zero() const { return f0_; }
  [[nodiscard]] double slope_at_zero() const {
    if (!fp0_finite_)
      throw std::domain_error("nonlinearity: slope at zero is infinite for 0 < q < 1");
    return fp0_;
  }
  [[nodiscard]] bool has_finite_slope_at_zero() const { return fp0_finite_; }
  [[nodiscard]] NonlinearityKind kind() const { return kind_; }
  [[nodiscard]] double p() const { return p_; }
  [[nodiscard]] double q() const { return q_; }

 private:
  Nonlinearity() = default;
  NonlinearityKind kind_ = NonlinearityKind::custom;
  double p_ = 0.0, q_ = 0.0;
  std::function<double(double)> fn_;
  double sup_ = 0.0;
  bool sup_attained_ = false;
  double f0_ = 0.0;
  double fp0_ = 0.0;
  bool fp0_finite_ = true;
};

enum class Frame { original, log_scale };

struct FeedbackSpec {
  Nonlinearity f = Nonlinearity::nicholson(1.0);
  RateFunction gamma;
  RateFunction r;
  double tau = 1.0;
  Frame frame = Frame::original;

  void validate() const {
    if (!(tau > 0.0) || !std::isfinite(tau))
      throw std::invalid_argument("FeedbackSpec: tau must be positive");
  }
};

enum class CorrectionKind { ito_brownian, levy_finite_intensity, none };

/// Noise coefficient functional b with its certified bound and the drift
/// correction the log transform requires for the chosen driver.
struct NoiseCoupling {
  std::function<double(const Segment&, double)> c;
  double beta_c = 0.0;
  CorrectionKind correction = CorrectionKind::none;

  static NoiseCoupling constant(double b, CorrectionKind kind) {
    NoiseCoupling nc;
    nc.c = [b](const Segment&, double) { return b; };
    nc.beta_c = std::fabs(b);
    nc.correction = kind;
    return nc;
  }
};

/// Drift correction for the log frame, given the realized coefficient value:
/// Brownian gives the -b^2/2 quadratic-variation term; a finite-intensity
/// jump driver adds the small-jump compensation b * lambda_N * E[Z 1_{|Z|<=1}].
inline double drift_correction(const NoiseCoupling& coupling, double b_value,
                               const RegulatedLevySpec* levy = nullptr) {
  switch (coupling.correction) {
    case CorrectionKind::none:
      return 0.0;
    case CorrectionKind::ito_brownian:
      return -0.5 * b_value * b_value;
    case CorrectionKind::levy_finite_intensity:
      if (levy == nullptr)
        throw std::invalid_argument("drift_correction: jump correction needs the driver spec");
      return -0.5 * b_value * b_value +
             b_value * levy->lambda_N * levy->jump_law.mean_within_unit;
  }
  throw std::logic_error("drift_correction: unreachable");
}

/// Log-frame feedback drift -gamma(t) + r(t) e^{-phi(0)} f(e^{phi(-tau)}).
/// Magnitudes beyond `clamp` are cut off (and counted) so one extreme segment
/// degrades a step instead of aborting the run with an overflow.
inline double transformed_drift(const FeedbackSpec& spec, const Segment& seg, double t,
                                double clamp = 1e8, std::size_t* clamp_events = nullptr) {
  const double y0 = seg.back();
  const double ytau = seg.value(-spec.tau);
  const double gt = spec.gamma(t);
  const double rt = spec.r(t);
  const double arg = std::exp(std::min(ytau, 690.0));
  const double fv = spec.f(arg);

  double raw;
  if (fv == 0.0) {
    raw = -gt;
  } else if (-y0 < 600.0) {
    raw = -gt + rt * std::exp(-y0) * fv;
  } else {
    const double lt = std::log(rt) + std::log(fv) - y0;
    raw = lt > 709.0 ? std::numeric_limits<double>::infinity() : -gt + std::exp(lt);
  }
  if (raw > clamp) {
    if (clamp_events) ++*clamp_events;
    return clamp;
  }
  if (raw < -clamp) {
    if (clamp_events) ++*clamp_events;
    return -clamp;
  }
  return raw;
}

namespace detail {

inline double bisect_root(const std::function<double(double)>& g, double lo, double hi,
                          double g_lo) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= 1e-10 * std::max(1.0, std::fabs(mid))) return mid;
    const double gm = g(mid);
    if (gm == 0.0) return mid;
    if ((gm < 0.0) == (g_lo < 0.0))
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// All nonnegative solutions of gamma x = r f(x), constant rates only.
/// Known families use closed forms; the rest is a sign-change scan over a
/// logarithmic bracket, bisected to relative tolerance 1e-10.
inline std::vector<double> steady_states(const FeedbackSpec& spec) {
  if (!spec.gamma.is_constant() || !spec.r.is_constant())
    throw std::invalid_argument("steady_states: requires constant rates");
  const double g = spec.gamma(0.0);
  const double r = spec.r(0.0);
  std::vector<double> out;
  if (spec.f.at_zero() == 0.0) out.push_back(0.0);

  const auto& f = spec.f;
  if (f.kind() == NonlinearityKind::mackey_glass && f.q() == 1.0) {
    if (r > g) out.push_back(std::pow((r - g) / g, 1.0 / f.p()));
    return out;
  }
  if (f.kind() == NonlinearityKind::nicholson) {
    if (r > g) out.push_back(std::log(r / g) / f.p());
    return out;
  }

  const double x_hi = std::max(10.0, 2.0 * r * f.sup() / g);
  auto resid = [&](double x) { return r * f(x) - g * x; };
  const int n_scan = 4000;
  const double lo_log = std::log(1e-12), hi_log = std::log(x_hi);
  double x_prev = 1e-12, g_prev = resid(x_prev);
  for (int i = 1; i <= n_scan; ++i) {
    const double x = std::exp(lo_log + (hi_log - lo_log) * double(i) / n_scan);
    const double gx = resid(x);
    if ((g_prev < 0.0) != (gx < 0.0) || gx == 0.0) {
      const double root = gx == 0.0 ? x : detail::bisect_root(resid, x_prev, x, g_prev);
      if (out.empty() || std::fabs(root - out.back()) > 1e-9 * std::max(1.0, root))
        out.push_back(root);
    }
    x_prev = x;
    g_prev = gx;
  }
  return out;
}

enum class ZeroStability { stable, unstable, marginal };

/// Linearization of the zero state: the sign of theta = r f'(0) - gamma.
inline ZeroStability zero_stability(const FeedbackSpec& spec) {
  if (!spec.gamma.is_constant() || !spec.r.is_constant())
    throw std::invalid_argument("zero_stability: requires constant rates");
  const double g = spec.gamma(0.0);
  const double r = spec.r(0.0);
  const double theta = r * spec.f.slope_at_zero() - g;
  const double scale = std::max({1.0, g, std::fabs(r * spec.f.slope_at_zero())});
  if (std::fabs(theta) <= 1e-12 * scale) return ZeroStability::marginal;
  return theta > 0.0 ? ZeroStability::unstable : ZeroStability::stable;
}

/// Real root of lambda + gamma = r f'(0) e^{-lambda tau}. For positive
/// r f'(0) the left-minus-right difference increases strictly, so the real
/// root is unique and its sign matches the sign of theta = r f'(0) - gamma;
/// for r f'(0) <= 0 the dominant root need not be real and nullopt is
/// returned.
inline std::optional<double> characteristic_real_root(const FeedbackSpec& spec) {
  if (!spec.gamma.is_constant() || !spec.r.is_constant())
    throw std::invalid_argument("characteristic_real_root: requires constant rates");
  const double g = spec.gamma(0.0);
  const double c = spec.r(0.0) * spec.f.slope_at_zero();
  if (!(c > 0.0)) return std::nullopt;
  auto h = [&](double lam) { return lam + g - c * std::exp(-lam * spec.tau); };
  const double h0 = h(0.0);
  if (h0 == 0.0) return 0.0;
  double lo, hi;
  if (h0 < 0.0) {
    lo = 0.0;
    hi = 1.0;
    while (h(hi) < 0.0) hi *= 2.0;
  } else {
    hi = 0.0;
    lo = -1.0;
    while (h(lo) > 0.0) lo *= 2.0;
  }
  return detail::bisect_root(h, lo, hi, h(lo));
}

/// Coefficients bundle produced by the model builders, with shared counters
/// for the clamping events the drift evaluators may log.
struct BuiltCoefficients {
  FunctionalCoefficients coeffs;
  std::shared_ptr<std::size_t> clamp_events = std::make_shared<std::size_t>(0);
  std::shared_ptr<std::size_t> negative_reads = std::make_shared<std::size_t>(0);
};

/// Log-frame coefficients: feedback drift plus the coupling's correction.
/// The correction is also exposed as forcing_drift so recorded forcing paths
/// carry exactly the bounded non-structural part of the drift.
inline BuiltCoefficients build_log_coefficients(
    const FeedbackSpec& spec, const NoiseCoupling& coupling,
    std::optional<RegulatedLevySpec> levy = std::nullopt, double clamp = 1e8) {
  spec.validate();
  if (spec.frame != Frame::log_scale)
    throw std::invalid_argument("build_log_coefficients: spec must be in the log frame");
  if (!coupling.c)
    throw std::invalid_argument("build_log_coefficients: coupling functional required");
  if (coupling.correction == CorrectionKind::levy_finite_intensity && !levy)
    throw std::invalid_argument("build_log_coefficients: jump correction needs the driver spec");
  BuiltCoefficients out;
  auto levy_ptr = levy ? std::make_shared<RegulatedLevySpec>(*levy) : nullptr;
  auto counter = out.clamp_events;
  out.coeffs.drift = [spec, coupling, levy_ptr, clamp, counter](const Segment& seg, double t) {
    const double b = coupling.c(seg, t);
    return transformed_drift(spec, seg, t, clamp, counter.get()) +
           drift_correction(coupling, b, levy_ptr.get());
  };
  out.coeffs.forcing_drift = [coupling, levy_ptr](const Segment& seg, double t) {
    return drift_correction(coupling, coupling.c(seg, t), levy_ptr.get());
  };
  out.coeffs.noise = coupling.c;
  return out;
}

/// Original-frame coefficients -gamma(t) x(t) + r(t) f(x(t - tau)). Euler
/// excursions below zero are clamped to the domain boundary and counted
/// rather than aborting the run.
inline BuiltCoefficients build_original_coefficients(const FeedbackSpec& spec,
                                                     const NoiseCoupling& coupling) {
  spec.validate();
  if (spec.frame != Frame::original)
    throw std::invalid_argument("build_original_coefficients: spec must be in the original frame");
  if (!coupling.c)
    throw std::invalid_argument("build_original_coefficients: coupling functional required");
  if (coupling.correction != CorrectionKind::none)
    throw std::invalid_argument(
        "build_original_coefficients: corrections belong to the log frame");
  BuiltCoefficients out;
  auto counter = out.negative_reads;
  const double tau = spec.tau;
  out.coeffs.drift = [spec, tau, counter](const Segment& seg, double t) {
    double xt = seg.value(-tau);
    if (xt < 0.0) {
      ++*counter;
      xt = 0.0;
    }
    return -spec.gamma(t) * seg.back() + spec.r(t) * spec.f(xt);
  };
  out.coeffs.noise = coupling.c;
  return out;
}

}  // namespace sdde
