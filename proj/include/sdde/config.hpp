#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sdde/models.hpp"
#include "sdde/noise.hpp"
#include "sdde/rng.hpp"
#include "sdde/solver.hpp"

namespace sdde {

using Json = nlohmann::json;

inline constexpr const char* kToolkitVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitAcceptance = 3;
inline constexpr int kExitRuntime = 4;

/// Per-path initial segment: a constant level chosen by the sampler kind.
struct InitialSampler {
  enum class Kind { constant, uniform, levels };
  Kind kind = Kind::constant;
  double value = 1.0;
  double low = 0.0;
  double high = 1.0;
  std::vector<double> levels;

  [[nodiscard]] double draw(std::uint64_t master_seed, std::uint64_t path_index) const {
    switch (kind) {
      case Kind::constant:
        return value;
      case Kind::uniform: {
        CounterRng rng(master_seed, path_index, StreamRole::initial);
        return low + (high - low) * rng.next_uniform();
      }
      case Kind::levels:
        return levels[std::size_t(path_index) % levels.size()];
    }
    return value;
  }
};

struct CouplingSection {
  enum class Kind { constant, multiplicative };
  Kind kind = Kind::constant;
  double value = 0.0;
  CorrectionKind correction = CorrectionKind::none;

  [[nodiscard]] NoiseCoupling build() const {
    if (kind == Kind::constant) return NoiseCoupling::constant(value, correction);
    const double v = value;
    return NoiseCoupling{[v](const Segment& seg, double) { return v * seg.back(); }, v,
                         correction};
  }
};

struct EnsembleSection {
  std::size_t n_paths = 1;
  std::uint64_t master_seed = 1;
  InitialSampler initial;
  std::vector<double> probe_times;  // empty: derived from the solver horizon
  double mean_margin_abs = 0.0;
};

struct OutputSection {
  std::string directory = "out";
  bool write_trajectories = true;
  int precision = 17;
};

struct TailCell {
  std::string id;
  std::string family;  // brownian_reverse | brownian_interval | levy_reverse |
                       // levy_interval | d1_reverse
  double alpha = 0.0;
  double beta = 1.0;
  double horizon = 1.0;  // window length l (reverse) or T (interval)
  double t0 = 0.0;
  double kappa2 = 1.0;
  std::optional<double> R0;
  std::vector<double> R;
  RegulatedLevySpec noise;
};

struct TailsSection {
  std::size_t n_paths = 1000;
  double dt = 1e-3;
  std::vector<TailCell> cells;
};

struct InvariantSection {
  std::pair<double, double> window1{0.0, 0.0};
  std::pair<double, double> window2{0.0, 0.0};
  std::size_t stride = 0;  // 0: one sample per delay length
  std::vector<double> R_grid;
  std::vector<double> delta_grid;
  std::vector<double> t_grid;
  double extinction_threshold = 1e-3;
  double extinction_probe = 0.0;  // 0: solver horizon
  double explosion_cap = 0.0;
  double epsilon = 0.1;
  std::size_t n_bootstrap = 200;
};

struct BoundsSection {
  double R = 1.0;
  std::string direction = "upper";  // upper | lower | both
  double delta = 0.0;
  double C_F = 0.0;
  std::optional<double> beta_drift;
  double drift_sup = 0.0;
  double delay_factor = 1.0;
  double t0 = 0.0;
  std::optional<double> gamma_tilde;
  std::optional<double> r_tilde;
  std::optional<double> M;
  std::optional<double> zeta;
};

struct StabilitySection {
  double horizon = 200.0;
  double dt = 1e-3;
};

struct ExperimentConfig {
  Json raw;
  int schema_version = kSchemaVersion;

  FeedbackSpec model;
  CouplingSection coupling;
  RegulatedLevySpec noise;
  SolverConfig solver;
  EnsembleSection ensemble;
  OutputSection outputs;

  std::optional<TailsSection> tails;
  std::optional<InvariantSection> invariant;
  std::optional<BoundsSection> bounds;
  std::optional<StabilitySection> stability;

  /// Parse-stage failures, one message per offending section or key.
  std::vector<std::string> errors;
};

namespace detail_config {

inline void expect_keys(const Json& obj, const std::string& where,
                        std::initializer_list<std::string_view> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (std::string_view k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known)
      throw std::invalid_argument(where + ": unknown key '" + item.key() + "'");
  }
}

inline const Json& require_key(const Json& obj, const std::string& where, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end())
    throw std::invalid_argument(where + ": missing required key '" + key + "'");
  return *it;
}

inline double as_number(const Json& v, const std::string& where) {
  if (!v.is_number()) throw std::invalid_argument(where + ": expected a number");
  return v.get<double>();
}

inline double number_or(const Json& obj, const char* key, double fallback,
                        const std::string& where) {
  const auto it = obj.find(key);
  return it == obj.end() ? fallback : as_number(*it, where + "." + key);
}

inline bool bool_or(const Json& obj, const char* key, bool fallback, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_boolean()) throw std::invalid_argument(where + "." + key + ": expected a boolean");
  return it->get<bool>();
}

inline std::string string_or(const Json& obj, const char* key, const std::string& fallback,
                             const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_string()) throw std::invalid_argument(where + "." + key + ": expected a string");
  return it->get<std::string>();
}

inline std::uint64_t as_unsigned(const Json& v, const std::string& where) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    const auto s = v.get<std::int64_t>();
    if (s >= 0) return std::uint64_t(s);
  }
  throw std::invalid_argument(where + ": expected a nonnegative integer");
}

inline std::vector<double> as_number_array(const Json& v, const std::string& where) {
  if (!v.is_array()) throw std::invalid_argument(where + ": expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) out.push_back(as_number(e, where));
  return out;
}

/// A rate is either a plain number (constant) or {"knots": [...], "levels": [...]}.
inline RateFunction parse_rate(const Json& v, const std::string& where) {
  if (v.is_number()) return RateFunction(v.get<double>());
  if (!v.is_object())
    throw std::invalid_argument(where + ": expected a number or {knots, levels}");
  expect_keys(v, where, {"knots", "levels"});
  return RateFunction(as_number_array(require_key(v, where, "knots"), where + ".knots"),
                      as_number_array(require_key(v, where, "levels"), where + ".levels"));
}

inline Nonlinearity parse_nonlinearity(const Json& v, const std::string& where) {
  if (!v.is_object()) throw std::invalid_argument(where + ": expected an object");
  expect_keys(v, where, {"kind", "p", "q"});
  const std::string kind = string_or(v, "kind", "", where);
  if (kind == "mackey_glass")
    return Nonlinearity::mackey_glass(as_number(require_key(v, where, "p"), where + ".p"),
                                      number_or(v, "q", 0.0, where));
  if (kind == "nicholson")
    return Nonlinearity::nicholson(as_number(require_key(v, where, "p"), where + ".p"));
  throw std::invalid_argument(where + ".kind: must be 'mackey_glass' or 'nicholson'");
}

inline FeedbackSpec parse_model(const Json& v) {
  const std::string where = "model";
  if (!v.is_object()) throw std::invalid_argument(where + ": expected an object");
  expect_keys(v, where, {"nonlinearity", "gamma", "r", "tau", "frame"});
  FeedbackSpec spec;
  spec.f = parse_nonlinearity(require_key(v, where, "nonlinearity"), where + ".nonlinearity");
  spec.gamma = parse_rate(require_key(v, where, "gamma"), where + ".gamma");
  spec.r = parse_rate(require_key(v, where, "r"), where + ".r");
  spec.tau = as_number(require_key(v, where, "tau"), where + ".tau");
  const std::string frame = string_or(v, "frame", "original", where);
  if (frame == "original")
    spec.frame = Frame::original;
  else if (frame == "log")
    spec.frame = Frame::log_scale;
  else
    throw std::invalid_argument(where + ".frame: must be 'original' or 'log'");
  spec.validate();
  return spec;
}

inline CouplingSection parse_coupling(const Json& v) {
  const std::string where = "coupling";
  if (!v.is_object()) throw std::invalid_argument(where + ": expected an object");
  expect_keys(v, where, {"constant", "multiplicative", "correction"});
  CouplingSection out;
  const bool has_const = v.contains("constant");
  const bool has_mult = v.contains("multiplicative");
  if (has_const == has_mult)
    throw std::invalid_argument(where + ": exactly one of 'constant' or 'multiplicative'");
  if (has_const) {
    out.kind = CouplingSection::Kind::constant;
    out.value = as_number(v["constant"], where + ".constant");
  } else {
    out.kind = CouplingSection::Kind::multiplicative;
    out.value = as_number(v["multiplicative"], where + ".multiplicative");
  }
  const std::string corr = string_or(v, "correction", "none", where);
  if (corr == "ito_brownian")
    out.correction = CorrectionKind::ito_brownian;
  else if (corr == "levy_finite_intensity")
    out.correction = CorrectionKind::levy_finite_intensity;
  else if (corr == "none")
    out.correction = CorrectionKind::none;
  else
    throw std::invalid_argument(
        where + ".correction: must be 'ito_brownian', 'levy_finite_intensity', or 'none'");
  return out;
}

inline JumpLaw parse_jump_law(const Json& v, const std::string& where) {
  if (!v.is_object()) throw std::invalid_argument(where + ": expected an object");
  expect_keys(v, where, {"kind", "value", "zeta"});
  const std::string kind = string_or(v, "kind", "", where);
  if (kind == "point_mass")
    return JumpLaw::point_mass(as_number(require_key(v, where, "value"), where + ".value"));
  if (kind == "uniform_symmetric")
    return JumpLaw::uniform_symmetric(as_number(require_key(v, where, "zeta"), where + ".zeta"));
  if (kind == "two_point")
    return JumpLaw::two_point(as_number(require_key(v, where, "zeta"), where + ".zeta"));
  throw std::invalid_argument(where +
                              ".kind: must be 'point_mass', 'uniform_symmetric', or 'two_point'");
}

inline RegulatedLevySpec parse_noise(const Json& v, const std::string& where) {
  if (!v.is_object()) throw std::invalid_argument(where + ": expected an object");
  expect_keys(v, where, {"sigma", "lambda", "zeta", "jump_law", "drift_mode"});
  RegulatedLevySpec spec;
  spec.sigma = number_or(v, "sigma", 0.0, where);
  spec.lambda_N = number_or(v, "lambda", 0.0, where);
  spec.zeta = number_or(v, "zeta", 0.0, where);
  if (v.contains("jump_law")) spec.jump_law = parse_jump_law(v["jump_law"], where + ".jump_law");
  const std::string mode = string_or(v, "drift_mode", "none", where);
  if (mode == "martingale")
    spec.drift_mode = LevyDriftMode::martingale;
  else if (mode == "none")
    spec.drift_mode = LevyDriftMode::no_continuous_drift;
  else
    throw std::invalid_argument(where + ".drift_mode: must be 'martingale' or 'none'");
  spec.validate();
  return spec;
}

inline SolverConfig parse_solver(const Json& v) {
  const std::string where = "solver";
  if (!v.is_object()) throw std::invalid_argument(where + ": expected an object");
  expect_keys(v, where,
              {"dt", "horizon", "explosion_threshold", "interpolation", "two_sided_explosion",
               "record_forcing"});
  SolverConfig cfg;
  cfg.dt = as_number(require_key(v, where, "dt"), where + ".dt");
  cfg.horizon = as_number(require_key(v, where, "horizon"), where + ".horizon");
  cfg.explosion_threshold = number_or(v, "explosion_threshold", 1e8, where);
  const std::string interp = string_or(v, "interpolation", "linear", where);
  if (interp == "linear")
    cfg.interpolation = Interpolation::linear;
  else if (interp == "step")
    cfg.interpolation = Interpolation::step;
  else
    throw std::invalid_argument(where + ".interpolation: must be 'linear' or 'step'");
  cfg.two_sided_explosion = bool_or(v, "two_sided_explosion", false, where);
  cfg.record_forcing = bool_or(v, "record_forcing", false, where);
  cfg.validate();
  return cfg;
}

inline InitialSampler parse_initial(const Json& v, const std::string& where) {
  if (!v.is_object()) throw std::invalid_argument(where + ": expected an object");
  expect_keys(v, where, {"kind", "value", "low", "high", "levels"});
  InitialSampler out;
  const std::string kind = string_or(v, "kind", "constant", where);
  if (kind == "constant") {
    out.kind = InitialSampler::Kind::constant;
    out.value = number_or(v, "value", 1.0, where);
  } else if (kind == "uniform") {
    out.kind = InitialSampler::Kind::uniform;
    out.low = as_number(require_key(v, where, "low"), where + ".low");
    out.high = as_number(require_key(v, where, "high"), where + ".high");
    if (!(out.high >= out.low))
      throw std::invalid_argument(where + ": uniform sampler needs high >= low");
  } else if (kind == "levels") {
    out.kind = InitialSampler::Kind::levels;
    out.levels = as_number_array(require_key(v, where, "levels"), where + ".levels");
    if (out.levels.empty())
      throw std::invalid_argument(where + ".levels: needs at least one level");
  } else {
    throw std::invalid_argument(where + ".kind: must be 'constant', 'uniform', or 'levels'");
  }
  return out;
}

inline EnsembleSection parse_ensemble(const Json& v) {
  const std::string where = "ensemble";
  if (!v.is_object()) throw std::invalid_argument(where + ": expected an object");
  expect_keys(v, where, {"n_paths", "master_seed", "initial", "probe_times", "mean_margin_abs"});
  EnsembleSection out;
  if (v.contains("n_paths"))
    out.n_paths = std::size_t(as_unsigned(v["n_paths"], where + ".n_paths"));
  if (v.contains("master_seed"))
    out.master_seed = as_unsigned(v["master_seed"], where + ".master_seed");
  if (v.contains("initial")) out.initial = parse_initial(v["initial"], where + ".initial");
  if (v.contains("probe_times"))
    out.probe_times = as_number_array(v["probe_times"], where + ".probe_times");
  out.mean_margin_abs = number_or(v, "mean_margin_abs", 0.0, where);
  return out;
}

inline OutputSection parse_outputs(const Json& v) {
  const std::string where = "outputs";
  if (!v.is_object()) throw std::invalid_argument(where + ": expected an object");
  expect_keys(v, where, {"directory", "write_trajectories", "precision"});
  OutputSection out;
  out.directory = string_or(v, "directory", "out", where);
  out.write_trajectories = bool_or(v, "write_trajectories", true, where);
  out.precision = int(number_or(v, "precision", 17.0, where));
  if (out.precision < 6 || out.precision > 17)
    throw std::invalid_argument(where + ".precision: must lie in [6, 17]");
  return out;
}

inline TailsSection parse_tails(const Json& v) {
  const std::string where = "tails";
  if (!v.is_object()) throw std::invalid_argument(where + ": expected an object");
  expect_keys(v, where, {"n_paths", "dt", "cells"});
  TailsSection out;
  if (v.contains("n_paths"))
    out.n_paths = std::size_t(as_unsigned(v["n_paths"], where + ".n_paths"));
  out.dt = number_or(v, "dt", 1e-3, where);
  if (!(out.dt > 0.0)) throw std::invalid_argument(where + ".dt: must be positive");
  const Json& cells = require_key(v, where, "cells");
  if (!cells.is_array() || cells.empty())
    throw std::invalid_argument(where + ".cells: expected a non-empty array");
  std::size_t k = 0;
  for (const auto& c : cells) {
    const std::string cw = where + ".cells[" + std::to_string(k) + "]";
    expect_keys(c, cw,
                {"id", "family", "alpha", "beta", "horizon", "t0", "kappa2", "R0", "R", "noise"});
    TailCell cell;
    cell.id = string_or(c, "id", "cell" + std::to_string(k), cw);
    cell.family = string_or(c, "family", "", cw);
    if (cell.family != "brownian_reverse" && cell.family != "brownian_interval" &&
        cell.family != "levy_reverse" && cell.family != "levy_interval" &&
        cell.family != "d1_reverse")
      throw std::invalid_argument(cw + ".family: unknown bound family '" + cell.family + "'");
    cell.alpha = number_or(c, "alpha", 0.0, cw);
    cell.beta = number_or(c, "beta", 1.0, cw);
    cell.horizon = as_number(require_key(c, cw, "horizon"), cw + ".horizon");
    if (!(cell.horizon > 0.0)) throw std::invalid_argument(cw + ".horizon: must be positive");
    cell.t0 = number_or(c, "t0", 0.0, cw);
    cell.kappa2 = number_or(c, "kappa2", 1.0, cw);
    if (c.contains("R0")) cell.R0 = as_number(c["R0"], cw + ".R0");
    cell.R = as_number_array(require_key(c, cw, "R"), cw + ".R");
    if (cell.R.empty()) throw std::invalid_argument(cw + ".R: needs at least one level");
    if (c.contains("noise")) cell.noise = parse_noise(c["noise"], cw + ".noise");
    out.cells.push_back(std::move(cell));
    ++k;
  }
  return out;
}

inline std::pair<double, double> parse_window(const Json& v, const std::string& where) {
  const auto arr = as_number_array(v, where);
  if (arr.size() != 2) throw std::invalid_argument(where + ": expected [start, end]");
  return {arr[0], arr[1]};
}

inline InvariantSection parse_invariant(const Json& v) {
  const std::string where = "invariant";
  if (!v.is_object()) throw std::invalid_argument(where + ": expected an object");
  expect_keys(v, where,
              {"windows", "stride", "R_grid", "delta_grid", "t_grid", "extinction_threshold",
               "extinction_probe", "explosion_cap", "epsilon", "n_bootstrap"});
  InvariantSection out;
  const Json& w = require_key(v, where, "windows");
  if (!w.is_array() || w.size() != 2)
    throw std::invalid_argument(where + ".windows: expected [[a, b], [c, d]]");
  out.window1 = parse_window(w[0], where + ".windows[0]");
  out.window2 = parse_window(w[1], where + ".windows[1]");
  if (v.contains("stride"))
    out.stride = std::size_t(as_unsigned(v["stride"], where + ".stride"));
  if (v.contains("R_grid")) out.R_grid = as_number_array(v["R_grid"], where + ".R_grid");
  if (v.contains("delta_grid"))
    out.delta_grid = as_number_array(v["delta_grid"], where + ".delta_grid");
  if (v.contains("t_grid")) out.t_grid = as_number_array(v["t_grid"], where + ".t_grid");
  out.extinction_threshold = number_or(v, "extinction_threshold", 1e-3, where);
  out.extinction_probe = number_or(v, "extinction_probe", 0.0, where);
  out.explosion_cap = number_or(v, "explosion_cap", 0.0, where);
  out.epsilon = number_or(v, "epsilon", 0.1, where);
  if (v.contains("n_bootstrap"))
    out.n_bootstrap = std::size_t(as_unsigned(v["n_bootstrap"], where + ".n_bootstrap"));
  return out;
}

inline BoundsSection parse_bounds(const Json& v) {
  const std::string where = "bounds";
  if (!v.is_object()) throw std::invalid_argument(where + ": expected an object");
  expect_keys(v, where,
              {"R", "direction", "delta", "C_F", "beta_drift", "drift_sup", "delay_factor", "t0",
               "gamma_tilde", "r_tilde", "M", "zeta"});
  BoundsSection out;
  out.R = as_number(require_key(v, where, "R"), where + ".R");
  out.direction = string_or(v, "direction", "upper", where);
  if (out.direction != "upper" && out.direction != "lower" && out.direction != "both")
    throw std::invalid_argument(where + ".direction: must be 'upper', 'lower', or 'both'");
  out.delta = number_or(v, "delta", 0.0, where);
  out.C_F = number_or(v, "C_F", 0.0, where);
  if (v.contains("beta_drift")) out.beta_drift = as_number(v["beta_drift"], where + ".beta_drift");
  out.drift_sup = number_or(v, "drift_sup", 0.0, where);
  out.delay_factor = number_or(v, "delay_factor", 1.0, where);
  out.t0 = number_or(v, "t0", 0.0, where);
  if (v.contains("gamma_tilde"))
    out.gamma_tilde = as_number(v["gamma_tilde"], where + ".gamma_tilde");
  if (v.contains("r_tilde")) out.r_tilde = as_number(v["r_tilde"], where + ".r_tilde");
  if (v.contains("M")) out.M = as_number(v["M"], where + ".M");
  if (v.contains("zeta")) out.zeta = as_number(v["zeta"], where + ".zeta");
  return out;
}

inline StabilitySection parse_stability(const Json& v) {
  const std::string where = "stability";
  if (!v.is_object()) throw std::invalid_argument(where + ": expected an object");
  expect_keys(v, where, {"horizon", "dt"});
  StabilitySection out;
  out.horizon = number_or(v, "horizon", 200.0, where);
  out.dt = number_or(v, "dt", 1e-3, where);
  if (!(out.horizon > 0.0) || !(out.dt > 0.0))
    throw std::invalid_argument(where + ": horizon and dt must be positive");
  return out;
}

}  // namespace detail_config

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

/// Hash of the canonical (key-sorted) dump, so key order in the source file
/// never changes the hash.
inline std::string config_hash_hex(const Json& doc) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(doc.dump());
  return os.str();
}

inline ExperimentConfig parse_experiment_config(const Json& doc) {
  ExperimentConfig cfg;
  cfg.raw = doc;
  if (!doc.is_object()) {
    cfg.errors.push_back("config: top level must be an object");
    return cfg;
  }
  auto guard = [&cfg](const char* /*section*/, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      cfg.errors.emplace_back(e.what());
    }
  };

  guard("top", [&] {
    detail_config::expect_keys(doc, "config",
                               {"schema_version", "model", "coupling", "noise", "solver",
                                "ensemble", "outputs", "tails", "invariant", "bounds",
                                "stability"});
  });
  guard("schema", [&] {
    const auto it = doc.find("schema_version");
    if (it == doc.end())
      throw std::invalid_argument("config: missing required key 'schema_version'");
    if (!it->is_number_integer() || it->get<int>() != kSchemaVersion)
      throw std::invalid_argument("config: unsupported schema_version (expected " +
                                  std::to_string(kSchemaVersion) + ")");
    cfg.schema_version = it->get<int>();
  });
  guard("model", [&] {
    cfg.model = detail_config::parse_model(detail_config::require_key(doc, "config", "model"));
  });
  guard("coupling", [&] {
    if (doc.contains("coupling")) cfg.coupling = detail_config::parse_coupling(doc["coupling"]);
  });
  guard("noise", [&] {
    if (doc.contains("noise")) cfg.noise = detail_config::parse_noise(doc["noise"], "noise");
  });
  guard("solver", [&] {
    cfg.solver = detail_config::parse_solver(detail_config::require_key(doc, "config", "solver"));
  });
  guard("ensemble", [&] {
    if (doc.contains("ensemble")) cfg.ensemble = detail_config::parse_ensemble(doc["ensemble"]);
  });
  guard("outputs", [&] {
    if (doc.contains("outputs")) cfg.outputs = detail_config::parse_outputs(doc["outputs"]);
  });
  guard("tails", [&] {
    if (doc.contains("tails")) cfg.tails = detail_config::parse_tails(doc["tails"]);
  });
  guard("invariant", [&] {
    if (doc.contains("invariant"))
      cfg.invariant = detail_config::parse_invariant(doc["invariant"]);
  });
  guard("bounds", [&] {
    if (doc.contains("bounds")) cfg.bounds = detail_config::parse_bounds(doc["bounds"]);
  });
  guard("stability", [&] {
    if (doc.contains("stability"))
      cfg.stability = detail_config::parse_stability(doc["stability"]);
  });
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open config file: " + file.string());
  Json doc;
  in >> doc;
  return parse_experiment_config(doc);
}

/// CLI overrides are applied to the document before parsing, so the manifest
/// hash always reflects the effective configuration.
inline void apply_overrides(Json& doc, std::optional<std::uint64_t> seed,
                            std::optional<std::size_t> n_paths,
                            std::optional<std::string> out_dir) {
  if (seed) doc["ensemble"]["master_seed"] = *seed;
  if (n_paths) doc["ensemble"]["n_paths"] = *n_paths;
  if (out_dir) doc["outputs"]["directory"] = *out_dir;
}

/// Collects every violated invariant the configuration can be checked against
/// before a single path is simulated: parse errors, the coefficient builders'
/// own validation, and the cross-section requirements of the requested
/// subcommand.
inline std::vector<std::string> validate_config(const ExperimentConfig& cfg,
                                                std::string_view subcommand) {
  std::vector<std::string> errors = cfg.errors;
  auto add = [&errors](const std::string& m) { errors.push_back(m); };

  if (subcommand == "tails" && !cfg.tails)
    add("tails: section required for the tails subcommand");
  if (subcommand == "invariant" && !cfg.invariant)
    add("invariant: section required for the invariant subcommand");
  if (subcommand == "bounds-verify" && !cfg.bounds)
    add("bounds: section required for the bounds-verify subcommand");

  // Parse failures leave sections default-initialized; checking relations
  // between defaulted values would only produce noise on top of the real
  // errors, so cross-validation runs on cleanly parsed configs only.
  if (!cfg.errors.empty()) return errors;

  if (cfg.solver.dt > cfg.model.tau * (1.0 + 1e-12))
    add("solver: dt must not exceed the delay tau (delayed reads need the grid inside the "
        "window)");

  try {
    if (cfg.model.frame == Frame::log_scale)
      build_log_coefficients(cfg.model, cfg.coupling.build(), cfg.noise);
    else
      build_original_coefficients(cfg.model, cfg.coupling.build());
  } catch (const std::exception& e) {
    add(e.what());
  }

  if (cfg.invariant) {
    const auto& inv = *cfg.invariant;
    const double tau = cfg.model.tau;
    for (const auto& w : {inv.window1, inv.window2})
      if (w.second - w.first < 50.0 * tau * (1.0 - 1e-9))
        add("invariant.windows: each window must span at least 50 tau");
    if (std::max(inv.window1.first, inv.window2.first) <
        std::min(inv.window1.second, inv.window2.second))
      add("invariant.windows: windows overlap");
    const double last = std::max(inv.window1.second, inv.window2.second);
    if (last > cfg.solver.horizon * (1.0 + 1e-9))
      add("invariant.windows: windows extend past the solver horizon");
    for (double d : inv.delta_grid)
      if (!(d > 0.0) || !(d < tau))
        add("invariant.delta_grid: deltas must lie in (0, tau)");
    if (!(inv.extinction_threshold > 0.0))
      add("invariant.extinction_threshold: must be positive");
    const double probe = inv.extinction_probe > 0.0 ? inv.extinction_probe : cfg.solver.horizon;
    if (probe < tau || probe > cfg.solver.horizon * (1.0 + 1e-9))
      add("invariant.extinction_probe: must lie in [tau, horizon]");
    if (inv.explosion_cap < 0.0 || inv.explosion_cap > 1.0)
      add("invariant.explosion_cap: must lie in [0, 1]");
    if (inv.n_bootstrap < 2) add("invariant.n_bootstrap: needs at least two replicates");
  }

  if (cfg.bounds && subcommand == "bounds-verify") {
    const auto& b = *cfg.bounds;
    if (cfg.model.frame != Frame::log_scale)
      add("bounds: pathwise envelopes apply to the log frame (set model.frame = 'log')");
    if (!cfg.solver.record_forcing)
      add("bounds: requires solver.record_forcing = true (the envelope reads the realized "
          "forcing path)");
    if (!(b.R >= 0.0)) add("bounds.R: must be nonnegative");
    if (b.direction != "upper") {
      if (!(b.delta > 0.0)) add("bounds.delta: the lower envelope needs delta > 0");
      else if (std::exp(-b.R) >= b.delta)
        add("bounds: exp(-R) must stay below delta for the lower envelope");
    }
    if (b.t0 < 0.0 || b.t0 > cfg.solver.horizon) add("bounds.t0: must lie in [0, horizon]");
  }

  return errors;
}

}  // namespace sdde
