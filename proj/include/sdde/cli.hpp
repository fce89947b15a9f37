#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "sdde/config.hpp"
#include "sdde/drift_bounds.hpp"
#include "sdde/measures.hpp"
#include "sdde/models.hpp"
#include "sdde/noise.hpp"
#include "sdde/paths.hpp"
#include "sdde/pathwise_bounds.hpp"
#include "sdde/solver.hpp"

namespace sdde {

struct RunOptions {
  unsigned workers = 0;  // 0: one worker per hardware thread
};

/// Index of everything a run produced. Timestamps live here and nowhere else,
/// so all data files are byte-reproducible from (config, seed).
struct RunManifest {
  std::string subcommand;
  std::string config_hash;
  std::string toolkit_version = kToolkitVersion;
  std::string started_utc;
  std::string finished_utc;
  double wall_seconds = 0.0;
  std::size_t n_paths = 0;
  int exit_code = 0;
  std::vector<std::pair<std::string, std::size_t>> files;  // name, data rows
  std::vector<std::string> notes;

  [[nodiscard]] Json to_json() const {
    Json j;
    j["subcommand"] = subcommand;
    j["config_hash"] = config_hash;
    j["toolkit_version"] = toolkit_version;
    j["started_utc"] = started_utc;
    j["finished_utc"] = finished_utc;
    j["wall_seconds"] = wall_seconds;
    j["n_paths"] = n_paths;
    j["exit_code"] = exit_code;
    Json fs = Json::array();
    for (const auto& [name, rows] : files) fs.push_back({{"name", name}, {"rows", rows}});
    j["files"] = fs;
    j["notes"] = notes;
    return j;
  }
};

/// Runs fn(i) for every path index in [0, n) on a small worker pool; callers
/// commit results in index order afterwards, so scheduling never reaches the
/// output bytes.
template <class Fn>
inline void parallel_for_paths(std::size_t n, unsigned workers, Fn&& fn) {
  if (n == 0) return;
  unsigned hw = workers ? workers : std::max(1u, std::thread::hardware_concurrency());
  hw = unsigned(std::min<std::size_t>(hw, n));
  if (hw <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(hw);
  for (unsigned w = 0; w < hw; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
    });
  for (auto& t : pool) t.join();
}

namespace detail_cli {

inline std::string format_utc(std::chrono::system_clock::time_point tp) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct PathStats {
  std::size_t clamp_events = 0;
  std::size_t negative_reads = 0;
};

inline Trajectory simulate_path(const ExperimentConfig& cfg, std::uint64_t path_index,
                                PathStats* stats = nullptr) {
  const auto built = cfg.model.frame == Frame::log_scale
                         ? build_log_coefficients(cfg.model, cfg.coupling.build(), cfg.noise)
                         : build_original_coefficients(cfg.model, cfg.coupling.build());
  const auto driver = sample_levy(cfg.noise, cfg.solver.horizon, cfg.solver.dt,
                                  cfg.ensemble.master_seed, path_index);
  const double level = cfg.ensemble.initial.draw(cfg.ensemble.master_seed, path_index);
  auto traj = integrate_sdde(built.coeffs, constant_segment(cfg.model.tau, level), driver,
                             cfg.solver);
  if (stats) {
    stats->clamp_events = *built.clamp_events;
    stats->negative_reads = *built.negative_reads;
  }
  return traj;
}

/// Simulates every path in index-ordered blocks: workers fill a block, the
/// consumer sees paths strictly in order, and memory stays bounded by the
/// block size.
template <class Consume>
inline void for_each_trajectory(const ExperimentConfig& cfg, unsigned workers, Consume consume) {
  const std::size_t n = cfg.ensemble.n_paths;
  const unsigned hw = workers ? workers : std::max(1u, std::thread::hardware_concurrency());
  const std::size_t block = std::max<std::size_t>(std::size_t(hw) * 4, 16);
  for (std::size_t base = 0; base < n; base += block) {
    const std::size_t count = std::min(block, n - base);
    std::vector<Trajectory> buf(count);
    std::vector<PathStats> stats(count);
    parallel_for_paths(count, workers, [&](std::size_t k) {
      buf[k] = simulate_path(cfg, base + k, &stats[k]);
    });
    for (std::size_t k = 0; k < count; ++k) consume(base + k, std::move(buf[k]), stats[k]);
  }
}

inline std::vector<Trajectory> simulate_ensemble(const ExperimentConfig& cfg, unsigned workers) {
  std::vector<Trajectory> out;
  out.reserve(cfg.ensemble.n_paths);
  for_each_trajectory(cfg, workers, [&](std::size_t, Trajectory&& traj, const PathStats&) {
    out.push_back(std::move(traj));
  });
  return out;
}

class Run {
 public:
  Run(const ExperimentConfig& cfg, std::string subcommand)
      : dir_(cfg.outputs.directory), precision_(cfg.outputs.precision) {
    manifest.subcommand = std::move(subcommand);
    manifest.config_hash = config_hash_hex(cfg.raw);
    manifest.started_utc = format_utc(std::chrono::system_clock::now());
    t0_ = std::chrono::steady_clock::now();
    std::filesystem::create_directories(dir_);
  }

  [[nodiscard]] std::ofstream open(const std::string& name) const {
    std::ofstream out(dir_ / name);
    if (!out) throw std::runtime_error("cannot open output file: " + (dir_ / name).string());
    out << std::setprecision(precision_);
    return out;
  }

  void note_file(const std::string& name, std::size_t rows) {
    manifest.files.emplace_back(name, rows);
  }

  int finish(int code) {
    manifest.exit_code = code;
    manifest.finished_utc = format_utc(std::chrono::system_clock::now());
    manifest.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    std::ofstream out(dir_ / "manifest.json");
    out << manifest.to_json().dump(2) << '\n';
    return code;
  }

  [[nodiscard]] const std::filesystem::path& dir() const noexcept { return dir_; }

  RunManifest manifest;

 private:
  std::filesystem::path dir_;
  int precision_;
  std::chrono::steady_clock::time_point t0_;
};

inline int report_validation_errors(const std::vector<std::string>& errors) {
  for (const auto& e : errors) std::cerr << "config: " << e << '\n';
  return kExitValidation;
}

inline std::vector<double> default_probes(const ExperimentConfig& cfg) {
  if (!cfg.ensemble.probe_times.empty()) return cfg.ensemble.probe_times;
  std::vector<double> out;
  const int n = 100;
  out.reserve(n + 1);
  for (int i = 0; i <= n; ++i) out.push_back(cfg.solver.horizon * double(i) / double(n));
  return out;
}

inline std::size_t write_trajectory_csv(std::ofstream& out, const Trajectory& traj) {
  out << "t,value,pre_jump_value\n";
  const auto& ts = traj.path.times();
  const auto& vs = traj.path.values();
  std::size_t rows = 0;
  std::size_t j = 0;
  const auto& jumps = traj.path.jumps();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    out << ts[i] << ',' << vs[i] << ',';
    if (j < jumps.size() && jumps[j].index == i) out << jumps[j++].left_value;
    out << '\n';
    ++rows;
  }
  return rows;
}

inline Json path_summary(std::size_t index, const Trajectory& traj, const PathStats& stats) {
  Json j;
  j["path"] = index;
  if (traj.explosion_time)
    j["explosion_time"] = *traj.explosion_time;
  else
    j["explosion_time"] = nullptr;
  j["explosion_direction"] = traj.explosion_direction;
  j["violations"] = traj.violations.size();
  j["clamp_events"] = stats.clamp_events;
  j["negative_reads"] = stats.negative_reads;
  j["max_abs_drift"] = traj.max_abs_drift;
  j["max_abs_noise_coeff"] = traj.max_abs_noise_coeff;
  return j;
}

struct ProbeTable {
  std::vector<double> probes;
  std::vector<std::size_t> n_alive;
  std::vector<std::vector<double>> alive_values;  // [probe][path], exploded skipped
};

inline ProbeTable collect_probe_values(const std::vector<Trajectory>& ensemble,
                                       const std::vector<double>& probes) {
  ProbeTable table;
  table.probes = probes;
  table.n_alive.assign(probes.size(), 0);
  table.alive_values.assign(probes.size(), {});
  for (std::size_t pi = 0; pi < probes.size(); ++pi) {
    const double t = probes[pi];
    for (const auto& traj : ensemble) {
      if (traj.explosion_time && *traj.explosion_time <= t) continue;
      table.alive_values[pi].push_back(traj.path.value_at(t));
      ++table.n_alive[pi];
    }
  }
  return table;
}

inline double sorted_quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto i = std::size_t(std::llround(q * double(sorted.size() - 1)));
  return sorted[std::min(i, sorted.size() - 1)];
}

}  // namespace detail_cli

/// One trajectory file per path plus a per-path summary; n_paths = 0 writes
/// the manifest alone.
inline int run_simulate(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  const auto errors = validate_config(cfg, "simulate");
  if (!errors.empty()) return detail_cli::report_validation_errors(errors);
  detail_cli::Run run(cfg, "simulate");
  run.manifest.n_paths = cfg.ensemble.n_paths;
  try {
    std::ofstream summary;
    std::size_t summary_rows = 0;
    if (cfg.ensemble.n_paths > 0) summary = run.open("run_summary.jsonl");
    std::size_t exploded = 0;
    detail_cli::for_each_trajectory(
        cfg, opt.workers,
        [&](std::size_t i, Trajectory&& traj, const detail_cli::PathStats& stats) {
          if (cfg.outputs.write_trajectories) {
            std::ostringstream name;
            name << "trajectory_" << std::setw(6) << std::setfill('0') << i << ".csv";
            auto out = run.open(name.str());
            const std::size_t rows = detail_cli::write_trajectory_csv(out, traj);
            run.note_file(name.str(), rows);
          }
          summary << detail_cli::path_summary(i, traj, stats).dump() << '\n';
          ++summary_rows;
          if (traj.explosion_time) ++exploded;
        });
    if (cfg.ensemble.n_paths > 0) run.note_file("run_summary.jsonl", summary_rows);
    if (exploded > 0)
      run.manifest.notes.push_back(std::to_string(exploded) + " path(s) exploded");
    return run.finish(kExitSuccess);
  } catch (const std::exception& e) {
    std::cerr << "simulate: " << e.what() << '\n';
    run.manifest.notes.push_back(e.what());
    return run.finish(kExitRuntime);
  }
}

/// Cross-sectional statistics on a probe grid; original-frame models also get
/// the exact mean majorant comparison.
inline int run_ensemble_stats(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  const auto errors = validate_config(cfg, "ensemble");
  if (!errors.empty()) return detail_cli::report_validation_errors(errors);
  detail_cli::Run run(cfg, "ensemble");
  run.manifest.n_paths = cfg.ensemble.n_paths;
  try {
    const auto ensemble = detail_cli::simulate_ensemble(cfg, opt.workers);
    const auto probes = detail_cli::default_probes(cfg);
    auto table = detail_cli::collect_probe_values(ensemble, probes);

    auto out = run.open("ensemble_stats.csv");
    out << "t,n_alive,mean,stderr,q05,q50,q95,min,max\n";
    std::size_t rows = 0;
    for (std::size_t pi = 0; pi < probes.size(); ++pi) {
      auto& vals = table.alive_values[pi];
      std::sort(vals.begin(), vals.end());
      const double n = double(vals.size());
      double mean = 0.0, var = 0.0;
      for (double v : vals) mean += v;
      if (!vals.empty()) mean /= n;
      for (double v : vals) var += (v - mean) * (v - mean);
      const double se = vals.size() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
      out << probes[pi] << ',' << vals.size() << ',' << mean << ',' << se << ','
          << detail_cli::sorted_quantile(vals, 0.05) << ','
          << detail_cli::sorted_quantile(vals, 0.50) << ','
          << detail_cli::sorted_quantile(vals, 0.95) << ','
          << (vals.empty() ? std::numeric_limits<double>::quiet_NaN() : vals.front()) << ','
          << (vals.empty() ? std::numeric_limits<double>::quiet_NaN() : vals.back()) << '\n';
      ++rows;
    }
    run.note_file("ensemble_stats.csv", rows);

    const bool any_exploded =
        std::any_of(ensemble.begin(), ensemble.end(),
                    [](const Trajectory& t) { return t.explosion_time.has_value(); });
    if (cfg.model.frame == Frame::original && !ensemble.empty() && !any_exploded) {
      const auto report =
          mean_bound_check(ensemble, cfg.model, probes, cfg.ensemble.mean_margin_abs);
      auto mb = run.open("mean_bound.csv");
      mb << "t,mean,stderr,xi,asymptotic_bound\n";
      for (std::size_t i = 0; i < report.t_grid.size(); ++i)
        mb << report.t_grid[i] << ',' << report.means[i] << ',' << report.std_errors[i] << ','
           << report.xi[i] << ',' << report.asymptotic_bound << '\n';
      run.note_file("mean_bound.csv", report.t_grid.size());
      run.manifest.notes.push_back(std::string("mean_below_xi=") +
                                   (report.mean_below_xi ? "true" : "false"));
      run.manifest.notes.push_back(std::string("tail_below_asymptote=") +
                                   (report.tail_below_asymptote ? "true" : "false"));
      if (report.negative_paths > 0)
        run.manifest.notes.push_back(std::to_string(report.negative_paths) +
                                     " path(s) went negative at probe times");
    } else if (cfg.model.frame == Frame::original && any_exploded) {
      run.manifest.notes.push_back("mean bound skipped: ensemble contains exploded paths");
    }
    return run.finish(kExitSuccess);
  } catch (const std::exception& e) {
    std::cerr << "ensemble: " << e.what() << '\n';
    run.manifest.notes.push_back(e.what());
    return run.finish(kExitRuntime);
  }
}

/// Monte Carlo containment of the analytic tail bounds over the configured
/// cell grid. Exit is 3 when any evaluated cell's 99% upper confidence limit
/// exceeds its bound; infeasible cells are skipped with the reason recorded.
inline int run_tails(const ExperimentConfig& cfg, const RunOptions& = {}) {
  const auto errors = validate_config(cfg, "tails");
  if (!errors.empty()) return detail_cli::report_validation_errors(errors);
  detail_cli::Run run(cfg, "tails");
  try {
    const auto& tails = *cfg.tails;
    auto out = run.open("tails.csv");
    out << "cell,family,R,n_paths,n_exceed,estimate,ci_upper_99,bound,contained,status,reason\n";
    std::size_t rows = 0;
    bool any_failed = false;

    for (std::size_t ci = 0; ci < tails.cells.size(); ++ci) {
      const auto& cell = tails.cells[ci];
      const std::uint64_t seed =
          cfg.ensemble.master_seed + 0x9E3779B97F4A7C15ULL * (std::uint64_t(ci) + 1);
      const bool reverse = cell.family == "brownian_reverse" || cell.family == "levy_reverse" ||
                           cell.family == "d1_reverse";

      NegativeDriftParams params;
      params.alpha = cell.alpha;
      params.beta = cell.beta;
      params.sigma = cell.noise.sigma;
      params.lambda_N = cell.noise.lambda_N;
      params.zeta = cell.noise.zeta;
      params.kappa2 = cell.kappa2;
      params.R0 = cell.R0 ? *cell.R0 : default_interval_R0(cell.noise, cell.horizon);

      auto bound_at = [&](double R) -> double {
        if (cell.family == "brownian_reverse")
          return bound_brownian_reverse_sup(cell.alpha, cell.beta, R);
        if (cell.family == "brownian_interval")
          return bound_brownian_interval_sup(cell.beta, cell.horizon, R);
        if (cell.family == "levy_reverse") return bound_levy_reverse_sup(params, R);
        if (cell.family == "levy_interval")
          return bound_levy_interval_sup(params, cell.horizon, R);
        return bound_d1_reverse_sup(cell.alpha, cell.beta, R);
      };

      std::vector<double> stats;
      std::string skip_reason;
      try {
        bound_at(cell.R.front());  // feasibility: solves kappa1, checks sigma
        const double alpha = cell.alpha;
        const double beta = cell.beta;
        if (reverse)
          stats = sample_reverse_sup_stats([alpha](double) { return alpha; },
                                           [beta](double) { return beta; }, cell.noise,
                                           cell.horizon, tails.n_paths, tails.dt, seed);
        else
          stats = sample_interval_sup_stats([beta](double) { return beta; }, cell.noise, cell.t0,
                                            cell.horizon, tails.n_paths, tails.dt, seed);
      } catch (const std::invalid_argument& e) {
        skip_reason = e.what();
      }

      if (!skip_reason.empty()) {
        out << cell.id << ',' << cell.family << ",,,,,,,," << "skipped,\"" << skip_reason
            << "\"\n";
        ++rows;
        continue;
      }
      for (double R : cell.R) {
        const auto est = tail_estimate_from_stats(stats, R);
        const double bound = bound_at(R);
        const bool contained = est.ci_upper_99 <= bound;
        if (!contained) any_failed = true;
        out << cell.id << ',' << cell.family << ',' << R << ',' << est.n_paths << ','
            << est.n_exceed << ',' << est.estimate << ',' << est.ci_upper_99 << ',' << bound
            << ',' << (contained ? 1 : 0) << ",ok,\n";
        ++rows;
      }
    }
    run.note_file("tails.csv", rows);
    if (any_failed) run.manifest.notes.push_back("containment failure in at least one cell");
    return run.finish(any_failed ? kExitAcceptance : kExitSuccess);
  } catch (const std::exception& e) {
    std::cerr << "tails: " << e.what() << '\n';
    run.manifest.notes.push_back(e.what());
    return run.finish(kExitRuntime);
  }
}

/// Time-average measure estimation with stationarity, extinction, and
/// boundedness/tightness diagnostics over a simulated ensemble.
inline int run_invariant(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  const auto errors = validate_config(cfg, "invariant");
  if (!errors.empty()) return detail_cli::report_validation_errors(errors);
  detail_cli::Run run(cfg, "invariant");
  run.manifest.n_paths = cfg.ensemble.n_paths;
  try {
    const auto& inv = *cfg.invariant;
    const double tau = cfg.model.tau;
    const std::size_t stride =
        inv.stride ? inv.stride
                   : std::size_t(std::max(1.0, std::round(tau / cfg.solver.dt)));
    const auto ensemble = detail_cli::simulate_ensemble(cfg, opt.workers);

    std::size_t exploded = 0;
    for (const auto& traj : ensemble)
      if (traj.explosion_time) ++exploded;
    const double exploded_fraction =
        ensemble.empty() ? 0.0 : double(exploded) / double(ensemble.size());

    Json diag;
    diag["exploded_fraction"] = exploded_fraction;
    diag["f0"] = cfg.model.f.at_zero();
    diag["f0_positive"] = cfg.model.f.at_zero() > 0.0;
    diag["feedback_kind"] =
        cfg.model.f.kind() == NonlinearityKind::mackey_glass
            ? "mackey_glass"
            : (cfg.model.f.kind() == NonlinearityKind::nicholson ? "nicholson" : "custom");

    if (exploded_fraction > inv.explosion_cap) {
      diag["aborted"] = "exploded fraction above the configured cap";
      auto dj = run.open("diagnostics.jsonl");
      dj << diag.dump() << '\n';
      run.note_file("diagnostics.jsonl", 1);
      std::cerr << "invariant: exploded fraction " << exploded_fraction
                << " above cap " << inv.explosion_cap << '\n';
      run.manifest.notes.push_back("aborted: exploded fraction above cap");
      return run.finish(kExitRuntime);
    }

    // Empirical invariant measure: pooled window-2 time averages.
    std::vector<EmpiricalMeasure1D> parts;
    for (const auto& traj : ensemble) {
      if (traj.explosion_time) continue;
      parts.push_back(
          time_average_distribution(traj, inv.window2.first, inv.window2.second, stride));
    }
    if (!parts.empty()) {
      const auto measure = merge_measures(parts);
      auto mout = run.open("measure.csv");
      mout << "atom,weight\n";
      for (std::size_t i = 0; i < measure.size(); ++i)
        mout << measure.atoms()[i] << ',' << measure.weights()[i] << '\n';
      run.note_file("measure.csv", measure.size());
    } else {
      run.manifest.notes.push_back("measure skipped: no unexploded paths");
    }

    // Stationarity on the first unexploded path.
    const Trajectory* witness = nullptr;
    for (const auto& traj : ensemble)
      if (!traj.explosion_time) {
        witness = &traj;
        break;
      }
    if (witness) {
      const auto rep = stationarity_check(*witness, inv.window1, inv.window2, stride,
                                          cfg.ensemble.master_seed, inv.n_bootstrap);
      Json sj;
      sj["w1_distance"] = rep.w1_distance;
      sj["tol"] = rep.tol;
      sj["bootstrap_mean"] = rep.bootstrap_mean;
      sj["bootstrap_sd"] = rep.bootstrap_sd;
      sj["pass"] = rep.pass;
      sj["n_window1"] = rep.n_window1;
      sj["n_window2"] = rep.n_window2;
      auto sout = run.open("stationarity.jsonl");
      sout << sj.dump() << '\n';
      run.note_file("stationarity.jsonl", 1);
      diag["stationarity_pass"] = rep.pass;
    } else {
      run.manifest.notes.push_back("stationarity skipped: no unexploded paths");
    }

    const double probe = inv.extinction_probe > 0.0 ? inv.extinction_probe : cfg.solver.horizon;
    if (!ensemble.empty())
      diag["extinction_probability"] =
          extinction_probability(ensemble, inv.extinction_threshold, probe);

    if (ensemble.size() >= 100 && !inv.R_grid.empty() && !inv.t_grid.empty()) {
      const auto value_prof =
          boundedness_profile(ensemble, BoundednessQuantity::value, inv.R_grid, inv.t_grid);
      auto pv = run.open("profile_value.csv");
      pv << "t,R,exceedance\n";
      std::size_t rows = 0;
      for (std::size_t ti = 0; ti < inv.t_grid.size(); ++ti)
        for (std::size_t j = 0; j < inv.R_grid.size(); ++j, ++rows)
          pv << inv.t_grid[ti] << ',' << inv.R_grid[j] << ',' << value_prof.exceedance[ti][j]
             << '\n';
      run.note_file("profile_value.csv", rows);

      if (!inv.delta_grid.empty()) {
        const auto tight = tightness_diagnostic(ensemble, tau, inv.R_grid, inv.delta_grid,
                                                inv.t_grid, inv.epsilon);
        auto ps = run.open("profile_segment.csv");
        ps << "t,R,exceedance\n";
        std::size_t srows = 0;
        for (std::size_t ti = 0; ti < inv.t_grid.size(); ++ti)
          for (std::size_t j = 0; j < inv.R_grid.size(); ++j, ++srows)
            ps << inv.t_grid[ti] << ',' << inv.R_grid[j] << ','
               << tight.sup_norm.exceedance[ti][j] << '\n';
        run.note_file("profile_segment.csv", srows);

        auto tg = run.open("tightness.csv");
        tg << "t,delta,exceedance\n";
        std::size_t trows = 0;
        for (std::size_t ti = 0; ti < inv.t_grid.size(); ++ti)
          for (std::size_t j = 0; j < inv.delta_grid.size(); ++j, ++trows)
            tg << inv.t_grid[ti] << ',' << inv.delta_grid[j] << ','
               << tight.modulus_exceedance[ti][j] << '\n';
        run.note_file("tightness.csv", trows);
        diag["sup_norm_decays"] = tight.sup_norm_decays;
        diag["modulus_decays"] = tight.modulus_decays;
      }
    } else {
      run.manifest.notes.push_back(
          "profiles skipped: need at least 100 paths and non-empty R/t grids");
    }

    auto dj = run.open("diagnostics.jsonl");
    dj << diag.dump() << '\n';
    run.note_file("diagnostics.jsonl", 1);
    return run.finish(kExitSuccess);
  } catch (const std::exception& e) {
    std::cerr << "invariant: " << e.what() << '\n';
    run.manifest.notes.push_back(e.what());
    return run.finish(kExitRuntime);
  }
}

/// Drives the pathwise envelope checks over an ensemble; exit 3 on any
/// violation beyond the discretization tolerance.
inline int run_bounds_verify(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  const auto errors = validate_config(cfg, "bounds-verify");
  if (!errors.empty()) return detail_cli::report_validation_errors(errors);
  detail_cli::Run run(cfg, "bounds-verify");
  run.manifest.n_paths = cfg.ensemble.n_paths;
  try {
    const auto& b = *cfg.bounds;
    const auto coupling = cfg.coupling.build();

    BoundParams params;
    params.R = b.R;
    params.gamma_tilde = b.gamma_tilde ? *b.gamma_tilde : cfg.model.gamma.inf_value();
    params.r_tilde = b.r_tilde ? *b.r_tilde : cfg.model.r.sup_value();
    params.M = b.M ? *b.M : cfg.model.f.sup();
    params.zeta = b.zeta ? *b.zeta : std::fabs(coupling.beta_c) * cfg.noise.zeta;
    params.C_F = b.C_F;
    params.beta_drift = b.beta_drift ? *b.beta_drift : params.gamma_tilde;
    params.delta = b.delta;
    params.delay_factor = b.delay_factor;
    params.drift_sup = b.drift_sup;

    const bool do_upper = b.direction == "upper" || b.direction == "both";
    const bool do_lower = b.direction == "lower" || b.direction == "both";

    struct Tally {
      std::size_t paths = 0, checks = 0, violations = 0, marginal = 0, skipped = 0;
      double worst_margin = -std::numeric_limits<double>::infinity();
      double tol = 0.0;
    };
    Tally upper, lower;

    auto flags = run.open("pathwise_flags.csv");
    flags << "path,direction,time,value,bound,margin,at_left_limit\n";
    std::size_t flag_rows = 0;
    auto absorb = [&](Tally& tally, const EnvelopeReport& rep, std::size_t path,
                      const char* direction) {
      ++tally.paths;
      tally.checks += rep.checks;
      tally.violations += rep.violations;
      tally.marginal += rep.marginal;
      tally.worst_margin = std::max(tally.worst_margin, rep.worst_margin);
      tally.tol = std::max(tally.tol, rep.tol);
      for (const auto& rec : rep.flagged) {
        flags << path << ',' << direction << ',' << rec.time << ',' << rec.value << ','
              << rec.bound << ',' << rec.margin << ',' << (rec.at_left_limit ? 1 : 0) << '\n';
        ++flag_rows;
      }
    };

    detail_cli::for_each_trajectory(
        cfg, opt.workers,
        [&](std::size_t i, Trajectory&& traj, const detail_cli::PathStats&) {
          if (traj.explosion_time) {
            if (do_upper) ++upper.skipped;
            if (do_lower) ++lower.skipped;
            return;
          }
          const CadlagPath& v = *traj.forcing;
          if (do_upper) {
            const auto rep = verify_upper_bound(traj.path, v, params, b.t0);
            absorb(upper, rep, i, "upper");
          }
          if (do_lower) {
            const auto rep = verify_lower_bound(traj.path, v, params, b.t0);
            absorb(lower, rep, i, "lower");
          }
        });
    run.note_file("pathwise_flags.csv", flag_rows);

    auto rout = run.open("pathwise_report.jsonl");
    std::size_t report_rows = 0;
    auto emit = [&](const Tally& tally, const char* direction) {
      Json j;
      j["direction"] = direction;
      j["paths"] = tally.paths;
      j["paths_skipped_exploded"] = tally.skipped;
      j["checks"] = tally.checks;
      j["violations"] = tally.violations;
      j["marginal"] = tally.marginal;
      j["worst_margin"] =
          std::isfinite(tally.worst_margin) ? Json(tally.worst_margin) : Json(nullptr);
      j["tol"] = tally.tol;
      j["alpha"] = params.alpha();
      j["R"] = params.R;
      j["zeta"] = params.zeta;
      rout << j.dump() << '\n';
      ++report_rows;
    };
    if (do_upper) emit(upper, "upper");
    if (do_lower) emit(lower, "lower");
    run.note_file("pathwise_report.jsonl", report_rows);

    const std::size_t total_violations = upper.violations + lower.violations;
    if (total_violations > 0)
      run.manifest.notes.push_back(std::to_string(total_violations) +
                                   " envelope violation(s) beyond tolerance");
    return run.finish(total_violations > 0 ? kExitAcceptance : kExitSuccess);
  } catch (const std::exception& e) {
    std::cerr << "bounds-verify: " << e.what() << '\n';
    run.manifest.notes.push_back(e.what());
    return run.finish(kExitRuntime);
  }
}

/// Constant-rate structural analysis plus, for unit-delay saturating feedback
/// with linear numerator, the deterministic persistence certificate.
inline int run_stability(const ExperimentConfig& cfg, const RunOptions& = {}) {
  const auto errors = validate_config(cfg, "stability");
  if (!errors.empty()) return detail_cli::report_validation_errors(errors);
  detail_cli::Run run(cfg, "stability");
  try {
    const StabilitySection st = cfg.stability ? *cfg.stability : StabilitySection{};
    Json j;
    const bool constant_rates = cfg.model.gamma.is_constant() && cfg.model.r.is_constant();
    if (constant_rates) {
      j["steady_states"] = steady_states(cfg.model);
      const auto zs = zero_stability(cfg.model);
      j["zero_stability"] = zs == ZeroStability::stable
                                ? "stable"
                                : (zs == ZeroStability::unstable ? "unstable" : "marginal");
      const auto root = characteristic_real_root(cfg.model);
      j["characteristic_real_root"] = root ? Json(*root) : Json(nullptr);
    } else {
      j["structural_analysis"] = "skipped: rates are not constant";
    }

    bool persistence_failed = false;
    const bool persistence_applicable = cfg.model.f.kind() == NonlinearityKind::mackey_glass &&
                                        cfg.model.f.q() == 1.0 &&
                                        std::fabs(cfg.model.tau - 1.0) <= 1e-9;
    if (persistence_applicable) {
      const double level = cfg.ensemble.initial.draw(cfg.ensemble.master_seed, 0);
      const auto rep = verify_mg_persistence(cfg.model.f.p(), cfg.model.gamma, cfg.model.r,
                                             constant_segment(1.0, level), st.horizon, st.dt);
      j["persistence_inf"] = rep.inf_value;
      if (rep.band)
        j["persistence_band"] = {rep.band->first, rep.band->second};
      else
        j["persistence_band"] = nullptr;
      j["persistence_warnings"] = rep.warnings;
      persistence_failed = !(rep.inf_value > 0.0);
    } else {
      j["persistence"] = "skipped: needs unit delay and saturating feedback with q = 1";
    }

    auto out = run.open("stability.jsonl");
    out << j.dump() << '\n';
    run.note_file("stability.jsonl", 1);
    if (persistence_failed) run.manifest.notes.push_back("persistence floor not positive");
    return run.finish(persistence_failed ? kExitAcceptance : kExitSuccess);
  } catch (const std::exception& e) {
    std::cerr << "stability: " << e.what() << '\n';
    run.manifest.notes.push_back(e.what());
    return run.finish(kExitRuntime);
  }
}

/// Plot-ready long-format emission: a capped set of raw series plus the
/// cross-sectional statistics, one (key, value) row at a time.
inline int run_report(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  const auto errors = validate_config(cfg, "report");
  if (!errors.empty()) return detail_cli::report_validation_errors(errors);
  detail_cli::Run run(cfg, "report");
  run.manifest.n_paths = cfg.ensemble.n_paths;
  try {
    const std::size_t series_cap = 20;
    const auto probes = detail_cli::default_probes(cfg);

    auto series = run.open("series_long.csv");
    series << "path,t,value\n";
    std::size_t series_rows = 0;
    std::vector<Trajectory> ensemble;
    ensemble.reserve(cfg.ensemble.n_paths);
    detail_cli::for_each_trajectory(
        cfg, opt.workers,
        [&](std::size_t i, Trajectory&& traj, const detail_cli::PathStats&) {
          if (i < series_cap) {
            const auto& ts = traj.path.times();
            const auto& vs = traj.path.values();
            const std::size_t stride = std::max<std::size_t>(1, ts.size() / 2000);
            for (std::size_t k = 0; k < ts.size(); k += stride) {
              series << i << ',' << ts[k] << ',' << vs[k] << '\n';
              ++series_rows;
            }
          }
          ensemble.push_back(std::move(traj));
        });
    run.note_file("series_long.csv", series_rows);

    auto table = detail_cli::collect_probe_values(ensemble, probes);
    auto stats = run.open("stats_long.csv");
    stats << "t,statistic,value\n";
    std::size_t stat_rows = 0;
    for (std::size_t pi = 0; pi < probes.size(); ++pi) {
      auto& vals = table.alive_values[pi];
      std::sort(vals.begin(), vals.end());
      double mean = 0.0;
      for (double v : vals) mean += v;
      if (!vals.empty()) mean /= double(vals.size());
      auto row = [&](const char* name, double value) {
        stats << probes[pi] << ',' << name << ',' << value << '\n';
        ++stat_rows;
      };
      row("n_alive", double(vals.size()));
      row("mean", mean);
      row("q05", detail_cli::sorted_quantile(vals, 0.05));
      row("q50", detail_cli::sorted_quantile(vals, 0.50));
      row("q95", detail_cli::sorted_quantile(vals, 0.95));
    }
    run.note_file("stats_long.csv", stat_rows);
    return run.finish(kExitSuccess);
  } catch (const std::exception& e) {
    std::cerr << "report: " << e.what() << '\n';
    run.manifest.notes.push_back(e.what());
    return run.finish(kExitRuntime);
  }
}

inline int run_subcommand(std::string_view name, const ExperimentConfig& cfg,
                          const RunOptions& opt = {}) {
  if (name == "simulate") return run_simulate(cfg, opt);
  if (name == "ensemble") return run_ensemble_stats(cfg, opt);
  if (name == "tails") return run_tails(cfg, opt);
  if (name == "invariant") return run_invariant(cfg, opt);
  if (name == "bounds-verify") return run_bounds_verify(cfg, opt);
  if (name == "stability") return run_stability(cfg, opt);
  if (name == "report") return run_report(cfg, opt);
  std::cerr << "unknown subcommand: " << name << '\n';
  return kExitValidation;
}

}  // namespace sdde
