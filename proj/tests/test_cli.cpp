#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sdde/cli.hpp"
#include "sdde/config.hpp"

namespace fs = std::filesystem;
using sdde::Json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::size_t count_lines(const std::string& text) {
  std::size_t n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::path("cli_out") / name;
  fs::remove_all(p);
  return p;
}

bool mentions(const std::vector<std::string>& errors, const std::string& needle) {
  for (const auto& e : errors)
    if (e.find(needle) != std::string::npos) return true;
  return false;
}

Json last_jsonl_record(const fs::path& file) {
  std::ifstream in(file);
  REQUIRE(in.good());
  std::string line, last;
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  REQUIRE_FALSE(last.empty());
  return Json::parse(last);
}

/// Small log-frame saturating-feedback model with Brownian forcing.
Json log_frame_doc(const std::string& out_dir) {
  Json doc;
  doc["schema_version"] = 1;
  doc["model"] = {{"nonlinearity", {{"kind", "mackey_glass"}, {"p", 2.0}, {"q", 1.0}}},
                  {"gamma", 1.0},
                  {"r", 2.0},
                  {"tau", 1.0},
                  {"frame", "log"}};
  doc["coupling"] = {{"constant", 0.3}, {"correction", "ito_brownian"}};
  doc["noise"] = {{"sigma", 1.0}};
  doc["solver"] = {{"dt", 0.01}, {"horizon", 5.0}, {"record_forcing", true}};
  doc["ensemble"] = {{"n_paths", 3},
                     {"master_seed", 7},
                     {"initial", {{"kind", "constant"}, {"value", 0.0}}}};
  doc["outputs"] = {{"directory", out_dir}};
  return doc;
}

int run(const std::string& sub, const Json& doc, unsigned workers = 2) {
  sdde::RunOptions opt;
  opt.workers = workers;
  return sdde::run_subcommand(sub, sdde::parse_experiment_config(doc), opt);
}

}  // namespace

TEST_CASE("config hash ignores key order and tracks content") {
  const auto a = Json::parse(R"({
    "schema_version": 1,
    "model": {"nonlinearity": {"kind": "nicholson", "p": 1.0}, "gamma": 1.0, "r": 2.0, "tau": 1.0},
    "solver": {"dt": 0.01, "horizon": 5.0},
    "ensemble": {"n_paths": 2, "master_seed": 9}
  })");
  const auto b = Json::parse(R"({
    "ensemble": {"master_seed": 9, "n_paths": 2},
    "solver": {"horizon": 5.0, "dt": 0.01},
    "model": {"tau": 1.0, "r": 2.0, "gamma": 1.0, "nonlinearity": {"p": 1.0, "kind": "nicholson"}},
    "schema_version": 1
  })");
  CHECK(sdde::config_hash_hex(a) == sdde::config_hash_hex(b));
  CHECK(sdde::config_hash_hex(a).size() == 16);

  auto c = a;
  c["ensemble"]["master_seed"] = 10;
  CHECK(sdde::config_hash_hex(c) != sdde::config_hash_hex(a));
}

TEST_CASE("config parsing collects unknown keys and schema mismatches") {
  auto doc = log_frame_doc("unused");

  SECTION("unknown top-level key") {
    doc["typo_section"] = 1;
    const auto cfg = sdde::parse_experiment_config(doc);
    CHECK(mentions(cfg.errors, "unknown key 'typo_section'"));
  }
  SECTION("unknown nested key") {
    doc["solver"]["dtt"] = 0.5;
    const auto cfg = sdde::parse_experiment_config(doc);
    CHECK(mentions(cfg.errors, "solver: unknown key 'dtt'"));
  }
  SECTION("wrong schema version") {
    doc["schema_version"] = 2;
    const auto cfg = sdde::parse_experiment_config(doc);
    CHECK(mentions(cfg.errors, "schema_version"));
  }
  SECTION("several sections fail independently") {
    doc["model"]["nonlinearity"]["kind"] = "sigmoid";
    doc["coupling"] = {{"constant", 0.1}, {"multiplicative", 0.1}};
    const auto cfg = sdde::parse_experiment_config(doc);
    CHECK(mentions(cfg.errors, "mackey_glass"));
    CHECK(mentions(cfg.errors, "exactly one of"));
    CHECK(cfg.errors.size() >= 2);
  }
  SECTION("a clean document parses without errors") {
    const auto cfg = sdde::parse_experiment_config(doc);
    CHECK(cfg.errors.empty());
    CHECK(sdde::validate_config(cfg, "simulate").empty());
  }
}

TEST_CASE("config validation names the violated invariant") {
  SECTION("dt above the delay") {
    auto doc = log_frame_doc("unused");
    doc["solver"]["dt"] = 2.0;
    const auto errs = sdde::validate_config(sdde::parse_experiment_config(doc), "simulate");
    REQUIRE_FALSE(errs.empty());
    CHECK(mentions(errs, "dt must not exceed the delay tau"));
  }
  SECTION("frame and correction must agree") {
    auto doc = log_frame_doc("unused");
    doc["model"]["frame"] = "original";
    const auto errs = sdde::validate_config(sdde::parse_experiment_config(doc), "simulate");
    CHECK(mentions(errs, "corrections belong to the log frame"));
  }
  SECTION("invariant windows") {
    auto doc = log_frame_doc("unused");
    doc["solver"]["horizon"] = 120.0;
    doc["invariant"] = {{"windows", {{5.0, 60.0}, {55.0, 110.0}}}};
    auto errs = sdde::validate_config(sdde::parse_experiment_config(doc), "invariant");
    CHECK(mentions(errs, "windows overlap"));

    doc["invariant"] = {{"windows", {{5.0, 20.0}, {60.0, 115.0}}}};
    errs = sdde::validate_config(sdde::parse_experiment_config(doc), "invariant");
    CHECK(mentions(errs, "at least 50 tau"));

    doc["invariant"] = {{"windows", {{5.0, 60.0}, {70.0, 140.0}}}};
    errs = sdde::validate_config(sdde::parse_experiment_config(doc), "invariant");
    CHECK(mentions(errs, "past the solver horizon"));
  }
  SECTION("bounds need the realized forcing and a feasible lower gap") {
    auto doc = log_frame_doc("unused");
    doc["solver"]["record_forcing"] = false;
    doc["bounds"] = {{"R", 2.0}};
    auto errs = sdde::validate_config(sdde::parse_experiment_config(doc), "bounds-verify");
    CHECK(mentions(errs, "record_forcing"));

    doc["solver"]["record_forcing"] = true;
    doc["bounds"] = {{"R", 2.0}, {"direction", "lower"}, {"delta", 0.05}};
    errs = sdde::validate_config(sdde::parse_experiment_config(doc), "bounds-verify");
    CHECK(mentions(errs, "exp(-R) must stay below delta"));
  }
  SECTION("subcommands demand their sections") {
    const auto doc = log_frame_doc("unused");
    const auto cfg = sdde::parse_experiment_config(doc);
    CHECK(mentions(sdde::validate_config(cfg, "tails"), "section required"));
    CHECK(mentions(sdde::validate_config(cfg, "invariant"), "section required"));
    CHECK(mentions(sdde::validate_config(cfg, "bounds-verify"), "section required"));
    CHECK(sdde::validate_config(cfg, "stability").empty());
  }
}

TEST_CASE("simulate reruns byte-identically and the manifest indexes every file") {
  const auto dir_a = fresh_dir("sim_a");
  const auto dir_b = fresh_dir("sim_b");
  REQUIRE(run("simulate", log_frame_doc(dir_a.string())) == sdde::kExitSuccess);
  REQUIRE(run("simulate", log_frame_doc(dir_b.string()), 1) == sdde::kExitSuccess);

  std::set<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir_a)) {
    const auto name = entry.path().filename().string();
    if (name == "manifest.json") continue;
    names.insert(name);
    CHECK(slurp(entry.path()) == slurp(dir_b / name));
  }
  CHECK(names.count("run_summary.jsonl") == 1);
  CHECK(names.count("trajectory_000000.csv") == 1);
  CHECK(names.count("trajectory_000002.csv") == 1);

  const auto manifest = Json::parse(slurp(dir_a / "manifest.json"));
  CHECK(manifest["subcommand"] == "simulate");
  CHECK(manifest["exit_code"] == 0);
  CHECK(manifest["n_paths"] == 3);
  std::set<std::string> listed;
  for (const auto& f : manifest["files"]) listed.insert(f["name"].get<std::string>());
  CHECK(listed == names);

  const auto hash = manifest["config_hash"].get<std::string>();
  CHECK(hash == sdde::config_hash_hex(log_frame_doc(dir_a.string())));

  const auto summary = slurp(dir_a / "run_summary.jsonl");
  CHECK(count_lines(summary) == 3);
  const auto rec = Json::parse(summary.substr(0, summary.find('\n')));
  CHECK(rec["path"] == 0);
  CHECK(rec["explosion_time"].is_null());
  CHECK(rec["violations"] == 0);

  const auto traj = slurp(dir_a / "trajectory_000000.csv");
  CHECK(traj.rfind("t,value,pre_jump_value\n", 0) == 0);
  const auto manifest_rows = [&](const std::string& name) {
    for (const auto& f : manifest["files"])
      if (f["name"] == name) return f["rows"].get<std::size_t>();
    return std::size_t(0);
  };
  CHECK(manifest_rows("trajectory_000000.csv") == count_lines(traj) - 1);
}

TEST_CASE("simulate with zero paths writes the manifest alone") {
  const auto dir = fresh_dir("sim_zero");
  auto doc = log_frame_doc(dir.string());
  sdde::apply_overrides(doc, std::nullopt, std::size_t(0), std::nullopt);
  REQUIRE(run("simulate", doc) == sdde::kExitSuccess);

  std::vector<std::string> entries;
  for (const auto& entry : fs::directory_iterator(dir))
    entries.push_back(entry.path().filename().string());
  REQUIRE(entries == std::vector<std::string>{"manifest.json"});
  const auto manifest = Json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["n_paths"] == 0);
  CHECK(manifest["files"].empty());
}

TEST_CASE("simulate rejects invalid configs before touching the output directory") {
  const auto dir = fs::path("cli_out") / "sim_invalid";
  fs::remove_all(dir);
  auto doc = log_frame_doc(dir.string());
  doc["solver"]["dt"] = 2.0;
  CHECK(run("simulate", doc) == sdde::kExitValidation);
  CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("tails containment run with skipped and zero-noise cells") {
  const auto dir = fresh_dir("tails");
  auto doc = log_frame_doc(dir.string());
  doc["tails"] = {
      {"n_paths", 400},
      {"dt", 0.01},
      {"cells",
       {{{"id", "bm"},
         {"family", "brownian_reverse"},
         {"alpha", 1.0},
         {"beta", 1.0},
         {"horizon", 3.0},
         {"R", {380.0, 450.0}},
         {"noise", {{"sigma", 1.0}}}},
        {{"id", "levy_bad"},
         {"family", "levy_reverse"},
         {"alpha", 0.5},
         {"beta", 1.0},
         {"horizon", 2.0},
         {"R", {10.0}},
         {"noise",
          {{"sigma", 0.5},
           {"lambda", 1.0},
           {"zeta", 2.0},
           {"jump_law", {{"kind", "two_point"}, {"zeta", 2.0}}}}}},
        {{"id", "silent"},
         {"family", "brownian_reverse"},
         {"alpha", 1.0},
         {"beta", 1.0},
         {"horizon", 2.0},
         {"R", {1.0}}}}}};
  REQUIRE(run("tails", doc) == sdde::kExitSuccess);

  const auto csv = slurp(dir / "tails.csv");
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  CHECK(line == "cell,family,R,n_paths,n_exceed,estimate,ci_upper_99,bound,contained,status,reason");
  std::size_t ok_rows = 0, skipped_rows = 0, zero_rows = 0;
  while (std::getline(is, line)) {
    if (line.rfind("bm,", 0) == 0) {
      CHECK(line.find(",1,ok,") != std::string::npos);
      ++ok_rows;
    } else if (line.rfind("levy_bad,", 0) == 0) {
      CHECK(line.find("skipped") != std::string::npos);
      CHECK(line.find("infeasible") != std::string::npos);
      ++skipped_rows;
    } else if (line.rfind("silent,", 0) == 0) {
      CHECK(line.find("silent,brownian_reverse,1,400,0,0,") == 0);
      ++zero_rows;
    }
  }
  CHECK(ok_rows == 2);
  CHECK(skipped_rows == 1);
  CHECK(zero_rows == 1);

  const auto dir2 = fresh_dir("tails_rerun");
  auto doc2 = doc;
  doc2["outputs"]["directory"] = dir2.string();
  REQUIRE(run("tails", doc2) == sdde::kExitSuccess);
  CHECK(slurp(dir2 / "tails.csv") == csv);
}

namespace {

/// Deterministic log-frame run whose state rises from 0 to a positive rest
/// point: an honest feedback mass keeps the decay envelope valid, an
/// understated one gets overtaken.
Json bounds_doc(const std::string& out_dir) {
  Json doc;
  doc["schema_version"] = 1;
  doc["model"] = {{"nonlinearity", {{"kind", "mackey_glass"}, {"p", 2.0}, {"q", 1.0}}},
                  {"gamma", 1.0},
                  {"r", 6.0},
                  {"tau", 1.0},
                  {"frame", "log"}};
  doc["coupling"] = {{"constant", 0.0}};
  doc["solver"] = {{"dt", 0.01}, {"horizon", 8.0}, {"record_forcing", true}};
  doc["ensemble"] = {{"n_paths", 2},
                     {"master_seed", 5},
                     {"initial", {{"kind", "constant"}, {"value", 0.0}}}};
  doc["outputs"] = {{"directory", out_dir}};
  doc["bounds"] = {{"R", 0.2}, {"direction", "upper"}};
  return doc;
}

}  // namespace

TEST_CASE("bounds-verify passes honest parameters and flags an understated mass") {
  SECTION("defaults derived from the model give a growing, valid envelope") {
    const auto dir = fresh_dir("bounds_ok");
    REQUIRE(run("bounds-verify", bounds_doc(dir.string())) == sdde::kExitSuccess);
    const auto rep = last_jsonl_record(dir / "pathwise_report.jsonl");
    CHECK(rep["direction"] == "upper");
    CHECK(rep["paths"] == 2);
    CHECK(rep["violations"] == 0);
    CHECK(rep["checks"].get<std::size_t>() > 100);
    CHECK(rep["alpha"].get<double>() < 0.0);
    CHECK(count_lines(slurp(dir / "pathwise_flags.csv")) == 1);  // header only
  }
  SECTION("an understated feedback mass is caught with exit 3") {
    const auto dir = fresh_dir("bounds_lie");
    auto doc = bounds_doc(dir.string());
    doc["bounds"]["M"] = 0.01;
    REQUIRE(run("bounds-verify", doc) == sdde::kExitAcceptance);
    const auto rep = last_jsonl_record(dir / "pathwise_report.jsonl");
    CHECK(rep["violations"].get<std::size_t>() > 0);
    CHECK(rep["worst_margin"].get<double>() > 0.1);
    CHECK(count_lines(slurp(dir / "pathwise_flags.csv")) > 1);
    const auto manifest = Json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest["exit_code"] == 3);
  }
  SECTION("an empty ensemble verifies trivially") {
    const auto dir = fresh_dir("bounds_empty");
    auto doc = bounds_doc(dir.string());
    doc["ensemble"]["n_paths"] = 0;
    REQUIRE(run("bounds-verify", doc) == sdde::kExitSuccess);
    const auto rep = last_jsonl_record(dir / "pathwise_report.jsonl");
    CHECK(rep["paths"] == 0);
    CHECK(rep["violations"] == 0);
  }
}

TEST_CASE("invariant run emits measure, stationarity, and diagnostics") {
  const auto dir = fresh_dir("invariant");
  Json doc;
  doc["schema_version"] = 1;
  doc["model"] = {{"nonlinearity", {{"kind", "mackey_glass"}, {"p", 2.0}, {"q", 0.0}}},
                  {"gamma", 1.0},
                  {"r", 2.0},
                  {"tau", 1.0},
                  {"frame", "original"}};
  doc["coupling"] = {{"multiplicative", 0.05}};
  doc["noise"] = {{"sigma", 1.0}};
  doc["solver"] = {{"dt", 0.02}, {"horizon", 105.0}};
  doc["ensemble"] = {{"n_paths", 120},
                     {"master_seed", 99},
                     {"initial", {{"kind", "constant"}, {"value", 0.8}}}};
  doc["outputs"] = {{"directory", dir.string()}};
  doc["invariant"] = {{"windows", {{5.0, 55.0}, {55.0, 105.0}}},
                      {"R_grid", {2.0, 5.0, 10.0}},
                      {"delta_grid", {0.25}},
                      {"t_grid", {60.0, 105.0}},
                      {"explosion_cap", 0.05},
                      {"n_bootstrap", 64}};
  REQUIRE(run("invariant", doc) == sdde::kExitSuccess);

  // The pooled time-average measure concentrates near the positive rest
  // point x = 1 of gamma x = r / (1 + x^2).
  const auto measure = slurp(dir / "measure.csv");
  std::istringstream is(measure);
  std::string line;
  std::getline(is, line);
  REQUIRE(line == "atom,weight");
  double mean = 0.0, total = 0.0;
  while (std::getline(is, line)) {
    const auto comma = line.find(',');
    const double atom = std::stod(line.substr(0, comma));
    const double w = std::stod(line.substr(comma + 1));
    mean += atom * w;
    total += w;
  }
  CHECK(total == Catch::Approx(1.0).margin(1e-9));
  CHECK(mean == Catch::Approx(1.0).margin(0.1));

  const auto st = last_jsonl_record(dir / "stationarity.jsonl");
  CHECK(st["pass"].get<bool>());
  CHECK(st["n_window1"].get<std::size_t>() >= 50);

  const auto diag = last_jsonl_record(dir / "diagnostics.jsonl");
  CHECK(diag["exploded_fraction"] == 0.0);
  CHECK(diag["f0"] == 1.0);
  CHECK(diag["f0_positive"].get<bool>());
  CHECK(diag["feedback_kind"] == "mackey_glass");
  CHECK(diag["extinction_probability"] == 0.0);
  CHECK(diag["sup_norm_decays"].get<bool>());
  CHECK(diag.contains("modulus_decays"));

  for (const char* name : {"profile_value.csv", "profile_segment.csv", "tightness.csv"})
    CHECK(count_lines(slurp(dir / name)) > 1);
}

TEST_CASE("invariant aborts when too many paths explode") {
  const auto dir = fresh_dir("invariant_explode");
  Json doc;
  doc["schema_version"] = 1;
  doc["model"] = {{"nonlinearity", {{"kind", "mackey_glass"}, {"p", 2.0}, {"q", 0.0}}},
                  {"gamma", 10.0},
                  {"r", 0.001},
                  {"tau", 0.1},
                  {"frame", "log"}};
  doc["coupling"] = {{"constant", 0.0}};
  doc["solver"] = {{"dt", 0.01},
                   {"horizon", 11.0},
                   {"explosion_threshold", 5.0},
                   {"two_sided_explosion", true}};
  doc["ensemble"] = {{"n_paths", 3},
                     {"master_seed", 1},
                     {"initial", {{"kind", "constant"}, {"value", 0.0}}}};
  doc["outputs"] = {{"directory", dir.string()}};
  doc["invariant"] = {{"windows", {{1.0, 6.0}, {6.0, 11.0}}}};
  REQUIRE(run("invariant", doc) == sdde::kExitRuntime);

  const auto diag = last_jsonl_record(dir / "diagnostics.jsonl");
  CHECK(diag["exploded_fraction"] == 1.0);
  CHECK(diag.contains("aborted"));
  const auto manifest = Json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["exit_code"] == 4);
}

TEST_CASE("stability reports steady states and the persistence floor") {
  const auto dir = fresh_dir("stability");
  Json doc;
  doc["schema_version"] = 1;
  doc["model"] = {{"nonlinearity", {{"kind", "mackey_glass"}, {"p", 2.0}, {"q", 1.0}}},
                  {"gamma", 1.0},
                  {"r", 2.0},
                  {"tau", 1.0},
                  {"frame", "original"}};
  doc["coupling"] = {{"constant", 0.0}};
  doc["solver"] = {{"dt", 0.01}, {"horizon", 5.0}};
  doc["ensemble"] = {{"n_paths", 1},
                     {"master_seed", 1},
                     {"initial", {{"kind", "constant"}, {"value", 0.5}}}};
  doc["outputs"] = {{"directory", dir.string()}};
  doc["stability"] = {{"horizon", 60.0}, {"dt", 0.005}};
  REQUIRE(run("stability", doc) == sdde::kExitSuccess);

  const auto rep = last_jsonl_record(dir / "stability.jsonl");
  const auto states = rep["steady_states"].get<std::vector<double>>();
  REQUIRE(states.size() == 2);
  CHECK(states[0] == Catch::Approx(0.0).margin(1e-12));
  CHECK(states[1] == Catch::Approx(1.0).epsilon(1e-9));
  CHECK(rep["zero_stability"] == "unstable");
  CHECK_FALSE(rep["characteristic_real_root"].is_null());
  CHECK(rep["persistence_inf"].get<double>() > 0.0);

  SECTION("persistence certificate does not apply off the unit-delay family") {
    const auto dir2 = fresh_dir("stability_na");
    auto doc2 = doc;
    doc2["outputs"]["directory"] = dir2.string();
    doc2["model"]["nonlinearity"] = {{"kind", "nicholson"}, {"p", 1.0}};
    REQUIRE(run("stability", doc2) == sdde::kExitSuccess);
    const auto rep2 = last_jsonl_record(dir2 / "stability.jsonl");
    CHECK(rep2.contains("persistence"));
    CHECK_FALSE(rep2.contains("persistence_inf"));
  }
}

TEST_CASE("ensemble and report emit cross-sectional statistics") {
  Json doc;
  doc["schema_version"] = 1;
  doc["model"] = {{"nonlinearity", {{"kind", "nicholson"}, {"p", 1.0}}},
                  {"gamma", 1.0},
                  {"r", 2.0},
                  {"tau", 1.0},
                  {"frame", "original"}};
  doc["coupling"] = {{"constant", 0.0}};
  doc["solver"] = {{"dt", 0.01}, {"horizon", 5.0}};
  doc["ensemble"] = {{"n_paths", 3},
                     {"master_seed", 3},
                     {"initial", {{"kind", "constant"}, {"value", 0.5}}},
                     {"probe_times", {0.0, 1.0, 5.0}}};

  SECTION("ensemble statistics and the mean majorant") {
    const auto dir = fresh_dir("ensemble");
    doc["outputs"] = {{"directory", dir.string()}};
    REQUIRE(run("ensemble", doc) == sdde::kExitSuccess);

    const auto stats = slurp(dir / "ensemble_stats.csv");
    REQUIRE(count_lines(stats) == 4);  // header + three probes
    std::istringstream is(stats);
    std::string header, first;
    std::getline(is, header);
    CHECK(header == "t,n_alive,mean,stderr,q05,q50,q95,min,max");
    std::getline(is, first);
    CHECK(first.rfind("0,3,0.5,0,0.5,0.5,0.5,0.5,0.5", 0) == 0);

    const auto mb = slurp(dir / "mean_bound.csv");
    CHECK(count_lines(mb) == 4);
    const auto manifest = Json::parse(slurp(dir / "manifest.json"));
    bool noted = false;
    for (const auto& n : manifest["notes"])
      if (n.get<std::string>().find("mean_below_xi") != std::string::npos) noted = true;
    CHECK(noted);
  }
  SECTION("report series and long-format statistics") {
    const auto dir = fresh_dir("report");
    doc["outputs"] = {{"directory", dir.string()}};
    REQUIRE(run("report", doc) == sdde::kExitSuccess);

    const auto series = slurp(dir / "series_long.csv");
    CHECK(series.rfind("path,t,value\n", 0) == 0);
    CHECK(series.find("\n2,") != std::string::npos);  // all three paths present
    const auto stats = slurp(dir / "stats_long.csv");
    CHECK(count_lines(stats) == 1 + 3 * 5);  // five statistics per probe
  }
}
