#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sdde/measures.hpp"
#include "sdde/models.hpp"
#include "sdde/noise.hpp"
#include "sdde/paths.hpp"
#include "sdde/rng.hpp"
#include "sdde/solver.hpp"

using namespace sdde;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Trajectory constant_trajectory(double tau, double value, double horizon) {
  Trajectory traj;
  traj.tau = tau;
  traj.path = CadlagPath({-tau, 0.0, horizon}, {value, value, value}, {}, Interpolation::linear);
  return traj;
}

Trajectory decay_trajectory(double rate, double x0, double tau, double horizon, double dt) {
  FunctionalCoefficients coeffs;
  coeffs.drift = [rate](const Segment& seg, double) { return -rate * seg.back(); };
  coeffs.noise = [](const Segment&, double) { return 0.0; };
  SolverConfig config;
  config.dt = dt;
  config.horizon = horizon;
  return integrate_sdde(coeffs, constant_segment(tau, x0), null_noise(horizon), config);
}

Trajectory explosive_trajectory() {
  FunctionalCoefficients coeffs;
  coeffs.drift = [](const Segment& seg, double) { return seg.back() * seg.back(); };
  coeffs.noise = [](const Segment&, double) { return 0.0; };
  SolverConfig config;
  config.dt = 1e-3;
  config.horizon = 2.0;
  return integrate_sdde(coeffs, constant_segment(1.0, 1.0), null_noise(2.0), config);
}

Trajectory brownian_trajectory(double sigma, double horizon, double dt, std::uint64_t seed,
                               std::uint64_t path_index) {
  FunctionalCoefficients coeffs;
  coeffs.drift = [](const Segment&, double) { return 0.0; };
  coeffs.noise = [sigma](const Segment&, double) { return sigma; };
  SolverConfig config;
  config.dt = dt;
  config.horizon = horizon;
  const auto driver = sample_levy(RegulatedLevySpec::brownian(1.0), horizon, dt, seed, path_index);
  return integrate_sdde(coeffs, constant_segment(1.0, 0.0), driver, config);
}

EmpiricalMeasure1D random_measure(CounterRng& rng, std::size_t max_atoms) {
  const std::size_t n = 1 + std::size_t(rng.next_uniform() * double(max_atoms));
  std::vector<double> atoms(n), weights(n);
  for (std::size_t i = 0; i < n; ++i) {
    atoms[i] = 10.0 * rng.next_uniform() - 5.0;
    weights[i] = rng.next_uniform();
  }
  return EmpiricalMeasure1D(std::move(atoms), std::move(weights));
}

}  // namespace

TEST_CASE("empirical measures normalize, merge duplicates, and validate") {
  const EmpiricalMeasure1D mu({2.0, 1.0, 2.0, -1.0}, {0.2, 0.3, 0.2, 0.3});
  REQUIRE(mu.size() == 3);
  CHECK(mu.atoms() == std::vector<double>{-1.0, 1.0, 2.0});
  CHECK(mu.weights()[0] == 0.3);
  CHECK(mu.weights()[1] == 0.3);
  CHECK(mu.weights()[2] == 0.2 + 0.2);

  const EmpiricalMeasure1D nu({2.0, 4.0}, {1.0, 3.0});
  CHECK_THAT(nu.weights()[0], WithinAbs(0.25, 1e-15));
  CHECK_THAT(nu.weights()[1], WithinAbs(0.75, 1e-15));
  CHECK_THAT(nu.mean(), WithinRel(3.5, 1e-15));
  CHECK(nu.cdf(1.9) == 0.0);
  CHECK(nu.cdf(2.0) == nu.weights()[0]);
  CHECK_THAT(nu.cdf(4.0), WithinAbs(1.0, 1e-12));

  const auto sampled = EmpiricalMeasure1D::from_samples({1.0, 1.0, 3.0});
  REQUIRE(sampled.size() == 2);
  CHECK(sampled.weights()[0] == 1.0 / 3.0 + 1.0 / 3.0);
  CHECK(sampled.weights()[1] == 1.0 / 3.0);

  for (std::size_t n : {std::size_t(7), std::size_t(1000), std::size_t(12345)}) {
    const auto m = EmpiricalMeasure1D::from_samples(std::vector<double>(n, 1.5));
    long double total = 0.0L;
    for (double w : m.weights()) total += w;
    CHECK(std::fabs(double(total) - 1.0) <= 1e-12);
  }

  CHECK_THROWS_AS(EmpiricalMeasure1D({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(EmpiricalMeasure1D({1.0}, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(EmpiricalMeasure1D({1.0, 2.0}, {0.5, -0.1}), std::invalid_argument);
  CHECK_THROWS_AS(EmpiricalMeasure1D({std::nan(""), 2.0}, {0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(EmpiricalMeasure1D({1.0, 2.0}, {0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(EmpiricalMeasure1D::from_samples({}), std::invalid_argument);
}

TEST_CASE("wasserstein distance matches hand values and metric axioms") {
  const auto d0 = EmpiricalMeasure1D({0.0}, {1.0});
  const auto d1 = EmpiricalMeasure1D({1.0}, {1.0});
  CHECK(wasserstein1(d0, d1) == 1.0);

  const auto half = EmpiricalMeasure1D({0.0, 1.0}, {0.5, 0.5});
  const auto mid = EmpiricalMeasure1D({0.5}, {1.0});
  CHECK_THAT(wasserstein1(half, mid), WithinAbs(0.5, 1e-15));

  CounterRng rng(31415, 0, StreamRole::gaussian);
  for (int rep = 0; rep < 300; ++rep) {
    const auto a = random_measure(rng, 6);
    const auto b = random_measure(rng, 6);
    const auto c = random_measure(rng, 6);
    CHECK(wasserstein1(a, a) == 0.0);
    CHECK_THAT(wasserstein1(a, b), WithinAbs(wasserstein1(b, a), 1e-15));
    CHECK(wasserstein1(a, c) <= wasserstein1(a, b) + wasserstein1(b, c) + 1e-12);
  }

  for (double shift : {0.7, -2.3}) {
    const auto base = random_measure(rng, 8);
    std::vector<double> moved = base.atoms();
    for (double& x : moved) x += shift;
    const EmpiricalMeasure1D translated(std::move(moved), base.weights());
    CHECK_THAT(wasserstein1(base, translated), WithinAbs(std::fabs(shift), 1e-12));
  }

  // For equal-size uniform samples the CDF integral reduces to the mean
  // absolute difference of sorted order statistics.
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> xs(37), ys(37);
    for (auto& v : xs) v = 4.0 * rng.next_gaussian();
    for (auto& v : ys) v = 1.0 + 2.0 * rng.next_gaussian();
    const double via_cdf = wasserstein1(EmpiricalMeasure1D::from_samples(xs),
                                        EmpiricalMeasure1D::from_samples(ys));
    const double via_sorted = detail::w1_equal_samples(xs, ys);
    CHECK_THAT(via_cdf, WithinRel(via_sorted, 1e-12));
  }
}

TEST_CASE("measure merging is order independent and respects part weights") {
  const EmpiricalMeasure1D a({0.0, 1.0}, {0.5, 0.5});
  const EmpiricalMeasure1D b({1.0, 2.0}, {0.25, 0.75});

  const auto ab = merge_measures({a, b});
  REQUIRE(ab.size() == 3);
  CHECK_THAT(ab.weights()[0], WithinAbs(0.25, 1e-15));
  CHECK_THAT(ab.weights()[1], WithinAbs(0.375, 1e-15));
  CHECK_THAT(ab.weights()[2], WithinAbs(0.375, 1e-15));

  const auto ba = merge_measures({b, a});
  REQUIRE(ba.atoms() == ab.atoms());
  for (std::size_t i = 0; i < ab.size(); ++i)
    CHECK_THAT(ba.weights()[i], WithinAbs(ab.weights()[i], 1e-15));
  CHECK(wasserstein1(ab, ba) <= 1e-15);

  const auto skewed = merge_measures({a, b}, {0.2, 0.8});
  CHECK_THAT(skewed.weights()[0], WithinAbs(0.10, 1e-15));
  CHECK_THAT(skewed.weights()[1], WithinAbs(0.30, 1e-15));
  CHECK_THAT(skewed.weights()[2], WithinAbs(0.60, 1e-15));

  CHECK_THROWS_AS(merge_measures({}), std::invalid_argument);
  CHECK_THROWS_AS(merge_measures({a, b}, {1.0}), std::invalid_argument);
}

TEST_CASE("segment averaging matches the scalar route through evaluation") {
  FeedbackSpec spec;
  spec.f = Nonlinearity::mackey_glass(2.0, 1.0);
  spec.gamma = RateFunction(1.0);
  spec.r = RateFunction(2.0);
  spec.tau = 1.0;
  spec.frame = Frame::log_scale;
  const auto built =
      build_log_coefficients(spec, NoiseCoupling::constant(0.4, CorrectionKind::ito_brownian));

  SolverConfig config;
  config.dt = 0.01;
  config.horizon = 12.0;
  const auto driver = sample_levy(RegulatedLevySpec::brownian(1.0), 12.0, 0.01, 2024, 0);
  const auto traj = integrate_sdde(built.coeffs, constant_segment(1.0, 0.0), driver, config);
  REQUIRE_FALSE(traj.explosion_time.has_value());

  const auto scalar = time_average_distribution(traj, 2.0, 12.0, 7);
  const auto segmented = segment_time_average(traj, 1.0, 2.0, 12.0, 7);
  CHECK(segmented.tau() == 1.0);
  CHECK(segmented.size() >= 100);

  const auto pushed = segmented.evaluation_pushforward();
  REQUIRE(pushed.atoms() == scalar.atoms());
  REQUIRE(pushed.weights() == scalar.weights());

  CHECK(default_segment_stride(1.0, 0.01) == 1000);
  CHECK(default_segment_stride(0.5, 0.03) == 167);
  CHECK(default_segment_stride(0.01, 1.0) == 1);
  CHECK_THROWS_AS(default_segment_stride(0.0, 0.1), std::invalid_argument);

  CHECK_THROWS_AS(time_average_distribution(traj, -0.1, 5.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(time_average_distribution(traj, 5.0, 5.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(time_average_distribution(traj, 2.0, 5.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(time_average_distribution(traj, 2.0, 14.0, 1), std::out_of_range);
  CHECK_THROWS_AS(segment_time_average(traj, 1.0, 0.5, 5.0, 1), std::invalid_argument);

  const auto boom = explosive_trajectory();
  REQUIRE(boom.explosion_time.has_value());
  CHECK_THROWS_AS(time_average_distribution(boom, 0.2, 1.5, 3), std::runtime_error);
  CHECK_NOTHROW(time_average_distribution(boom, 0.0, 0.5, 3));
}

TEST_CASE("segment measures validate shared tau and weights") {
  std::vector<Segment> segs{constant_segment(1.0, 0.3), constant_segment(1.0, 0.9)};
  CHECK_NOTHROW(EmpiricalSegmentMeasure(segs, {0.5, 0.5}));

  std::vector<Segment> mixed{constant_segment(1.0, 0.3), constant_segment(0.5, 0.9)};
  CHECK_THROWS_AS(EmpiricalSegmentMeasure(mixed, {0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(EmpiricalSegmentMeasure(segs, {0.5}), std::invalid_argument);
  CHECK_THROWS_AS(EmpiricalSegmentMeasure(segs, {0.5, -0.5}), std::invalid_argument);
  CHECK_THROWS_AS(EmpiricalSegmentMeasure(segs, {0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(EmpiricalSegmentMeasure({}, {}), std::invalid_argument);

  const EmpiricalSegmentMeasure m(segs, {1.0, 3.0});
  const auto pushed = m.evaluation_pushforward();
  CHECK(pushed.atoms() == std::vector<double>{0.3, 0.9});
  CHECK_THAT(pushed.weights()[0], WithinAbs(0.25, 1e-15));
  CHECK_THAT(pushed.weights()[1], WithinAbs(0.75, 1e-15));
}

TEST_CASE("boundedness profile counts exceedances with explosions dominating") {
  std::vector<Trajectory> constants;
  for (int i = 0; i < 150; ++i) constants.push_back(constant_trajectory(1.0, i / 50.0, 3.0));

  const std::vector<double> R{0.5, 1.0, 2.0};
  const auto prof = boundedness_profile(constants, BoundednessQuantity::value, R, {1.0, 2.0});
  REQUIRE(prof.exceedance.size() == 2);
  const std::vector<double> expected{124.0 / 150.0, 99.0 / 150.0, 49.0 / 150.0};
  CHECK(prof.exceedance[0] == expected);
  CHECK(prof.exceedance[1] == expected);
  CHECK(prof.max_over_t() == expected);
  CHECK(prof.ensemble_size == 150);

  std::vector<Trajectory> decaying;
  for (int i = 0; i < 120; ++i) {
    const double x0 = 0.2 + 2.8 * double(i) / 119.0;
    decaying.push_back(decay_trajectory(1.0, x0, 1.0, 3.0, 0.01));
  }
  const std::vector<double> levels{0.1, 0.3, 1.0};
  const std::vector<double> probes{1.5, 3.0};
  const auto by_value =
      boundedness_profile(decaying, BoundednessQuantity::value, levels, probes);
  const auto by_segment =
      boundedness_profile(decaying, BoundednessQuantity::segment_sup_norm, levels, probes);
  for (std::size_t ti = 0; ti < probes.size(); ++ti)
    for (std::size_t j = 0; j < levels.size(); ++j) {
      CHECK(by_segment.exceedance[ti][j] >= by_value.exceedance[ti][j]);
      if (j > 0) {
        CHECK(by_value.exceedance[ti][j] <= by_value.exceedance[ti][j - 1]);
        CHECK(by_segment.exceedance[ti][j] <= by_segment.exceedance[ti][j - 1]);
      }
    }

  std::vector<Trajectory> with_blowups;
  for (int i = 0; i < 3; ++i) with_blowups.push_back(explosive_trajectory());
  for (int i = 0; i < 97; ++i) with_blowups.push_back(constant_trajectory(1.0, 0.0, 2.0));
  const auto boom_prof =
      boundedness_profile(with_blowups, BoundednessQuantity::value, {1e6}, {0.5, 1.5});
  CHECK(boom_prof.exceedance[0][0] == 0.0);
  CHECK(boom_prof.exceedance[1][0] == 0.03);

  std::vector<Trajectory> tiny(99, constant_trajectory(1.0, 0.0, 2.0));
  CHECK_THROWS_AS(boundedness_profile(tiny, BoundednessQuantity::value, {1.0}, {1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(boundedness_profile(constants, BoundednessQuantity::value, {}, {1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(boundedness_profile(constants, BoundednessQuantity::value, {2.0, 1.0}, {1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      boundedness_profile(constants, BoundednessQuantity::segment_sup_norm, {1.0}, {0.5}),
      std::invalid_argument);

  auto mixed_tau = constants;
  mixed_tau[7].tau = 2.0;
  CHECK_THROWS_AS(boundedness_profile(mixed_tau, BoundednessQuantity::value, {1.0}, {1.0}),
                  std::invalid_argument);
}

TEST_CASE("tightness diagnostic flags decaying profiles") {
  std::vector<Trajectory> smooth;
  for (int i = 0; i < 120; ++i)
    smooth.push_back(decay_trajectory(0.2, double(i) / 119.0, 1.0, 6.0, 0.01));

  const std::vector<double> R{0.25, 0.5, 1.0};
  const std::vector<double> deltas{0.02, 0.05, 0.1};
  const std::vector<double> probes{3.0, 6.0};
  const auto rep = tightness_diagnostic(smooth, 1.0, R, deltas, probes);

  for (const auto& row : rep.modulus_exceedance)
    for (double p : row) CHECK(p == 0.0);
  CHECK(rep.modulus_decays);
  CHECK(rep.sup_norm_decays);
  CHECK(rep.epsilon == 0.1);
  for (const auto& row : rep.sup_norm.exceedance) CHECK(row.back() == 0.0);

  std::vector<Trajectory> rough;
  for (std::uint64_t i = 0; i < 120; ++i)
    rough.push_back(brownian_trajectory(1.0, 3.0, 0.005, 555, i));
  const auto rough_rep = tightness_diagnostic(rough, 1.0, {2.0, 4.0}, deltas, {3.0});
  CHECK(rough_rep.modulus_exceedance[0].back() >= 0.5);
  for (std::size_t j = 1; j < deltas.size(); ++j)
    CHECK(rough_rep.modulus_exceedance[0][j] >= rough_rep.modulus_exceedance[0][j - 1]);
  CHECK_FALSE(rough_rep.modulus_decays);

  CHECK_THROWS_AS(tightness_diagnostic(smooth, 1.0, R, {0.5, 1.2}, probes),
                  std::invalid_argument);
  CHECK_THROWS_AS(tightness_diagnostic(smooth, 1.0, R, deltas, probes, 0.0),
                  std::invalid_argument);
}

TEST_CASE("mean bound check tracks the exact majorant") {
  CHECK_THAT(discounted_exposure(RateFunction(0.7), 3.0),
             WithinRel((1.0 - std::exp(-2.1)) / 0.7, 1e-14));
  CHECK(discounted_exposure(RateFunction(1.0), 0.0) == 0.0);
  CHECK_THAT(discounted_exposure(RateFunction(1.0), 0.5),
             WithinRel(1.0 - std::exp(-0.5), 1e-14));
  const RateFunction stepped({0.0, 1.0}, {1.0, 2.0});
  const double tail_piece = (1.0 - std::exp(-2.0)) / 2.0;
  const double head_piece = std::exp(-3.0) * (std::exp(1.0) - 1.0);
  CHECK_THAT(discounted_exposure(stepped, 2.0), WithinRel(head_piece + tail_piece, 1e-13));

  for (double x0 : {0.0, 5.0})
    for (double t : {20.0, 25.0, 40.0})
      CHECK_THAT(mean_majorant(RateFunction(1.0), x0, 2.0, 0.5, t), WithinAbs(1.0, 1e-6));

  FeedbackSpec flat;
  flat.f = Nonlinearity::custom([](double) { return 0.5; }, 0.5, 0.5, 0.0);
  flat.gamma = RateFunction(1.0);
  flat.r = RateFunction(2.0);
  flat.tau = 1.0;
  flat.frame = Frame::original;
  const auto built = build_original_coefficients(flat, NoiseCoupling::constant(0.0,
                                                                               CorrectionKind::none));
  SolverConfig config;
  config.dt = 1e-3;
  config.horizon = 45.0;
  std::vector<Trajectory> trio(
      3, integrate_sdde(built.coeffs, constant_segment(1.0, 0.0), null_noise(45.0), config));

  const std::vector<double> probes{0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 25.0, 40.0};
  const auto strict = mean_bound_check(trio, flat, probes);
  CHECK(strict.asymptotic_bound == 1.0);
  CHECK(strict.tail_start == 20.0);
  CHECK(strict.negative_paths == 0);
  CHECK_FALSE(strict.mean_below_xi);  // Euler sits above the exact curve.
  CHECK(strict.tail_below_asymptote);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    // Past t ~ 25 both curves saturate at the asymptote to within one ulp, so
    // the strict ordering is only checkable while the gap dominates rounding.
    if (probes[i] <= 20.0) CHECK(strict.means[i] > strict.xi[i]);
    CHECK(strict.means[i] < strict.xi[i] + 5e-3);
  }

  const auto padded = mean_bound_check(trio, flat, probes, 5e-3);
  CHECK(padded.mean_below_xi);
  CHECK(padded.tail_below_asymptote);

  FeedbackSpec nich;
  nich.f = Nonlinearity::nicholson(1.0);
  nich.gamma = RateFunction(1.0);
  nich.r = RateFunction(4.0);
  nich.tau = 1.0;
  nich.frame = Frame::original;
  const auto nich_built =
      build_original_coefficients(nich, NoiseCoupling{
                                            [](const Segment& seg, double) {
                                              return 0.05 * seg.back();
                                            },
                                            0.05,
                                            CorrectionKind::none,
                                        });
  SolverConfig ncfg;
  ncfg.dt = 5e-3;
  ncfg.horizon = 25.0;
  std::vector<Trajectory> flock;
  for (std::uint64_t p = 0; p < 150; ++p) {
    const auto driver = sample_levy(RegulatedLevySpec::brownian(1.0), 25.0, 5e-3, 8088, p);
    flock.push_back(integrate_sdde(nich_built.coeffs, constant_segment(1.0, 1.0), driver, ncfg));
  }
  const auto stoch = mean_bound_check(flock, nich, {5.0, 15.0, 24.0}, 0.01);
  CHECK(stoch.mean_below_xi);
  CHECK(stoch.tail_below_asymptote);
  CHECK(stoch.negative_paths == 0);
  CHECK_THAT(stoch.asymptotic_bound, WithinRel(4.0 / std::exp(1.0), 1e-12));

  FeedbackSpec logframe = flat;
  logframe.frame = Frame::log_scale;
  CHECK_THROWS_AS(mean_bound_check(trio, logframe, probes), std::invalid_argument);
  CHECK_THROWS_AS(mean_bound_check(trio, flat, {}), std::invalid_argument);
  CHECK_THROWS_AS(mean_bound_check({}, flat, probes), std::invalid_argument);
  std::vector<Trajectory> doomed{explosive_trajectory()};
  CHECK_THROWS_AS(mean_bound_check(doomed, flat, {1.5}), std::runtime_error);
}

TEST_CASE("extinction probability counts windows below threshold") {
  std::vector<Trajectory> zeros(100, constant_trajectory(1.0, 0.0, 2.0));
  CHECK(extinction_probability(zeros, 1e-3, 1.5) == 1.0);

  std::vector<Trajectory> ones(100, constant_trajectory(1.0, 1.0, 2.0));
  CHECK(extinction_probability(ones, 1e-3, 1.5) == 0.0);
  CHECK(extinction_probability(ones, 1e9, 1.5) == 1.0);

  std::vector<Trajectory> mixed;
  for (int i = 0; i < 2; ++i) mixed.push_back(explosive_trajectory());
  for (int i = 0; i < 98; ++i) mixed.push_back(constant_trajectory(1.0, 0.0, 2.0));
  CHECK(extinction_probability(mixed, 1e-3, 1.5) == 0.98);

  // A pre-jump spike strictly inside the probe window blocks extinction even
  // when every grid value is below the threshold.
  Trajectory spiked;
  spiked.tau = 1.0;
  spiked.path = CadlagPath({-1.0, 0.0, 1.2, 2.0}, {1e-4, 1e-4, 5e-5, 5e-5},
                           {JumpEvent{2, 2.0}}, Interpolation::step);
  Trajectory gliding;
  gliding.tau = 1.0;
  gliding.path =
      CadlagPath({-1.0, 0.0, 1.2, 2.0}, {1e-4, 1e-4, 5e-5, 5e-5}, {}, Interpolation::step);
  CHECK(extinction_probability(std::vector<Trajectory>(100, spiked), 1e-2, 2.0) == 0.0);
  CHECK(extinction_probability(std::vector<Trajectory>(100, gliding), 1e-2, 2.0) == 1.0);
  // The same spike at the window's left edge is a left limit taken outside
  // the window and must not count.
  Trajectory edge = spiked;
  edge.path = CadlagPath({-1.0, 0.0, 1.0, 2.0}, {1e-4, 1e-4, 5e-5, 5e-5}, {JumpEvent{2, 2.0}},
                         Interpolation::step);
  CHECK(extinction_probability(std::vector<Trajectory>(100, edge), 1e-2, 2.0) == 1.0);

  CHECK_THROWS_AS(extinction_probability({}, 1e-3, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(extinction_probability(ones, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("stationarity check separates stationary from trending series") {
  const double dt = 0.05;
  std::vector<double> ts;
  for (double t = 0.0; t <= 130.0 + 1e-12; t += dt) ts.push_back(t);

  CounterRng noise(9001, 0, StreamRole::gaussian);
  std::vector<double> iid(ts.size());
  for (auto& v : iid) v = noise.next_gaussian();
  Trajectory stationary;
  stationary.tau = 1.0;
  stationary.path = CadlagPath(ts, iid, {}, Interpolation::linear);

  const auto good = stationarity_check(stationary, {10.0, 70.0}, {70.0, 130.0}, 1, 424242);
  REQUIRE(good.pass);
  CHECK(good.w1_distance < 0.2);
  CHECK(good.n_window1 == good.n_window2);
  CHECK(good.n_window1 >= 1200);
  CHECK(good.tol > 0.0);

  std::vector<double> ramp(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) ramp[i] = 0.1 * ts[i];
  Trajectory trending;
  trending.tau = 1.0;
  trending.path = CadlagPath(ts, ramp, {}, Interpolation::linear);
  const auto bad = stationarity_check(trending, {10.0, 70.0}, {70.0, 130.0}, 1, 424242);
  REQUIRE_FALSE(bad.pass);
  CHECK_THAT(bad.w1_distance, WithinAbs(6.0, 0.05));
  CHECK(bad.w1_distance > bad.tol);

  Trajectory flatline = constant_trajectory(1.0, 0.4, 130.0);
  {
    std::vector<double> ct = ts;
    std::vector<double> cv(ts.size(), 0.4);
    flatline.path = CadlagPath(ct, cv, {}, Interpolation::linear);
  }
  const auto still = stationarity_check(flatline, {10.0, 70.0}, {70.0, 130.0}, 1, 17);
  CHECK(still.w1_distance == 0.0);
  CHECK(still.pass);

  const auto again = stationarity_check(stationary, {10.0, 70.0}, {70.0, 130.0}, 1, 424242);
  CHECK(again.w1_distance == good.w1_distance);
  CHECK(again.tol == good.tol);
  const auto reseeded = stationarity_check(stationary, {10.0, 70.0}, {70.0, 130.0}, 1, 99);
  CHECK(reseeded.bootstrap_sd != good.bootstrap_sd);

  CHECK_THROWS_AS(stationarity_check(stationary, {10.0, 70.0}, {60.0, 120.0}, 1, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(stationarity_check(stationary, {10.0, 59.9}, {70.0, 130.0}, 1, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(stationarity_check(stationary, {10.0, 70.0}, {70.0, 130.0}, 1, 1, 1),
                  std::invalid_argument);
  CHECK_NOTHROW(stationarity_check(stationary, {10.0, 70.0}, {70.0, 130.0}, 1, 1));

  Trajectory exploded = stationary;
  exploded.explosion_time = 50.0;
  CHECK_THROWS_AS(stationarity_check(exploded, {10.0, 70.0}, {70.0, 130.0}, 1, 1),
                  std::runtime_error);
}
