#include "qmem/memory_sim.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "qmem/analysis.hpp"
#include "qmem/error.hpp"
#include "qmem/io.hpp"
#include "qmem/polarimetry.hpp"
#include "sim_configs.hpp"

namespace qmem {
namespace {

constexpr double kPi = std::numbers::pi;
const QubitAngles kH = angles_of(CanonicalState::H);
const QubitAngles kD = angles_of(CanonicalState::D);

TEST(MemoryConfig, DefaultsAreValid) { EXPECT_NO_THROW(MemoryConfig{}.validate()); }

TEST(MemoryConfig, RejectsBrokenInvariants) {
  const auto broken = [](auto mutate) {
    MemoryConfig c;
    mutate(c);
    return c;
  };
  EXPECT_THROW(broken([](MemoryConfig& c) { c.eta_h = -0.1; }).validate(), ConfigError);
  EXPECT_THROW(broken([](MemoryConfig& c) { c.bg_rate = -1e-3; }).validate(), ConfigError);
  EXPECT_THROW(broken([](MemoryConfig& c) { c.roi_end = 3.6; }).validate(), ConfigError); // unequal windows
  EXPECT_THROW(broken([](MemoryConfig& c) { c.bg_window_end = 9.0; c.bg_window_start = 8.0; }).validate(),
               ConfigError);
  EXPECT_THROW(broken([](MemoryConfig& c) { c.roi_start = 2.42; c.roi_end = 3.42; }).validate(),
               ConfigError); // off the bin grid
  EXPECT_THROW(broken([](MemoryConfig& c) { c.roi_start = 1.0; c.roi_end = 2.0; }).validate(),
               ConfigError); // no room for the input pulse
  EXPECT_THROW(broken([](MemoryConfig& c) { c.tau_coherence = 0.0; }).validate(), ConfigError);
}

TEST(RetrievedStokes, BalancedRailsKeepInputState) {
  MemoryConfig c;
  for (auto s : kCanonicalStates) {
    const auto in = stokes_from_qubit(angles_of(s));
    const auto out = retrieved_stokes(c, angles_of(s));
    EXPECT_NEAR(out.s1, in.s1, 1e-12);
    EXPECT_NEAR(out.s2, in.s2, 1e-12);
    EXPECT_NEAR(out.s3, in.s3, 1e-12);
  }
}

TEST(RetrievedStokes, DephasingShortensCoherence) {
  MemoryConfig c;
  c.dephasing = 0.25;
  const auto out = retrieved_stokes(c, kD);
  EXPECT_NEAR(out.s2, 0.75, 1e-12);
  EXPECT_NEAR(degree_of_polarization(out), 0.75, 1e-12);
}

TEST(RetrievedStokes, UnequalRailsTiltTowardStrongerRail) {
  MemoryConfig c;
  c.eta_h = 0.079;
  c.eta_v = 0.053;
  const auto out = retrieved_stokes(c, kD);
  EXPECT_GT(out.s1, 0.0);
  EXPECT_NEAR(out.polarized_intensity(), 1.0, 1e-12); // still pure
}

TEST(SimulateHistogram, DarkConfigGivesEmptyHistogram) {
  const auto h = simulate_histogram(testing::dark_config(), kH, Analyzer::none(), 10000, 1);
  EXPECT_EQ(h.total(), 0U);
  EXPECT_EQ(h.counts.size(), 160U);
  EXPECT_EQ(h.n_trials, 10000U);
}

TEST(SimulateHistogram, OperatingPointMeansRecoverSbr) {
  const auto config = testing::six_state_config();
  const auto h = simulate_histogram(config, kH, Analyzer::none(), 1'000'000, 20141016);
  const auto est = sbr(h, config.roi(), config.background_window());
  EXPECT_NEAR(est.value, 1.35, 0.05);
  EXPECT_NEAR(est.value, 1.35, 3 * est.error);
}

TEST(SimulateHistogram, RoiMeanMatchesClosedForm) {
  auto config = testing::six_state_config();
  config.tech_rate = 0.002;
  config.retrieval_shape.kind = PulseShape::FlatTop;
  constexpr std::uint64_t kTrials = 400'000;
  const auto h = simulate_histogram(config, kD, Analyzer::none(), kTrials, 5);
  const double expected = (retrieved_signal_mean(config, kD) + roi_background_mean(config)) * kTrials;
  EXPECT_NEAR(static_cast<double>(roi_counts(h, config.roi())), expected, 3 * std::sqrt(expected));
  const double bg_expected = roi_background_mean(config) * kTrials;
  EXPECT_NEAR(static_cast<double>(roi_counts(h, config.background_window())), bg_expected,
              3 * std::sqrt(bg_expected));
}

TEST(SimulateHistogram, SignalStaysInsideRoi) {
  auto config = testing::six_state_config();
  config.bg_rate = 0.0;
  config.chain = 1.0;
  const auto h = simulate_histogram(config, kH, Analyzer::none(), 100000, 3);
  EXPECT_EQ(roi_counts(h, config.roi()), h.total());
  // Exponential profile: earlier bins hold more counts.
  EXPECT_GT(h.counts[48], h.counts[60]);
}

TEST(SimulateHistogram, AnalyzerThinsByMalusProbability) {
  auto config = testing::six_state_config();
  config.chain = 1.0;
  config.bg_rate = 0.0;
  constexpr std::uint64_t kTrials = 200'000;
  // |H> behind a horizontal polarizer passes, |V> is blocked.
  const auto h = simulate_histogram(config, kH, Analyzer::horizontal(), kTrials, 9);
  const auto v = simulate_histogram(config, angles_of(CanonicalState::V), Analyzer::horizontal(), kTrials, 9);
  const double mean = retrieved_signal_mean(config, kH) * kTrials;
  EXPECT_NEAR(static_cast<double>(h.total()), mean, 3 * std::sqrt(mean));
  EXPECT_EQ(v.total(), 0U);
}

TEST(SimulateHistogram, DeterministicAcrossWorkerCounts) {
  const auto config = testing::six_state_config();
  const auto a = simulate_histogram(config, kD, Analyzer::qwp(0.3), 200'003, 77, 1);
  const auto b = simulate_histogram(config, kD, Analyzer::qwp(0.3), 200'003, 77, 8);
  EXPECT_EQ(a.counts, b.counts);
  const auto c = simulate_histogram(config, kD, Analyzer::qwp(0.3), 200'003, 78, 1);
  EXPECT_NE(a.counts, c.counts);
}

// Two ensembles each emitting q/2 against a single Poisson source of mean q
// drawn with an unrelated generator.
TEST(SimulateHistogram, TwoRailBackgroundMatchesSingleSource) {
  auto config = testing::dark_config();
  config.bg_rate = 0.05;
  constexpr std::uint64_t kTrials = 400'000;
  const auto h = simulate_histogram(config, kH, Analyzer::none(), kTrials, 4);
  const auto two_rail = static_cast<double>(roi_counts(h, config.roi()));

  std::mt19937_64 gen(123);
  std::poisson_distribution<int> single(config.bg_rate);
  double one_source = 0.0;
  for (std::uint64_t t = 0; t < kTrials; ++t) {
    one_source += single(gen);
  }
  EXPECT_LT(std::abs(two_rail - one_source), 3 * std::sqrt(two_rail + one_source));
}

TEST(SimulateHistogram, ZeroTrialsRejected) {
  EXPECT_THROW((void)simulate_histogram(MemoryConfig{}, kH, Analyzer::none(), 0, 1), InvalidArgument);
}

TEST(SimulateReference, TotalMatchesPoissonMeanAndStaysInInputWindow) {
  auto config = testing::six_state_config();
  constexpr std::uint64_t kTrials = 300'000;
  const auto h = simulate_reference(config, kTrials, 12);
  const double mean = config.chain * config.p_in * kTrials;
  EXPECT_NEAR(static_cast<double>(h.total()), mean, 3 * std::sqrt(mean));
  const auto w = config.input_window();
  EXPECT_EQ(roi_counts(h, w), h.total());
  EXPECT_EQ(h.counts, simulate_reference(config, kTrials, 12, 4).counts);
}

TEST(PolarimetrySweep, BackgroundOnlyIsFlat) {
  auto config = testing::dark_config();
  config.bg_rate = 0.02;
  const auto angles = uniform_qwp_angles(16);
  const auto sweep = simulate_polarimetry_sweep(config, kD, angles, 100'000, 3);
  const double level = 0.5 * config.bg_rate;
  double chi2 = 0.0;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    chi2 += std::pow((sweep.y[i] - level) / sweep.y_err[i], 2);
  }
  // 16 degrees of freedom; 99.9th percentile is ~39.
  EXPECT_LT(chi2, 39.3);
  const auto fit = fit_stokes(io::samples_from_sweep(sweep));
  // Ensemble spread of each component is about 0.022 at this count level.
  EXPECT_LT(degree_of_polarization(fit.stokes), 0.1);
}

TEST(PolarimetrySweep, ExpectationReproducesPolarimeterCurve) {
  MemoryConfig config;
  config.chain = 0.5;
  const auto angles = uniform_qwp_angles(20);
  const auto r = Rotation3::about_axis({0.3, -1, 0.2}, 0.7);
  const auto sweep = expected_polarimetry_sweep(config, angles_of(CanonicalState::R), angles,
                                                SweepStage::Transmitted, r);
  const auto target = apply_rotation(r, stokes_from_qubit(angles_of(CanonicalState::R)));
  for (std::size_t i = 0; i < angles.size(); ++i) {
    EXPECT_NEAR(sweep.y[i], config.chain * config.p_in * qwp_polarimeter_intensity(target, angles[i]), 1e-15);
  }
  const auto fit = fit_stokes(io::samples_from_sweep(sweep));
  EXPECT_NEAR(fit.stokes.s1, target.s1, 1e-9);
  EXPECT_NEAR(fit.stokes.s2, target.s2, 1e-9);
  EXPECT_NEAR(fit.stokes.s3, target.s3, 1e-9);
}

TEST(PolarimetrySweep, RetrievedDiagonalShortenedByBackground) {
  auto config = testing::six_state_config();
  config.chain = 1.0; // S = 0.088, B = 0.0041
  const auto angles = uniform_qwp_angles(16);
  const auto sweep = simulate_polarimetry_sweep(config, kD, angles, 100'000, 17);
  const auto fit = fit_stokes(io::samples_from_sweep(sweep));
  const double s = retrieved_signal_mean(config, kD);
  const double b = roi_background_mean(config);
  EXPECT_GT(fit.stokes.s2, 0.9);
  EXPECT_NEAR(fit.stokes.s1, 0.0, 3 * fit.errors[0]);
  EXPECT_NEAR(fit.stokes.s3, 0.0, 3 * fit.errors[2]);
  EXPECT_NEAR(fit.stokes.s2, s / (s + b), 3 * fit.errors[1]);
}

TEST(PolarimetrySweep, NeedsEightAngles) {
  const auto angles = uniform_qwp_angles(6);
  EXPECT_THROW((void)simulate_polarimetry_sweep(MemoryConfig{}, kD, angles, 10, 1), InvalidArgument);
}

TEST(DecaySeries, StartsAtConfiguredEfficiencyAndDecays) {
  auto config = testing::six_state_config();
  config.chain = 1.0;
  const std::vector<double> times{0.0, 10.0, 20.0, 40.0};
  const auto series = simulate_decay_series(config, times, 200'000, 8);
  EXPECT_NEAR(series.y[0], 0.055, 3 * series.y_err[0]);
  for (std::size_t i = 1; i < series.size(); ++i) {
    EXPECT_LT(series.y[i], series.y[i - 1]);
    EXPECT_NEAR(series.y[i], 0.055 * std::exp(-times[i] / 19.3), 3 * series.y_err[i]);
  }
  EXPECT_EQ(series.y, simulate_decay_series(config, times, 200'000, 8, 3).y);
}

TEST(DecaySeries, RejectsNegativeOrUnsortedTimes) {
  const std::vector<double> bad{0.0, -1.0};
  EXPECT_THROW((void)simulate_decay_series(MemoryConfig{}, bad, 10, 1), InvalidArgument);
}

TEST(BackgroundSweep, MeansFollowLinearPlusSqrtLaw) {
  auto config = testing::dark_config();
  config.tech_coeff = 1e-4;
  config.fwm_coeff = 2e-3;
  const std::vector<double> powers{0.0, 4.0, 16.0, 64.0};
  constexpr std::uint64_t kTrials = 200'000;
  const auto sweep = simulate_background_sweep(config, powers, kTrials, 6);
  EXPECT_EQ(sweep.background.y[0], 0.0);
  EXPECT_EQ(sweep.technical.y[0], 0.0);
  for (std::size_t i = 1; i < powers.size(); ++i) {
    const double tech = 1e-4 * powers[i];
    const double bg = tech + 2e-3 * std::sqrt(powers[i]);
    EXPECT_NEAR(sweep.background.y[i], bg, 3 * std::sqrt(bg / kTrials));
    EXPECT_NEAR(sweep.technical.y[i], tech, 3 * std::sqrt(tech / kTrials));
  }
}

} // namespace
} // namespace qmem
