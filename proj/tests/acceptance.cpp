// Acceptance gate. Prints one PASS/FAIL line per criterion and exits nonzero
// when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qmem/analysis.hpp"
#include "qmem/experiment.hpp"
#include "qmem/io.hpp"
#include "qmem/memory_sim.hpp"
#include "qmem/noise_model.hpp"
#include "qmem/polarimetry.hpp"
#include "qmem/random.hpp"
#include "qmem/report.hpp"
#include "qmem/rotation.hpp"
#include "qmem/stokes.hpp"
#include "qmem_cli/cli.hpp"
#include "sim_configs.hpp"

namespace {

using namespace qmem;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s; // 0: no runtime budget
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1. Detection model against the Monte Carlo estimator on a 5x5x5 grid.
Outcome model_vs_oracle() {
  constexpr std::uint64_t kTrials = 10'000'000;
  const std::vector<double> axis{0.0, 0.5, 1.0, 1.5, 2.0};
  double worst = 0.0;
  int compared = 0;
  int failed = 0;
  std::uint64_t tag = 0;
  for (double eta_frac : axis) {
    for (double p : axis) {
      for (double q : axis) {
        NoiseModelParams params;
        params.eta = eta_frac / 2.0; // eta in [0, 1], eta * p in [0, 2]
        params.p = p;
        params.q = q;
        params.n_max = 40;
        const auto exact = detection_probs(params);
        const auto mc = mc_detection_oracle(params, kTrials, derive_seed(20141016, tag++));
        for (auto [e, m] : {std::pair{exact.p_signal, mc.p_signal}, std::pair{exact.p_background, mc.p_background}}) {
          const double se = std::sqrt(e * (1.0 - e) / static_cast<double>(kTrials));
          ++compared;
          if (se == 0.0) {
            failed += (std::abs(e - m) > 1e-15);
            continue;
          }
          const double z = std::abs(e - m) / se;
          worst = std::max(worst, z);
          failed += (z > 3.0);
        }
      }
    }
  }
  return {failed == 0, fmt("%d/%d comparisons beyond 3 SE, worst %.2f SE (1e7 trials per point)", failed,
                           compared, worst)};
}

// 2. Fidelity formula on its anchor values.
Outcome fidelity_suite() {
  const StokesVector d = stokes_from_qubit(angles_of(CanonicalState::D));
  const double f_same = fidelity(d, d);
  const double f_mixed = fidelity(d, StokesVector{1, 0, 0, 0});
  const double f_short = fidelity(d, StokesVector{1, 0, 0.43, 0});
  const bool ok = std::abs(f_same - 1.0) <= 1e-12 && std::abs(f_mixed - 0.5) <= 1e-12 &&
                  std::abs(f_short - 0.715) <= 1e-12 && f_short > kClassicalFidelityLimit;
  return {ok, fmt("F(same)=%.15f F(mixed)=%.15f F(0.43)=%.15f vs limit %.2f (tol 1e-12)", f_same, f_mixed,
                  f_short, kClassicalFidelityLimit)};
}

// 3. Six-state storage run at the averaged operating point.
Outcome table_replication() {
  const MemoryConfig config = testing::six_state_config();
  ExperimentPlan plan;
  plan.trials = 1'000'000;
  plan.polarimetry_trials = 1'000'000 / plan.qwp_angles.size();
  plan.optics = Rotation3::about_axis({0.3, -0.2, 1.0}, 0.4);
  const auto data = simulate_experiment(config, plan, 1016);
  const auto report = build_report(measure(data, config.roi(), config.background_window()));
  const double sbr = report.sbr.mean;
  const double target = (sbr + 0.5) / (sbr + 1.0);
  const bool ok = std::abs(sbr - 1.35) <= 0.09 && std::abs(report.fidelity.mean - target) <= 0.03;
  return {ok, fmt("SBR %.3f +- %.3f (want 1.35 +- 0.09); F %.4f +- %.4f vs (SBR+1/2)/(SBR+1) = %.4f (tol 0.03); "
                  "eta %.4f +- %.4f",
                  sbr, report.sbr.sem, report.fidelity.mean, report.fidelity.sem, target,
                  report.efficiency.mean, report.efficiency.sem)};
}

// 4. Shape of the fidelity-SBR curve.
Outcome curve_properties() {
  std::vector<double> grid;
  for (int i = 1; i <= 200; ++i) {
    grid.push_back(0.05 * i);
  }
  const auto curve = fidelity_sbr_curve(0.055, 0.005, 20, grid);
  bool monotone = true;
  bool bounded = true;
  double worst_closed_form = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const auto& c = curve[i];
    bounded = bounded && c.fidelity >= 0.5 && c.fidelity <= 1.0;
    if (i > 0) {
      monotone = monotone && c.sbr >= curve[i - 1].sbr && c.fidelity >= curve[i - 1].fidelity;
    }
    worst_closed_form = std::max(worst_closed_form, std::abs(c.fidelity - (c.sbr + 0.5) / (c.sbr + 1.0)));
  }
  const double f_clean = fidelity_sbr_curve(0.055, 1e-12, 20, grid)[0].fidelity;
  const bool ok = monotone && bounded && f_clean > 1.0 - 1e-9 && worst_closed_form <= 1e-3;
  return {ok, fmt("monotone=%d bounded=%d F(q->0)=%.12f max|F-(R+1/2)/(R+1)|=%.2e (tol 1e-3)", monotone, bounded,
                  f_clean, worst_closed_form)};
}

// 5. Storage lifetime fit.
Outcome coherence_fit() {
  MemoryConfig config = testing::six_state_config();
  config.p_in = 6.0;
  const std::vector<double> times{0, 10, 20, 30, 40, 50, 60, 70};
  const auto series = simulate_decay_series(config, times, 1'000'000, 193);
  const auto fit = fit_exponential_decay(series);
  const double tau = fit.param("tau");
  const double rel = std::abs(tau - 19.3) / 19.3;
  return {rel <= 0.02, fmt("tau %.3f +- %.3f us vs 19.3 (deviation %.2f%%, tol 2%%)", tau, fit.error("tau"),
                           100 * rel)};
}

// 6. Square-root scaling of the control-induced background.
Outcome fwm_scaling() {
  MemoryConfig config = testing::dark_config();
  config.tech_coeff = 1e-4;
  config.fwm_coeff = 2e-3;
  const std::vector<double> powers{0, 1, 2, 4, 8, 16, 32};
  const auto sweep = simulate_background_sweep(config, powers, 1'000'000, 44);
  const auto fit = fit_sqrt_background(sweep.background, sweep.technical);
  const double c = fit.param("c");
  return {std::abs(c - 0.5) <= 0.02, fmt("c = %.4f +- %.4f (want 0.50 +- 0.02)", c, fit.error("c"))};
}

StokesVector random_state(std::mt19937_64& gen, bool pure) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::Vector3d v(n(gen), n(gen), n(gen));
  v.normalize();
  const double len = pure ? 1.0 : std::cbrt(u(gen));
  return {1.0, len * v.x(), len * v.y(), len * v.z()};
}

// 7. Polarimeter inversion, noiseless and with shot noise.
Outcome polarimetry_round_trip() {
  std::mt19937_64 gen(7);
  const auto angles = uniform_qwp_angles(16);
  double worst_exact = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto s = random_state(gen, false);
    std::vector<PolarimetrySample> samples;
    for (double a : angles) {
      samples.push_back({a, qwp_polarimeter_intensity(s, a)});
    }
    const auto fit = fit_stokes(samples);
    for (int k = 1; k < 4; ++k) {
      worst_exact = std::max(worst_exact, std::abs(fit.stokes.as_array()[k] - s.as_array()[k]));
    }
  }

  constexpr double kPulses = 1e4;
  int outside = 0;
  double worst_ratio = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto s = random_state(gen, false);
    std::vector<PolarimetrySample> samples;
    for (double a : angles) {
      std::poisson_distribution<long> counts(kPulses * qwp_polarimeter_intensity(s, a));
      samples.push_back({a, static_cast<double>(counts(gen)) / kPulses});
    }
    const auto fit = fit_stokes(samples);
    const double dist = std::sqrt(std::pow(fit.stokes.s1 - s.s1, 2) + std::pow(fit.stokes.s2 - s.s2, 2) +
                                  std::pow(fit.stokes.s3 - s.s3, 2));
    const double se = std::sqrt(std::pow(fit.errors[0], 2) + std::pow(fit.errors[1], 2) + std::pow(fit.errors[2], 2));
    worst_ratio = std::max(worst_ratio, dist / se);
    outside += dist > 3.0 * se;
  }
  const bool ok = worst_exact <= 1e-9 && outside == 0;
  return {ok, fmt("noiseless max error %.2e (tol 1e-9); noisy: %d/100 outside 3 SE, worst %.2f SE", worst_exact,
                  outside, worst_ratio)};
}

// 8. Rotation recovery.
Outcome rotation_alignment() {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, std::numbers::pi);
  std::vector<StokesVector> inputs;
  for (auto s : kCanonicalStates) {
    inputs.push_back(stokes_from_qubit(angles_of(s)));
  }
  double worst_exact = 0.0;
  double fid_sum = 0.0;
  int fid_count = 0;
  for (int i = 0; i < 100; ++i) {
    const auto r = Rotation3::about_axis({n(gen), n(gen), n(gen)}, u(gen));
    std::vector<StokesVector> targets;
    std::vector<StokesVector> noisy;
    for (const auto& s : inputs) {
      targets.push_back(apply_rotation(r, s));
      const auto t = targets.back();
      Eigen::Vector3d v = Eigen::Vector3d(t.s1, t.s2, t.s3) + 0.01 * Eigen::Vector3d(n(gen), n(gen), n(gen));
      v.normalize();
      noisy.push_back({1.0, v.x(), v.y(), v.z()});
    }
    worst_exact = std::max(worst_exact, (fit_rotation(inputs, targets).matrix() - r.matrix()).cwiseAbs().maxCoeff());
    const auto fitted = fit_rotation(inputs, noisy);
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      fid_sum += fidelity(apply_rotation(fitted, inputs[k]), noisy[k]);
      ++fid_count;
    }
  }
  const double mean_fid = fid_sum / fid_count;
  return {worst_exact <= 1e-9 && mean_fid > 0.99,
          fmt("noiseless max matrix error %.2e (tol 1e-9); 1%% perturbation mean fidelity %.5f (want > 0.99)",
              worst_exact, mean_fid)};
}

std::vector<std::pair<std::string, std::string>> data_files(const fs::path& root) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().string().find("manifest") == std::string::npos) {
      out.emplace_back(fs::relative(e.path(), root).string(), io::read_file(e.path()));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// 9. Byte-identical outputs across reruns and worker counts.
Outcome determinism() {
  const fs::path base = fs::temp_directory_path() / "qmem_acceptance_determinism";
  fs::remove_all(base);
  const std::string config = std::string(QMEM_TEST_DATA_DIR) + "/six_state_config.json";
  const std::vector<std::vector<std::string>> commands{
      {"simulate", "--kind", "storage", "--trials", "200000"},
      {"simulate", "--kind", "reference", "--trials", "200000"},
      {"simulate", "--kind", "polarimetry", "--trials", "20000"},
      {"simulate", "--kind", "decay", "--trials", "100000"},
      {"simulate", "--kind", "background", "--trials", "100000"},
      {"simulate", "--kind", "experiment", "--trials", "100000", "--polarimetry-trials", "10000"},
  };
  const std::vector<std::pair<std::string, std::string>> runs{{"a", "1"}, {"b", "8"}, {"c", "8"}, {"d", "3"}};
  int mismatches = 0;
  int failures = 0;
  std::size_t files = 0;
  for (std::size_t c = 0; c < commands.size(); ++c) {
    std::vector<std::vector<std::pair<std::string, std::string>>> results;
    for (const auto& [name, workers] : runs) {
      const fs::path dir = base / (std::to_string(c) + name);
      std::vector<std::string> args{"--seed", "99", "--config", config, "--workers", workers, "--out",
                                    (dir / "out").string()};
      args.insert(args.end(), commands[c].begin(), commands[c].end());
      std::ostringstream out;
      std::ostringstream err;
      failures += cli::run(args, out, err) != cli::kExitOk;
      results.push_back(data_files(dir));
    }
    files += results[0].size();
    for (std::size_t r = 1; r < results.size(); ++r) {
      mismatches += results[r] != results[0];
    }
  }
  fs::remove_all(base);
  return {mismatches == 0 && failures == 0 && files > 0,
          fmt("%zu output files from %zu stochastic commands x 4 runs (workers 1, 8, 8, 3): %d mismatches, %d "
              "failed runs",
              files, commands.size(), mismatches, failures)};
}

} // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "model vs Monte Carlo oracle", 60, model_vs_oracle},
      {2, "fidelity formula", 0, fidelity_suite},
      {3, "six-state storage replication", 300, table_replication},
      {4, "fidelity-SBR curve", 0, curve_properties},
      {5, "coherence time fit", 120, coherence_fit},
      {6, "background power scaling", 0, fwm_scaling},
      {7, "polarimetry round trip", 0, polarimetry_round_trip},
      {8, "rotation alignment", 0, rotation_alignment},
      {9, "determinism", 0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = c.budget_s == 0 || secs < c.budget_s;
    const bool pass = o.pass && in_budget;
    failed += !pass;
    std::string timing = fmt("%.1f s", secs);
    if (c.budget_s > 0) {
      timing += fmt(" (budget %.0f s)", c.budget_s);
    }
    std::printf("[%s] %d. %s: %s; %s\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), timing.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
