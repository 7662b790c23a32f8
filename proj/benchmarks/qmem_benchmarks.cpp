#include <cmath>
#include <vector>

#include <benchmark/benchmark.h>

#include "qmem/analysis.hpp"
#include "qmem/memory_sim.hpp"
#include "qmem/noise_model.hpp"
#include "qmem/polarimetry.hpp"
#include "qmem/rotation.hpp"

namespace {

using namespace qmem;

void BM_DetectionProbs(benchmark::State& state) {
  NoiseModelParams params;
  params.n_max = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(detection_probs(params));
  }
}
BENCHMARK(BM_DetectionProbs)->Arg(20)->Arg(40)->Arg(80);

void BM_FidelitySbrCurve(benchmark::State& state) {
  std::vector<double> grid;
  for (int i = 1; i <= 100; ++i) {
    grid.push_back(0.1 * i);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(fidelity_sbr_curve(0.055, 0.005, 20, grid));
  }
}
BENCHMARK(BM_FidelitySbrCurve);

void BM_McDetectionOracle(benchmark::State& state) {
  NoiseModelParams params;
  params.p = 10.0;
  params.q = 0.5;
  const auto trials = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(mc_detection_oracle(params, trials, 1, 1));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * trials));
}
BENCHMARK(BM_McDetectionOracle)->Arg(1'000'000)->Unit(benchmark::kMillisecond);

void BM_SimulateHistogram(benchmark::State& state) {
  MemoryConfig config;
  config.chain = 0.0625;
  const auto trials = static_cast<std::uint64_t>(state.range(0));
  const auto workers = static_cast<unsigned>(state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        simulate_histogram(config, angles_of(CanonicalState::D), Analyzer::none(), trials, 7, workers));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * trials));
}
BENCHMARK(BM_SimulateHistogram)->Args({1'000'000, 1})->Args({1'000'000, 0})->Unit(benchmark::kMillisecond);

void BM_FitStokes(benchmark::State& state) {
  const StokesVector s{1.0, 0.3, 0.5, -0.6};
  std::vector<PolarimetrySample> samples;
  for (double a : uniform_qwp_angles(static_cast<std::size_t>(state.range(0)))) {
    samples.push_back({a, qwp_polarimeter_intensity(s, a)});
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_stokes(samples));
  }
}
BENCHMARK(BM_FitStokes)->Arg(16)->Arg(64);

void BM_FitRotation(benchmark::State& state) {
  const auto r = Rotation3::about_axis({1, 2, 3}, 0.7);
  std::vector<StokesVector> in;
  std::vector<StokesVector> out;
  for (auto c : kCanonicalStates) {
    in.push_back(stokes_from_qubit(angles_of(c)));
    out.push_back(apply_rotation(r, in.back()));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_rotation(in, out));
  }
}
BENCHMARK(BM_FitRotation);

void BM_FitExponentialDecay(benchmark::State& state) {
  SweepSeries s;
  for (double t : {0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0}) {
    s.x.push_back(t);
    s.y.push_back(0.055 * std::exp(-t / 19.3));
    s.y_err.push_back(3e-4);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_exponential_decay(s));
  }
}
BENCHMARK(BM_FitExponentialDecay);

} // namespace

BENCHMARK_MAIN();
