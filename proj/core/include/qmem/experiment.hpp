#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "qmem/histogram.hpp"
#include "qmem/memory_sim.hpp"
#include "qmem/polarimetry.hpp"
#include "qmem/report.hpp"
#include "qmem/rotation.hpp"

namespace qmem {

/// Raw data of one six-state storage run.
struct StateData {
  ArrivalHistogram storage;
  SweepSeries input;       ///< polarimeter sweep before the setup
  SweepSeries transmitted; ///< through the setup, no EIT
  SweepSeries retrieved;   ///< after storage
};

struct ExperimentData {
  ArrivalHistogram reference;
  std::map<CanonicalState, StateData> states;
};

struct ExperimentPlan {
  std::uint64_t trials = 1'000'000;           ///< storage histogram per state
  std::uint64_t polarimetry_trials = 100'000; ///< per waveplate angle
  std::vector<double> qwp_angles = uniform_qwp_angles(16);
  Rotation3 optics{};
};

/// Simulates reference, storage histograms and the three polarimeter
/// sweeps for every canonical state. Each piece has its own seed derived
/// from `seed`, so results do not depend on `workers`.
[[nodiscard]] ExperimentData simulate_experiment(const MemoryConfig& config, const ExperimentPlan& plan,
                                                 std::uint64_t seed, unsigned workers = 0);

/// Fits Stokes vectors to the sweeps and assembles the report inputs.
[[nodiscard]] ReportInputs measure(const ExperimentData& data, const Window& roi, const Window& bg);

} // namespace qmem
