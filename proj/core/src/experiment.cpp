#include "qmem/experiment.hpp"

#include "qmem/error.hpp"
#include "qmem/io.hpp"
#include "qmem/polarimetry.hpp"
#include "qmem/random.hpp"

namespace qmem {

ExperimentData simulate_experiment(const MemoryConfig& config, const ExperimentPlan& plan,
                                   std::uint64_t seed, unsigned workers) {
  ExperimentData data;
  data.reference = simulate_reference(config, plan.trials, derive_seed(seed, 1000), workers);
  for (std::size_t i = 0; i < kCanonicalStates.size(); ++i) {
    const auto state = kCanonicalStates[i];
    const QubitAngles angles = angles_of(state);
    StateData d;
    d.storage = simulate_histogram(config, angles, Analyzer::none(), plan.trials,
                                   derive_seed(seed, 10 + i), workers);
    d.storage.label = "storage:" + std::string(name_of(state));
    const auto sweep = [&](SweepStage stage, std::uint64_t tag) {
      return simulate_polarimetry_sweep(config, angles, plan.qwp_angles, plan.polarimetry_trials,
                                        derive_seed(seed, 100 + 10 * i + tag), stage, plan.optics,
                                        workers);
    };
    d.input = sweep(SweepStage::Input, 0);
    d.transmitted = sweep(SweepStage::Transmitted, 1);
    d.retrieved = sweep(SweepStage::Retrieved, 2);
    data.states.emplace(state, std::move(d));
  }
  return data;
}

ReportInputs measure(const ExperimentData& data, const Window& roi, const Window& bg) {
  ReportInputs in;
  in.reference = data.reference;
  in.roi = roi;
  in.background = bg;
  for (const auto& [state, d] : data.states) {
    StateMeasurement m;
    m.storage = d.storage;
    m.input = fit_stokes(io::samples_from_sweep(d.input)).stokes;
    m.transmitted = fit_stokes(io::samples_from_sweep(d.transmitted)).stokes;
    m.retrieved = fit_stokes(io::samples_from_sweep(d.retrieved)).stokes;
    in.states.emplace(state, std::move(m));
  }
  return in;
}

} // namespace qmem
