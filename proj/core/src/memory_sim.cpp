#include "qmem/memory_sim.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <string>

#include "qmem/analysis.hpp"
#include "qmem/error.hpp"
#include "qmem/parallel.hpp"
#include "qmem/polarimetry.hpp"
#include "qmem/random.hpp"

namespace qmem {

std::string_view name_of(PulseShape shape) noexcept {
  return shape == PulseShape::Exponential ? "exponential" : "flat";
}

PulseShape parse_pulse_shape(std::string_view name) {
  if (name == "exponential") {
    return PulseShape::Exponential;
  }
  if (name == "flat" || name == "flat-top") {
    return PulseShape::FlatTop;
  }
  throw InvalidArgument("unknown retrieval shape '" + std::string(name) + "'");
}

std::string_view name_of(SweepStage stage) noexcept {
  switch (stage) {
  case SweepStage::Input: return "input";
  case SweepStage::Transmitted: return "transmitted";
  case SweepStage::Retrieved: return "retrieved";
  }
  return "?";
}

SweepStage parse_sweep_stage(std::string_view name) {
  for (auto s : {SweepStage::Input, SweepStage::Transmitted, SweepStage::Retrieved}) {
    if (name == name_of(s)) {
      return s;
    }
  }
  throw InvalidArgument("unknown polarimetry stage '" + std::string(name) + "'");
}

namespace {

bool on_grid(double x, double step) {
  const double r = x / step;
  return std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, std::abs(r));
}

void require(bool ok, const std::string& what) {
  if (!ok) {
    throw ConfigError("invalid memory config: " + what);
  }
}

bool nonneg(double x) { return x >= 0.0 && std::isfinite(x); }

} // namespace

void MemoryConfig::validate() const {
  require(nonneg(eta_h) && eta_h <= 1.0, "eta_h must lie in [0, 1]");
  require(nonneg(eta_v) && eta_v <= 1.0, "eta_v must lie in [0, 1]");
  require(nonneg(p_in), "p_in must be >= 0");
  require(nonneg(chain), "chain must be >= 0");
  require(nonneg(bg_rate), "bg_rate must be >= 0");
  require(nonneg(tech_rate), "tech_rate must be >= 0");
  require(nonneg(tech_coeff), "tech_coeff must be >= 0");
  require(nonneg(fwm_coeff), "fwm_coeff must be >= 0");
  require(nonneg(dephasing) && dephasing <= 1.0, "dephasing must lie in [0, 1]");
  require(tau_coherence > 0.0 && std::isfinite(tau_coherence), "tau_coherence must be > 0");
  require(retrieval_shape.tau_us > 0.0 && std::isfinite(retrieval_shape.tau_us),
          "retrieval_shape.tau_us must be > 0");
  require(bin_width > 0.0 && std::isfinite(bin_width), "bin_width must be > 0");
  require(t_max > 0.0 && std::isfinite(t_max), "t_max must be > 0");
  require(0.0 <= roi_start && roi_start < roi_end && roi_end <= t_max,
          "ROI must satisfy 0 <= roi_start < roi_end <= t_max");
  require(0.0 <= bg_window_start && bg_window_start < bg_window_end && bg_window_end <= t_max,
          "background window must satisfy 0 <= start < end <= t_max");
  require(std::abs((roi_end - roi_start) - (bg_window_end - bg_window_start)) <= 1e-9 * bin_width,
          "ROI and background window must have equal duration");
  require(roi_start - kInputLead >= 0.0, "roi_start must leave room for the 1 us input pulse");
  for (double edge : {t_max, roi_start, roi_end, bg_window_start, bg_window_end}) {
    require(on_grid(edge, bin_width), "window edges and t_max must be multiples of bin_width");
  }
}

double Analyzer::transmission(const StokesVector& s) const {
  if (!polarizer) {
    return 1.0;
  }
  const StokesVector n = s.normalized();
  if (qwp_angle) {
    return qwp_polarimeter_intensity(n, *qwp_angle);
  }
  return 0.5 * (1.0 + n.s1);
}

StokesVector retrieved_stokes(const MemoryConfig& config, const QubitAngles& state) {
  const double c = std::cos(state.theta);
  const double s = std::sin(state.theta);
  const double wh = config.eta_h * c * c;
  const double wv = config.eta_v * s * s;
  const double total = wh + wv;
  if (!(total > 0.0)) {
    return stokes_from_qubit(state);
  }
  const double coherence =
      2.0 * std::sqrt(config.eta_h * config.eta_v) * c * s * (1.0 - config.dephasing) / total;
  return {1.0, (wh - wv) / total, coherence * std::cos(state.phi), coherence * std::sin(state.phi)};
}

double retrieved_signal_mean(const MemoryConfig& config, const QubitAngles& state) {
  const double c = std::cos(state.theta);
  const double s = std::sin(state.theta);
  return config.chain * (config.eta_h * c * c + config.eta_v * s * s) * config.p_in;
}

double roi_background_mean(const MemoryConfig& config) { return config.bg_rate + config.tech_rate; }

namespace {

// A Poisson photon source emitting into one window of the record.
struct Source {
  double mean = 0.0;
  Window window;
  PulseShape shape = PulseShape::FlatTop;
  double tau = 1.0;
};

ArrivalHistogram run_sources(const MemoryConfig& config, std::span<const Source> sources,
                             std::uint64_t trials, std::uint64_t seed, unsigned workers,
                             std::string label) {
  if (trials == 0) {
    throw InvalidArgument("simulation needs at least one trial");
  }
  const auto n_bins = static_cast<std::size_t>(std::llround(config.t_max / config.bin_width));

  std::vector<PoissonSampler> samplers;
  std::vector<double> exp_norm;
  for (const auto& src : sources) {
    samplers.emplace_back(src.mean);
    exp_norm.push_back(-std::expm1(-src.window.duration() / src.tau));
  }

  const unsigned nw = resolve_workers(workers);
  std::vector<std::vector<std::uint64_t>> partial(nw, std::vector<std::uint64_t>(n_bins, 0));
  const double inv_bin = 1.0 / config.bin_width;

  parallel_chunks(trials, nw, [&](unsigned w, std::uint64_t begin, std::uint64_t end) {
    auto& counts = partial[w];
    for (std::uint64_t t = begin; t < end; ++t) {
      TrialRng rng(seed, t);
      for (std::size_t k = 0; k < sources.size(); ++k) {
        const auto& src = sources[k];
        const std::uint64_t photons = samplers[k](rng);
        for (std::uint64_t i = 0; i < photons; ++i) {
          const double u = rng.uniform();
          const double time = src.shape == PulseShape::Exponential
                                  ? src.window.start - src.tau * std::log1p(-u * exp_norm[k])
                                  : src.window.start + u * src.window.duration();
          const auto bin = std::min(n_bins - 1, static_cast<std::size_t>(std::max(0.0, time * inv_bin)));
          ++counts[bin];
        }
      }
    }
  });

  ArrivalHistogram hist;
  hist.t_start = 0.0;
  hist.bin_width = config.bin_width;
  hist.counts.assign(n_bins, 0);
  for (const auto& p : partial) {
    for (std::size_t b = 0; b < n_bins; ++b) {
      hist.counts[b] += p[b];
    }
  }
  hist.n_trials = trials;
  hist.label = std::move(label);
  return hist;
}

// Background photons per pulse over the whole control window for a given
// mean inside the ROI.
double over_control_window(const MemoryConfig& config, double roi_mean) {
  return roi_mean / config.roi().duration() * config.control_window().duration();
}

// Each rail's ensemble emits half of the control-induced background; the
// technical leakage is a third, independent source.
ArrivalHistogram storage_run(const MemoryConfig& config, const StokesVector& signal_pol,
                             double signal_mean, const Analyzer& analyzer, std::uint64_t trials,
                             std::uint64_t seed, unsigned workers) {
  const double bg_pass = analyzer.polarizer ? 0.5 : 1.0;
  const double per_rail = over_control_window(config, 0.5 * config.bg_rate) * bg_pass;
  const double technical = over_control_window(config, config.tech_rate) * bg_pass;
  const Window control = config.control_window();
  const std::array<Source, 4> sources{
      Source{signal_mean * analyzer.transmission(signal_pol), config.roi(),
             config.retrieval_shape.kind, config.retrieval_shape.tau_us},
      Source{per_rail, control, PulseShape::FlatTop, 1.0},
      Source{per_rail, control, PulseShape::FlatTop, 1.0},
      Source{technical, control, PulseShape::FlatTop, 1.0},
  };
  return run_sources(config, sources, trials, seed, workers, "storage");
}

ArrivalHistogram input_run(const MemoryConfig& config, const StokesVector& pol,
                           const Analyzer& analyzer, std::uint64_t trials, std::uint64_t seed,
                           unsigned workers) {
  const std::array<Source, 1> sources{
      Source{config.chain * config.p_in * analyzer.transmission(pol), config.input_window(),
             PulseShape::FlatTop, 1.0},
  };
  return run_sources(config, sources, trials, seed, workers, "reference");
}

void require_angles(std::span<const double> angles) {
  if (angles.size() < 8) {
    throw InvalidArgument("polarimetry sweep needs at least 8 waveplate angles");
  }
}

} // namespace

ArrivalHistogram simulate_histogram(const MemoryConfig& config, const QubitAngles& state,
                                    const Analyzer& analyzer, std::uint64_t trials,
                                    std::uint64_t seed, unsigned workers) {
  config.validate();
  return storage_run(config, retrieved_stokes(config, state), retrieved_signal_mean(config, state),
                     analyzer, trials, seed, workers);
}

ArrivalHistogram simulate_reference(const MemoryConfig& config, std::uint64_t trials,
                                    std::uint64_t seed, unsigned workers) {
  config.validate();
  return input_run(config, StokesVector{}, Analyzer::none(), trials, seed, workers);
}

SweepSeries simulate_polarimetry_sweep(const MemoryConfig& config, const QubitAngles& state,
                                       std::span<const double> qwp_angles,
                                       std::uint64_t trials_per_angle, std::uint64_t seed,
                                       SweepStage stage, const Rotation3& optics, unsigned workers) {
  config.validate();
  require_angles(qwp_angles);
  const StokesVector input = stokes_from_qubit(state);
  const StokesVector transmitted = apply_rotation(optics, input);
  const StokesVector retrieved = apply_rotation(optics, retrieved_stokes(config, state));

  SweepSeries out;
  for (std::size_t i = 0; i < qwp_angles.size(); ++i) {
    const Analyzer analyzer = Analyzer::qwp(qwp_angles[i]);
    const std::uint64_t s = derive_seed(seed, i);
    ArrivalHistogram hist;
    Window window = config.roi();
    switch (stage) {
    case SweepStage::Input:
      hist = input_run(config, input, analyzer, trials_per_angle, s, workers);
      window = config.input_window();
      break;
    case SweepStage::Transmitted:
      hist = input_run(config, transmitted, analyzer, trials_per_angle, s, workers);
      window = config.input_window();
      break;
    case SweepStage::Retrieved:
      hist = storage_run(config, retrieved, retrieved_signal_mean(config, state), analyzer,
                         trials_per_angle, s, workers);
      break;
    }
    // The input window need not sit on the bin grid; it is the only
    // source in its histogram, so the total is its count.
    const auto counts = static_cast<double>(stage == SweepStage::Retrieved ? roi_counts(hist, window)
                                                                           : hist.total());
    const double per_pulse = 1.0 / static_cast<double>(trials_per_angle);
    out.x.push_back(qwp_angles[i]);
    out.y.push_back(counts * per_pulse);
    out.y_err.push_back(std::sqrt(counts) * per_pulse);
  }
  return out;
}

SweepSeries expected_polarimetry_sweep(const MemoryConfig& config, const QubitAngles& state,
                                       std::span<const double> qwp_angles, SweepStage stage,
                                       const Rotation3& optics) {
  config.validate();
  require_angles(qwp_angles);
  const StokesVector input = stokes_from_qubit(state);
  SweepSeries out;
  for (double angle : qwp_angles) {
    const Analyzer analyzer = Analyzer::qwp(angle);
    double y = 0.0;
    switch (stage) {
    case SweepStage::Input:
      y = config.chain * config.p_in * analyzer.transmission(input);
      break;
    case SweepStage::Transmitted:
      y = config.chain * config.p_in * analyzer.transmission(apply_rotation(optics, input));
      break;
    case SweepStage::Retrieved:
      y = retrieved_signal_mean(config, state) *
              analyzer.transmission(apply_rotation(optics, retrieved_stokes(config, state))) +
          0.5 * roi_background_mean(config);
      break;
    }
    out.x.push_back(angle);
    out.y.push_back(y);
    out.y_err.push_back(0.0);
  }
  return out;
}

SweepSeries simulate_decay_series(const MemoryConfig& config, std::span<const double> storage_times,
                                  std::uint64_t trials, std::uint64_t seed, unsigned workers) {
  config.validate();
  if (storage_times.empty()) {
    throw InvalidArgument("decay series needs at least one storage time");
  }
  for (std::size_t i = 0; i < storage_times.size(); ++i) {
    if (!(storage_times[i] >= 0.0) || (i > 0 && !(storage_times[i] > storage_times[i - 1]))) {
      throw InvalidArgument("storage times must be >= 0 and strictly increasing");
    }
  }
  const QubitAngles both_rails = angles_of(CanonicalState::D);
  const ArrivalHistogram reference =
      simulate_reference(config, trials, derive_seed(seed, storage_times.size()), workers);

  SweepSeries out;
  for (std::size_t i = 0; i < storage_times.size(); ++i) {
    MemoryConfig point = config;
    const double survival = std::exp(-storage_times[i] / config.tau_coherence);
    point.eta_h *= survival;
    point.eta_v *= survival;
    const ArrivalHistogram storage =
        simulate_histogram(point, both_rails, Analyzer::none(), trials, derive_seed(seed, i), workers);
    const Estimate eff = storage_efficiency(storage, reference, config.roi(), config.background_window());
    out.x.push_back(storage_times[i]);
    out.y.push_back(eff.value);
    out.y_err.push_back(eff.error);
  }
  return out;
}

BackgroundSweep simulate_background_sweep(const MemoryConfig& config, std::span<const double> powers,
                                          std::uint64_t trials, std::uint64_t seed, unsigned workers) {
  config.validate();
  if (powers.empty()) {
    throw InvalidArgument("background sweep needs at least one power");
  }
  for (std::size_t i = 0; i < powers.size(); ++i) {
    if (!(powers[i] >= 0.0) || (i > 0 && !(powers[i] > powers[i - 1]))) {
      throw InvalidArgument("control powers must be >= 0 and strictly increasing");
    }
  }
  const QubitAngles no_probe{};
  const double per_pulse = 1.0 / static_cast<double>(trials);
  BackgroundSweep out;
  for (std::size_t i = 0; i < powers.size(); ++i) {
    MemoryConfig cell = config;
    cell.eta_h = 0.0;
    cell.eta_v = 0.0;
    cell.tech_rate = config.tech_coeff * powers[i];
    cell.bg_rate = config.fwm_coeff * std::sqrt(powers[i]);
    MemoryConfig no_cell = cell;
    no_cell.bg_rate = 0.0;

    const auto record = [&](SweepSeries& series, const MemoryConfig& c, std::uint64_t s) {
      const auto hist = simulate_histogram(c, no_probe, Analyzer::none(), trials, s, workers);
      const auto counts = static_cast<double>(roi_counts(hist, c.roi()));
      series.x.push_back(powers[i]);
      series.y.push_back(counts * per_pulse);
      series.y_err.push_back(std::sqrt(counts) * per_pulse);
    };
    record(out.background, cell, derive_seed(seed, 2 * i));
    record(out.technical, no_cell, derive_seed(seed, 2 * i + 1));
  }
  return out;
}

} // namespace qmem
