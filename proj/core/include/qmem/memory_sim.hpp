#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "qmem/histogram.hpp"
#include "qmem/rotation.hpp"
#include "qmem/stokes.hpp"

namespace qmem {

enum class PulseShape { Exponential, FlatTop };

[[nodiscard]] std::string_view name_of(PulseShape shape) noexcept;
[[nodiscard]] PulseShape parse_pulse_shape(std::string_view name);

/// Temporal profile of the retrieved pulse inside the ROI.
struct RetrievalShape {
  PulseShape kind = PulseShape::Exponential;
  double tau_us = 0.3; ///< decay constant for the exponential profile

  friend bool operator==(const RetrievalShape&, const RetrievalShape&) = default;
};

/// Simulator parameters. Times in microseconds, rates per pulse.
struct MemoryConfig {
  double eta_h = 0.055;
  double eta_v = 0.055;
  double p_in = 1.6;
  /// Detection-chain factor from stored photons to detected counts.
  double chain = 1.0;
  /// Detected control-induced background per pulse inside the ROI.
  double bg_rate = 0.0041;
  /// Technical (leakage) background per pulse inside the ROI.
  double tech_rate = 0.0;
  double roi_start = 2.4;
  double roi_end = 3.4;
  double bg_window_start = 6.0;
  double bg_window_end = 7.0;
  double bin_width = 0.05;
  double t_max = 8.0;
  double tau_coherence = 19.3;
  RetrievalShape retrieval_shape{};

  // Optional knobs, zero by default.
  /// Fractional loss of rail-to-rail coherence (scales S2 and S3 of the
  /// retrieved signal by 1 - dephasing).
  double dephasing = 0.0;
  /// Technical counts per pulse in the ROI per mW of control power.
  double tech_coeff = 0.0;
  /// Four-wave-mixing counts per pulse in the ROI per sqrt(mW).
  double fwm_coeff = 0.0;

  /// Throws ConfigError listing the first violated invariant.
  void validate() const;

  [[nodiscard]] Window roi() const { return Window::make(roi_start, roi_end); }
  [[nodiscard]] Window background_window() const {
    return Window::make(bg_window_start, bg_window_end);
  }
  /// 1 us input pulse ending 0.4 us before the ROI opens.
  [[nodiscard]] Window input_window() const {
    return Window::make(roi_start - kInputLead, roi_start - kInputLead + kInputDuration);
  }
  /// Control field is on from the ROI start to the end of the record.
  [[nodiscard]] Window control_window() const { return Window::make(roi_start, t_max); }

  static constexpr double kInputDuration = 1.0;
  static constexpr double kInputLead = 1.4;

  friend bool operator==(const MemoryConfig&, const MemoryConfig&) = default;
};

/// Measurement in front of the detector.
struct Analyzer {
  bool polarizer = false;             ///< horizontal polarizer present
  std::optional<double> qwp_angle{};  ///< quarter-wave plate before it, radians

  static Analyzer none() { return {}; }
  static Analyzer horizontal() { return {true, std::nullopt}; }
  static Analyzer qwp(double angle) { return {true, angle}; }

  /// Transmission probability for a photon of (normalized) polarization s.
  [[nodiscard]] double transmission(const StokesVector& s) const;
};

/// Normalized Stokes vector of the retrieved signal: rails weighted by their
/// efficiencies, coherence reduced by `dephasing`.
[[nodiscard]] StokesVector retrieved_stokes(const MemoryConfig& config, const QubitAngles& state);

/// Mean detected signal photons per pulse in the ROI, before the analyzer.
[[nodiscard]] double retrieved_signal_mean(const MemoryConfig& config, const QubitAngles& state);

/// Mean detected background photons per pulse in the ROI (bg + technical).
[[nodiscard]] double roi_background_mean(const MemoryConfig& config);

/// Storage-experiment histogram over [0, t_max).
///
/// Per trial, Poisson signal photons (mean chain * (eta_h cos^2 + eta_v sin^2) * p_in)
/// land in the ROI with the configured shape. Background comes from three
/// independent Poisson sources spread uniformly over the control window: one
/// per rail carrying bg_rate/2 each and the technical leakage tech_rate
/// (rates quoted per ROI duration). An analyzer thins signal by its transmission
/// for the retrieved polarization and background by 1/2.
[[nodiscard]] ArrivalHistogram simulate_histogram(const MemoryConfig& config, const QubitAngles& state,
                                                  const Analyzer& analyzer, std::uint64_t trials,
                                                  std::uint64_t seed, unsigned workers = 0);

/// Input pulse transmitted through the filters without atomic interaction:
/// mean chain * p_in, flat over input_window(), no background.
[[nodiscard]] ArrivalHistogram simulate_reference(const MemoryConfig& config, std::uint64_t trials,
                                                  std::uint64_t seed, unsigned workers = 0);

/// Where in the setup a polarimeter sweep is taken.
enum class SweepStage {
  Input,       ///< probe before the first beam displacer
  Transmitted, ///< through the whole setup without EIT
  Retrieved,   ///< stored and retrieved, background included
};

[[nodiscard]] std::string_view name_of(SweepStage stage) noexcept;
[[nodiscard]] SweepStage parse_sweep_stage(std::string_view name);

/// Counts per pulse in the relevant window (ROI for retrieval, input window
/// otherwise) versus quarter-wave-plate angle. `optics` is the polarization
/// rotation applied by the setup to transmitted and retrieved light.
[[nodiscard]] SweepSeries simulate_polarimetry_sweep(const MemoryConfig& config, const QubitAngles& state,
                                                     std::span<const double> qwp_angles,
                                                     std::uint64_t trials_per_angle, std::uint64_t seed,
                                                     SweepStage stage = SweepStage::Retrieved,
                                                     const Rotation3& optics = Rotation3::identity(),
                                                     unsigned workers = 0);

/// Expected value of simulate_polarimetry_sweep (no shot noise).
[[nodiscard]] SweepSeries expected_polarimetry_sweep(const MemoryConfig& config, const QubitAngles& state,
                                                     std::span<const double> qwp_angles,
                                                     SweepStage stage = SweepStage::Retrieved,
                                                     const Rotation3& optics = Rotation3::identity());

/// Storage efficiency measured by ROI analysis after each storage time, with
/// both rails decaying as exp(-t / tau_coherence).
[[nodiscard]] SweepSeries simulate_decay_series(const MemoryConfig& config,
                                                std::span<const double> storage_times,
                                                std::uint64_t trials, std::uint64_t seed,
                                                unsigned workers = 0);

struct BackgroundSweep {
  SweepSeries background; ///< cell present, control only
  SweepSeries technical;  ///< control only, no cell
};

/// ROI counts per pulse versus control power (mW). Background mean is
/// tech_coeff * P + fwm_coeff * sqrt(P), technical mean is tech_coeff * P.
[[nodiscard]] BackgroundSweep simulate_background_sweep(const MemoryConfig& config,
                                                        std::span<const double> powers,
                                                        std::uint64_t trials, std::uint64_t seed,
                                                        unsigned workers = 0);

} // namespace qmem
