#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qmem/histogram.hpp"
#include "qmem/rotation.hpp"
#include "qmem/stokes.hpp"

namespace qmem {

/// Everything measured for one input polarization.
struct StateMeasurement {
  ArrivalHistogram storage;  ///< storage histogram without analyzer
  StokesVector input;        ///< measured before the setup
  StokesVector transmitted;  ///< measured through the setup without EIT
  StokesVector retrieved;    ///< measured after storage
};

struct ReportInputs {
  std::map<CanonicalState, StateMeasurement> states;
  ArrivalHistogram reference;
  Window roi;
  Window background;
  /// Treat input and transmitted states as pure: only their directions are
  /// used. When false the measured lengths enter the fidelity.
  bool pure_inputs = true;
  /// Wider window for the efficiency column only. Its signal-free partner
  /// starts at background.start and has the same duration.
  std::optional<Window> efficiency_roi;
};

struct StateRow {
  CanonicalState state = CanonicalState::H;
  double sbr = 0.0;
  double efficiency = 0.0;
  double fidelity = 0.0;             ///< retrieved vs. rotated input
  double transmitted_fidelity = 0.0; ///< transmitted vs. rotated input
};

/// Mean with standard error of the mean.
struct Averaged {
  double mean = 0.0;
  double sem = 0.0;
};

[[nodiscard]] Averaged average(const std::vector<double>& values);

struct StorageReport {
  std::vector<StateRow> rows; ///< H, V, D, A, R, L order
  Averaged sbr;
  Averaged efficiency;
  Averaged fidelity;
  Averaged transmitted_fidelity;
  Rotation3 setup_rotation;
};

/// Per-state SBR, efficiency and fidelity with averages.
///
/// The setup rotation is fitted from measured inputs to transmitted states
/// (unit vectors when `pure_inputs`) and applied to the inputs; retrieved states are then compared against the
/// rotated inputs. Throws InvalidArgument if any canonical state is missing.
[[nodiscard]] StorageReport build_report(const ReportInputs& inputs);

/// Fixed-width text table in the layout of a storage summary.
[[nodiscard]] std::string format_table(const StorageReport& report);

} // namespace qmem
