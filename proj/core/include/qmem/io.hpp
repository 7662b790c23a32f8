#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qmem/fit_result.hpp"
#include "qmem/histogram.hpp"
#include "qmem/memory_sim.hpp"
#include "qmem/noise_model.hpp"
#include "qmem/polarimetry.hpp"
#include "qmem/report.hpp"
#include "qmem/stokes.hpp"

namespace qmem::io {

using nlohmann::json;

// JSON. Readers throw FormatError on schema violations.

[[nodiscard]] json to_json(const StokesVector& s);
[[nodiscard]] StokesVector stokes_from_json(const json& j);

[[nodiscard]] json to_json(const ArrivalHistogram& h);
[[nodiscard]] ArrivalHistogram histogram_from_json(const json& j);

/// Every field is written. On reading, unknown keys are rejected, the
/// optional knobs (dephasing, tech_coeff, fwm_coeff) may be omitted and the
/// result is validated.
[[nodiscard]] json to_json(const MemoryConfig& c);
[[nodiscard]] MemoryConfig config_from_json(const json& j);

/// Keys eta, p, q, n_max; missing keys keep their defaults. Out-of-range
/// values raise ConfigError.
[[nodiscard]] json to_json(const NoiseModelParams& p);
[[nodiscard]] NoiseModelParams noise_params_from_json(const json& j);

[[nodiscard]] json to_json(const FitResult& f);
[[nodiscard]] FitResult fit_result_from_json(const json& j);

[[nodiscard]] json to_json(const StorageReport& r);

// CSV. All numbers are written with round-trip precision.

/// Header `qwp_angle_deg,intensity`; angles stored in degrees.
[[nodiscard]] std::string polarimetry_to_csv(std::span<const PolarimetrySample> samples);
[[nodiscard]] std::vector<PolarimetrySample> polarimetry_from_csv(std::string_view text);

/// Header `<x_name>,<y_name>,<y_name>_err`.
[[nodiscard]] std::string sweep_to_csv(const SweepSeries& s, std::string_view x_name,
                                       std::string_view y_name);
/// Reads two or three numeric columns after a header line.
[[nodiscard]] SweepSeries sweep_from_csv(std::string_view text);

/// Header `power_mw,background,background_err,technical,technical_err`.
[[nodiscard]] std::string background_sweep_to_csv(const BackgroundSweep& s);
[[nodiscard]] BackgroundSweep background_sweep_from_csv(std::string_view text);

/// Header `p,sbr,fidelity`.
[[nodiscard]] std::string curve_to_csv(std::span<const CurvePoint> curve);

/// Conversions between a sweep in radians and polarimeter samples.
[[nodiscard]] std::vector<PolarimetrySample> samples_from_sweep(const SweepSeries& s);

// Files.

[[nodiscard]] std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

[[nodiscard]] std::string format_double(double v);

} // namespace qmem::io
