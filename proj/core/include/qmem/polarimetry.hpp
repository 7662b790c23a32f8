#pragma once

#include <array>
#include <span>

#include "qmem/fit_result.hpp"
#include "qmem/stokes.hpp"

namespace qmem {

/// One reading of the rotating quarter-wave-plate polarimeter.
struct PolarimetrySample {
  double qwp_angle = 0.0; ///< fast-axis angle, radians
  double intensity = 0.0; ///< mean detected counts per pulse
};

/// Transmitted intensity after a quarter-wave plate at `qwp_angle` followed
/// by a fixed horizontal polarizer:
///
///   I = 1/2 [A + B sin 2t + C cos 4t + D sin 4t]
///   A = S0 + S1/2, B = S3, C = S1/2, D = S2/2
///
/// Throws InvalidArgument for a vector with degree of polarization > 1 + 1e-9.
[[nodiscard]] double qwp_polarimeter_intensity(const StokesVector& s, double qwp_angle);

struct StokesFit {
  StokesVector stokes;       ///< normalized (S0 = 1)
  StokesVector raw;          ///< before normalization, in intensity units
  std::array<double, 3> errors{}; ///< standard errors of normalized S1..S3
  FitResult fit;
};

/// Recovers the Stokes vector from a polarimeter sweep by linear least squares
/// on {1, sin 2t, cos 4t, sin 4t}.
///
/// Needs at least 8 samples whose angles (mod pi) leave no gap wider than
/// pi/2. Throws IllConditionedFit for degenerate angle sets and InvalidData
/// when the recovered S0 is not positive.
[[nodiscard]] StokesFit fit_stokes(std::span<const PolarimetrySample> samples);

/// `n` angles spaced uniformly over [0, pi).
[[nodiscard]] std::vector<double> uniform_qwp_angles(std::size_t n);

} // namespace qmem
