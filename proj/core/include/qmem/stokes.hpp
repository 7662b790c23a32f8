#pragma once

#include <array>
#include <string_view>

namespace qmem {

/// Stokes vector (S0, S1, S2, S3).
///
/// S1 is horizontal minus vertical, S2 is diagonal minus antidiagonal and S3
/// is right- minus left-circular (|R> = (|H> + i|V>)/sqrt(2) has S3 = +1).
struct StokesVector {
  double s0 = 1.0;
  double s1 = 0.0;
  double s2 = 0.0;
  double s3 = 0.0;

  [[nodiscard]] std::array<double, 3> vec3() const noexcept { return {s1, s2, s3}; }
  [[nodiscard]] std::array<double, 4> as_array() const noexcept { return {s0, s1, s2, s3}; }

  /// Length of the (S1, S2, S3) part, not divided by S0.
  [[nodiscard]] double polarized_intensity() const noexcept;

  /// Returns the vector divided by S0. Throws InvalidData if S0 <= 0.
  [[nodiscard]] StokesVector normalized() const;

  [[nodiscard]] bool is_normalized(double tol = 1e-9) const noexcept;

  /// True when S0 > 0 and the degree of polarization does not exceed 1 + tol.
  [[nodiscard]] bool is_physical(double tol = 1e-9) const noexcept;

  friend bool operator==(const StokesVector&, const StokesVector&) = default;
};

[[nodiscard]] double dot3(const StokesVector& a, const StokesVector& b) noexcept;

/// sqrt(S1^2 + S2^2 + S3^2) / S0. Throws InvalidData when S0 <= 0.
[[nodiscard]] double degree_of_polarization(const StokesVector& s);

/// Qubit cos(theta)|H> + e^{i phi} sin(theta)|V>.
///
/// theta is the amplitude angle, so the Poincare polar angle is 2*theta.
struct QubitAngles {
  double theta = 0.0; ///< [0, pi/2]
  double phi = 0.0;   ///< [-pi, pi)

  /// Validating constructor; throws InvalidArgument outside the ranges above.
  static QubitAngles make(double theta, double phi);
};

/// The six canonical inputs forming three mutually unbiased bases.
enum class CanonicalState { H, V, D, A, R, L };

inline constexpr std::array<CanonicalState, 6> kCanonicalStates = {
    CanonicalState::H, CanonicalState::V, CanonicalState::D,
    CanonicalState::A, CanonicalState::R, CanonicalState::L};

[[nodiscard]] QubitAngles angles_of(CanonicalState state) noexcept;
[[nodiscard]] std::string_view name_of(CanonicalState state) noexcept;
/// Parses "H", "V", ... (case-insensitive). Throws InvalidArgument.
[[nodiscard]] CanonicalState parse_state(std::string_view name);

/// Maps a qubit to its pure-state Stokes vector
/// (1, cos 2theta, sin 2theta cos phi, sin 2theta sin phi).
[[nodiscard]] StokesVector stokes_from_qubit(const QubitAngles& angles) noexcept;

/// Fidelity between two normalized Stokes vectors,
/// F = 1/2 (1 + a.b + sqrt((1 - a.a)(1 - b.b))) on the 3-vector parts.
///
/// Throws InvalidArgument if either S0 differs from 1 by more than 1e-9 and
/// InvalidData if the radicand is below -1e-9 (an unphysical vector).
[[nodiscard]] double fidelity(const StokesVector& s_in, const StokesVector& s_out);

/// Best average fidelity reachable by a measure-and-resend strategy,
/// the threshold quoted for certifying memory operation.
inline constexpr double kClassicalFidelityLimit = 0.66;

} // namespace qmem
