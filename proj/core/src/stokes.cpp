#include "qmem/stokes.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

#include "qmem/error.hpp"

namespace qmem {

double StokesVector::polarized_intensity() const noexcept {
  return std::sqrt(s1 * s1 + s2 * s2 + s3 * s3);
}

StokesVector StokesVector::normalized() const {
  if (!(s0 > 0.0)) {
    throw InvalidData("Stokes vector has nonpositive S0");
  }
  return {1.0, s1 / s0, s2 / s0, s3 / s0};
}

bool StokesVector::is_normalized(double tol) const noexcept { return std::abs(s0 - 1.0) <= tol; }

bool StokesVector::is_physical(double tol) const noexcept {
  return s0 > 0.0 && polarized_intensity() <= s0 * (1.0 + tol);
}

double dot3(const StokesVector& a, const StokesVector& b) noexcept {
  return a.s1 * b.s1 + a.s2 * b.s2 + a.s3 * b.s3;
}

double degree_of_polarization(const StokesVector& s) {
  if (!(s.s0 > 0.0)) {
    throw InvalidData("degree of polarization needs S0 > 0");
  }
  return s.polarized_intensity() / s.s0;
}

QubitAngles QubitAngles::make(double theta, double phi) {
  if (!(theta >= 0.0 && theta <= std::numbers::pi / 2)) {
    throw InvalidArgument("qubit theta must lie in [0, pi/2], got " + std::to_string(theta));
  }
  if (!(phi >= -std::numbers::pi && phi < std::numbers::pi)) {
    throw InvalidArgument("qubit phi must lie in [-pi, pi), got " + std::to_string(phi));
  }
  return {theta, phi};
}

QubitAngles angles_of(CanonicalState state) noexcept {
  constexpr double q = std::numbers::pi / 4;
  constexpr double h = std::numbers::pi / 2;
  switch (state) {
  case CanonicalState::H: return {0.0, 0.0};
  case CanonicalState::V: return {h, 0.0};
  case CanonicalState::D: return {q, 0.0};
  case CanonicalState::A: return {q, -std::numbers::pi};
  case CanonicalState::R: return {q, h};
  case CanonicalState::L: return {q, -h};
  }
  return {};
}

std::string_view name_of(CanonicalState state) noexcept {
  switch (state) {
  case CanonicalState::H: return "H";
  case CanonicalState::V: return "V";
  case CanonicalState::D: return "D";
  case CanonicalState::A: return "A";
  case CanonicalState::R: return "R";
  case CanonicalState::L: return "L";
  }
  return "?";
}

CanonicalState parse_state(std::string_view name) {
  if (name.size() == 1) {
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
    for (auto s : kCanonicalStates) {
      if (name_of(s)[0] == c) {
        return s;
      }
    }
  }
  throw InvalidArgument("unknown polarization state '" + std::string(name) +
                        "' (expected one of H V D A R L)");
}

StokesVector stokes_from_qubit(const QubitAngles& angles) noexcept {
  const double c2 = std::cos(2.0 * angles.theta);
  const double s2 = std::sin(2.0 * angles.theta);
  return {1.0, c2, s2 * std::cos(angles.phi), s2 * std::sin(angles.phi)};
}

double fidelity(const StokesVector& s_in, const StokesVector& s_out) {
  constexpr double kTol = 1e-9;
  if (!s_in.is_normalized(kTol) || !s_out.is_normalized(kTol)) {
    throw InvalidArgument("fidelity needs Stokes vectors normalized to S0 = 1");
  }
  double radicand = (1.0 - dot3(s_out, s_out)) * (1.0 - dot3(s_in, s_in));
  if (radicand < 0.0) {
    if (radicand < -kTol) {
      throw InvalidData("fidelity radicand is negative; a vector is longer than the unit sphere");
    }
    radicand = 0.0;
  }
  return 0.5 * (1.0 + dot3(s_out, s_in) + std::sqrt(radicand));
}

} // namespace qmem
