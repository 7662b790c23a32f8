#pragma once

#include <span>

#include <Eigen/Core>

#include "qmem/stokes.hpp"

namespace qmem {

/// Proper rotation of the Poincare sphere acting on (S1, S2, S3).
class Rotation3 {
public:
  Rotation3() : m_(Eigen::Matrix3d::Identity()) {}

  /// Throws InvalidArgument unless R^T R = I and det R = +1 within `tol`.
  explicit Rotation3(const Eigen::Matrix3d& m, double tol = 1e-9);

  static Rotation3 identity() { return {}; }
  /// Right-handed rotation by `angle` radians about `axis` (normalized here).
  static Rotation3 about_axis(const Eigen::Vector3d& axis, double angle);

  [[nodiscard]] const Eigen::Matrix3d& matrix() const noexcept { return m_; }
  [[nodiscard]] Rotation3 inverse() const;
  [[nodiscard]] Rotation3 operator*(const Rotation3& rhs) const;

private:
  struct Unchecked {};
  Rotation3(const Eigen::Matrix3d& m, Unchecked) : m_(m) {}

  Eigen::Matrix3d m_;
};

/// Rotates the 3-vector part; S0 is left unchanged.
[[nodiscard]] StokesVector apply_rotation(const Rotation3& r, const StokesVector& s) noexcept;

/// Least-squares proper rotation mapping `inputs` onto `targets` without
/// rescaling them: minimizes sum |R s_in - s_target|^2 (Kabsch).
///
/// Requires at least three pairs with non-collinear inputs; throws
/// DegenerateGeometry otherwise and InvalidArgument on a size mismatch.
[[nodiscard]] Rotation3 fit_rotation(std::span<const StokesVector> inputs,
                                     std::span<const StokesVector> targets);

} // namespace qmem
