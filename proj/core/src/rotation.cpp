#include "qmem/rotation.hpp"

#include <string>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "qmem/error.hpp"

namespace qmem {

Rotation3::Rotation3(const Eigen::Matrix3d& m, double tol) : m_(m) {
  const double ortho = (m.transpose() * m - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (!(ortho <= tol)) {
    throw InvalidArgument("matrix is not orthogonal (max |R^T R - I| = " + std::to_string(ortho) + ")");
  }
  if (!(std::abs(m.determinant() - 1.0) <= tol)) {
    throw InvalidArgument("matrix is not a proper rotation (det != +1)");
  }
}

Rotation3 Rotation3::about_axis(const Eigen::Vector3d& axis, double angle) {
  if (!(axis.norm() > 0.0)) {
    throw InvalidArgument("rotation axis must be nonzero");
  }
  return {Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix(), Unchecked{}};
}

Rotation3 Rotation3::inverse() const { return {m_.transpose(), Unchecked{}}; }

Rotation3 Rotation3::operator*(const Rotation3& rhs) const { return {m_ * rhs.m_, Unchecked{}}; }

StokesVector apply_rotation(const Rotation3& r, const StokesVector& s) noexcept {
  const Eigen::Vector3d v = r.matrix() * Eigen::Vector3d(s.s1, s.s2, s.s3);
  return {s.s0, v.x(), v.y(), v.z()};
}

Rotation3 fit_rotation(std::span<const StokesVector> inputs, std::span<const StokesVector> targets) {
  if (inputs.size() != targets.size()) {
    throw InvalidArgument("rotation fit needs equally many inputs and targets");
  }
  if (inputs.size() < 3) {
    throw DegenerateGeometry("rotation fit needs at least three state pairs");
  }

  Eigen::MatrixXd a(3, static_cast<Eigen::Index>(inputs.size()));
  Eigen::MatrixXd b(3, static_cast<Eigen::Index>(inputs.size()));
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    a.col(col) << inputs[i].s1, inputs[i].s2, inputs[i].s3;
    b.col(col) << targets[i].s1, targets[i].s2, targets[i].s3;
  }

  // Inputs on a common line through the origin leave the rotation about
  // that line undetermined.
  const Eigen::JacobiSVD<Eigen::MatrixXd> span_svd(a);
  const auto& sv = span_svd.singularValues();
  if (!(sv(0) > 0.0) || sv(1) <= 1e-9 * sv(0)) {
    throw DegenerateGeometry("input Stokes vectors are collinear");
  }

  const Eigen::Matrix3d h = a * b.transpose();
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return Rotation3(v * d * u.transpose());
}

} // namespace qmem
