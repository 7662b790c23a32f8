#include "qmem/polarimetry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qmem/error.hpp"

namespace qmem {

double qwp_polarimeter_intensity(const StokesVector& s, double qwp_angle) {
  if (!s.is_physical(1e-9)) {
    throw InvalidArgument("polarimeter model needs a physical Stokes vector (S0 > 0, DOP <= 1)");
  }
  const double a = s.s0 + 0.5 * s.s1;
  const double b = s.s3;
  const double c = 0.5 * s.s1;
  const double d = 0.5 * s.s2;
  return 0.5 * (a + b * std::sin(2.0 * qwp_angle) + c * std::cos(4.0 * qwp_angle) +
                d * std::sin(4.0 * qwp_angle));
}

std::vector<double> uniform_qwp_angles(std::size_t n) {
  std::vector<double> angles(n);
  for (std::size_t i = 0; i < n; ++i) {
    angles[i] = std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
  }
  return angles;
}

namespace {

constexpr std::size_t kMinSamples = 8;

// Widest gap between consecutive angles folded onto the half turn [0, pi).
double widest_gap(std::span<const PolarimetrySample> samples) {
  std::vector<double> folded;
  folded.reserve(samples.size());
  for (const auto& s : samples) {
    double a = std::fmod(s.qwp_angle, std::numbers::pi);
    if (a < 0.0) {
      a += std::numbers::pi;
    }
    folded.push_back(a);
  }
  std::ranges::sort(folded);
  double gap = folded.front() + std::numbers::pi - folded.back();
  for (std::size_t i = 1; i < folded.size(); ++i) {
    gap = std::max(gap, folded[i] - folded[i - 1]);
  }
  return gap;
}

} // namespace

StokesFit fit_stokes(std::span<const PolarimetrySample> samples) {
  if (samples.size() < kMinSamples) {
    throw InvalidArgument("Stokes fit needs at least 8 polarimeter samples, got " +
                          std::to_string(samples.size()));
  }
  for (const auto& s : samples) {
    if (!std::isfinite(s.qwp_angle) || !std::isfinite(s.intensity) || s.intensity < 0.0) {
      throw InvalidData("polarimeter sample with negative or non-finite value");
    }
  }
  if (widest_gap(samples) > std::numbers::pi / 2 + 1e-12) {
    throw IllConditionedFit("waveplate angles do not cover half a turn");
  }

  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd x(n, 4);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = samples[static_cast<std::size_t>(i)].qwp_angle;
    x(i, 0) = 1.0;
    x(i, 1) = std::sin(2.0 * t);
    x(i, 2) = std::cos(4.0 * t);
    x(i, 3) = std::sin(4.0 * t);
    y(i) = samples[static_cast<std::size_t>(i)].intensity;
  }

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv(3) <= 1e-10 * sv(0)) {
    throw IllConditionedFit("polarimeter design matrix is rank deficient");
  }
  const Eigen::Vector4d coef = svd.solve(y);
  const double rss = (x * coef - y).squaredNorm();

  // Fourier coefficients -> raw Stokes parameters.
  Eigen::Matrix4d to_stokes;
  to_stokes << 2, 0, -2, 0,
               0, 0, 4, 0,
               0, 0, 0, 4,
               0, 2, 0, 0;
  const Eigen::Vector4d raw = to_stokes * coef;
  if (!(raw(0) > 0.0)) {
    throw InvalidData("recovered S0 is not positive; sweep holds no usable signal");
  }

  StokesFit out;
  out.raw = {raw(0), raw(1), raw(2), raw(3)};
  out.stokes = out.raw.normalized();

  Eigen::Matrix4d cov_raw = Eigen::Matrix4d::Zero();
  if (n > 4) {
    const double sigma2 = rss / static_cast<double>(n - 4);
    const Eigen::Matrix4d xtx_inv = (x.transpose() * x).inverse();
    cov_raw = to_stokes * (sigma2 * xtx_inv) * to_stokes.transpose();
  }
  // Jacobian of (S1, S2, S3) / S0 with respect to the raw vector.
  Eigen::Matrix<double, 3, 4> jac = Eigen::Matrix<double, 3, 4>::Zero();
  for (int i = 0; i < 3; ++i) {
    jac(i, 0) = -raw(i + 1) / (raw(0) * raw(0));
    jac(i, i + 1) = 1.0 / raw(0);
  }
  const Eigen::Matrix3d cov_norm = jac * cov_raw * jac.transpose();
  for (int i = 0; i < 3; ++i) {
    out.errors[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, cov_norm(i, i)));
  }

  out.fit.set("s0", out.raw.s0, std::sqrt(std::max(0.0, cov_raw(0, 0))));
  out.fit.set("s1", out.stokes.s1, out.errors[0]);
  out.fit.set("s2", out.stokes.s2, out.errors[1]);
  out.fit.set("s3", out.stokes.s3, out.errors[2]);
  out.fit.residual_norm = std::sqrt(rss);
  out.fit.n_points = samples.size();
  return out;
}

} // namespace qmem
