#include "qmem/rotation.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "qmem/error.hpp"

namespace qmem {
namespace {

constexpr double kPi = std::numbers::pi;

std::vector<StokesVector> canonical() {
  std::vector<StokesVector> out;
  for (auto s : kCanonicalStates) {
    out.push_back(stokes_from_qubit(angles_of(s)));
  }
  return out;
}

Rotation3 random_rotation(std::mt19937_64& gen) {
  std::normal_distribution<double> g;
  return Rotation3::about_axis({g(gen), g(gen), g(gen)}, std::uniform_real_distribution<double>(-kPi, kPi)(gen));
}

double max_diff(const Rotation3& a, const Rotation3& b) {
  return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

TEST(Rotation3, RejectsImproperAndNonOrthogonal) {
  Eigen::Matrix3d reflect = Eigen::Matrix3d::Identity();
  reflect(2, 2) = -1.0;
  EXPECT_THROW(Rotation3{reflect}, InvalidArgument);
  EXPECT_THROW(Rotation3{2.0 * Eigen::Matrix3d::Identity()}, InvalidArgument);
}

TEST(ApplyRotation, IdentityLeavesStateUnchanged) {
  const StokesVector s{1, 0.2, -0.3, 0.4};
  EXPECT_EQ(apply_rotation(Rotation3::identity(), s), s);
}

TEST(ApplyRotation, HalfTurnAboutS1MapsDiagonalToAntidiagonal) {
  const auto r = Rotation3::about_axis({1, 0, 0}, kPi);
  const auto out = apply_rotation(r, {1, 0, 1, 0});
  // Matrix product oracle: diag(1, -1, -1) applied to (0, 1, 0).
  EXPECT_NEAR(out.s1, 0.0, 1e-15);
  EXPECT_NEAR(out.s2, -1.0, 1e-15);
  EXPECT_NEAR(out.s3, 0.0, 1e-15);
}

TEST(ApplyRotation, PreservesLengthAndS0) {
  std::mt19937_64 gen(31);
  std::normal_distribution<double> g;
  for (int i = 0; i < 200; ++i) {
    const auto r = random_rotation(gen);
    const StokesVector s{1.7, g(gen), g(gen), g(gen)};
    const auto out = apply_rotation(r, s);
    EXPECT_EQ(out.s0, s.s0);
    EXPECT_NEAR(out.polarized_intensity(), s.polarized_intensity(), 1e-12);
  }
}

TEST(FitRotation, IdenticalSetsGiveIdentity) {
  const auto states = canonical();
  EXPECT_LT(max_diff(fit_rotation(states, states), Rotation3::identity()), 1e-9);
}

TEST(FitRotation, RecoversQuarterTurnAboutS3) {
  const auto truth = Rotation3::about_axis({0, 0, 1}, kPi / 2);
  const auto in = canonical();
  std::vector<StokesVector> out;
  for (const auto& s : in) {
    out.push_back(apply_rotation(truth, s));
  }
  EXPECT_LT(max_diff(fit_rotation(in, out), truth), 1e-9);
}

TEST(FitRotation, RecoversRandomRotationsFromShortenedVectors) {
  std::mt19937_64 gen(32);
  std::normal_distribution<double> g;
  for (int i = 0; i < 100; ++i) {
    const auto truth = random_rotation(gen);
    std::vector<StokesVector> in, out;
    for (int k = 0; k < 4; ++k) {
      Eigen::Vector3d v(g(gen), g(gen), g(gen));
      v = v.normalized() * (0.3 + 0.1 * k);
      in.push_back({1, v.x(), v.y(), v.z()});
      out.push_back(apply_rotation(truth, in.back()));
    }
    EXPECT_LT(max_diff(fit_rotation(in, out), truth), 1e-9);
  }
}

TEST(FitRotation, AlwaysProperOrthogonal) {
  std::mt19937_64 gen(33);
  std::normal_distribution<double> g;
  for (int i = 0; i < 300; ++i) {
    std::vector<StokesVector> in, out;
    for (int k = 0; k < 3 + i % 5; ++k) {
      in.push_back({1, g(gen), g(gen), g(gen)});
      out.push_back({1, g(gen), g(gen), g(gen)}); // arbitrary, even reflections
    }
    const auto r = fit_rotation(in, out).matrix();
    EXPECT_LT((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-9);
  }
}

TEST(FitRotation, ReflectedTargetsStillYieldRotation) {
  const auto in = canonical();
  std::vector<StokesVector> mirrored;
  for (const auto& s : in) {
    mirrored.push_back({1, s.s1, s.s2, -s.s3});
  }
  EXPECT_NEAR(fit_rotation(in, mirrored).matrix().determinant(), 1.0, 1e-9);
}

TEST(FitRotation, PerturbedTargetsKeepFidelityAbove99Percent) {
  std::mt19937_64 gen(34);
  std::normal_distribution<double> noise(0.0, 0.01);
  const auto in = canonical();
  const auto truth = random_rotation(gen);
  std::vector<StokesVector> targets;
  for (const auto& s : in) {
    auto t = apply_rotation(truth, s);
    t.s1 += noise(gen);
    t.s2 += noise(gen);
    t.s3 += noise(gen);
    const double len = t.polarized_intensity();
    if (len > 1.0) {
      t = {1, t.s1 / len, t.s2 / len, t.s3 / len};
    }
    targets.push_back(t);
  }
  const auto r = fit_rotation(in, targets);
  double mean = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    mean += fidelity(apply_rotation(r, in[i]), targets[i]) / static_cast<double>(in.size());
  }
  EXPECT_GT(mean, 0.99);
}

TEST(FitRotation, CollinearInputsAreDegenerate) {
  const std::vector<StokesVector> in{{1, 1, 0, 0}, {1, -1, 0, 0}, {1, 0.5, 0, 0}};
  EXPECT_THROW((void)fit_rotation(in, in), DegenerateGeometry);
}

TEST(FitRotation, NeedsThreePairsOfEqualCount) {
  const std::vector<StokesVector> two{{1, 1, 0, 0}, {1, 0, 1, 0}};
  EXPECT_THROW((void)fit_rotation(two, two), DegenerateGeometry);
  const auto six = canonical();
  EXPECT_THROW((void)fit_rotation(six, std::span(six).first(5)), InvalidArgument);
}

} // namespace
} // namespace qmem
