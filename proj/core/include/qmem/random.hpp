#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace qmem {

/// SplitMix64 finalizer.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based random stream keyed by (seed, stream index).
///
/// Each trial of a Monte Carlo loop owns the stream `TrialRng(seed, trial)`,
/// so its draws depend only on the seed and the trial index, never on which
/// worker runs it or in what order. Satisfies UniformRandomBitGenerator.
class TrialRng {
public:
  using result_type = std::uint64_t;

  constexpr TrialRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : state_(mix64(mix64(seed ^ 0x6a09e667f3bcc909ULL) + kGamma * (stream + 1))) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    state_ += kGamma;
    return mix64(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  std::uint64_t state_;
};

/// Derives an independent sub-seed, e.g. one per sweep point.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
  return mix64(seed + 0x9e3779b97f4a7c15ULL * (tag + 0x51ed2701ULL));
}


/// Poisson sampler by CDF inversion, tabulated once per mean.
///
/// Means above kTableLimit fall back to std::poisson_distribution.
class PoissonSampler {
public:
  static constexpr double kTableLimit = 64.0;

  explicit PoissonSampler(double mean) : mean_(mean) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) {
      mean_ = -1.0;
      return;
    }
    if (mean == 0.0 || mean > kTableLimit) {
      return;
    }
    const auto n = static_cast<std::size_t>(mean + 14.0 * std::sqrt(mean) + 24.0);
    cdf_.reserve(n);
    double pmf = std::exp(-mean);
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      acc += pmf;
      cdf_.push_back(acc);
      pmf *= mean / static_cast<double>(k + 1);
    }
    tail_pmf_ = pmf;
  }

  [[nodiscard]] double mean() const noexcept { return mean_; }
  [[nodiscard]] bool valid() const noexcept { return mean_ >= 0.0; }

  template <class Rng>
  std::uint64_t operator()(Rng& rng) const {
    if (mean_ <= 0.0) {
      return 0;
    }
    if (cdf_.empty()) {
      std::poisson_distribution<std::uint64_t> dist(mean_);
      return dist(rng);
    }
    const double u = rng.uniform();
    std::size_t k = 0;
    while (k < cdf_.size() && u >= cdf_[k]) {
      ++k;
    }
    if (k < cdf_.size()) {
      return k;
    }
    // Far tail: continue the recursion past the table.
    double acc = cdf_.back();
    double pmf = tail_pmf_;
    while (u >= acc && pmf > 0.0) {
      acc += pmf;
      if (u < acc) {
        break;
      }
      ++k;
      pmf *= mean_ / static_cast<double>(k + 1);
    }
    return k;
  }

private:
  double mean_;
  std::vector<double> cdf_;
  double tail_pmf_ = 0.0;
};

} // namespace qmem
