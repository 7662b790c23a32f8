#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace qmem {

/// Parameters of the closed-form dual-rail detection model.
struct NoiseModelParams {
  double eta = 0.055; ///< storage efficiency
  double p = 1.6;     ///< mean input photons per pulse
  double q = 0.005;   ///< mean background photons per pulse, both ensembles
  int n_max = 20;     ///< truncation order of each sum

  /// Throws InvalidArgument unless eta in [0,1], p >= 0, q >= 0, n_max >= 1.
  void validate() const;
  [[nodiscard]] double signal_mean() const noexcept { return eta * p; }
};

/// Probabilities that a pulse yields a signal or a background detection.
struct DetectionProbs {
  double p_signal = 0.0;
  double p_background = 0.0;
};

/// Poisson mass function evaluated in log space. `mean` must be >= 0.
[[nodiscard]] double poisson_pmf(int k, double mean);

/// Probability of n signal photons, Poisson with mean eta * p.
[[nodiscard]] double signal_term(int n, const NoiseModelParams& params);
/// Probability of m background photons, Poisson with mean q.
[[nodiscard]] double background_term(int m, const NoiseModelParams& params);

/// Double sums over n, m in [0, n_max] weighted by n/(n+m) (signal) and
/// m/(n+m) (background). The (0, 0) term contributes to neither.
[[nodiscard]] DetectionProbs detection_probs(const NoiseModelParams& params);

/// Largest change in either probability when the truncation order is doubled.
[[nodiscard]] double truncation_error(const NoiseModelParams& params);

/// (P_s + P_bg/2) / (P_s + P_bg). Throws UndefinedQuantity when eta*p = q = 0.
[[nodiscard]] double model_fidelity(const NoiseModelParams& params);

/// P_s / P_bg. Throws UndefinedQuantity when q = 0.
[[nodiscard]] double model_sbr(const NoiseModelParams& params);

struct CurvePoint {
  double p = 0.0;
  double sbr = 0.0;
  double fidelity = 0.0;
};

/// One (SBR, fidelity) point per mean photon number, sorted by SBR.
/// `p_grid` must be strictly ascending and positive.
[[nodiscard]] std::vector<CurvePoint> fidelity_sbr_curve(double eta, double q, int n_max,
                                                         std::span<const double> p_grid);

/// Monte Carlo estimate of detection_probs: per trial draws n ~ Poisson(eta p)
/// and m ~ Poisson(q) and, when n + m > 0, records a signal detection with
/// probability n/(n+m) and a background detection otherwise.
///
/// Deterministic for a fixed seed and independent of `workers`
/// (0 selects the hardware concurrency).
[[nodiscard]] DetectionProbs mc_detection_oracle(const NoiseModelParams& params,
                                                 std::uint64_t trials, std::uint64_t seed,
                                                 unsigned workers = 0);

/// Same estimator with two independent background sources of mean q/2 each.
[[nodiscard]] DetectionProbs mc_detection_oracle_split_background(const NoiseModelParams& params,
                                                                  std::uint64_t trials,
                                                                  std::uint64_t seed,
                                                                  unsigned workers = 0);

} // namespace qmem
