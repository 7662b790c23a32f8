#pragma once

#include <cstdint>

#include "qmem/fit_result.hpp"
#include "qmem/histogram.hpp"

namespace qmem {

/// A scalar estimate with its statistical error.
struct Estimate {
  double value = 0.0;
  double error = 0.0;
  /// Set when a background-subtracted numerator came out negative. The value
  /// is kept unclamped.
  bool negative = false;
};

/// Sum of the bins covering [w.start, w.end).
///
/// Throws InvalidArgument when the window edges are not on bin boundaries or
/// fall outside the histogram span.
[[nodiscard]] std::uint64_t roi_counts(const ArrivalHistogram& hist, const Window& w);

/// (ROI counts - signal-free counts) of the storage histogram divided by the
/// total reference counts, both taken per pulse.
///
/// Throws InvalidArgument for windows of unequal duration and InvalidData
/// when the reference holds no counts.
[[nodiscard]] Estimate storage_efficiency(const ArrivalHistogram& storage,
                                          const ArrivalHistogram& reference, const Window& roi,
                                          const Window& bg);

/// [(signal + background) - background] / background from one histogram.
/// Throws UndefinedQuantity when the signal-free window is empty.
[[nodiscard]] Estimate sbr(const ArrivalHistogram& storage, const Window& roi, const Window& bg);

/// Raw-count form of sbr().
[[nodiscard]] double sbr_from_counts(double roi, double background);

/// Weighted fit of y = A exp(-t / tau).
///
/// Initialized from a log-linear fit, then refined by Gauss-Newton.
/// Parameters "amplitude" and "tau". Throws InvalidData for nonpositive
/// ordinates and FitError when tau is not a positive finite number.
[[nodiscard]] FitResult fit_exponential_decay(const SweepSeries& series);

/// Fits y = a * P^c to background minus technical counts.
///
/// Parameters "a" and "c". The exponent is free so that c ~ 0.5 is an
/// outcome of the fit. Throws InvalidArgument on mismatched abscissas and
/// FitError when the subtracted series is identically zero.
[[nodiscard]] FitResult fit_sqrt_background(const SweepSeries& background,
                                            const SweepSeries& technical);

/// Weighted power-law fit y = a * x^c on an already subtracted series.
[[nodiscard]] FitResult fit_power_law(const SweepSeries& series);

} // namespace qmem
