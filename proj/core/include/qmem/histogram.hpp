#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qmem {

/// Half-open time window [start, end) in microseconds.
struct Window {
  double start = 0.0;
  double end = 0.0;

  /// Throws InvalidArgument unless 0 <= start < end.
  static Window make(double start, double end);
  [[nodiscard]] double duration() const noexcept { return end - start; }
};

/// Photon arrival times accumulated over many trials.
struct ArrivalHistogram {
  double t_start = 0.0;   ///< microseconds
  double bin_width = 0.05; ///< microseconds
  std::vector<std::uint64_t> counts;
  std::uint64_t n_trials = 1;
  std::string label;

  [[nodiscard]] double t_end() const noexcept {
    return t_start + bin_width * static_cast<double>(counts.size());
  }
  [[nodiscard]] std::uint64_t total() const noexcept;
  /// Throws InvalidData if n_trials == 0, bin_width <= 0 or counts is empty.
  void validate() const;
};

/// Abscissa/ordinate pairs of a measured sweep.
struct SweepSeries {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> y_err;

  [[nodiscard]] std::size_t size() const noexcept { return x.size(); }
  /// Error of point i, 0 when no errors are attached.
  [[nodiscard]] double error_at(std::size_t i) const noexcept { return y_err.empty() ? 0.0 : y_err[i]; }
  /// y_err may be empty (no statistical errors). Throws InvalidData on
  /// length mismatch or, when `increasing`, on
  /// non-increasing abscissas.
  void validate(bool increasing = true) const;
};

} // namespace qmem
