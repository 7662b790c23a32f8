#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace qmem {

/// Output of every fit in the library: named estimates with uncertainties.
struct FitResult {
  std::vector<std::pair<std::string, double>> params;
  std::vector<std::pair<std::string, double>> errors; ///< standard errors, same order as params
  double residual_norm = 0.0;
  std::size_t n_points = 0;

  /// Value of a named parameter; throws std::out_of_range if absent.
  [[nodiscard]] double param(std::string_view name) const;
  [[nodiscard]] double error(std::string_view name) const;

  void set(std::string name, double value, double err);
};

} // namespace qmem
