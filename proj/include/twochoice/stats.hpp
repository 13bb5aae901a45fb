#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace twochoice::stats {

double mean(std::span<const double> xs);
double stddev(std::span<const double> xs);  // sample (n - 1)

/// Nearest-rank quantile: the ceil(q * N)-th smallest value (1-based), q in [0, 1].
double quantile(std::vector<double> xs, double q);
double median(std::vector<double> xs);

struct PowerFit {
  double exponent = 0.0;
  double log_prefactor = 0.0;
  double stderr_exponent = 0.0;
  std::size_t points = 0;
};

/// Least squares on (log x, log y). Points with y <= 0 are dropped; at least
/// three must remain or ConfigError is thrown.
PowerFit fit_exponent(std::span<const double> xs, std::span<const double> ys);

struct ChiSquare {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 1.0;

  /// Statistic below the critical value at level alpha.
  [[nodiscard]] bool passes(double alpha) const noexcept { return p_value > alpha; }
};

/// Goodness of fit against the given cell probabilities. Throws ConfigError
/// when an expected count is below 5.
ChiSquare chi_square(std::span<const std::uint64_t> counts, std::span<const double> probabilities);
ChiSquare chi_square_uniform(std::span<const std::uint64_t> counts);

}  // namespace twochoice::stats
