#include "twochoice/stats.hpp"

#include "twochoice/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>

namespace twochoice::stats {

double mean(std::span<const double> xs) {
  require(!xs.empty(), "mean of empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double stddev(std::span<const double> xs) {
  require(xs.size() >= 2, "stddev needs two values");
  const double mu = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double quantile(std::vector<double> xs, double q) {
  require(!xs.empty(), "quantile of empty sample");
  require(q >= 0.0 && q <= 1.0, "quantile level outside [0, 1]");
  std::sort(xs.begin(), xs.end());
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(xs.size())));
  rank = std::clamp<std::size_t>(rank, 1, xs.size());
  return xs[rank - 1];
}

double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

PowerFit fit_exponent(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() == ys.size(), "fit needs matching x and y");
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (ys[i] <= 0.0 || xs[i] <= 0.0) continue;
    lx.push_back(std::log(xs[i]));
    ly.push_back(std::log(ys[i]));
  }
  require(lx.size() >= 3, "fit needs at least three positive points");
  const auto k = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / k;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / k;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  require(sxx > 0.0, "fit needs distinct x values");
  PowerFit fit;
  fit.exponent = sxy / sxx;
  fit.log_prefactor = my - fit.exponent * mx;
  fit.points = lx.size();
  double rss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - fit.log_prefactor - fit.exponent * lx[i];
    rss += r * r;
  }
  fit.stderr_exponent = lx.size() > 2 ? std::sqrt(rss / (k - 2.0) / sxx) : 0.0;
  return fit;
}

ChiSquare chi_square(std::span<const std::uint64_t> counts, std::span<const double> probabilities) {
  require(counts.size() == probabilities.size(), "chi-square needs one probability per cell");
  require(counts.size() >= 2, "chi-square needs at least two cells");
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}));
  ChiSquare out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double expected = total * probabilities[i];
    if (expected < 5.0) throw ConfigError("chi-square expected count below 5");
    const double d = static_cast<double>(counts[i]) - expected;
    out.statistic += d * d / expected;
  }
  out.dof = counts.size() - 1;
  boost::math::chi_squared dist(static_cast<double>(out.dof));
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  return out;
}

ChiSquare chi_square_uniform(std::span<const std::uint64_t> counts) {
  const std::vector<double> p(counts.size(), 1.0 / static_cast<double>(counts.size()));
  return chi_square(counts, p);
}

}  // namespace twochoice::stats
