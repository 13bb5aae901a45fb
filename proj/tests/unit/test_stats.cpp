#include "twochoice/errors.hpp"
#include "twochoice/stats.hpp"

#include <doctest.h>

#include <cmath>

using namespace twochoice;

TEST_CASE("nearest-rank quantiles") {
  const std::vector<double> xs{5, 1, 4, 2, 3};
  CHECK(stats::quantile(xs, 0.0) == 1);
  CHECK(stats::median(xs) == 3);
  CHECK(stats::quantile(xs, 0.9) == 5);
  CHECK(stats::quantile(xs, 0.2) == 1);
  CHECK(stats::mean(xs) == 3);
  CHECK(stats::stddev(xs) == doctest::Approx(std::sqrt(2.5)));
}

TEST_CASE("power fit on an exact square root") {
  std::vector<double> m, y;
  for (int e = 10; e <= 20; e += 2) {
    m.push_back(std::ldexp(1.0, e));
    y.push_back(std::sqrt(m.back()));
  }
  const auto fit = stats::fit_exponent(m, y);
  CHECK(std::abs(fit.exponent - 0.5) < 1e-9);
  CHECK(fit.points == m.size());
}

TEST_CASE("power fit on a logarithm is small") {
  std::vector<double> m, y;
  for (int e = 12; e <= 16; ++e) {
    m.push_back(std::ldexp(1.0, e));
    y.push_back(std::log(m.back()));
  }
  CHECK(stats::fit_exponent(m, y).exponent < 0.2);
}

TEST_CASE("power fit needs three positive points") {
  const std::vector<double> m{1, 2};
  const std::vector<double> y{1, 2};
  CHECK_THROWS_AS(stats::fit_exponent(m, y), ConfigError);
  const std::vector<double> m3{1, 2, 4};
  const std::vector<double> y3{1, 0, 2};
  CHECK_THROWS_AS(stats::fit_exponent(m3, y3), ConfigError);
}

TEST_CASE("chi-square against uniform") {
  const std::vector<std::uint64_t> even{100, 100, 100, 100};
  const auto a = stats::chi_square_uniform(even);
  CHECK(a.statistic == 0.0);
  CHECK(a.dof == 3);
  CHECK(a.passes(0.01));
  const std::vector<std::uint64_t> lopsided{400, 0, 0, 0};
  const auto b = stats::chi_square_uniform(lopsided);
  CHECK(b.statistic == doctest::Approx(1200.0));
  CHECK(!b.passes(1e-9));
}

TEST_CASE("chi-square with explicit probabilities") {
  const std::vector<std::uint64_t> counts{250, 750};
  const std::vector<double> probs{0.25, 0.75};
  CHECK(stats::chi_square(counts, probs).statistic == 0.0);
  const std::vector<std::uint64_t> few{2, 2};
  const std::vector<double> half{0.5, 0.5};
  CHECK_THROWS_AS(stats::chi_square(few, half), ConfigError);
}
