#include "twochoice/errors.hpp"
#include "twochoice/rng.hpp"
#include "twochoice/stats.hpp"
#include "twochoice/strategies.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace twochoice;

namespace {

LoadView view_of(const std::vector<std::int64_t>& loads, std::int64_t m_cap, std::int64_t m_seen = -1) {
  const std::int64_t present = std::accumulate(loads.begin(), loads.end(), std::int64_t{0});
  return LoadView{loads, present, m_cap, m_seen < 0 ? present : m_seen};
}

Rational sum(const std::vector<Rational>& v) {
  Rational s = 0;
  for (const auto& x : v) s += x;
  return s;
}

}  // namespace

TEST_CASE("single choice") {
  CHECK(single_choice({2, 0}).bin == 2);
  CHECK(single_choice({0, 0}).bin == 0);
}

TEST_CASE("greedy picks the strict minimum and flips on ties") {
  Rng rng(1);
  const std::vector<std::int64_t> loads{5, 3, 0, 0};
  CHECK(greedy({0, 1}, view_of(loads, 16), rng).bin == 1);
  const std::vector<std::int64_t> flat{1, 1, 1, 1};
  int first = 0;
  for (int i = 0; i < 10'000; ++i) first += greedy({0, 1}, view_of(flat, 16), rng).bin == 0 ? 1 : 0;
  CHECK(std::abs(first - 5000) < 4 * 50);
}

TEST_CASE("greedy on (2,0,0,0) takes bin 0 only from the pair (0,0)") {
  Rng rng(2);
  const std::vector<std::int64_t> loads{2, 0, 0, 0};
  int hits = 0;
  for (Bin i = 0; i < 4; ++i)
    for (Bin j = 0; j < 4; ++j) hits += greedy({i, j}, view_of(loads, 16), rng).bin == 0 ? 1 : 0;
  CHECK(hits == 1);  // 1/16 of the pairs
}

TEST_CASE("bias rule probabilities") {
  const std::vector<std::int64_t> flat{3, 3, 3, 3};
  CHECK(first_choice_probability(flat, Rational(5), {0, 2}) == Rational(1, 2));
  const std::vector<std::int64_t> loads{2, 0};
  CHECK(first_choice_probability(loads, Rational(8), {0, 1}) == Rational(3, 8));
}

TEST_CASE("selection law on (2,0,0,0) with headroom 10") {
  const std::vector<std::int64_t> loads{2, 0, 0, 0};
  const Rational T = threshold(loads, Rational(10));
  CHECK(T == Rational(19, 2));
  const std::vector<Rational> want{Rational(8, 38), Rational(10, 38), Rational(10, 38), Rational(10, 38)};
  CHECK(selection_by_enumeration(loads, T) == want);
  CHECK(selection_closed_form(loads, T) == want);
  CHECK(selection_distribution(loads, T) == want);
}

TEST_CASE("selection law: uniform on equal loads, both methods agree on (1,0)") {
  const std::vector<std::int64_t> flat{4, 4, 4};
  for (const auto& p : selection_distribution(flat, Rational(7))) CHECK(p == Rational(1, 3));
  const std::vector<std::int64_t> loads{1, 0};
  const auto a = selection_by_enumeration(loads, Rational(2));
  const auto b = selection_closed_form(loads, Rational(2));
  CHECK(a == b);
  CHECK(sum(a) == 1);
  CHECK_THROWS_AS(selection_distribution(std::vector<std::int64_t>{5, 0}, Rational(2)), std::domain_error);
}

TEST_CASE("modulated greedy halts only when the spread passes T") {
  Rng rng(3);
  ModulatedParams p{1.0, 0.0, false};
  // m = 16, n = 4: headroom 4 + ln 16 = 6.77.
  const std::vector<std::int64_t> ok{5, 1, 1, 1};
  CHECK(std::holds_alternative<StrategyDecision>(modulated_greedy({0, 1}, view_of(ok, 16), p, rng)));
  const std::vector<std::int64_t> bad{7, 0, 0, 0};
  CHECK(std::holds_alternative<Halt>(modulated_greedy({0, 1}, view_of(bad, 16), p, rng)));
}

TEST_CASE("modulated greedy sampling matches the exact rule") {
  Rng rng(4);
  ModulatedParams p{2.0, 0.0, false};
  const std::vector<std::int64_t> loads{6, 2, 3, 1};
  const LoadView v = view_of(loads, 32);
  const Rational T = threshold(loads, modulated_headroom(32, 4, p));
  const double want = to_double(first_choice_probability(loads, T, {0, 3}));
  const int draws = 200'000;
  int first = 0;
  for (int i = 0; i < draws; ++i) {
    const auto d = std::get<StrategyDecision>(modulated_greedy({0, 3}, v, p, rng));
    first += d.bin == 0 ? 1 : 0;
    CHECK(std::abs(d.p_used - (d.bin == 0 ? want : 1 - want)) < 1e-12);
  }
  CHECK(std::abs(first - draws * want) < 4 * std::sqrt(draws * want * (1 - want)));
}

TEST_CASE("generalized params") {
  GeneralizedParams g;
  g.c = 1.0;
  g.epsilon = 0.5;
  g.M = 8;
  CHECK(g.delta() == static_cast<std::int64_t>(std::ceil(4.0 * std::log(8.0))));
  g.epsilon = 0.0;
  CHECK_THROWS_AS(g.validate(), ConfigError);
}

TEST_CASE("generalized greedy: equal loads are fair and uncorrupted") {
  Rng rng(5);
  GeneralizedParams g;
  g.M = 64;
  const std::vector<std::int64_t> flat{2, 2, 2, 2};
  for (int i = 0; i < 100; ++i) {
    const auto d = generalized_modulated_greedy({1, 2}, view_of(flat, 64), g, rng);
    CHECK(!d.corrupted);
    CHECK(d.p_used == 0.5);
  }
}

TEST_CASE("generalized greedy: corrupted color law is exact") {
  GeneralizedParams g;
  g.c = 1.0;
  g.epsilon = 0.5;
  g.M = 8;  // delta 9
  const std::vector<std::int64_t> loads{9, 0, 0, 3};
  // ceil(12/4) + 9 = 12, T = 9, spread 9 > eps T.
  const auto dist = generalized_color_distribution(loads, 12, g);
  const std::vector<Rational> want{Rational(3, 36), Rational(12, 36), Rational(12, 36), Rational(9, 36)};
  CHECK(dist == want);

  Rng rng(6);
  std::vector<std::uint64_t> counts(4, 0);
  const int draws = 100'000;
  for (int i = 0; i < draws; ++i) {
    const auto d = generalized_modulated_greedy({0, 1}, view_of(loads, 64, 12), g, rng);
    REQUIRE(d.corrupted);
    CHECK((d.bin == 0 || d.bin == 1));
    ++counts[d.color];
  }
  std::vector<double> probs;
  for (const auto& r : want) probs.push_back(to_double(r));
  CHECK(stats::chi_square(counts, probs).passes(0.001));
}

TEST_CASE("generalized greedy: uncorrupted bias stays within eps/2 of fair") {
  Rng rng(7);
  Rng pick(8);
  GeneralizedParams g;
  g.M = 1024;
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<std::int64_t> loads(8);
    for (auto& l : loads) l = static_cast<std::int64_t>(pick.below(40));
    const HashPair pair{static_cast<Bin>(pick.below(8)), static_cast<Bin>(pick.below(8))};
    const auto d = generalized_modulated_greedy(pair, view_of(loads, 1024), g, rng);
    if (d.corrupted || pair.first == pair.second) continue;
    CHECK(d.p_used >= 0.5 - g.epsilon / 2 - 1e-12);
    CHECK(d.p_used <= 0.5 + g.epsilon / 2 + 1e-12);
  }
}

TEST_CASE("one-plus-beta adapter") {
  GeneralizedParams g;
  g.M = 256;
  const std::vector<std::int64_t> flat{3, 3, 3, 3};
  Rng rng(9);
  g.epsilon = 0.25;
  CHECK(one_plus_beta_adapter(TwoBins{{0, 1}}, view_of(flat, 256), 0.5, g, rng).residual == 0.5);
  CHECK(one_plus_beta_residual(flat, 12, g, Rational(1, 2), {0, 1}) == Rational(1, 2));
  const auto one = one_plus_beta_adapter(OneBin{3}, view_of(flat, 256), 0.5, g, rng);
  CHECK(one.decision.bin == 3);

  // beta = 1: q is the generalized rule's own probability with eps = 1/2.
  g.epsilon = 0.5;
  const std::vector<std::int64_t> loads{5, 1, 2, 4};
  const auto view = view_of(loads, 256);
  const std::int64_t H = 3 + g.delta();
  const Rational T = Rational(H) - Rational(12, 4);
  const Rational p = Rational(1, 2) + Rational(loads[3] - loads[0]) / (2 * T);
  CHECK(one_plus_beta_residual(loads, 12, g, Rational(1), {0, 3}) == p);
  CHECK(std::abs(one_plus_beta_adapter(TwoBins{{0, 3}}, view, 1.0, g, rng).residual - to_double(p)) < 1e-12);
}

TEST_CASE("one-plus-beta policy marginal matches the exact law") {
  const double beta = 0.5;
  GeneralizedParams g;
  g.M = 256;
  const std::vector<std::int64_t> loads{6, 2, 4, 3, 5, 1, 4, 3};
  const auto exact = one_plus_beta_marginal(loads, 28, g, Rational(1, 2));
  CHECK(sum(exact) == 1);
  OnePlusBetaPolicy pol(beta, g);
  Rng rng(10);
  Rng hash(11);
  const LoadView view = view_of(loads, 256, 28);
  const int draws = 1'000'000;
  std::vector<std::int64_t> counts(8, 0);
  for (int i = 0; i < draws; ++i) {
    const HashPair pair{static_cast<Bin>(hash.below(8)), static_cast<Bin>(hash.below(8))};
    ++counts[std::get<StrategyDecision>(pol.place(pair, view, rng)).bin];
  }
  for (std::size_t k = 0; k < 8; ++k) {
    const double p = to_double(exact[k]);
    CHECK(std::abs(static_cast<double>(counts[k]) - draws * p) < 4 * std::sqrt(draws * p * (1 - p)));
  }
  CHECK(pol.residual_min() >= 0.0);
  CHECK(pol.residual_max() <= 1.0);
}
