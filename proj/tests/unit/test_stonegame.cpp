#include "twochoice/adversaries.hpp"
#include "twochoice/errors.hpp"
#include "twochoice/rng.hpp"
#include "twochoice/script.hpp"
#include "twochoice/stonegame.hpp"

#include <doctest.h>

#include <cmath>

using namespace twochoice;

TEST_CASE("fresh fixed game holds Q stones of every color") {
  const StoneGame g = StoneGame::fixed(4, 7);
  for (auto s : g.inactive_color_counts()) CHECK(s == 7);
  CHECK(g.inactive_size() == 28);
  CHECK(g.active_size() == 0);
}

TEST_CASE("activation is uniform over the inactive multiset") {
  // s = (8, 10, 10, 10): color 0 with probability 8/38.
  std::vector<Stone> inactive;
  for (Bin k = 0; k < 4; ++k)
    for (std::uint32_t b = 0; b < 10; ++b)
      if (!(k == 0 && b >= 8)) inactive.push_back({k, b});
  std::vector<Stone> active{{0, 8}, {0, 9}};
  const StoneGame base = StoneGame::from_bags(4, StoneVariant::Fixed, 10, 0, inactive, active);
  Rng rng(1);
  const int draws = 100'000;
  int zero = 0;
  for (int i = 0; i < draws; ++i) {
    StoneGame g = base;
    zero += g.activate(rng).color == 0 ? 1 : 0;
  }
  const double p = 8.0 / 38.0;
  CHECK(std::abs(zero - draws * p) < 4 * std::sqrt(draws * p * (1 - p)));
}

TEST_CASE("all-active fixed game refuses to activate") {
  StoneGame g = StoneGame::fixed(2, 1);
  Rng rng(2);
  g.activate(rng);
  g.activate(rng);
  CHECK_THROWS_AS(g.activate(rng), OperationError);
}

TEST_CASE("generalized game adds a batch when inactive drops below delta * n") {
  StoneGame g = StoneGame::generalized(2, 2);
  CHECK(g.inactive_size() == 4);
  Rng rng(3);
  g.activate(rng);  // 3 left, fewer than 4
  CHECK(g.inactive_size() == 5);
  CHECK(g.batches() == 3);
  CHECK(g.total_stones() == 6);
}

TEST_CASE("deactivation returns the r-th most recent stone") {
  StoneGame g = StoneGame::fixed(3, 2);
  const Stone a = g.activate_index(0);
  const Stone b = g.activate_index(0);
  const Stone c = g.activate_index(0);
  const auto before = g.active_oldest_first();
  CHECK(before == std::vector<Stone>{a, b, c});
  CHECK_THROWS_AS(g.deactivate(4), OperationError);
  CHECK(g.deactivate(1) == c);
  CHECK(g.deactivate(2) == a);
  CHECK(g.active_oldest_first() == std::vector<Stone>{b});
}

TEST_CASE("activate / deactivate conserves per-color totals") {
  StoneGame g = StoneGame::fixed(4, 5);
  Rng rng(4);
  for (int i = 0; i < 12; ++i) g.activate(rng);
  for (int i = 0; i < 5; ++i) g.deactivate(1 + static_cast<std::size_t>(rng.below(g.active_size())));
  for (Bin k = 0; k < 4; ++k) CHECK(g.inactive_color_counts()[k] + g.active_color_counts()[k] == 5);
}

TEST_CASE("constructed state with every color-0 stone active") {
  std::vector<Stone> inactive;
  std::vector<Stone> active;
  for (Bin k = 0; k < 3; ++k)
    for (std::uint32_t b = 0; b < 4; ++b) (k == 0 ? active : inactive).push_back({k, b});
  const StoneGame g = StoneGame::from_bags(3, StoneVariant::Fixed, 4, 0, inactive, active);
  CHECK(inactive_color_counts(g)[0] == 0);
  CHECK(inactive_color_counts(g)[1] == 4);
}

TEST_CASE("coupling: single insert into an empty system") {
  ScriptBuilder b(64, "test");
  b.insert();
  CouplingConfig cfg;
  cfg.n = 8;
  cfg.m = 64;
  cfg.record_trace = true;
  const CouplingReport rep = coupled_run(b.finish(), cfg, 1);
  CHECK(rep.ok());
  REQUIRE(rep.trace.size() == 1);
  CHECK(rep.trace[0].balls_per_color == rep.trace[0].stones_per_color);
}

TEST_CASE("coupling: a mixed script stays exact for both variants") {
  Rng srng(5);
  const AdversaryScript script = mixed_random(4096, 20'000, 0.55, srng);
  for (StoneVariant v : {StoneVariant::Fixed, StoneVariant::Generalized}) {
    CouplingConfig cfg;
    cfg.variant = v;
    const CouplingReport rep = coupled_run(script, cfg, 6);
    CHECK(rep.violations == 0);
    CHECK(rep.enumeration_checks > 0);
  }
}

TEST_CASE("coupling: generalized stone total tracks ceil(m_seen / n)") {
  ScriptBuilder b(4096, "test");
  b.insert_fresh(1000);
  const AdversaryScript script = b.finish();
  CouplingConfig cfg;
  cfg.variant = StoneVariant::Generalized;
  cfg.record_trace = true;
  const CouplingReport rep = coupled_run(script, cfg, 7);
  CHECK(rep.ok());
  GeneralizedParams g = cfg.generalized;
  g.M = cfg.m;
  // One batch per unit of ceil(m_seen / n) beyond the initial delta batches.
  CHECK(rep.final_batches == (1000 + 7) / 8 + g.delta());
  std::int64_t prev = 0;
  for (const auto& s : rep.trace) {
    std::int64_t total = 0;
    for (auto x : s.stones_per_color) total += x;
    CHECK(total >= prev);
    prev = total;
  }
}

TEST_CASE("uniform subset test: all pairs of a 2x2 game equally likely") {
  ScriptBuilder b(4, "test");
  b.insert_fresh(2);
  Rng rng(8);
  const SubsetReport rep = uniform_subset_test(b.finish(), 2, 2, 100'000, rng);
  CHECK(rep.tallies.size() == 6);
  CHECK(rep.chi.p_value > 0.01);
}

TEST_CASE("uniform subset test: round trip leaves the full set") {
  ScriptBuilder b(4, "test");
  b.insert();
  b.erase_rank(1);
  Rng rng(9);
  const SubsetReport rep = uniform_subset_test(b.finish(), 2, 2, 1000, rng);
  CHECK(rep.degenerate);
  CHECK(rep.inactive_size == 4);
}

TEST_CASE("one activation with Q = 1 picks each color half the time") {
  Rng rng(10);
  const int draws = 50'000;
  int zero = 0;
  for (int i = 0; i < draws; ++i) {
    StoneGame g = StoneGame::fixed(2, 1);
    zero += g.activate(rng).color == 0 ? 1 : 0;
  }
  CHECK(std::abs(zero - draws / 2) < 4 * std::sqrt(draws * 0.25));
}
