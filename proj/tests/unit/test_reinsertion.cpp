#include "twochoice/errors.hpp"
#include "twochoice/reinsertion.hpp"
#include "twochoice/rng.hpp"
#include "twochoice/script.hpp"
#include "twochoice/strategies.hpp"

#include <doctest.h>

#include <cmath>

using namespace twochoice;

TEST_CASE("event window arithmetic") {
  ReinsertionAttackParams p;
  p.k = 1024;
  p.c_t = 3.0;
  p.e_tolerance = 1.0;
  const EventWindow w = event_window(p);
  // k/12 = 85.33, t = 96, tolerance 32.
  CHECK(w.a12_lo == 150);
  CHECK(w.a12_hi == 213);
  CHECK(w.a34_lo == 0);
  CHECK(w.a34_hi == 21);
  p.k = 64;
  p.e_tolerance = 2.0;
  CHECK_THROWS_AS(event_window(p), ConfigError);
}

TEST_CASE("generous window with t = 0 accepts at once") {
  ReinsertionAttackParams p;
  p.k = 144;
  p.c_t = 0.0;
  p.e_tolerance = 3.0;
  CHECK(event_probability(p) > 0.9);
  Rng rng(1);
  std::uint64_t tries = 0;
  for (int i = 0; i < 20; ++i) tries += sample_AB_rejection(p, rng).tries;
  CHECK(tries < 40);
}

TEST_CASE("window probability agrees with rejection sampling") {
  ReinsertionAttackParams p;
  p.k = 64;
  p.c_t = 1.0;
  p.e_tolerance = 1.0;
  const double pr = event_probability(p);
  Rng rng(2);
  std::uint64_t tries = 0;
  const int accepts = 400;
  for (int i = 0; i < accepts; ++i) tries += sample_AB_rejection(p, rng).tries;
  const double est = accepts / static_cast<double>(tries);
  CHECK(std::abs(est - pr) < 4 * std::sqrt(pr * (1 - pr) / static_cast<double>(tries)) + 0.25 * pr);
}

TEST_CASE("the wide window at c_t = 3 is rare") {
  // Tolerance 2 sqrt(k) at t = 3 sqrt(k) leaves the a34 window around 1.1
  // standard deviations below its mean and a12 1.7 above, jointly rare.
  ReinsertionAttackParams p;
  p.k = 14400;
  p.c_t = 3.0;
  p.e_tolerance = 2.0;
  CHECK(event_probability(p) < 1e-3);
}

TEST_CASE("conditioned sampler always lands in the window") {
  ReinsertionAttackParams p;
  p.k = 1024;
  p.c_t = 3.0;
  p.e_tolerance = 1.0;
  const EventWindow w = event_window(p);
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const HashAssignment h = sample_AB_conditioned(p, rng);
    CHECK(h.a.size() == 1024);
    CHECK(h.b.size() == 1024);
    const auto [a12, a34] = count_event_pairs(h.a);
    CHECK(a12 == h.a12);
    CHECK(a34 == h.a34);
    CHECK(w.contains(a12, a34));
    for (const auto& pr : h.a) CHECK(pr.first != pr.second);
  }
}

TEST_CASE("splitting block is ball-count neutral") {
  const std::int64_t k = 8;
  ScriptBuilder b(64, "test", nlohmann::json::object(), 0, true);
  const auto A = b.insert_fresh(k);
  const auto B = b.insert_fresh(k);
  const auto X1 = b.insert_fresh(k);
  const auto X2 = b.insert_fresh(k);
  b.erase_all(A);
  b.erase_all(B);
  const std::int64_t before = b.present();
  Rng rng(4);
  const auto [Y, Z] = append_splitting_block(b, A, B, X1, X2, rng, "blk");
  CHECK(b.present() == before);
  CHECK(Y.size() == static_cast<std::size_t>(k));
  CHECK(Z.size() == static_cast<std::size_t>(k));
  const AdversaryScript s = b.finish();
  CHECK(s.checkpoints.contains("blk:step2"));
  CHECK(validate_script(s, 64, true).final_present == before);
}

TEST_CASE("compiled attack length matches the closed form") {
  ReinsertionAttackParams p;
  p.k = 16;
  p.c_t = 1.0;
  p.e_tolerance = 1.5;
  p.m = 1 << 14;
  Rng rng(5);
  const ReinsertionAttack at = build_reinsertion_attack(p, rng);
  CHECK(at.script.size() == reinsertion_predicted_length(p));
  CHECK(validate_script(at.script, p.resolved_m(), true).peak_present == p.resolved_m());

  GeneralizedParams g;
  g.M = p.resolved_m();
  GeneralizedModulatedGreedyPolicy pol(g);
  const ReinsertionRunReport rep = run_reinsertion_attack(at, pol, 6);
  CHECK(rep.ops == at.script.size());
  CHECK(rep.hash_mismatches == 0);
  CHECK(rep.value_bounds_ok);
  CHECK(rep.block_step2_gap.size() == at.splits.size() * static_cast<std::size_t>(p.resolved_blocks()));
}

TEST_CASE("single block shifts A above B against the generalized strategy") {
  ReinsertionAttackParams p;
  p.k = 256;
  p.c_t = 1.5;
  p.e_tolerance = 1.0;
  GeneralizedParams g;
  g.M = 16 * p.k;
  double gap = 0.0;
  for (std::uint64_t s = 0; s < 40; ++s) {
    GeneralizedModulatedGreedyPolicy pol(g);
    const BlockTrial t = single_block_trial(p, 16 * p.k, pol, s);
    gap += static_cast<double>(t.vA - t.vB);
    CHECK(std::abs(static_cast<double>(t.vY - t.vA)) < 6 * std::sqrt(256.0));
  }
  // At this k the O(sqrt k) loss is comparable to t; only the sign is checked.
  CHECK(gap / 40.0 > 0.0);
}
