#include "twochoice/adversaries.hpp"
#include "twochoice/engine.hpp"
#include "twochoice/errors.hpp"
#include "twochoice/rng.hpp"
#include "twochoice/script.hpp"
#include "twochoice/stats.hpp"
#include "twochoice/strategies.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace twochoice;

TEST_CASE("gap-to-overload with k = 0 is a plain fill") {
  const AdversaryScript s = gap_to_overload_script(0, 64, 10);
  CHECK(s.size() == 54);
  for (const auto& op : s.ops) CHECK(op.is_insert());
  CHECK(s.checkpoints.at("X2") == 54);
  CHECK(s.checkpoints.at("X3") == 54);
}

TEST_CASE("gap-to-overload phases and label sets") {
  const AdversaryScript s = gap_to_overload_script(8, 64, 10);
  CHECK(s.checkpoints.at("X1") == 8);
  CHECK(s.checkpoints.at("X2") == 54);
  CHECK(s.checkpoints.at("X3") == 54 + 16);
  CHECK(s.label_sets.at("x").size() == 8);
  CHECK(s.label_sets.at("y").size() == 46);
  CHECK(s.label_sets.at("x").front() == 10);  // start-state labels are [0, 10)
  CHECK_THROWS_AS(gap_to_overload_script(60, 64, 10), ConfigError);
}

TEST_CASE("uniform placement leaves one extra ball whose bin is uniform") {
  std::vector<std::uint64_t> counts(4, 0);
  GreedyPolicy greedy;
  for (std::uint64_t trial = 0; trial < 4000; ++trial) {
    ScriptBuilder b(256, "test");
    b.insert_fresh(32);  // balanced start from the seeds below
    const BallLabel survivor = append_uniform_placement(b, 64);
    const AdversaryScript s = b.finish();
    CHECK(validate_script(s, 256, false).final_present == 33);
    System sys = System::create(4, 256);
    for (BallLabel l = 0; l < 32; ++l) sys.seed_ball(l, static_cast<Bin>(l % 4));
    AdversaryScript rest = s;
    rest.ops.erase(rest.ops.begin(), rest.ops.begin() + 32);
    RunStreams rs = RunStreams::derive(trial);
    run(sys, rest, greedy, rs);
    ++counts[sys.ball(survivor).bin];
  }
  CHECK(stats::chi_square_uniform(counts).passes(0.01));
}

TEST_CASE("load reduction ends with exactly its size present") {
  ScriptBuilder b(256, "test");
  b.insert_fresh(50);
  append_load_reduction(b, 40);
  CHECK(b.present() == 40);
}

TEST_CASE("full_half phase section length matches the closed form") {
  for (std::int64_t phases : {1, 2, 3}) {
    GreedyAttackParams p;
    p.m = 1024;
    p.mode = GreedyAttackMode::FullHalf;
    p.phases = phases;
    p.finisher_k = 8;
    Rng rng(1);
    const AdversaryScript s = greedy_attack_full(p, rng);
    p.resolve();
    CHECK(s.checkpoints.at("phases_done") == full_half_phase_ops(p));
    CHECK(validate_script(s, p.m, false).peak_present <= p.m);
  }
}

TEST_CASE("warmup quarter script shape") {
  GreedyAttackParams p;
  p.m = 4096;
  Rng rng(2);
  const AdversaryScript s = greedy_attack_full(p, rng);
  CHECK(s.checkpoints.contains("warmup"));
  CHECK(s.checkpoints.contains("X2"));
  CHECK(s.checkpoints.contains("X3"));
  CHECK(validate_script(s, p.m, false).peak_present == p.m);
  CHECK_THROWS_AS(parse_mode("sideways"), ConfigError);
}

TEST_CASE("random deletion warmup leaves the lightest bin sqrt(m) behind") {
  const std::int64_t m = 1 << 16;
  GreedyPolicy greedy;
  std::vector<double> gaps;
  for (std::uint64_t trial = 0; trial < 60; ++trial) {
    Rng srng = Rng::derive(trial, StreamRole::Script);
    const AdversaryScript s = random_deletion_warmup(m, 0.5, srng);
    System sys = System::create(4, m);
    RunStreams rs = RunStreams::derive(trial);
    run(sys, s, greedy, rs);
    const auto loads = sys.loads();
    const auto [lo, hi] = std::minmax_element(loads.begin(), loads.end());
    double others = 0;
    for (auto l : loads) others += static_cast<double>(l);
    others = (others - static_cast<double>(*lo)) / 3.0;
    gaps.push_back(others - static_cast<double>(*lo));
  }
  CHECK(stats::median(gaps) >= 0.3 * std::sqrt(m / 8.0));
}

TEST_CASE("equalization from equal loads is immediate") {
  const EqualizationReport r = equalization_probe(0, 8, 3);
  CHECK(r.equal_instant);
  CHECK(r.first_equal_step == 0);
}

TEST_CASE("equalization at moderate k") {
  int equal = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const EqualizationReport r = equalization_probe(1000, 8, s);
    equal += r.equal_instant ? 1 : 0;
    CHECK(r.final_spread <= 0.75 * std::log(1000.0) + 1);
  }
  CHECK(equal >= 48);
}

TEST_CASE("gap trial records the engineered start gap") {
  const GapTrial t = gap_to_overload_trial(64, 4096, 9);
  CHECK(t.start_gap == 65);
  CHECK(t.best() >= t.x2_overload);
}
