#include "twochoice/engine.hpp"
#include "twochoice/errors.hpp"
#include "twochoice/script.hpp"
#include "twochoice/stats.hpp"
#include "twochoice/strategies.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace twochoice;

namespace {

StepRecord insert(System& sys, BallLabel label, PlacementPolicy& pol, RunStreams& rs) {
  return sys.apply(Operation::insert(label), pol, rs);
}

}  // namespace

TEST_CASE("new system starts empty and checks its shape") {
  System sys = System::create(4, 16);
  CHECK(sys.present() == 0);
  for (auto l : sys.loads()) CHECK(l == 0);
  CHECK_THROWS_AS(System::create(1, 16), ConfigError);
  CHECK_THROWS_AS(System::create(4, 3), ConfigError);
}

TEST_CASE("reinsertion mode keeps a label's pair") {
  System sys = System::create(4, 16, HashModel::IndependentPair, InsertionModel::ReinsertionDeletion);
  Rng rng(7);
  const HashPair first = sys.draw_hash(42, rng);
  for (int i = 0; i < 20; ++i) CHECK(sys.draw_hash(42, rng) == first);

  SingleChoicePolicy single;
  RunStreams rs = RunStreams::derive(3);
  const auto a = insert(sys, 42, single, rs);
  sys.apply(Operation::erase(42), single, rs);
  const auto b = insert(sys, 42, single, rs);
  CHECK(a.bin == b.bin);
  CHECK(sys.memoized_hash(42) == first);
}

TEST_CASE("insertion mode refuses a used label") {
  System sys = System::create(4, 16);
  SingleChoicePolicy single;
  RunStreams rs = RunStreams::derive(3);
  insert(sys, 5, single, rs);
  sys.apply(Operation::erase(5), single, rs);
  CHECK_THROWS_AS(insert(sys, 5, single, rs), OperationError);
}

TEST_CASE("distinct ordered hashing covers the 12 ordered pairs evenly") {
  System sys = System::create(4, 16, HashModel::DistinctOrdered);
  Rng rng(11);
  std::vector<std::uint64_t> counts(12, 0);
  for (int i = 0; i < 120'000; ++i) {
    const HashPair p = sys.draw_hash(static_cast<BallLabel>(i), rng);
    REQUIRE(p.first != p.second);
    const std::size_t j = p.second - (p.second > p.first ? 1 : 0);
    ++counts[p.first * 3 + j];
  }
  CHECK(stats::chi_square_uniform(counts).passes(0.001));
}

TEST_CASE("independent pairs on two bins repeat a bin half the time") {
  System sys = System::create(2, 16);
  Rng rng(12);
  const int draws = 100'000;
  int zero_zero = 0;
  for (int i = 0; i < draws; ++i) {
    const HashPair p = sys.draw_hash(static_cast<BallLabel>(i), rng);
    zero_zero += p.first == 0 && p.second == 0 ? 1 : 0;
  }
  const double sigma = std::sqrt(draws * 0.25 * 0.75);
  CHECK(std::abs(zero_zero - draws * 0.25) < 4 * sigma);
}

TEST_CASE("single choice lands in the first bin of the pair") {
  System sys = System::create(4, 16, HashModel::IndependentPair, InsertionModel::ReinsertionDeletion);
  sys.preassign_hash(1, {2, 0});
  SingleChoicePolicy single;
  RunStreams rs = RunStreams::derive(1);
  const auto rec = insert(sys, 1, single, rs);
  CHECK(rec.bin == 2);
  CHECK(sys.loads()[2] == 1);
  CHECK(sys.present() == 1);
}

TEST_CASE("deletion by rank and by label") {
  System sys = System::create(4, 16);
  GreedyPolicy greedy;
  RunStreams rs = RunStreams::derive(2);
  insert(sys, 10, greedy, rs);
  insert(sys, 11, greedy, rs);
  const auto del = sys.apply(Operation::erase_rank(1), greedy, rs);
  CHECK(!sys.contains(11));
  CHECK(sys.contains(10));
  CHECK(del.op.kind == Operation::Kind::DeleteRank);
  CHECK_THROWS_AS(sys.apply(Operation::erase(99), greedy, rs), OperationError);
  CHECK_THROWS_AS(sys.apply(Operation::erase_rank(2), greedy, rs), OperationError);
}

TEST_CASE("recency ranks") {
  System sys = System::create(4, 16);
  GreedyPolicy greedy;
  RunStreams rs = RunStreams::derive(2);
  insert(sys, 1, greedy, rs);
  CHECK(sys.rank_of(1) == 1);
  insert(sys, 2, greedy, rs);
  insert(sys, 3, greedy, rs);
  CHECK(sys.rank_of(1) == 3);
  CHECK(sys.rank_of(3) == 1);
  CHECK(sys.label_at_rank(2) == 2);
  sys.apply(Operation::erase(2), greedy, rs);
  CHECK(sys.rank_of(1) == 2);
}

TEST_CASE("capacity is enforced") {
  System sys = System::create(4, 4);
  GreedyPolicy greedy;
  RunStreams rs = RunStreams::derive(2);
  for (BallLabel l = 0; l < 4; ++l) insert(sys, l, greedy, rs);
  CHECK_THROWS_AS(insert(sys, 4, greedy, rs), OperationError);
}

TEST_CASE("m_seen is a high-water mark") {
  System sys = System::create(4, 16);
  GreedyPolicy greedy;
  RunStreams rs = RunStreams::derive(2);
  for (BallLabel l = 0; l < 6; ++l) insert(sys, l, greedy, rs);
  for (int i = 0; i < 4; ++i) sys.apply(Operation::erase_rank(1), greedy, rs);
  CHECK(sys.present() == 2);
  CHECK(sys.m_seen() == 6);
  CHECK(sys.scaled_overload() == 4 * sys.max_load() - 6);
}

TEST_CASE("run: empty script and determinism") {
  GreedyPolicy greedy;
  {
    System sys = System::create(4, 16);
    RunStreams rs = RunStreams::derive(1);
    const Trace t = run(sys, AdversaryScript{}, greedy, rs, TraceMode::Full);
    CHECK(t.steps.empty());
    CHECK(t.summary.inserts == 0);
  }
  ScriptBuilder b(64, "test");
  b.insert_fresh(64);
  for (int i = 0; i < 30; ++i) b.erase_rank(1 + static_cast<std::size_t>(i % 5));
  b.insert_fresh(30);
  const AdversaryScript script = b.finish();
  auto once = [&] {
    System sys = System::create(4, 64);
    RunStreams rs = RunStreams::derive(99);
    return run(sys, script, greedy, rs, TraceMode::Full);
  };
  const Trace a = once();
  const Trace c = once();
  REQUIRE(a.steps.size() == c.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    CHECK(a.steps[i].bin == c.steps[i].bin);
    CHECK(a.steps[i].max_load == c.steps[i].max_load);
  }
  CHECK(a.summary.final_loads == c.summary.final_loads);
}

TEST_CASE("observer sees the state after each op") {
  ScriptBuilder b(8, "test");
  b.insert_fresh(5);
  const AdversaryScript script = b.finish();
  System sys = System::create(4, 8);
  GreedyPolicy greedy;
  RunStreams rs = RunStreams::derive(4);
  std::vector<std::int64_t> present;
  run(sys, script, greedy, rs, TraceMode::Final,
      [&](const System& s, const StepRecord&, std::size_t) { present.push_back(s.present()); });
  CHECK(present == std::vector<std::int64_t>{1, 2, 3, 4, 5});
}

TEST_CASE("greedy insertion-only overload stays in single digits") {
  const std::int64_t m = 1 << 16;
  ScriptBuilder b(m, "insert_only");
  b.insert_fresh(static_cast<std::size_t>(m));
  const AdversaryScript script = b.finish();
  GreedyPolicy greedy;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    System sys = System::create(4, m);
    RunStreams rs = RunStreams::derive(seed);
    const Trace t = run(sys, script, greedy, rs);
    CHECK(t.summary.max_overload < 10.0);
  }
}
