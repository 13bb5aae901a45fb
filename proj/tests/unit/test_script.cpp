#include "twochoice/adversaries.hpp"
#include "twochoice/errors.hpp"
#include "twochoice/rng.hpp"
#include "twochoice/script.hpp"

#include <doctest.h>

#include <sstream>

using namespace twochoice;

TEST_CASE("builder rejects illegal operations") {
  ScriptBuilder b(2, "test");
  const BallLabel x = b.insert();
  b.insert();
  CHECK_THROWS_AS(b.insert(), OperationError);
  b.erase(x);
  CHECK_THROWS_AS(b.erase(x), OperationError);
  CHECK_THROWS_AS(b.insert(x), OperationError);
  CHECK_THROWS_AS(b.erase_rank(2), OperationError);
}

TEST_CASE("reinsertion builder allows a label to return") {
  ScriptBuilder b(2, "test", nlohmann::json::object(), 0, true);
  const BallLabel x = b.insert();
  b.erase(x);
  b.insert(x);
  CHECK(b.contains(x));
  CHECK(b.size() == 3);
}

TEST_CASE("checkpoints name the state after the first p ops") {
  ScriptBuilder b(8, "test");
  b.insert_fresh(3);
  b.checkpoint("after3");
  b.erase_rank(1);
  const AdversaryScript s = b.finish();
  CHECK(s.checkpoints.at("after3") == 3);
}

TEST_CASE("validate_script replays against the counting stub") {
  AdversaryScript s;
  s.ops = {Operation::insert(0), Operation::insert(1), Operation::erase(0), Operation::erase_rank(1)};
  const ScriptCheck c = validate_script(s, 4, false);
  CHECK(c.peak_present == 2);
  CHECK(c.final_present == 0);
  CHECK(c.inserts == 2);
  s.ops.push_back(Operation::erase(7));
  CHECK_THROWS_AS(validate_script(s, 4, false), ScriptError);
  CHECK_THROWS_AS(validate_script(s, 1, false), ScriptError);
}

TEST_CASE("script JSON round trip") {
  Rng rng(1);
  AdversaryScript s = mixed_random(32, 200, 0.6, rng);
  s.checkpoints["mid"] = 100;
  s.label_sets["some"] = {1, 2, 3};
  std::stringstream io;
  write_script(io, s);
  const AdversaryScript back = read_script(io);
  CHECK(back.ops == s.ops);
  CHECK(back.generator == s.generator);
  CHECK(back.params == s.params);
  CHECK(back.checkpoints == s.checkpoints);
  CHECK(back.label_sets == s.label_sets);
  CHECK(back.script_seed == s.script_seed);
}

TEST_CASE("random deletion warmup extremes") {
  Rng rng(2);
  const AdversaryScript none = random_deletion_warmup(100, 0.0, rng);
  CHECK(none.size() == 100);
  for (const auto& op : none.ops) CHECK(op.is_insert());
  const AdversaryScript all = random_deletion_warmup(100, 1.0, rng);
  CHECK(validate_script(all, 100, false).final_present == 0);
}

TEST_CASE("sawtooth and mixed scripts respect capacity") {
  Rng rng(3);
  for (DeletionOrder order : {DeletionOrder::Newest, DeletionOrder::Oldest, DeletionOrder::Random}) {
    const AdversaryScript s = sawtooth(64, 5000, 0.25, order, rng);
    CHECK(s.size() == 5000);
    CHECK(validate_script(s, 64, false).peak_present == 64);
  }
  const AdversaryScript mix = mixed_random(64, 5000, 0.5, rng);
  CHECK(validate_script(mix, 64, false).peak_present <= 64);
}

TEST_CASE("tightness epochs") {
  const AdversaryScript s = tightness_epochs(16, 3);
  CHECK(s.size() == 96);
  CHECK(validate_script(s, 16, false).final_present == 0);
}
