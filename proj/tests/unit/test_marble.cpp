#include "twochoice/errors.hpp"
#include "twochoice/marble.hpp"

#include <doctest.h>

#include <cmath>

using namespace twochoice;

TEST_CASE("inserts land in bag 1") {
  MarbleBoard board(10.0, 0.0);
  MinimalSlackBob bob(10.0);
  const MarbleId a = board.insert(bob.insert_value(0));
  CHECK(board.marble(a).value == 0.0);
  CHECK(board.marble(a).bag == 1);
  board.insert(bob.insert_value(1));
  CHECK(board.bag(1).size() == 2);
  CHECK_THROWS_AS(board.insert(1.5), OperationError);
}

TEST_CASE("minimal slack split values") {
  MinimalSlackBob bob(10.0);
  const SplitValues a = bob.split(0.0, 0.0, 1);
  CHECK(a.high == doctest::Approx(0.1));
  CHECK(a.low == doctest::Approx(-0.1));
  const SplitValues b = bob.split(0.5, 0.1, 1);
  CHECK(b.high == doctest::Approx(0.4));
  CHECK(b.low == doctest::Approx(0.2));
}

TEST_CASE("split moves marbles a bag up and down") {
  MarbleBoard board(10.0, 0.0);
  const MarbleId x = board.insert(0.0);
  const MarbleId y = board.insert(0.0);
  MinimalSlackBob bob(10.0);
  const auto [hi, lo] = board.split(x, y, bob);
  CHECK(board.marble(hi).bag == 2);
  CHECK(board.marble(lo).bag == 0);
  CHECK_THROWS_AS(board.split(hi, hi, bob), OperationError);
}

TEST_CASE("the board enforces the split rule") {
  MarbleBoard board(10.0, 0.01);
  const MarbleId x = board.insert(0.0);
  const MarbleId y = board.insert(0.0);
  CHECK_THROWS_AS(board.split(x, y, SplitValues{0.05, -0.05}), OperationError);  // gap below 2/R
  CHECK_THROWS_AS(board.split(x, y, SplitValues{0.3, 0.0}), OperationError);     // sum off by 0.3
  CHECK_NOTHROW(board.split(x, y, SplitValues{0.105, -0.1}));                    // sum off by 0.005
}

TEST_CASE("potential") {
  MarbleBoard empty(4.0, 0.0);
  CHECK(empty.potential() == 0.0);

  // One marble of value 0.5 raised to bag 3 through two value-preserving splits.
  MarbleBoard board(4.0, 0.0, false);
  const MarbleId a = board.insert(0.5);
  const MarbleId b = board.insert(0.0);
  const auto [a2, b0] = board.split(a, b, SplitValues{0.5, 0.0});
  const MarbleId c = board.insert(0.0);
  const MarbleId d = board.insert(0.0);
  const auto [c2, d0] = board.split(c, d, SplitValues{0.0, 0.0});
  const auto [a3, c1] = board.split(a2, c2, SplitValues{0.5, 0.0});
  CHECK(board.marble(a3).bag == 3);
  CHECK(board.potential() == doctest::Approx(1.5));

  MarbleBoard two(4.0, 0.0, false);
  const MarbleId p = two.insert(-1.0);
  const MarbleId q = two.insert(1.0);
  const MarbleId r = two.insert(0.0);
  two.split(q, r, SplitValues{1.0, 0.0});  // q' in bag 2 with 1, r' in bag 0
  CHECK(two.marble(p).bag == 1);
  CHECK(two.potential() == doctest::Approx(1.0));
}

TEST_CASE("Alice's schedule for R = 2, c = 1 keeps the promised census") {
  const auto ops = alice_strategy(2, 1);
  CHECK(ops.size() == alice_insert_count(2, 1) + alice_split_count(2, 1));
  MinimalSlackBob bob(2.0);
  CHECK_NOTHROW(replay_alice(2, 1, bob));
  // Hand count: 1 + (1 + 1) + (2 + 1) inserts, 1 + (2 + 1) splits.
  CHECK(alice_insert_count(2, 1) == 6);
  CHECK(alice_split_count(2, 1) == 4);
}

TEST_CASE("Alice forces a value above 1 for R = 16, c = 2") {
  MinimalSlackBob bob(16.0);
  const auto rep = replay_alice(16, 2, bob, true);
  CHECK(rep.first_exceed_step.has_value());
  CHECK(rep.min_split_delta >= 1.0 / 16.0 - 1e-9);
  CHECK(rep.final_potential == doctest::Approx(rep.ledger_potential).epsilon(1e-6));
  // Potential per c^3 R^2 after the full schedule.
  CHECK(rep.final_potential / (8.0 * 256.0) > 0.05);
  CHECK(rep.rows.size() == rep.inserts + rep.splits);
}

TEST_CASE("an adversarial Bob within the slack still loses") {
  const double R = 8.0;
  const double eta = default_eta(R);
  AdversarialBob bob(
      R, eta, [](std::uint64_t) { return -0.5; },
      [&](double vx, double vy, std::uint32_t) {
        const double avg = (vx + vy) / 2.0;
        return SplitValues{avg + 1.0 / R - eta / 2.0, avg - 1.0 / R - eta / 2.0};
      });
  const auto rep = replay_alice(8, 4, bob);
  CHECK(rep.first_exceed_step.has_value());
  CHECK(rep.min_split_delta >= 1.0 / R - (4.0 * R + 1.0) * eta - 1e-12);
}
