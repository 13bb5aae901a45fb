#include "twochoice/engine.hpp"
#include "twochoice/errors.hpp"
#include "twochoice/graph.hpp"
#include "twochoice/policy.hpp"
#include "twochoice/rng.hpp"
#include "twochoice/stats.hpp"

#include <doctest.h>

#include <map>
#include <sstream>

using namespace twochoice;

TEST_CASE("graph validation") {
  CHECK_NOTHROW(GraphModel(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}}));
  CHECK_THROWS_AS(GraphModel(3, {{0, 0}, {1, 2}}), ConfigError);
  CHECK_THROWS_AS(GraphModel(4, {{0, 1}, {0, 1}, {2, 3}, {2, 3}}), ConfigError);
  CHECK_THROWS_AS(GraphModel(4, {{0, 1}, {1, 2}}), ConfigError);  // not regular
}

TEST_CASE("edge-list text round trip") {
  const GraphModel c = GraphModel::cycle(6);
  std::stringstream io;
  c.write(io);
  const GraphModel back = GraphModel::parse(io);
  CHECK(back.vertices() == 6);
  CHECK(back.degree() == 2);
  CHECK(back.edges() == c.edges());
}

TEST_CASE("complete graph matches distinct ordered hashing") {
  const GraphModel k4 = GraphModel::complete(4);
  Rng rng(1);
  std::vector<std::uint64_t> counts(12, 0);
  for (int i = 0; i < 120'000; ++i) {
    const HashPair p = graphical_pair(k4, rng);
    REQUIRE(p.first != p.second);
    ++counts[p.first * 3 + p.second - (p.second > p.first ? 1 : 0)];
  }
  CHECK(stats::chi_square_uniform(counts).passes(0.001));
}

TEST_CASE("cycle graph returns only adjacent bins, each edge evenly") {
  const GraphModel c = GraphModel::cycle(8);
  Rng rng(2);
  std::map<std::pair<Bin, Bin>, std::uint64_t> seen;
  for (int i = 0; i < 1'000'000; ++i) {
    const HashPair p = graphical_pair(c, rng);
    const Bin d = (p.first + 8 - p.second) % 8;
    REQUIRE((d == 1 || d == 7));
    ++seen[{std::min(p.first, p.second), std::max(p.first, p.second)}];
  }
  CHECK(seen.size() == 8);
  std::vector<std::uint64_t> counts;
  for (const auto& [e, n] : seen) counts.push_back(n);
  CHECK(stats::chi_square_uniform(counts).passes(0.001));
}

TEST_CASE("graphical systems need a matching graph") {
  SystemConfig cfg{4, 16, HashModel::Graphical, InsertionModel::InsertionDeletion, nullptr};
  CHECK_THROWS_AS(System{cfg}, ConfigError);
  cfg.graph = std::make_shared<GraphModel>(GraphModel::cycle(5));
  CHECK_THROWS_AS(System{cfg}, ConfigError);
  cfg.graph = std::make_shared<GraphModel>(GraphModel::cycle(4));
  CHECK_NOTHROW(System{cfg});
}
