#include "twochoice/graph.hpp"

#include "twochoice/errors.hpp"
#include "twochoice/policy.hpp"
#include "twochoice/rng.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace twochoice {

GraphModel::GraphModel(std::size_t n, std::vector<std::pair<Bin, Bin>> edges)
    : n_(n), d_(0), edges_(std::move(edges)) {
  require(n >= 2, "graph needs at least 2 vertices");
  require(!edges_.empty(), "graph needs at least one edge");
  std::vector<std::size_t> deg(n, 0);
  std::set<std::pair<Bin, Bin>> seen;
  for (const auto& [u, v] : edges_) {
    if (u >= n || v >= n) throw ConfigError("edge endpoint out of range");
    if (u == v) throw ConfigError("self-loop at vertex " + std::to_string(u));
    if (!seen.emplace(std::min(u, v), std::max(u, v)).second)
      throw ConfigError("duplicate edge " + std::to_string(u) + "-" + std::to_string(v));
    ++deg[u];
    ++deg[v];
  }
  d_ = deg[0];
  for (std::size_t v = 1; v < n; ++v)
    if (deg[v] != d_) throw ConfigError("graph is not regular: vertex " + std::to_string(v));
}

GraphModel GraphModel::complete(std::size_t n) {
  std::vector<std::pair<Bin, Bin>> edges;
  for (Bin u = 0; u < n; ++u)
    for (Bin v = u + 1; v < n; ++v) edges.emplace_back(u, v);
  return GraphModel(n, std::move(edges));
}

GraphModel GraphModel::cycle(std::size_t n) {
  require(n >= 3, "cycle needs at least 3 vertices");
  std::vector<std::pair<Bin, Bin>> edges;
  for (Bin u = 0; u < n; ++u) edges.emplace_back(u, static_cast<Bin>((u + 1) % n));
  return GraphModel(n, std::move(edges));
}

GraphModel GraphModel::parse(std::istream& in) {
  std::size_t n = 0;
  std::size_t d = 0;
  if (!(in >> n >> d)) throw ConfigError("graph header must be 'n d'");
  std::vector<std::pair<Bin, Bin>> edges;
  Bin u = 0;
  Bin v = 0;
  while (in >> u >> v) edges.emplace_back(u, v);
  if (!in.eof()) throw ConfigError("malformed edge line");
  GraphModel g(n, std::move(edges));
  if (g.degree() != d) throw ConfigError("header degree does not match edges");
  return g;
}

GraphModel GraphModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open graph file " + path);
  return parse(in);
}

void GraphModel::write(std::ostream& out) const {
  out << n_ << ' ' << d_ << '\n';
  for (const auto& [u, v] : edges_) out << u << ' ' << v << '\n';
}

HashPair graphical_pair(const GraphModel& graph, Rng& rng) {
  const auto& e = graph.edges()[rng.below(graph.edges().size())];
  return rng.coin() ? HashPair{e.first, e.second} : HashPair{e.second, e.first};
}

}  // namespace twochoice
