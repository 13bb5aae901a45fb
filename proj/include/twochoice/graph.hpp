#pragma once

#include "twochoice/ops.hpp"

#include <cstddef>
#include <istream>
#include <string>
#include <utility>
#include <vector>

namespace twochoice {

class Rng;
struct HashPair;

/// A d-regular simple undirected graph whose vertices are the bins.
class GraphModel {
 public:
  /// Validates regularity, absence of self-loops and duplicate edges.
  GraphModel(std::size_t n, std::vector<std::pair<Bin, Bin>> edges);

  static GraphModel complete(std::size_t n);
  static GraphModel cycle(std::size_t n);

  /// Edge-list text: header "n d", then one "u v" per line.
  static GraphModel parse(std::istream& in);
  static GraphModel load(const std::string& path);
  void write(std::ostream& out) const;

  [[nodiscard]] std::size_t vertices() const noexcept { return n_; }
  [[nodiscard]] std::size_t degree() const noexcept { return d_; }
  [[nodiscard]] const std::vector<std::pair<Bin, Bin>>& edges() const noexcept { return edges_; }

 private:
  std::size_t n_;
  std::size_t d_;
  std::vector<std::pair<Bin, Bin>> edges_;
};

/// Uniform edge of the graph with a fair-coin orientation.
HashPair graphical_pair(const GraphModel& graph, Rng& rng);

}  // namespace twochoice
