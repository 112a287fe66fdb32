#pragma once

#include <string>
#include <utility>
#include <vector>

#include "faf/graph.hpp"
#include "faf/splits.hpp"
#include "faf/types.hpp"

namespace faf {

struct Dataset {
  Graph graph;
  FeatureMatrix features;
  LabeledSplits splits;
};

/// side x side king grid with random mines. Feature 0 is the mask
/// indicator; features 1-6 one-hot the adjacent-mine count of unmasked
/// cells (counts above 5 share the last bucket so the width stays 7).
/// Label 1 marks a mine.
struct MinesweeperSpec {
  int side = 100;
  double mine_rate = 0.2;
  double mask_rate = 0.5;
  std::uint64_t seed = 0;
};

inline Dataset gen_minesweeper(const MinesweeperSpec& spec) {
  if (spec.side < 2) throw DataError("minesweeper side must be >= 2");
  if (spec.mine_rate < 0.0 || spec.mine_rate > 1.0 || spec.mask_rate < 0.0 || spec.mask_rate > 1.0) {
    throw DataError("minesweeper rates must be in [0, 1]");
  }
  const int side = spec.side;
  const Index n = static_cast<Index>(side) * side;
  auto at = [side](int r, int c) { return static_cast<NodeId>(r * side + c); };

  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(static_cast<std::size_t>(4) * static_cast<std::size_t>(n));
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      if (c + 1 < side) edges.emplace_back(at(r, c), at(r, c + 1));
      if (r + 1 < side) edges.emplace_back(at(r, c), at(r + 1, c));
      if (r + 1 < side && c + 1 < side) edges.emplace_back(at(r, c), at(r + 1, c + 1));
      if (r + 1 < side && c > 0) edges.emplace_back(at(r, c), at(r + 1, c - 1));
    }
  }

  Dataset ds;
  ds.graph = Graph::from_edges(n, edges);

  Rng rng(derive_seed(spec.seed, 0));
  std::vector<char> mine(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) mine[static_cast<std::size_t>(i)] = rng.uniform() < spec.mine_rate;
  std::vector<char> masked(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) masked[static_cast<std::size_t>(i)] = rng.uniform() < spec.mask_rate;

  ds.features = FeatureMatrix::Zero(n, 7);
  ds.splits.labels.resize(static_cast<std::size_t>(n));
  ds.splits.num_classes = 2;
  for (NodeId v = 0; v < n; ++v) {
    ds.splits.labels[static_cast<std::size_t>(v)] = mine[static_cast<std::size_t>(v)] ? 1 : 0;
    if (masked[static_cast<std::size_t>(v)]) {
      ds.features(v, 0) = 1.0;
      continue;
    }
    int count = 0;
    for (NodeId u : ds.graph.neighbors(v)) count += mine[static_cast<std::size_t>(u)];
    const int bucket = count > 5 ? 5 : count;
    ds.features(v, 1 + bucket) = 1.0;
  }
  ds.splits.splits.push_back(make_split(n, derive_seed(spec.seed, 1)));
  return ds;
}

/// The 8-node two-hop tree used for the hop-recursion worked example.
/// Node 0 is the root; squares carry (1,0) and circles (0,1).
inline std::pair<Graph, FeatureMatrix> gen_fig4_tree() {
  const std::vector<std::pair<NodeId, NodeId>> edges = {{0, 1}, {0, 2}, {1, 3}, {1, 4}, {2, 5}, {2, 6}, {2, 7}};
  Graph g = Graph::from_edges(8, edges);
  FeatureMatrix x = FeatureMatrix::Zero(8, 2);
  for (NodeId square : {0, 3, 5, 6}) x(square, 0) = 1.0;
  for (NodeId circle : {1, 2, 4, 7}) x(circle, 1) = 1.0;
  return {std::move(g), std::move(x)};
}

/// Variant of the two-hop tree where node 1 owns all five leaves and
/// node 2 is a leaf. Non-isomorphic to the original, yet the root's sum
/// features agree at hops 0-2: a witness of second-hop information loss.
inline std::pair<Graph, FeatureMatrix> gen_fig4_collapsed_variant() {
  const std::vector<std::pair<NodeId, NodeId>> edges = {{0, 1}, {0, 2}, {1, 3}, {1, 4}, {1, 5}, {1, 6}, {1, 7}};
  Graph g = Graph::from_edges(8, edges);
  FeatureMatrix x = FeatureMatrix::Zero(8, 2);
  for (NodeId square : {0, 3, 5, 6}) x(square, 0) = 1.0;
  for (NodeId circle : {1, 2, 4, 7}) x(circle, 1) = 1.0;
  return {std::move(g), std::move(x)};
}

/// Planted-partition (stochastic block model) homophily testbed. Features
/// are the class one-hot plus seeded Gaussian noise.
struct SbmSpec {
  int n_per_class = 300;
  int classes = 3;
  double p_in = 0.05;
  double p_out = 0.005;
  double feature_noise = 1.0;
  std::uint64_t seed = 0;
};

inline Dataset gen_planted_partition(const SbmSpec& spec) {
  if (spec.n_per_class < 1 || spec.classes < 2) throw DataError("sbm: need >= 2 classes with >= 1 node each");
  if (spec.p_in < 0.0 || spec.p_in > 1.0 || spec.p_out < 0.0 || spec.p_out > 1.0 || spec.p_out > spec.p_in) {
    throw DataError("sbm: require 0 <= p_out <= p_in <= 1");
  }
  const Index n = static_cast<Index>(spec.n_per_class) * spec.classes;

  Dataset ds;
  ds.splits.num_classes = spec.classes;
  ds.splits.labels.resize(static_cast<std::size_t>(n));
  for (Index v = 0; v < n; ++v) {
    ds.splits.labels[static_cast<std::size_t>(v)] = static_cast<int>(v / spec.n_per_class);
  }

  Rng edge_rng(derive_seed(spec.seed, 0));
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (Index u = 0; u < n; ++u) {
    for (Index v = u + 1; v < n; ++v) {
      const bool same = ds.splits.labels[static_cast<std::size_t>(u)] == ds.splits.labels[static_cast<std::size_t>(v)];
      const double p = same ? spec.p_in : spec.p_out;
      if (edge_rng.uniform() < p) edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
    }
  }
  ds.graph = Graph::from_edges(n, edges);

  Rng feat_rng(derive_seed(spec.seed, 1));
  ds.features = FeatureMatrix::Zero(n, spec.classes);
  for (Index v = 0; v < n; ++v) {
    ds.features(v, ds.splits.labels[static_cast<std::size_t>(v)]) = 1.0;
    for (Index j = 0; j < spec.classes; ++j) {
      ds.features(v, j) += spec.feature_noise * feat_rng.normal();
    }
  }
  ds.splits.splits.push_back(make_split(n, derive_seed(spec.seed, 2)));
  return ds;
}

}  // namespace faf
