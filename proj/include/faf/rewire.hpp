#pragma once

#include <string>
#include <utility>
#include <vector>

#include "faf/faf_engine.hpp"
#include "faf/graph.hpp"
#include "faf/types.hpp"

namespace faf {

enum class RewireMode { Drop, Split };
enum class RewireCombine { Replace, Concat };

/// Similarity-based rewiring: Drop removes edges whose endpoint feature
/// cosine similarity falls below the threshold; Split partitions edges
/// into a kept (>= threshold) and a removed (< threshold) graph.
struct RewireSpec {
  RewireMode mode = RewireMode::Drop;
  RewireCombine combine = RewireCombine::Concat;
  double similarity_threshold = 0.0;
};

/// a.b / (|a||b|); 0 when either vector has zero norm, so such edges are
/// treated as non-negative and kept.
inline double cosine_similarity(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  if (a.size() != b.size()) throw DataError("cosine_similarity: length mismatch");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

namespace detail {

inline std::pair<std::vector<std::pair<NodeId, NodeId>>, std::vector<std::pair<NodeId, NodeId>>>
partition_edges(const Graph& g, const FeatureMatrix& x, double threshold) {
  if (x.rows() != g.num_nodes()) throw DataError("rewire: feature rows do not match node count");
  std::vector<std::pair<NodeId, NodeId>> kept;
  std::vector<std::pair<NodeId, NodeId>> removed;
  for (const auto& [u, v] : g.edge_list()) {
    if (cosine_similarity(x.row(u), x.row(v)) >= threshold) {
      kept.emplace_back(u, v);
    } else {
      removed.emplace_back(u, v);
    }
  }
  return {std::move(kept), std::move(removed)};
}

}  // namespace detail

/// Subgraph keeping exactly the edges with similarity >= threshold
/// (strictly negative similarity dropped at the default threshold 0).
inline Graph rewire_drop(const Graph& g, const FeatureMatrix& x, double threshold = 0.0) {
  auto [kept, removed] = detail::partition_edges(g, x, threshold);
  return Graph::from_edges(g.num_nodes(), kept);
}

/// (positive graph, negative graph); the two edge sets partition the
/// original edge set.
inline std::pair<Graph, Graph> rewire_split(const Graph& g, const FeatureMatrix& x, double threshold = 0.0) {
  auto [kept, removed] = detail::partition_edges(g, x, threshold);
  return {Graph::from_edges(g.num_nodes(), kept), Graph::from_edges(g.num_nodes(), removed)};
}

/// FAF compilation with a rewiring augmentation. Replace aggregates on the
/// rewired graph(s) only; Concat appends the rewired hop blocks after the
/// plain compilation. The hop-0 raw block is never duplicated. Similarities
/// are computed once, on the raw hop-0 features.
inline CompiledFeatures compile_augmented(const Graph& g, const FeatureMatrix& x, const FafConfig& cfg,
                                          const RewireSpec& spec) {
  cfg.validate();
  if (x.rows() != g.num_nodes()) throw DataError("compile_augmented: feature rows do not match node count");
  if (!x.array().isFinite().all()) throw DataError("compile_augmented: non-finite input feature");

  std::vector<std::pair<Graph, Provenance>> sources;
  if (spec.mode == RewireMode::Drop) {
    sources.emplace_back(rewire_drop(g, x, spec.similarity_threshold), Provenance::Rew);
  } else {
    auto [pos, neg] = rewire_split(g, x, spec.similarity_threshold);
    sources.emplace_back(std::move(pos), Provenance::SpPos);
    sources.emplace_back(std::move(neg), Provenance::SpNeg);
  }

  std::vector<FeatureMatrix> blocks;
  std::vector<ColumnDesc> descs;
  if (spec.combine == RewireCombine::Concat) {
    auto [orig_blocks, orig_descs] = detail::hop_blocks(g, x, cfg, Provenance::Original);
    blocks = std::move(orig_blocks);
    descs = std::move(orig_descs);
  }
  for (const auto& [rg, prov] : sources) {
    auto [b, d] = detail::hop_blocks(rg, x, cfg, prov);
    blocks.insert(blocks.end(), std::make_move_iterator(b.begin()), std::make_move_iterator(b.end()));
    descs.insert(descs.end(), d.begin(), d.end());
  }

  const bool include_base = cfg.hops == 0 || cfg.selection != HopSelection::LastHopOnly;
  CompiledFeatures out = detail::assemble(x, include_base, std::move(blocks), std::move(descs));
  detail::apply_scaling(out, cfg.scaling);
  return out;
}

}  // namespace faf
