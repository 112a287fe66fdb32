#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "faf/types.hpp"

namespace faf {

/// Immutable undirected simple graph in CSR form. Both directions of every
/// edge are stored; neighbor lists are sorted ascending, which fixes the
/// evaluation order for order-sensitive reducers.
class Graph {
 public:
  Graph() = default;

  /// Builds from an arbitrary edge list: symmetrizes, drops self-loops,
  /// deduplicates, sorts each neighbor list.
  static Graph from_edges(Index num_nodes, const std::vector<std::pair<NodeId, NodeId>>& edges) {
    if (num_nodes < 1) throw DataError("graph must have at least one node");
    std::vector<std::pair<NodeId, NodeId>> dir;
    dir.reserve(edges.size() * 2);
    for (const auto& [u, v] : edges) {
      if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes) {
        throw DataError("edge endpoint out of range: (" + std::to_string(u) + ", " + std::to_string(v) + ")");
      }
      if (u == v) continue;  // self-loop
      dir.emplace_back(u, v);
      dir.emplace_back(v, u);
    }
    std::sort(dir.begin(), dir.end());
    dir.erase(std::unique(dir.begin(), dir.end()), dir.end());

    Graph g;
    g.num_nodes_ = num_nodes;
    g.offsets_.assign(static_cast<std::size_t>(num_nodes) + 1, 0);
    g.neighbors_.reserve(dir.size());
    for (const auto& [u, v] : dir) {
      g.offsets_[static_cast<std::size_t>(u) + 1]++;
      g.neighbors_.push_back(v);
    }
    for (std::size_t i = 1; i < g.offsets_.size(); ++i) g.offsets_[i] += g.offsets_[i - 1];
    g.num_edges_ = static_cast<Index>(dir.size() / 2);
    return g;
  }

  Index num_nodes() const { return num_nodes_; }
  Index num_edges() const { return num_edges_; }

  Index degree(NodeId v) const {
    check_node(v);
    return offsets_[static_cast<std::size_t>(v) + 1] - offsets_[static_cast<std::size_t>(v)];
  }

  std::span<const NodeId> neighbors(NodeId v) const {
    check_node(v);
    const auto lo = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(v)]);
    const auto hi = static_cast<std::size_t>(offsets_[static_cast<std::size_t>(v) + 1]);
    return {neighbors_.data() + lo, hi - lo};
  }

  const std::vector<Index>& offsets() const { return offsets_; }
  const std::vector<NodeId>& neighbor_list() const { return neighbors_; }

  /// Unique undirected edges as (u, v) with u < v, sorted.
  std::vector<std::pair<NodeId, NodeId>> edge_list() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    out.reserve(static_cast<std::size_t>(num_edges_));
    for (NodeId u = 0; u < num_nodes_; ++u) {
      for (NodeId v : neighbors(u)) {
        if (v > u) out.emplace_back(u, v);
      }
    }
    return out;
  }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.num_nodes_ == b.num_nodes_ && a.offsets_ == b.offsets_ && a.neighbors_ == b.neighbors_;
  }

 private:
  void check_node(NodeId v) const {
    if (v < 0 || v >= num_nodes_) {
      throw DataError("node index " + std::to_string(v) + " out of range [0, " + std::to_string(num_nodes_) + ")");
    }
  }

  Index num_nodes_ = 0;
  Index num_edges_ = 0;
  std::vector<Index> offsets_;
  std::vector<NodeId> neighbors_;
};

namespace detail {

inline bool parse_node_index(std::string_view tok, long long& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace detail

/// Parses a whitespace-separated `u v` edge list. Lines starting with `#`
/// are comments; an optional `#nodes N` header overrides the inferred
/// node count (1 + max index seen).
inline Graph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge list: " + path.string());

  std::vector<std::pair<NodeId, NodeId>> edges;
  long long header_nodes = -1;
  long long max_index = -1;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    if (line[begin] == '#') {
      std::istringstream hs(line.substr(begin + 1));
      std::string key;
      if (hs >> key && key == "nodes") {
        long long n = -1;
        if (!(hs >> n) || n < 1) {
          throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed #nodes header");
        }
        header_nodes = n;
      }
      continue;
    }
    std::istringstream ls(line);
    std::string a, b, extra;
    if (!(ls >> a >> b) || (ls >> extra)) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected two node indices");
    }
    long long u = 0, v = 0;
    if (!detail::parse_node_index(a, u) || !detail::parse_node_index(b, v) || u < 0 || v < 0) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": invalid node index");
    }
    if (u > std::numeric_limits<NodeId>::max() || v > std::numeric_limits<NodeId>::max()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": node index overflow");
    }
    max_index = std::max({max_index, u, v});
    edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
  }

  long long num_nodes = (header_nodes >= 1) ? header_nodes : max_index + 1;
  if (num_nodes < 1) throw DataError(path.string() + ": empty edge list and no #nodes header");
  if (header_nodes >= 1 && max_index >= header_nodes) {
    throw DataError(path.string() + ": edge index " + std::to_string(max_index) +
                    " exceeds #nodes " + std::to_string(header_nodes));
  }
  if (num_nodes > std::numeric_limits<NodeId>::max()) {
    throw DataError(path.string() + ": node count overflow");
  }
  return Graph::from_edges(static_cast<Index>(num_nodes), edges);
}

/// Writes the canonical form: `#nodes N` header, then sorted `u v` lines
/// with u < v. load_graph(save_graph(g)) reproduces g byte-for-byte on
/// re-save.
inline void save_graph(const Graph& g, std::ostream& out) {
  out << "#nodes " << g.num_nodes() << "\n";
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    for (NodeId v : g.neighbors(u)) {
      if (v > u) out << u << " " << v << "\n";
    }
  }
}

inline void save_graph(const Graph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write edge list: " + path.string());
  save_graph(g, out);
}

}  // namespace faf
