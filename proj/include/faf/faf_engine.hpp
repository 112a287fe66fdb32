#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "faf/graph.hpp"
#include "faf/ka_encoder.hpp"
#include "faf/reducers.hpp"
#include "faf/types.hpp"

namespace faf {

enum class HopSelection { AllHops, LastHopOnly, LastHopPlusBase };
enum class ColumnScaling { None, PerColumnStandardize };

/// Which graph a compiled column was aggregated on. Plain compilation is
/// always Original; rewiring augmentations add the other tags.
enum class Provenance { Original, Rew, SpPos, SpNeg };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::Original: return "original";
    case Provenance::Rew: return "rew";
    case Provenance::SpPos: return "sp_pos";
    case Provenance::SpNeg: return "sp_neg";
  }
  return "?";
}

inline const char* to_string(HopSelection s) {
  switch (s) {
    case HopSelection::AllHops: return "all";
    case HopSelection::LastHopOnly: return "last";
    case HopSelection::LastHopPlusBase: return "last+base";
  }
  return "?";
}

struct FafConfig {
  std::vector<ReducerKind> reducers;
  int hops = 2;
  HopSelection selection = HopSelection::AllHops;
  ColumnScaling scaling = ColumnScaling::None;
  int ka_precision = 20;

  void validate() const {
    if (hops < 0) throw DataError("hop count must be >= 0");
    if (hops > 0 && reducers.empty()) throw DataError("at least one reducer is required when hops > 0");
    for (std::size_t i = 0; i < reducers.size(); ++i) {
      for (std::size_t j = i + 1; j < reducers.size(); ++j) {
        if (reducers[i] == reducers[j]) {
          throw DataError(std::string("duplicate reducer '") + to_string(reducers[i]) + "'");
        }
      }
    }
  }
};

/// Descriptor of one compiled column. hop 0 with no reducer is a raw
/// base feature.
struct ColumnDesc {
  int hop = 0;
  std::optional<ReducerKind> reducer;
  Index base_feature = 0;
  Provenance provenance = Provenance::Original;

  friend bool operator==(const ColumnDesc&, const ColumnDesc&) = default;
};

struct CompiledFeatures {
  FeatureMatrix matrix;
  std::vector<ColumnDesc> columns;
};

/// One aggregation round: row v of the result reduces {prev[u] : u in N(v)}.
/// Isolated nodes get zero rows. For KA, every prev column is min-max
/// rescaled to [0,1] over all nodes first (constant columns map to 0), then
/// encoded over the ascending-ordered neighbor values with d = degree(v).
inline FeatureMatrix hop_features(const Graph& g, const FeatureMatrix& prev, ReducerKind kind,
                                  const KaEncoder& enc = KaEncoder()) {
  if (prev.rows() != g.num_nodes()) {
    throw DataError("hop_features: feature rows " + std::to_string(prev.rows()) + " do not match node count " +
                    std::to_string(g.num_nodes()));
  }
  const Index n = g.num_nodes();
  const Index f = prev.cols();
  FeatureMatrix out = FeatureMatrix::Zero(n, f);

  switch (kind) {
    case ReducerKind::Sum:
    case ReducerKind::Mean: {
      for (NodeId v = 0; v < n; ++v) {
        const auto nbrs = g.neighbors(v);
        if (nbrs.empty()) continue;
        auto row = out.row(v);
        for (NodeId u : nbrs) row += prev.row(u);
        if (kind == ReducerKind::Mean) row /= static_cast<double>(nbrs.size());
      }
      break;
    }
    case ReducerKind::Max:
    case ReducerKind::Min: {
      for (NodeId v = 0; v < n; ++v) {
        const auto nbrs = g.neighbors(v);
        if (nbrs.empty()) continue;
        auto row = out.row(v);
        row = prev.row(nbrs[0]);
        for (std::size_t i = 1; i < nbrs.size(); ++i) {
          if (kind == ReducerKind::Max) {
            row = row.cwiseMax(prev.row(nbrs[i]));
          } else {
            row = row.cwiseMin(prev.row(nbrs[i]));
          }
        }
      }
      break;
    }
    case ReducerKind::Std: {
      for (NodeId v = 0; v < n; ++v) {
        const auto nbrs = g.neighbors(v);
        if (nbrs.empty()) continue;
        Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(f);
        for (NodeId u : nbrs) sum += prev.row(u);
        const Eigen::RowVectorXd mean = sum / static_cast<double>(nbrs.size());
        Eigen::RowVectorXd sq_dev = Eigen::RowVectorXd::Zero(f);
        for (NodeId u : nbrs) sq_dev += (prev.row(u) - mean).cwiseAbs2();
        out.row(v) = (sq_dev / static_cast<double>(nbrs.size())).cwiseSqrt();
      }
      break;
    }
    case ReducerKind::Ka: {
      // Per-column min-max rescale into the encoder's domain.
      Eigen::RowVectorXd lo = prev.colwise().minCoeff();
      Eigen::RowVectorXd hi = prev.colwise().maxCoeff();
      FeatureMatrix scaled(n, f);
      for (Index j = 0; j < f; ++j) {
        const double range = hi(j) - lo(j);
        if (range > 0.0) {
          scaled.col(j) = (prev.col(j).array() - lo(j)) / range;
        } else {
          scaled.col(j).setZero();
        }
      }
      std::vector<double> column;
      for (NodeId v = 0; v < n; ++v) {
        const auto nbrs = g.neighbors(v);
        if (nbrs.empty()) continue;
        column.resize(nbrs.size());
        for (Index j = 0; j < f; ++j) {
          for (std::size_t i = 0; i < nbrs.size(); ++i) column[i] = scaled(nbrs[i], j);
          out(v, j) = static_cast<double>(enc.aggregate(column));
        }
      }
      break;
    }
  }
  return out;
}

namespace detail {

inline void require_finite_hop(const FeatureMatrix& m, int hop, ReducerKind r) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (!std::isfinite(m(i, j))) {
        throw DataError(std::string("non-finite value at hop ") + std::to_string(hop) + ", reducer " +
                        to_string(r) + ", node " + std::to_string(i));
      }
    }
  }
}

/// All hop >= 1 blocks for one graph, per-reducer chains, in descriptor
/// order (each reducer's hops 1..K, reducers in config order).
inline std::pair<std::vector<FeatureMatrix>, std::vector<ColumnDesc>> hop_blocks(
    const Graph& g, const FeatureMatrix& x, const FafConfig& cfg, Provenance prov) {
  std::vector<FeatureMatrix> blocks;
  std::vector<ColumnDesc> descs;
  const KaEncoder enc(cfg.ka_precision);
  for (ReducerKind r : cfg.reducers) {
    FeatureMatrix chain = x;
    for (int k = 1; k <= cfg.hops; ++k) {
      chain = hop_features(g, chain, r, enc);
      require_finite_hop(chain, k, r);
      const bool keep = cfg.selection == HopSelection::AllHops || k == cfg.hops;
      if (keep) {
        blocks.push_back(chain);
        for (Index j = 0; j < x.cols(); ++j) descs.push_back({k, r, j, prov});
      }
    }
  }
  return {std::move(blocks), std::move(descs)};
}

inline CompiledFeatures assemble(const FeatureMatrix& x, bool include_base,
                                 std::vector<FeatureMatrix> blocks, std::vector<ColumnDesc> descs) {
  const Index n = x.rows();
  const Index f = x.cols();
  Index width = include_base ? f : 0;
  for (const auto& b : blocks) width += b.cols();

  CompiledFeatures out;
  out.matrix.resize(n, width);
  Index col = 0;
  if (include_base) {
    out.matrix.leftCols(f) = x;
    for (Index j = 0; j < f; ++j) out.columns.push_back({0, std::nullopt, j, Provenance::Original});
    col = f;
  }
  for (auto& b : blocks) {
    out.matrix.middleCols(col, b.cols()) = b;
    col += b.cols();
  }
  out.columns.insert(out.columns.end(), descs.begin(), descs.end());
  return out;
}

inline void apply_scaling(CompiledFeatures& cf, ColumnScaling scaling) {
  if (scaling != ColumnScaling::PerColumnStandardize) return;
  const auto n = static_cast<double>(cf.matrix.rows());
  for (Index j = 0; j < cf.matrix.cols(); ++j) {
    const double mean = cf.matrix.col(j).sum() / n;
    const double var = cf.matrix.col(j).cwiseAbs2().sum() / n - mean * mean;
    if (var > 0.0) {
      cf.matrix.col(j) = (cf.matrix.col(j).array() - mean) / std::sqrt(var);
    } else {
      cf.matrix.col(j).setZero();
    }
  }
}

}  // namespace detail

/// Compiles the concatenated multi-hop tabular representation. Hop 0 is
/// the raw feature block; each reducer contributes its own recursion chain
/// (hop k consumes that reducer's hop k-1). With K hops and R reducers the
/// full selection has F*(1 + R*K) columns.
inline CompiledFeatures compile(const Graph& g, const FeatureMatrix& x, const FafConfig& cfg) {
  cfg.validate();
  if (x.rows() != g.num_nodes()) {
    throw DataError("compile: feature rows " + std::to_string(x.rows()) + " do not match node count " +
                    std::to_string(g.num_nodes()));
  }
  if (!x.array().isFinite().all()) throw DataError("compile: non-finite input feature");

  auto [blocks, descs] = detail::hop_blocks(g, x, cfg, Provenance::Original);
  const bool include_base = cfg.hops == 0 || cfg.selection != HopSelection::LastHopOnly;
  CompiledFeatures out = detail::assemble(x, include_base, std::move(blocks), std::move(descs));
  detail::apply_scaling(out, cfg.scaling);
  return out;
}

/// Multiplicities of each orthogonal basis vector in the multiset whose
/// sum is `sum_vec`: count_f = (x_f . h) / (x_f . x_f). Exact for integer
/// bases. Rejects bases that are not pairwise orthogonal.
inline Eigen::VectorXd count_recovery(const Eigen::VectorXd& sum_vec, const FeatureMatrix& basis) {
  const Index b = basis.rows();
  if (basis.cols() != sum_vec.size()) throw DataError("count_recovery: dimension mismatch");
  for (Index i = 0; i < b; ++i) {
    const double norm_i = basis.row(i).norm();
    if (norm_i == 0.0) throw DataError("count_recovery: basis vector " + std::to_string(i) + " is zero");
    for (Index j = i + 1; j < b; ++j) {
      const double dot = basis.row(i).dot(basis.row(j));
      if (std::abs(dot) > 1e-9 * norm_i * basis.row(j).norm()) {
        throw DataError("count_recovery: basis vectors " + std::to_string(i) + " and " + std::to_string(j) +
                        " are not orthogonal");
      }
    }
  }
  Eigen::VectorXd counts(b);
  for (Index i = 0; i < b; ++i) {
    counts(i) = basis.row(i).dot(sum_vec) / basis.row(i).squaredNorm();
  }
  return counts;
}

inline nlohmann::json column_index_json(const std::vector<ColumnDesc>& columns) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : columns) {
    arr.push_back({{"hop", c.hop},
                   {"reducer", c.reducer ? to_string(*c.reducer) : "base"},
                   {"base_feature", c.base_feature},
                   {"provenance", to_string(c.provenance)}});
  }
  return arr;
}

inline std::vector<ColumnDesc> column_index_from_json(const nlohmann::json& arr) {
  std::vector<ColumnDesc> out;
  for (const auto& item : arr) {
    ColumnDesc c;
    c.hop = item.at("hop").get<int>();
    const std::string r = item.at("reducer").get<std::string>();
    if (r != "base") c.reducer = parse_reducer(r);
    c.base_feature = item.at("base_feature").get<Index>();
    const std::string p = item.value("provenance", "original");
    if (p == "rew") c.provenance = Provenance::Rew;
    else if (p == "sp_pos") c.provenance = Provenance::SpPos;
    else if (p == "sp_neg") c.provenance = Provenance::SpNeg;
    else c.provenance = Provenance::Original;
    out.push_back(c);
  }
  return out;
}

inline void save_column_index(const std::vector<ColumnDesc>& columns, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write column index: " + path.string());
  out << column_index_json(columns).dump(2) << "\n";
}

inline std::vector<ColumnDesc> load_column_index(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open column index: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return column_index_from_json(j);
}

}  // namespace faf
