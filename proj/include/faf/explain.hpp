#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "faf/faf_engine.hpp"
#include "faf/metrics.hpp"
#include "faf/mlp.hpp"
#include "faf/types.hpp"

namespace faf {

struct ImportanceEntry {
  ColumnDesc column;
  double importance = 0.0;
};

/// Per-column permutation importance plus the grouping metadata needed to
/// aggregate by (hop, base feature).
struct ImportanceReport {
  std::vector<ImportanceEntry> entries;  // one per compiled column
  MetricKind metric = MetricKind::Accuracy;
  int repeats = 5;
  double baseline = 0.0;
};

/// Shuffles each compiled column within the evaluation mask, measures the
/// metric drop against the unperturbed baseline, and averages over
/// `repeats` seeded permutations. Negative drops are clamped to zero. The
/// per-column randomness is derived from (seed, column), so results do not
/// depend on evaluation order.
inline ImportanceReport permutation_importance(Mlp& model, const CompiledFeatures& features,
                                               const std::vector<int>& labels, const std::vector<Index>& mask,
                                               int repeats, std::uint64_t seed, MetricKind metric) {
  if (repeats < 1) throw DataError("permutation_importance: repeats must be >= 1");
  if (mask.size() < 10) {
    throw DataError("permutation_importance: mask has " + std::to_string(mask.size()) +
                    " nodes; need at least 10");
  }
  if (features.matrix.cols() != static_cast<Index>(features.columns.size())) {
    throw DataError("permutation_importance: column index does not match matrix width");
  }

  // Rows outside the mask never influence the metric, so evaluate on the
  // masked submatrix only.
  const auto m = static_cast<Index>(mask.size());
  Eigen::MatrixXd sub(m, features.matrix.cols());
  std::vector<int> sub_labels(static_cast<std::size_t>(m));
  std::vector<Index> sub_mask(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    sub.row(i) = features.matrix.row(mask[static_cast<std::size_t>(i)]);
    sub_labels[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(mask[static_cast<std::size_t>(i)])];
    sub_mask[static_cast<std::size_t>(i)] = i;
  }

  const Mlp::ForwardMode eval_mode{};
  Mlp::Cache ws;
  ImportanceReport report;
  report.metric = metric;
  report.repeats = repeats;
  model.forward_into(sub, eval_mode, nullptr, ws);
  report.baseline = evaluate(ws.logits, sub_labels, sub_mask, metric);

  for (Index c = 0; c < sub.cols(); ++c) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    const Eigen::VectorXd original = sub.col(c);
    std::vector<Index> perm(static_cast<std::size_t>(m));
    double drop_sum = 0.0;
    for (int rep = 0; rep < repeats; ++rep) {
      for (Index i = 0; i < m; ++i) perm[static_cast<std::size_t>(i)] = i;
      rng.shuffle(perm);
      for (Index i = 0; i < m; ++i) sub(i, c) = original(perm[static_cast<std::size_t>(i)]);
      model.forward_into(sub, eval_mode, nullptr, ws);
      const double metric_value = evaluate(ws.logits, sub_labels, sub_mask, metric);
      drop_sum += report.baseline - metric_value;
    }
    sub.col(c) = original;
    ImportanceEntry e;
    e.column = features.columns[static_cast<std::size_t>(c)];
    e.importance = std::max(0.0, drop_sum / repeats);
    report.entries.push_back(e);
  }
  return report;
}

/// Importance summed over reducers, keyed by (hop, base feature).
inline std::map<std::pair<int, Index>, double> aggregate_by_hop_feature(const ImportanceReport& r) {
  std::map<std::pair<int, Index>, double> agg;
  for (const auto& e : r.entries) {
    agg[{e.column.hop, e.column.base_feature}] += e.importance;
  }
  return agg;
}

struct HopStackRow {
  Index base_feature = 0;
  int hop = 0;
  std::optional<ReducerKind> reducer;
  double importance = 0.0;
  int rank_in_hop = 0;  // rank of the base feature within this hop (1 = most important)
};

/// Plot-ready rows behind a stacked-by-hop importance bar: per-column
/// importance plus each base feature's rank within its hop (computed on
/// the reducer-summed aggregate; ties break toward the lower feature
/// index). Rows are sorted by the feature's total importance, descending.
inline std::vector<HopStackRow> hop_stack_report(const ImportanceReport& r) {
  const auto agg = aggregate_by_hop_feature(r);

  std::map<int, std::vector<std::pair<Index, double>>> per_hop;  // hop -> (feature, aggregate)
  std::map<Index, double> totals;
  for (const auto& [key, value] : agg) {
    per_hop[key.first].push_back({key.second, value});
    totals[key.second] += value;
  }
  std::map<std::pair<int, Index>, int> rank;
  for (auto& [hop, feats] : per_hop) {
    std::stable_sort(feats.begin(), feats.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    for (std::size_t i = 0; i < feats.size(); ++i) rank[{hop, feats[i].first}] = static_cast<int>(i) + 1;
  }

  std::vector<HopStackRow> rows;
  for (const auto& e : r.entries) {
    HopStackRow row;
    row.base_feature = e.column.base_feature;
    row.hop = e.column.hop;
    row.reducer = e.column.reducer;
    row.importance = e.importance;
    row.rank_in_hop = rank[{e.column.hop, e.column.base_feature}];
    rows.push_back(row);
  }
  std::stable_sort(rows.begin(), rows.end(), [&](const HopStackRow& a, const HopStackRow& b) {
    const double ta = totals.at(a.base_feature);
    const double tb = totals.at(b.base_feature);
    if (ta != tb) return ta > tb;
    if (a.base_feature != b.base_feature) return a.base_feature < b.base_feature;
    return a.hop < b.hop;
  });
  return rows;
}

inline nlohmann::json importance_report_json(const ImportanceReport& r) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"hop", e.column.hop},
                       {"reducer", e.column.reducer ? to_string(*e.column.reducer) : "base"},
                       {"base_feature", e.column.base_feature},
                       {"provenance", to_string(e.column.provenance)},
                       {"importance", e.importance}});
  }
  return {{"metric", to_string(r.metric)}, {"repeats", r.repeats}, {"baseline", r.baseline}, {"scores", entries}};
}

inline void save_importance_report(const ImportanceReport& r, const std::filesystem::path& json_path,
                                   const std::filesystem::path& csv_path) {
  {
    std::ofstream out(json_path);
    if (!out) throw DataError("cannot write importance report: " + json_path.string());
    out << importance_report_json(r).dump(2) << "\n";
  }
  std::ofstream out(csv_path);
  if (!out) throw DataError("cannot write importance table: " + csv_path.string());
  out << "base_feature,hop,reducer,importance,rank_in_hop\n";
  for (const auto& row : hop_stack_report(r)) {
    out << row.base_feature << "," << row.hop << "," << (row.reducer ? to_string(*row.reducer) : "base") << ","
        << row.importance << "," << row.rank_in_hop << "\n";
  }
}

}  // namespace faf
