#include <doctest.h>

#include <cmath>

#include "faf/explain.hpp"
#include "faf/synth.hpp"

using namespace faf;

namespace {

// Tabular dataset where exactly one column predicts the label.
CompiledFeatures single_informative(Index n, Index cols, Index informative, std::vector<int>& labels,
                                    std::uint64_t seed) {
  Rng rng(seed);
  CompiledFeatures cf;
  cf.matrix = FeatureMatrix(n, cols);
  labels.clear();
  for (Index i = 0; i < n; ++i) {
    const int cls = rng.uniform() < 0.5 ? 1 : 0;
    labels.push_back(cls);
    for (Index j = 0; j < cols; ++j) {
      cf.matrix(i, j) = (j == informative) ? (cls ? 1.0 : -1.0) : rng.normal();
    }
  }
  for (Index j = 0; j < cols; ++j) cf.columns.push_back({0, std::nullopt, j, Provenance::Original});
  return cf;
}

std::vector<Index> all_rows(Index n) {
  std::vector<Index> m(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) m[static_cast<std::size_t>(i)] = i;
  return m;
}

Mlp train_on(const CompiledFeatures& cf, const std::vector<int>& labels, std::uint64_t seed, int epochs = 150) {
  MlpConfig cfg;
  cfg.num_layers = 2;
  cfg.hidden_channels = 16;
  cfg.learning_rate = 0.02;
  cfg.max_epochs = epochs;
  cfg.seed = seed;
  Split split;
  split.train = all_rows(cf.matrix.rows());
  split.val = split.train;
  split.test = split.train;
  Mlp model;
  train_mlp(cf.matrix, labels, 2, split, cfg, MetricKind::Accuracy, &model);
  return model;
}

}  // namespace

TEST_CASE("the informative column dominates the importance ranking") {
  std::vector<int> labels;
  const CompiledFeatures cf = single_informative(200, 5, 2, labels, 10);
  Mlp model = train_on(cf, labels, 1);
  const ImportanceReport r =
      permutation_importance(model, cf, labels, all_rows(200), 5, 99, MetricKind::Accuracy);
  REQUIRE(r.entries.size() == 5);
  for (std::size_t c = 0; c < 5; ++c) {
    if (c != 2) CHECK(r.entries[2].importance > r.entries[c].importance);
  }
}

TEST_CASE("a column with zero first-layer weights has importance exactly zero") {
  std::vector<int> labels;
  CompiledFeatures cf = single_informative(120, 4, 0, labels, 20);
  Mlp model = train_on(cf, labels, 2);
  // sever column 3 from the network
  model.weight(0).row(3).setZero();
  const ImportanceReport r =
      permutation_importance(model, cf, labels, all_rows(120), 3, 7, MetricKind::Accuracy);
  CHECK(r.entries[3].importance == 0.0);
}

TEST_CASE("importance never mutates the feature matrix") {
  std::vector<int> labels;
  const CompiledFeatures cf = single_informative(80, 4, 1, labels, 30);
  const FeatureMatrix checksum = cf.matrix;
  Mlp model = train_on(cf, labels, 3);
  permutation_importance(model, cf, labels, all_rows(80), 4, 5, MetricKind::Accuracy);
  CHECK(cf.matrix == checksum);
}

TEST_CASE("seeded determinism of the report") {
  std::vector<int> labels;
  const CompiledFeatures cf = single_informative(100, 6, 4, labels, 40);
  Mlp model = train_on(cf, labels, 4);
  const ImportanceReport a = permutation_importance(model, cf, labels, all_rows(100), 5, 123, MetricKind::Accuracy);
  const ImportanceReport b = permutation_importance(model, cf, labels, all_rows(100), 5, 123, MetricKind::Accuracy);
  REQUIRE(a.entries.size() == b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].importance == b.entries[i].importance);
  }
}

TEST_CASE("small masks are rejected") {
  std::vector<int> labels;
  const CompiledFeatures cf = single_informative(30, 3, 0, labels, 50);
  Mlp model = train_on(cf, labels, 5);
  CHECK_THROWS_WITH_AS(
      permutation_importance(model, cf, labels, {0, 1, 2, 3, 4, 5, 6, 7, 8}, 3, 1, MetricKind::Accuracy),
      doctest::Contains("at least 10"), DataError);
}

TEST_CASE("aggregation sums per-reducer scores exactly") {
  ImportanceReport r;
  r.entries = {{{1, ReducerKind::Mean, 0, Provenance::Original}, 0.25},
               {{1, ReducerKind::Sum, 0, Provenance::Original}, 0.5},
               {{1, ReducerKind::Mean, 1, Provenance::Original}, 0.125},
               {{0, std::nullopt, 0, Provenance::Original}, 1.0}};
  const auto agg = aggregate_by_hop_feature(r);
  CHECK(agg.at({1, 0}) == 0.75);
  CHECK(agg.at({1, 1}) == 0.125);
  CHECK(agg.at({0, 0}) == 1.0);
}

TEST_CASE("hop stack report ranks and sorts") {
  ImportanceReport r;
  r.entries = {{{0, std::nullopt, 0, Provenance::Original}, 0.1},
               {{0, std::nullopt, 1, Provenance::Original}, 0.4},
               {{1, ReducerKind::Mean, 0, Provenance::Original}, 0.9},
               {{1, ReducerKind::Mean, 1, Provenance::Original}, 0.2}};
  const auto rows = hop_stack_report(r);
  REQUIRE(rows.size() == 4);
  // feature 0 total = 1.0 > feature 1 total = 0.6, so feature 0 rows come first
  CHECK(rows[0].base_feature == 0);
  CHECK(rows[1].base_feature == 0);
  // ranks within hops
  for (const auto& row : rows) {
    if (row.hop == 0) CHECK(row.rank_in_hop == (row.base_feature == 1 ? 1 : 2));
    if (row.hop == 1) CHECK(row.rank_in_hop == (row.base_feature == 0 ? 1 : 2));
  }

  // single-hop report: table equals the raw scores
  ImportanceReport single;
  single.entries = {{{0, std::nullopt, 0, Provenance::Original}, 0.3},
                    {{0, std::nullopt, 1, Provenance::Original}, 0.7}};
  const auto srows = hop_stack_report(single);
  CHECK(srows[0].importance == 0.7);
  CHECK(srows[1].importance == 0.3);

  // all-zero importances: ties break by feature index
  ImportanceReport zero;
  zero.entries = {{{0, std::nullopt, 0, Provenance::Original}, 0.0},
                  {{0, std::nullopt, 1, Provenance::Original}, 0.0}};
  const auto zrows = hop_stack_report(zero);
  CHECK(zrows[0].base_feature == 0);
  CHECK(zrows[0].rank_in_hop == 1);
  CHECK(zrows[1].rank_in_hop == 2);
}
