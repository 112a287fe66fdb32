#include <doctest.h>

#include <cmath>
#include <set>

#include "faf/faf_engine.hpp"
#include "faf/synth.hpp"

using namespace faf;

TEST_CASE("minesweeper grid matches the published statistics") {
  const Dataset ds = gen_minesweeper({.side = 100, .mine_rate = 0.2, .mask_rate = 0.5, .seed = 1});
  CHECK(ds.graph.num_nodes() == 10000);
  CHECK(ds.graph.num_edges() == 39402);
  CHECK(ds.features.cols() == 7);
  CHECK(ds.splits.num_classes == 2);

  // interior nodes of the king grid have degree 8
  CHECK(ds.graph.degree(50 * 100 + 50) == 8);
  CHECK(ds.graph.degree(0) == 3);

  // mask fraction within 2% of the requested rate
  const double masked = ds.features.col(0).sum() / 10000.0;
  CHECK(std::abs(masked - 0.5) < 0.02);

  ds.splits.validate(ds.graph.num_nodes());
}

TEST_CASE("king-grid edge count formula holds for every side") {
  for (int side : {2, 3, 5, 17, 64, 200}) {
    const Dataset ds = gen_minesweeper({.side = side, .mine_rate = 0.1, .mask_rate = 0.1, .seed = 0});
    const Index expected = 2 * side * (side - 1) + 2 * (side - 1) * (side - 1);
    CHECK(ds.graph.num_edges() == expected);
    CHECK(ds.graph.num_nodes() == static_cast<Index>(side) * side);
  }
}

TEST_CASE("mine rate zero sets the zero-count bucket everywhere") {
  const Dataset ds = gen_minesweeper({.side = 2, .mine_rate = 0.0, .mask_rate = 0.3, .seed = 7});
  for (Index v = 0; v < 4; ++v) {
    CHECK(ds.splits.labels[static_cast<std::size_t>(v)] == 0);
    if (ds.features(v, 0) == 0.0) {
      CHECK(ds.features(v, 1) == 1.0);
      CHECK(ds.features.row(v).sum() == 1.0);
    } else {
      CHECK(ds.features.row(v).sum() == 1.0);  // mask bit only
    }
  }
}

TEST_CASE("mine rate one clips interior counts into the last bucket") {
  const Dataset ds = gen_minesweeper({.side = 4, .mine_rate = 1.0, .mask_rate = 0.0, .seed = 7});
  for (Index v = 0; v < ds.graph.num_nodes(); ++v) {
    CHECK(ds.splits.labels[static_cast<std::size_t>(v)] == 1);
  }
  const NodeId interior = 1 * 4 + 1;
  CHECK(ds.graph.degree(interior) == 8);
  CHECK(ds.features(interior, 6) == 1.0);  // count 8 clips to the last bucket
}

TEST_CASE("generators are bit-reproducible under a fixed seed") {
  const MinesweeperSpec spec{.side = 12, .mine_rate = 0.2, .mask_rate = 0.5, .seed = 42};
  const Dataset a = gen_minesweeper(spec);
  const Dataset b = gen_minesweeper(spec);
  CHECK(a.features == b.features);
  CHECK(a.splits.labels == b.splits.labels);
  CHECK(a.splits.splits[0].train == b.splits.splits[0].train);

  const SbmSpec sspec{.n_per_class = 40, .classes = 3, .p_in = 0.2, .p_out = 0.02, .feature_noise = 0.5, .seed = 9};
  const Dataset c = gen_planted_partition(sspec);
  const Dataset d = gen_planted_partition(sspec);
  CHECK(c.graph == d.graph);
  CHECK(c.features == d.features);
}

TEST_CASE("two-hop tree structure and golden aggregation values") {
  auto [g, x] = gen_fig4_tree();
  CHECK(g.num_nodes() == 8);
  CHECK(g.num_edges() == 7);
  CHECK(g.degree(0) == 2);
  CHECK(g.degree(2) == 4);

  FafConfig cfg;
  cfg.reducers = {ReducerKind::Sum};
  cfg.hops = 2;
  const CompiledFeatures cf = compile(g, x, cfg);
  Eigen::RowVectorXd expected(6);
  expected << 1, 0, 0, 2, 5, 2;
  CHECK(cf.matrix.row(0) == expected);
}

TEST_CASE("collapsed variant differs structurally but not in root sums") {
  auto [g1, x1] = gen_fig4_tree();
  auto [g2, x2] = gen_fig4_collapsed_variant();
  CHECK(g2.degree(1) == 6);
  CHECK(g1.degree(1) == 3);
  CHECK(g2.degree(2) == 1);

  // non-isomorphic: degree multisets differ
  std::multiset<Index> d1, d2;
  for (NodeId v = 0; v < 8; ++v) {
    d1.insert(g1.degree(v));
    d2.insert(g2.degree(v));
  }
  CHECK(d1 != d2);
}

TEST_CASE("pure planted partition is class-separable after one mean hop") {
  const SbmSpec spec{.n_per_class = 30, .classes = 3, .p_in = 0.3, .p_out = 0.0, .feature_noise = 0.0, .seed = 3};
  const Dataset ds = gen_planted_partition(spec);
  const FeatureMatrix h = hop_features(ds.graph, ds.features, ReducerKind::Mean);
  for (Index v = 0; v < ds.graph.num_nodes(); ++v) {
    if (ds.graph.degree(static_cast<NodeId>(v)) == 0) continue;
    const int cls = ds.splits.labels[static_cast<std::size_t>(v)];
    for (Index j = 0; j < 3; ++j) {
      CHECK(h(v, j) == (j == cls ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("equal edge probabilities balance within and between edges") {
  // p_in = p_out: within-class and between-class pair counts differ, so
  // compare empirical rates against the binomial 3-sigma band per seed.
  int within_pairs = 0, between_pairs = 0;
  const int n_per = 40, classes = 3;
  const Index n = n_per * classes;
  for (Index u = 0; u < n; ++u) {
    for (Index v = u + 1; v < n; ++v) {
      (u / n_per == v / n_per ? within_pairs : between_pairs)++;
    }
  }
  const double p = 0.1;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const SbmSpec spec{.n_per_class = n_per, .classes = classes, .p_in = p, .p_out = p, .feature_noise = 0.1,
                       .seed = seed};
    const Dataset ds = gen_planted_partition(spec);
    int within = 0, between = 0;
    for (const auto& [u, v] : ds.graph.edge_list()) {
      (ds.splits.labels[static_cast<std::size_t>(u)] == ds.splits.labels[static_cast<std::size_t>(v)] ? within
                                                                                                      : between)++;
    }
    const double sd_within = std::sqrt(within_pairs * p * (1 - p));
    const double sd_between = std::sqrt(between_pairs * p * (1 - p));
    CHECK(std::abs(within - within_pairs * p) < 3.0 * sd_within);
    CHECK(std::abs(between - between_pairs * p) < 3.0 * sd_between);
  }
}

TEST_CASE("degenerate generator inputs are rejected") {
  CHECK_THROWS_AS(gen_minesweeper({.side = 1}), DataError);
  CHECK_THROWS_AS(gen_minesweeper({.side = 10, .mine_rate = 1.5}), DataError);
  CHECK_THROWS_AS(gen_planted_partition({.n_per_class = 10, .classes = 1}), DataError);
  CHECK_THROWS_AS(gen_planted_partition({.n_per_class = 10, .classes = 2, .p_in = 0.1, .p_out = 0.5}), DataError);
}
