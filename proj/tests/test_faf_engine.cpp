#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "faf/faf_engine.hpp"
#include "faf/synth.hpp"

using namespace faf;

namespace {

Eigen::RowVectorXd node_block(const CompiledFeatures& cf, NodeId v, int hop, std::optional<ReducerKind> r) {
  std::vector<double> vals;
  for (Index c = 0; c < cf.matrix.cols(); ++c) {
    const ColumnDesc& d = cf.columns[static_cast<std::size_t>(c)];
    if (d.hop == hop && d.reducer == r && d.provenance == Provenance::Original) vals.push_back(cf.matrix(v, c));
  }
  Eigen::RowVectorXd out(static_cast<Index>(vals.size()));
  for (Index i = 0; i < out.size(); ++i) out(i) = vals[static_cast<std::size_t>(i)];
  return out;
}

// Exact rational vector arithmetic for the mean-chain oracle.
struct Rational {
  long long num = 0;
  long long den = 1;
  void reduce_() {
    const long long g = std::gcd(std::abs(num), den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
  Rational plus(const Rational& o) const {
    Rational r{num * o.den + o.num * den, den * o.den};
    r.reduce_();
    return r;
  }
  Rational over(long long k) const {
    Rational r{num, den * k};
    r.reduce_();
    return r;
  }
  bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
};

std::vector<std::vector<Rational>> rational_mean_hop(const Graph& g, const std::vector<std::vector<Rational>>& prev) {
  std::vector<std::vector<Rational>> out(prev.size(), std::vector<Rational>(prev[0].size()));
  for (NodeId v = 0; v < g.num_nodes(); ++v) {
    const auto nbrs = g.neighbors(v);
    if (nbrs.empty()) continue;
    for (std::size_t j = 0; j < prev[0].size(); ++j) {
      Rational acc;
      for (NodeId u : nbrs) acc = acc.plus(prev[static_cast<std::size_t>(u)][j]);
      out[static_cast<std::size_t>(v)][j] = acc.over(static_cast<long long>(nbrs.size()));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("dimensionality follows F*(1+R*K)") {
  auto [g, x] = gen_fig4_tree();
  FeatureMatrix wide(8, 3);
  wide << x, Eigen::VectorXd::Ones(8);

  FafConfig cfg;
  cfg.reducers = {ReducerKind::Mean, ReducerKind::Sum, ReducerKind::Max, ReducerKind::Min};
  cfg.hops = 2;
  const CompiledFeatures cf = compile(g, wide, cfg);
  CHECK(cf.matrix.cols() == 3 * (1 + 4 * 2));
  CHECK(cf.columns.size() == 27);

  // descriptor order: hop-0 block, then per reducer hops 1..K
  CHECK(cf.columns[0] == ColumnDesc{0, std::nullopt, 0, Provenance::Original});
  CHECK(cf.columns[3] == ColumnDesc{1, ReducerKind::Mean, 0, Provenance::Original});
  CHECK(cf.columns[6] == ColumnDesc{2, ReducerKind::Mean, 0, Provenance::Original});
  CHECK(cf.columns[9] == ColumnDesc{1, ReducerKind::Sum, 0, Provenance::Original});
}

TEST_CASE("K=0 returns the raw features") {
  auto [g, x] = gen_fig4_tree();
  FafConfig cfg;
  cfg.reducers = {};
  cfg.hops = 0;
  const CompiledFeatures cf = compile(g, x, cfg);
  CHECK(cf.matrix == x);
  for (const auto& c : cf.columns) CHECK(c.hop == 0);
}

TEST_CASE("two-hop sum features match the worked example") {
  auto [g, x] = gen_fig4_tree();
  FafConfig cfg;
  cfg.reducers = {ReducerKind::Sum};
  cfg.hops = 2;
  const CompiledFeatures cf = compile(g, x, cfg);
  CHECK(cf.matrix.cols() == 6);
  CHECK(node_block(cf, 0, 0, std::nullopt) == Eigen::RowVector2d(1, 0));
  CHECK(node_block(cf, 0, 1, ReducerKind::Sum) == Eigen::RowVector2d(0, 2));
  CHECK(node_block(cf, 0, 2, ReducerKind::Sum) == Eigen::RowVector2d(5, 2));
}

TEST_CASE("two-hop mean features match the worked example") {
  auto [g, x] = gen_fig4_tree();
  FafConfig cfg;
  cfg.reducers = {ReducerKind::Mean};
  cfg.hops = 2;
  const CompiledFeatures cf = compile(g, x, cfg);
  CHECK(node_block(cf, 0, 1, ReducerKind::Mean) == Eigen::RowVector2d(0, 1));

  // Exact rational oracle: the mean chain evaluates to exactly (17/24, 7/24)
  // at the root; the double-precision engine may sit one rounding step away
  // from the directly rounded rational.
  std::vector<std::vector<Rational>> feats(8, std::vector<Rational>(2));
  for (NodeId v = 0; v < 8; ++v) {
    feats[static_cast<std::size_t>(v)][0] = {static_cast<long long>(x(v, 0)), 1};
    feats[static_cast<std::size_t>(v)][1] = {static_cast<long long>(x(v, 1)), 1};
  }
  const auto hop1 = rational_mean_hop(g, feats);
  const auto hop2 = rational_mean_hop(g, hop1);
  CHECK(hop2[0][0] == Rational{17, 24});
  CHECK(hop2[0][1] == Rational{7, 24});

  const auto engine = node_block(cf, 0, 2, ReducerKind::Mean);
  CHECK(std::abs(engine(0) - 17.0 / 24.0) <= std::ldexp(1.0, -53));
  CHECK(std::abs(engine(1) - 7.0 / 24.0) <= std::ldexp(1.0, -54));
}

TEST_CASE("hop_features sum of one-hot rows on a path") {
  const Graph g = Graph::from_edges(3, {{0, 1}, {1, 2}});
  FeatureMatrix x = FeatureMatrix::Identity(3, 3);
  const FeatureMatrix h = hop_features(g, x, ReducerKind::Sum);
  CHECK(h.row(1) == Eigen::RowVector3d(1, 0, 1));
}

TEST_CASE("isolated nodes get zero rows for every reducer") {
  const Graph g = Graph::from_edges(4, {{0, 1}});
  FeatureMatrix x(4, 2);
  x << 1, 2, 3, 4, 5, 6, 7, 8;
  FeatureMatrix scaled = x;
  scaled.array() /= 8.0;  // KA needs [0,1]
  for (ReducerKind k : {ReducerKind::Mean, ReducerKind::Sum, ReducerKind::Max, ReducerKind::Min, ReducerKind::Std}) {
    const FeatureMatrix h = hop_features(g, x, k);
    CHECK(h.row(2) == Eigen::RowVector2d(0, 0));
    CHECK(h.row(3) == Eigen::RowVector2d(0, 0));
  }
  const FeatureMatrix hka = hop_features(g, scaled, ReducerKind::Ka);
  CHECK(hka.row(2) == Eigen::RowVector2d(0, 0));
}

TEST_CASE("mean on a regular graph keeps a constant feature constant") {
  // cycle of 6 nodes is 2-regular
  const Graph g = Graph::from_edges(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0}});
  FeatureMatrix x = FeatureMatrix::Constant(6, 1, 0.37);
  FeatureMatrix h = x;
  for (int k = 0; k < 4; ++k) {
    h = hop_features(g, h, ReducerKind::Mean);
    CHECK((h.array() == 0.37).all());
  }
}

TEST_CASE("count recovery on sum vectors") {
  FeatureMatrix basis = FeatureMatrix::Identity(2, 2);
  CHECK(count_recovery(Eigen::Vector2d(0, 2), basis) == Eigen::Vector2d(0, 2));
  CHECK(count_recovery(Eigen::Vector2d(0, 0), basis) == Eigen::Vector2d(0, 0));

  FeatureMatrix skewed(2, 2);
  skewed << 1, 1, 1, 0;
  CHECK_THROWS_WITH_AS(count_recovery(Eigen::Vector2d(1, 1), skewed), doctest::Contains("orthogonal"), DataError);
  FeatureMatrix with_zero = FeatureMatrix::Zero(2, 2);
  with_zero(0, 0) = 1;
  CHECK_THROWS_AS(count_recovery(Eigen::Vector2d(1, 1), with_zero), DataError);
}

TEST_CASE("count recovery is exact over all bounded multisets of 4 orthogonal vectors") {
  // scaled orthogonal (not unit) basis exercises the normalization
  FeatureMatrix basis = FeatureMatrix::Zero(4, 4);
  basis(0, 0) = 1;
  basis(1, 1) = 2;
  basis(2, 2) = 1;
  basis(3, 3) = 3;

  std::vector<std::array<int, 4>> multisets;
  for (int a = 0; a <= 6; ++a)
    for (int b = 0; a + b <= 6; ++b)
      for (int c = 0; a + b + c <= 6; ++c)
        for (int d = 0; a + b + c + d <= 6; ++d) multisets.push_back({a, b, c, d});

  for (const auto& counts : multisets) {
    Eigen::VectorXd h = Eigen::VectorXd::Zero(4);
    for (int f = 0; f < 4; ++f) h += counts[static_cast<std::size_t>(f)] * basis.row(f).transpose();
    const Eigen::VectorXd rec = count_recovery(h, basis);
    for (int f = 0; f < 4; ++f) CHECK(rec(f) == static_cast<double>(counts[static_cast<std::size_t>(f)]));
  }
}

TEST_CASE("bounded-size multiset sums of orthogonal features are pairwise distinct") {
  std::set<std::array<int, 3>> sums;
  int total = 0;
  for (int a = 0; a <= 4; ++a)
    for (int b = 0; a + b <= 4; ++b)
      for (int c = 0; a + b + c <= 4; ++c) {
        sums.insert({a, b, c});
        ++total;
      }
  CHECK(total == 35);
  CHECK(sums.size() == 35);
}

TEST_CASE("collapsed tree variant reproduces the root sum features") {
  auto [g1, x1] = gen_fig4_tree();
  auto [g2, x2] = gen_fig4_collapsed_variant();
  FafConfig cfg;
  cfg.reducers = {ReducerKind::Sum};
  cfg.hops = 2;
  const CompiledFeatures a = compile(g1, x1, cfg);
  const CompiledFeatures b = compile(g2, x2, cfg);
  CHECK(a.matrix.row(0) == b.matrix.row(0));

  // mean, by contrast, separates the two trees at the root
  cfg.reducers = {ReducerKind::Mean};
  const CompiledFeatures am = compile(g1, x1, cfg);
  const CompiledFeatures bm = compile(g2, x2, cfg);
  CHECK(am.matrix.row(0) != bm.matrix.row(0));
}

TEST_CASE("degree times hop-1 mean equals hop-1 sum") {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const Index n = 10 + static_cast<Index>(rng.uniform_below(30));
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (int i = 0; i < 120; ++i) {
      edges.emplace_back(static_cast<NodeId>(rng.uniform_below(static_cast<std::uint64_t>(n))),
                         static_cast<NodeId>(rng.uniform_below(static_cast<std::uint64_t>(n))));
    }
    const Graph g = Graph::from_edges(n, edges);
    FeatureMatrix x(n, 3);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < 3; ++j) x(i, j) = rng.normal();

    const FeatureMatrix sum1 = hop_features(g, x, ReducerKind::Sum);
    const FeatureMatrix mean1 = hop_features(g, x, ReducerKind::Mean);
    for (NodeId v = 0; v < n; ++v) {
      const double deg = static_cast<double>(g.degree(v));
      if (deg == 0.0) {
        CHECK(sum1.row(v) == mean1.row(v));
        continue;
      }
      // mean is the sum's single rounding by the degree, bit-exactly
      CHECK(mean1.row(v) == (sum1.row(v) / deg).eval());
    }
  }
}

TEST_CASE("max saturates to indicator values and grows on triangle-closed graphs") {
  const Dataset ds = gen_minesweeper({.side = 8, .mine_rate = 0.3, .mask_rate = 0.4, .seed = 5});
  FeatureMatrix h = ds.features;
  FeatureMatrix prev;
  for (int k = 1; k <= 4; ++k) {
    prev = h;
    h = hop_features(ds.graph, h, ReducerKind::Max);
    CHECK(((h.array() == 0.0) || (h.array() == 1.0)).all());
    if (k > 1) CHECK((h.array() >= prev.array()).all());
  }
}

TEST_CASE("compile is deterministic") {
  const Dataset ds = gen_minesweeper({.side = 10, .mine_rate = 0.2, .mask_rate = 0.5, .seed = 3});
  FafConfig cfg;
  cfg.reducers = {ReducerKind::Mean, ReducerKind::Sum, ReducerKind::Max, ReducerKind::Min};
  cfg.hops = 3;
  const CompiledFeatures a = compile(ds.graph, ds.features, cfg);
  const CompiledFeatures b = compile(ds.graph, ds.features, cfg);
  CHECK(a.matrix == b.matrix);
  CHECK(a.columns == b.columns);
}

TEST_CASE("hop selections") {
  auto [g, x] = gen_fig4_tree();
  FafConfig cfg;
  cfg.reducers = {ReducerKind::Sum, ReducerKind::Mean};
  cfg.hops = 3;

  cfg.selection = HopSelection::LastHopOnly;
  const CompiledFeatures last = compile(g, x, cfg);
  CHECK(last.matrix.cols() == 2 * 2);
  for (const auto& c : last.columns) CHECK(c.hop == 3);

  cfg.selection = HopSelection::LastHopPlusBase;
  const CompiledFeatures lastbase = compile(g, x, cfg);
  CHECK(lastbase.matrix.cols() == 2 * (1 + 2));
  CHECK(lastbase.columns[0].hop == 0);

  // last-hop block agrees with the all-hops compilation
  cfg.selection = HopSelection::AllHops;
  const CompiledFeatures all = compile(g, x, cfg);
  CHECK(node_block(last, 2, 3, ReducerKind::Sum) == node_block(all, 2, 3, ReducerKind::Sum));
}

TEST_CASE("per-column standardization") {
  const Dataset ds = gen_minesweeper({.side = 6, .mine_rate = 0.25, .mask_rate = 0.3, .seed = 9});
  FafConfig cfg;
  cfg.reducers = {ReducerKind::Mean};
  cfg.hops = 2;
  cfg.scaling = ColumnScaling::PerColumnStandardize;
  const CompiledFeatures cf = compile(ds.graph, ds.features, cfg);
  const auto n = static_cast<double>(cf.matrix.rows());
  for (Index j = 0; j < cf.matrix.cols(); ++j) {
    const double mean = cf.matrix.col(j).sum() / n;
    const double var = cf.matrix.col(j).cwiseAbs2().sum() / n - mean * mean;
    if (var == 0.0) {
      CHECK((cf.matrix.col(j).array() == 0.0).all());
    } else {
      CHECK(mean == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("ka reducer handles constant columns and chains across hops") {
  const Graph g = Graph::from_edges(4, {{0, 1}, {1, 2}, {2, 3}});
  FeatureMatrix x(4, 2);
  x << 5, 0.1, 5, 0.9, 5, 0.4, 5, 0.2;  // column 0 constant
  FafConfig cfg;
  cfg.reducers = {ReducerKind::Ka};
  cfg.hops = 2;
  const CompiledFeatures cf = compile(g, x, cfg);
  // constant column rescales to zero; its hop features stay zero
  for (Index c = 0; c < cf.matrix.cols(); ++c) {
    if (cf.columns[static_cast<std::size_t>(c)].base_feature == 0 &&
        cf.columns[static_cast<std::size_t>(c)].hop > 0) {
      CHECK((cf.matrix.col(c).array() == 0.0).all());
    }
  }
  CHECK(cf.matrix.array().isFinite().all());
}

TEST_CASE("config validation") {
  FafConfig cfg;
  cfg.reducers = {};
  cfg.hops = 2;
  CHECK_THROWS_AS(cfg.validate(), DataError);
  cfg.reducers = {ReducerKind::Mean, ReducerKind::Mean};
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("duplicate"), DataError);
  cfg.reducers = {ReducerKind::Mean};
  cfg.hops = -1;
  CHECK_THROWS_AS(cfg.validate(), DataError);
}

TEST_CASE("non-finite intermediates are reported with context") {
  const Graph g = Graph::from_edges(3, {{0, 1}, {1, 2}, {0, 2}});
  FeatureMatrix x = FeatureMatrix::Constant(3, 1, 5e307);  // hop1 = 1e308, hop2 overflows
  FafConfig cfg;
  cfg.reducers = {ReducerKind::Sum};
  cfg.hops = 2;
  CHECK_THROWS_WITH_AS(compile(g, x, cfg), doctest::Contains("hop 2"), DataError);
}

TEST_CASE("column index json round trip") {
  auto [g, x] = gen_fig4_tree();
  FafConfig cfg;
  cfg.reducers = {ReducerKind::Sum};
  cfg.hops = 1;
  const CompiledFeatures cf = compile(g, x, cfg);
  const auto path = std::filesystem::temp_directory_path() / "faf_cols.json";
  save_column_index(cf.columns, path);
  CHECK(load_column_index(path) == cf.columns);
}
