#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "faf/explain.hpp"
#include "faf/faf_engine.hpp"
#include "faf/graph.hpp"
#include "faf/ka_encoder.hpp"
#include "faf/metrics.hpp"
#include "faf/mlp.hpp"
#include "faf/reducers.hpp"
#include "faf/rewire.hpp"
#include "faf/synth.hpp"
#include "faf/types.hpp"

namespace faf::verify {

struct CheckResult {
  std::string name;
  bool pass = false;
  bool skipped = false;
  std::string details;
  double seconds = 0.0;
};

namespace detail {

class Checker {
 public:
  std::ostringstream out;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      failed_ = true;
      if (!first_failure_.empty()) first_failure_ += "; ";
      first_failure_ += what;
    }
  }

  bool ok() const { return !failed_; }
  const std::string& failure() const { return first_failure_; }

 private:
  bool failed_ = false;
  std::string first_failure_;
};

inline CheckResult run_check(const std::string& name, const std::function<void(Checker&)>& body) {
  CheckResult result;
  result.name = name;
  const auto t0 = std::chrono::steady_clock::now();
  Checker c;
  try {
    body(c);
    result.pass = c.ok();
    result.details = c.ok() ? c.out.str() : c.failure();
  } catch (const std::exception& e) {
    result.pass = false;
    result.details = std::string("exception: ") + e.what();
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

struct Rational {
  long long num = 0;
  long long den = 1;
  void normalize() {
    const long long g = std::gcd(std::abs(num), den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
  Rational plus(const Rational& o) const {
    Rational r{num * o.den + o.num * den, den * o.den};
    r.normalize();
    return r;
  }
  Rational over(long long k) const {
    Rational r{num, den * k};
    r.normalize();
    return r;
  }
  bool is(long long n, long long d) const { return num == n && den == d; }
};

inline std::vector<std::vector<Rational>> rational_mean_hop(const Graph& g,
                                                            const std::vector<std::vector<Rational>>& prev) {
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

/// Enumerates every multiset of size <= max_size over n one-hot vectors,
/// exercises the sum reducer on it, and verifies pairwise distinctness and
/// exact count recovery.
inline void check_sum_injectivity(Checker& c, int n, int max_size) {
  std::vector<std::vector<int>> multisets;
  std::vector<int> counts(static_cast<std::size_t>(n), 0);
  std::function<void(int, int)> enumerate = [&](int slot, int remaining) {
    if (slot == n) {
      multisets.push_back(counts);
      return;
    }
    for (int k = 0; k <= remaining; ++k) {
      counts[static_cast<std::size_t>(slot)] = k;
      enumerate(slot + 1, remaining - k);
    }
    counts[static_cast<std::size_t>(slot)] = 0;
  };
  enumerate(0, max_size);

  const FeatureMatrix basis = FeatureMatrix::Identity(n, n);
  std::set<std::vector<double>> sums;
  for (const auto& ms : multisets) {
    Index rows = 0;
    for (int k : ms) rows += k;
    FeatureMatrix elements(rows, n);
    Index r = 0;
    for (int f = 0; f < n; ++f) {
      for (int k = 0; k < ms[static_cast<std::size_t>(f)]; ++k) elements.row(r++) = basis.row(f);
    }
    const Eigen::RowVectorXd h = reduce(ReducerKind::Sum, elements, n);
    std::vector<double> key(h.data(), h.data() + h.size());
    c.require(sums.insert(key).second, "sum collision for a multiset over n=" + std::to_string(n));

    const Eigen::VectorXd recovered = count_recovery(h.transpose(), basis);
    for (int f = 0; f < n; ++f) {
      c.require(recovered(f) == static_cast<double>(ms[static_cast<std::size_t>(f)]),
                "count recovery mismatch at n=" + std::to_string(n));
    }
  }
  const std::size_t expected = multisets.size();
  c.require(sums.size() == expected, "distinct sum count mismatch");
  c.out << "n=" << n << ": " << expected << " multisets (" << expected - 1 << " nonempty + empty), all sums distinct"
        << "; ";
}

inline MlpConfig minesweeper_mlp_config(std::uint64_t seed) {
  MlpConfig cfg;
  cfg.num_layers = 12;
  cfg.hidden_channels = 64;
  cfg.dropout = 0.2;
  cfg.normalization = NormKind::BatchNorm;
  cfg.learning_rate = 0.01;
  cfg.weight_decay = 0.0;
  cfg.max_epochs = 150;
  cfg.seed = seed;
  return cfg;
}

inline FafConfig faf4_config(int hops) {
  FafConfig cfg;
  cfg.reducers = {ReducerKind::Mean, ReducerKind::Sum, ReducerKind::Max, ReducerKind::Min};
  cfg.hops = hops;
  cfg.scaling = ColumnScaling::PerColumnStandardize;
  return cfg;
}

struct MinesweeperRuns {
  std::vector<double> all_hops_auc;   // per seed, FAF4 K=4
  std::vector<double> k0_auc;         // per seed, raw features
  std::vector<double> last_hop_auc;   // per seed, last-hop-only features
  std::vector<double> linear_auc;     // per seed, single affine map on FAF4 K=4
  bool ran = false;
};

constexpr std::array<std::uint64_t, 3> kSeeds = {1, 2, 3};

inline MinesweeperRuns& minesweeper_runs() {
  static MinesweeperRuns runs;
  return runs;
}

inline void ensure_minesweeper_runs() {
  MinesweeperRuns& runs = minesweeper_runs();
  if (runs.ran) return;
  for (std::uint64_t seed : kSeeds) {
    const Dataset ds = gen_minesweeper({.side = 100, .mine_rate = 0.2, .mask_rate = 0.5, .seed = seed});
    const Split& split = ds.splits.splits[0];

    const CompiledFeatures full = compile(ds.graph, ds.features, faf4_config(4));
    const TrainReport full_report =
        train_mlp(full.matrix, ds.splits.labels, 2, split, minesweeper_mlp_config(seed), MetricKind::RocAuc);
    runs.all_hops_auc.push_back(full_report.test_at_best_val);

    FafConfig k0 = faf4_config(0);
    const CompiledFeatures raw = compile(ds.graph, ds.features, k0);
    const TrainReport k0_report =
        train_mlp(raw.matrix, ds.splits.labels, 2, split, minesweeper_mlp_config(seed), MetricKind::RocAuc);
    runs.k0_auc.push_back(k0_report.test_at_best_val);

    FafConfig last = faf4_config(4);
    last.selection = HopSelection::LastHopOnly;
    const CompiledFeatures last_cf = compile(ds.graph, ds.features, last);
    const TrainReport last_report =
        train_mlp(last_cf.matrix, ds.splits.labels, 2, split, minesweeper_mlp_config(seed), MetricKind::RocAuc);
    runs.last_hop_auc.push_back(last_report.test_at_best_val);

    MlpConfig linear = minesweeper_mlp_config(seed);
    linear.num_layers = 1;
    const TrainReport linear_report =
        train_mlp(full.matrix, ds.splits.labels, 2, split, linear, MetricKind::RocAuc);
    runs.linear_auc.push_back(linear_report.test_at_best_val);
  }
  runs.ran = true;
}

inline double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline std::string join(const std::vector<double>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
  return os.str();
}

}  // namespace detail

// --- acceptance criteria -------------------------------------------------

inline CheckResult criterion_1_sum_injectivity() {
  return detail::run_check("criterion-01 bounded-multiset sum injectivity and count recovery", [](auto& c) {
    const auto t0 = std::chrono::steady_clock::now();
    detail::check_sum_injectivity(c, 3, 4);
    detail::check_sum_injectivity(c, 4, 6);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.out << "elapsed " << secs << "s";
    c.require(secs < 1.0, "runtime exceeded 1s");
  });
}

inline CheckResult criterion_2_ka_injectivity() {
  return detail::run_check("criterion-02 scalar encoding: grid injectivity, round trip, monotonicity", [](auto& c) {
    const auto t0 = std::chrono::steady_clock::now();
    {
      const KaEncoder enc(6);
      std::set<long double> seen;
      int collisions = 0;
      for (int i = 0; i < 64; ++i) {
        for (int j = 0; j < 64; ++j) {
          const double v[] = {i / 64.0, j / 64.0};
          if (!seen.insert(enc.aggregate(v)).second) ++collisions;
        }
      }
      c.require(collisions == 0, "codeword collisions on the d=2 m=6 grid");
      c.out << "4096-point grid: " << collisions << " collisions; ";
    }
    {
      const KaEncoder enc(20);
      Rng rng(20240);
      double max_err = 0.0;
      for (int trial = 0; trial < 10000; ++trial) {
        const double v[] = {rng.uniform(), rng.uniform()};
        const auto back = enc.decode(enc.aggregate(v), 2);
        max_err = std::max({max_err, std::abs(back[0] - v[0]), std::abs(back[1] - v[1])});
      }
      c.require(max_err < std::ldexp(1.0, -20), "round-trip error reached 2^-20");
      c.out << "10000 round trips, max error " << max_err << " < 2^-20; ";
    }
    {
      const KaEncoder enc(20);
      double prev = -1.0;
      bool monotone = true;
      for (int i = 0; i < 10000; ++i) {
        const double y = enc.phi_scalar(static_cast<double>(i) / 9999.0);
        if (y < prev) monotone = false;
        prev = y;
      }
      c.require(monotone, "phi not monotone on the grid");
      c.out << "phi monotone on 10^4 grid; ";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.out << "elapsed " << secs << "s";
    c.require(secs < 5.0, "runtime exceeded 5s");
  });
}

inline CheckResult criterion_3_worked_example() {
  return detail::run_check("criterion-03 two-hop worked example and information-loss witness", [](auto& c) {
    auto [g, x] = gen_fig4_tree();
    FafConfig sum_cfg;
    sum_cfg.reducers = {ReducerKind::Sum};
    sum_cfg.hops = 2;
    const CompiledFeatures sum_cf = compile(g, x, sum_cfg);
    Eigen::RowVectorXd expected_sum(6);
    expected_sum << 1, 0, 0, 2, 5, 2;
    c.require(sum_cf.matrix.row(0) == expected_sum, "root sum features differ from ((1,0),(0,2),(5,2))");

    FafConfig mean_cfg;
    mean_cfg.reducers = {ReducerKind::Mean};
    mean_cfg.hops = 2;
    const CompiledFeatures mean_cf = compile(g, x, mean_cfg);
    c.require(mean_cf.matrix(0, 2) == 0.0 && mean_cf.matrix(0, 3) == 1.0, "root hop-1 mean differs from (0,1)");

    // Exact rational evaluation of the mean chain; the double-precision
    // engine may differ from the directly rounded rational by the one
    // extra rounding of the hop-2 average.
    std::vector<std::vector<detail::Rational>> feats(8, std::vector<detail::Rational>(2));
    for (NodeId v = 0; v < 8; ++v) {
      feats[static_cast<std::size_t>(v)][0] = {static_cast<long long>(x(v, 0)), 1};
      feats[static_cast<std::size_t>(v)][1] = {static_cast<long long>(x(v, 1)), 1};
    }
    const auto hop2 = detail::rational_mean_hop(g, detail::rational_mean_hop(g, feats));
    c.require(hop2[0][0].is(17, 24) && hop2[0][1].is(7, 24), "rational mean chain is not (17/24, 7/24)");
    c.require(std::abs(mean_cf.matrix(0, 4) - 17.0 / 24.0) <= std::ldexp(1.0, -53) &&
                  std::abs(mean_cf.matrix(0, 5) - 7.0 / 24.0) <= std::ldexp(1.0, -54),
              "engine mean further than one rounding step from (17/24, 7/24)");

    auto [g2, x2] = gen_fig4_collapsed_variant();
    const CompiledFeatures collapsed = compile(g2, x2, sum_cfg);
    c.require(collapsed.matrix.row(0) == sum_cf.matrix.row(0),
              "collapsed variant root sum features differ (loss witness failed)");
    c.out << "root sums ((1,0),(0,2),(5,2)) exact; rational means (17/24, 7/24) exact; collapsed variant matches";
  });
}

inline CheckResult criterion_4_dimensionality() {
  return detail::run_check("criterion-04 compiled width F*(1+R*K) over randomized configs", [](auto& c) {
    Rng rng(404);
    const std::vector<ReducerKind> all_kinds = {ReducerKind::Mean, ReducerKind::Sum, ReducerKind::Max,
                                                ReducerKind::Min, ReducerKind::Std, ReducerKind::Ka};
    for (int trial = 0; trial < 20; ++trial) {
      const Index f = 1 + static_cast<Index>(rng.uniform_below(10));
      const int hops = trial == 0 ? 0 : static_cast<int>(rng.uniform_below(5));
      std::vector<ReducerKind> kinds = all_kinds;
      rng.shuffle(kinds);
      kinds.resize(1 + rng.uniform_below(6));

      const Index n = 5 + static_cast<Index>(rng.uniform_below(36));
      std::vector<std::pair<NodeId, NodeId>> edges;
      for (int e = 0; e < 3 * static_cast<int>(n); ++e) {
        edges.emplace_back(static_cast<NodeId>(rng.uniform_below(static_cast<std::uint64_t>(n))),
                           static_cast<NodeId>(rng.uniform_below(static_cast<std::uint64_t>(n))));
      }
      const Graph g = Graph::from_edges(n, edges);
      FeatureMatrix x(n, f);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < f; ++j) x(i, j) = rng.uniform();

      FafConfig cfg;
      cfg.reducers = kinds;
      cfg.hops = hops;
      const CompiledFeatures cf = compile(g, x, cfg);
      const Index expected = f * (1 + static_cast<Index>(kinds.size()) * hops);
      c.require(cf.matrix.cols() == expected, "width mismatch at trial " + std::to_string(trial));
      c.require(static_cast<Index>(cf.columns.size()) == expected, "descriptor count mismatch");
    }
    c.out << "20 randomized configs, width exact";
  });
}

inline CheckResult criterion_5_mean_sum_degree() {
  return detail::run_check("criterion-05 degree * hop-1 mean = hop-1 sum", [](auto& c) {
    {
      const Dataset ds = gen_minesweeper({.side = 100, .mine_rate = 0.2, .mask_rate = 0.5, .seed = 1});
      const FeatureMatrix sum1 = hop_features(ds.graph, ds.features, ReducerKind::Sum);
      const FeatureMatrix mean1 = hop_features(ds.graph, ds.features, ReducerKind::Mean);
      for (NodeId v = 0; v < ds.graph.num_nodes(); ++v) {
        const double deg = static_cast<double>(ds.graph.degree(v));
        c.require((deg * mean1.row(v)).eval() == sum1.row(v), "multiply form failed on the king grid");
        c.require(mean1.row(v) == (deg > 0 ? (sum1.row(v) / deg).eval() : sum1.row(v).eval()),
                  "division form failed on the king grid");
      }
      c.out << "king grid (" << ds.graph.num_nodes() << " nodes): multiply and division forms exact; ";
    }
    {
      const Dataset ds = gen_planted_partition({.n_per_class = 300, .classes = 3, .p_in = 0.05, .p_out = 0.005,
                                                .feature_noise = 1.0, .seed = 1});
      const FeatureMatrix sum1 = hop_features(ds.graph, ds.features, ReducerKind::Sum);
      const FeatureMatrix mean1 = hop_features(ds.graph, ds.features, ReducerKind::Mean);
      for (NodeId v = 0; v < ds.graph.num_nodes(); ++v) {
        const double deg = static_cast<double>(ds.graph.degree(v));
        c.require(mean1.row(v) == (deg > 0 ? (sum1.row(v) / deg).eval() : sum1.row(v).eval()),
                  "division form failed on the planted partition");
      }
      c.out << "planted partition (" << ds.graph.num_nodes()
            << " nodes): division form exact (multiply form is not binary-representable for real sums)";
    }
  });
}

inline CheckResult criterion_6_minesweeper_end_to_end() {
  return detail::run_check("criterion-06 regenerated king-grid benchmark end-to-end", [](auto& c) {
    const auto t0 = std::chrono::steady_clock::now();
    for (std::uint64_t seed : detail::kSeeds) {
      const Dataset ds = gen_minesweeper({.side = 100, .mine_rate = 0.2, .mask_rate = 0.5, .seed = seed});
      c.require(ds.graph.num_nodes() == 10000, "node count != 10000");
      c.require(ds.graph.num_edges() == 39402, "edge count != 39402");
      c.require(ds.features.cols() == 7, "feature width != 7");
    }
    detail::ensure_minesweeper_runs();
    const auto& runs = detail::minesweeper_runs();
    const double mean_auc = detail::mean_of(runs.all_hops_auc);
    const double mean_k0 = detail::mean_of(runs.k0_auc);
    c.out << "4-hop test ROC-AUC per seed: " << detail::join(runs.all_hops_auc) << " (mean " << mean_auc << "); ";
    c.out << "raw-feature baseline: " << detail::join(runs.k0_auc) << " (mean " << mean_k0 << "); ";
    c.require(mean_auc >= 0.85, "mean test ROC-AUC below 0.85");
    c.require(mean_k0 <= 0.60, "raw-feature baseline above 0.60");
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.out << "elapsed " << secs << "s";
    c.require(secs <= 900.0, "runtime exceeded 15 minutes");
  });
}

inline CheckResult criterion_7_last_hop_gap() {
  return detail::run_check("criterion-07 all-hops vs last-hop-only gap", [](auto& c) {
    detail::ensure_minesweeper_runs();
    const auto& runs = detail::minesweeper_runs();
    const double all_hops = detail::mean_of(runs.all_hops_auc);
    const double last_only = detail::mean_of(runs.last_hop_auc);
    c.out << "all hops " << all_hops << " vs last hop " << last_only << " (gap " << all_hops - last_only << ")";
    c.require(all_hops - last_only >= 0.10, "gap below 0.10");
  });
}

inline CheckResult criterion_8_linear_vs_mlp() {
  return detail::run_check("criterion-08 single affine map vs MLP", [](auto& c) {
    FeatureMatrix xor_x(4, 2);
    xor_x << 0, 0, 0, 1, 1, 0, 1, 1;
    const std::vector<int> xor_y = {0, 1, 1, 0};
    Split split;
    split.train = {0, 1, 2, 3};
    split.val = split.train;
    split.test = split.train;

    MlpConfig linear;
    linear.num_layers = 1;
    linear.learning_rate = 0.05;
    linear.max_epochs = 800;
    linear.seed = 1;
    const TrainReport lin = train_mlp(xor_x, xor_y, 2, split, linear, MetricKind::Accuracy);
    c.require(lin.train_metric.back() <= 0.75, "linear map exceeded 0.75 on xor");

    MlpConfig mlp = linear;
    mlp.num_layers = 2;
    mlp.hidden_channels = 64;
    mlp.learning_rate = 0.01;
    const TrainReport deep = train_mlp(xor_x, xor_y, 2, split, mlp, MetricKind::Accuracy);
    c.require(deep.train_metric.back() == 1.0, "2-layer MLP did not reach train accuracy 1.0 on xor");
    c.out << "xor: linear " << lin.train_metric.back() << " <= 0.75, 2-layer " << deep.train_metric.back() << "; ";

    detail::ensure_minesweeper_runs();
    const auto& runs = detail::minesweeper_runs();
    const double mlp_auc = detail::mean_of(runs.all_hops_auc);
    const double lin_auc = detail::mean_of(runs.linear_auc);
    c.out << "king grid: MLP " << mlp_auc << " vs 1L " << lin_auc;
    c.require(mlp_auc >= lin_auc - 0.01, "MLP fell more than 0.01 below the single affine map");
  });
}

inline CheckResult criterion_9_hop_ablation_shape() {
  return detail::run_check("criterion-09 hop ablation gain then plateau on planted partitions", [](auto& c) {
    std::array<std::vector<double>, 3> val_acc;  // K = 0, 1, 2
    for (std::uint64_t seed : detail::kSeeds) {
      const Dataset ds = gen_planted_partition({.n_per_class = 300, .classes = 3, .p_in = 0.05, .p_out = 0.005,
                                                .feature_noise = 1.5, .seed = seed});
      for (int k = 0; k <= 2; ++k) {
        const CompiledFeatures cf = compile(ds.graph, ds.features, detail::faf4_config(k));
        MlpConfig cfg;
        cfg.num_layers = 2;
        cfg.hidden_channels = 64;
        cfg.normalization = NormKind::LayerNorm;
        cfg.learning_rate = 0.01;
        cfg.max_epochs = 200;
        cfg.seed = seed;
        const TrainReport r =
            train_mlp(cf.matrix, ds.splits.labels, 3, ds.splits.splits[0], cfg, MetricKind::Accuracy);
        val_acc[static_cast<std::size_t>(k)].push_back(r.best_val_metric);
      }
    }
    const double k0 = detail::mean_of(val_acc[0]);
    const double k1 = detail::mean_of(val_acc[1]);
    const double k2 = detail::mean_of(val_acc[2]);
    c.out << "mean val accuracy: K0 " << k0 << ", K1 " << k1 << ", K2 " << k2;
    c.require(k1 >= k0 + 0.10, "K=1 does not exceed K=0 by 10 points");
    c.require(k2 >= k1 - 0.01, "K=2 fell more than 1 point below K=1");
  });
}

inline CheckResult criterion_10_importance_ranks() {
  return detail::run_check("criterion-10 grouped importance ranks on the king grid", [](auto& c) {
    int seeds_passing = 0;
    for (std::uint64_t seed : detail::kSeeds) {
      const Dataset ds = gen_minesweeper({.side = 100, .mine_rate = 0.2, .mask_rate = 0.5, .seed = seed});
      FafConfig faf;
      faf.reducers = {ReducerKind::Mean};
      faf.hops = 4;
      faf.scaling = ColumnScaling::PerColumnStandardize;
      const CompiledFeatures cf = compile(ds.graph, ds.features, faf);

      MlpConfig cfg;
      cfg.num_layers = 3;
      cfg.hidden_channels = 64;
      cfg.dropout = 0.2;
      cfg.normalization = NormKind::BatchNorm;
      cfg.learning_rate = 0.01;
      cfg.max_epochs = 200;
      cfg.seed = seed;
      Mlp model;
      train_mlp(cf.matrix, ds.splits.labels, 2, ds.splits.splits[0], cfg, MetricKind::RocAuc, &model);

      const ImportanceReport report = permutation_importance(model, cf, ds.splits.labels, ds.splits.splits[0].val,
                                                             5, seed, MetricKind::RocAuc);
      const auto agg = aggregate_by_hop_feature(report);
      std::vector<std::pair<double, std::pair<int, Index>>> ranked;
      for (const auto& [key, value] : agg) ranked.push_back({value, key});
      std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

      const bool top_is_hop1_feat1 = ranked[0].second == std::pair<int, Index>{1, 1};
      bool mask_in_top3 = false;
      for (std::size_t i = 0; i < 3 && i < ranked.size(); ++i) {
        if (ranked[i].second == std::pair<int, Index>{0, 0}) mask_in_top3 = true;
      }
      c.out << "seed " << seed << ": top cell (hop " << ranked[0].second.first << ", feature "
            << ranked[0].second.second << "), mask cell in top-3 " << (mask_in_top3 ? "yes" : "no") << "; ";
      if (top_is_hop1_feat1 && mask_in_top3) ++seeds_passing;
    }
    c.out << seeds_passing << "/3 seeds satisfy both rank statements";
    c.require(seeds_passing >= 2, "fewer than 2 of 3 seeds reproduce the importance ranks");
  });
}

inline CheckResult criterion_11_trainer_gate() {
  return detail::run_check("criterion-11 gradient correctness and bit-determinism", [](auto& c) {
    Rng rng(1111);
    FeatureMatrix x(6, 3);
    for (Index i = 0; i < 6; ++i)
      for (Index j = 0; j < 3; ++j) x(i, j) = rng.normal();
    const std::vector<int> labels = {0, 1, 2, 0, 1, 2};

    MlpConfig plain;
    plain.num_layers = 2;
    plain.hidden_channels = 4;
    plain.seed = 3;
    const double e_plain = gradient_check(plain, x, labels);
    MlpConfig single;
    single.num_layers = 1;
    single.seed = 4;
    const double e_single = gradient_check(single, x, labels);
    c.require(e_plain < 1e-4 && e_single < 1e-4, "gradient error >= 1e-4 without normalization");

    MlpConfig ln = plain;
    ln.normalization = NormKind::LayerNorm;
    const double e_ln = gradient_check(ln, x, labels);
    MlpConfig bn = plain;
    bn.normalization = NormKind::BatchNorm;
    const double e_bn = gradient_check(bn, x, labels);
    const double e_bn_batch = gradient_check(bn, x, labels, /*batch_stats=*/true);
    c.require(e_ln < 1e-3 && e_bn < 1e-3 && e_bn_batch < 1e-3, "gradient error >= 1e-3 with normalization");
    c.out << "max relative errors: plain " << std::max(e_plain, e_single) << ", normalized "
          << std::max({e_ln, e_bn, e_bn_batch}) << "; ";

    const Dataset ds = gen_planted_partition({.n_per_class = 40, .classes = 2, .p_in = 0.2, .p_out = 0.05,
                                              .feature_noise = 1.0, .seed = 7});
    MlpConfig cfg;
    cfg.num_layers = 3;
    cfg.hidden_channels = 16;
    cfg.dropout = 0.5;
    cfg.normalization = NormKind::BatchNorm;
    cfg.max_epochs = 50;
    cfg.seed = 99;
    const TrainReport a = train_mlp(ds.features, ds.splits.labels, 2, ds.splits.splits[0], cfg, MetricKind::Accuracy);
    const TrainReport b = train_mlp(ds.features, ds.splits.labels, 2, ds.splits.splits[0], cfg, MetricKind::Accuracy);
    const bool identical = a.train_loss == b.train_loss && a.train_metric == b.train_metric &&
                           a.val_metric == b.val_metric && a.test_metric == b.test_metric;
    c.require(identical, "repeated training runs differ bitwise");
    c.out << "repeated runs bit-identical";
  });
}

inline CheckResult criterion_12_rewiring_bookkeeping() {
  return detail::run_check("criterion-12 rewiring partition and concat prefix", [](auto& c) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      Rng rng(seed);
      const Index n = 30;
      std::vector<std::pair<NodeId, NodeId>> edges;
      for (int e = 0; e < 150; ++e) {
        edges.emplace_back(static_cast<NodeId>(rng.uniform_below(static_cast<std::uint64_t>(n))),
                           static_cast<NodeId>(rng.uniform_below(static_cast<std::uint64_t>(n))));
      }
      const Graph g = Graph::from_edges(n, edges);
      FeatureMatrix x(n, 3);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < 3; ++j) x(i, j) = rng.normal();

      const auto [pos, neg] = rewire_split(g, x);
      auto pos_edges = pos.edge_list();
      auto neg_edges = neg.edge_list();
      auto all = pos_edges;
      all.insert(all.end(), neg_edges.begin(), neg_edges.end());
      std::sort(all.begin(), all.end());
      c.require(all == g.edge_list(), "split edge sets do not partition the original");
      c.require(pos == rewire_drop(g, x), "drop output differs from the split's positive component");

      FafConfig cfg;
      cfg.reducers = {ReducerKind::Mean, ReducerKind::Max};
      cfg.hops = 2;
      const CompiledFeatures plain = compile(g, x, cfg);
      for (RewireMode mode : {RewireMode::Drop, RewireMode::Split}) {
        const CompiledFeatures aug = compile_augmented(g, x, cfg, {mode, RewireCombine::Concat});
        c.require(aug.matrix.leftCols(plain.matrix.cols()) == plain.matrix,
                  "concat-mode matrix does not contain the plain matrix as a prefix");
      }
    }
    c.out << "3 random attributed graphs: partition exact, concat prefix bit-exact";
  });
}

// --- module invariants exercised as standalone properties -----------------

inline CheckResult property_graph_roundtrip() {
  return detail::run_check("property graph canonical save/load round trip", [](auto& c) {
    Rng rng(55);
    for (int trial = 0; trial < 5; ++trial) {
      const Index n = 2 + static_cast<Index>(rng.uniform_below(40));
      std::vector<std::pair<NodeId, NodeId>> edges;
      for (int e = 0; e < 100; ++e) {
        edges.emplace_back(static_cast<NodeId>(rng.uniform_below(static_cast<std::uint64_t>(n))),
                           static_cast<NodeId>(rng.uniform_below(static_cast<std::uint64_t>(n))));
      }
      const Graph g = Graph::from_edges(n, edges);
      std::ostringstream first;
      save_graph(g, first);
      const auto tmp = std::filesystem::temp_directory_path() / "faf_verify_roundtrip.edges";
      {
        std::ofstream out(tmp);
        out << first.str();
      }
      const Graph back = load_graph(tmp);
      std::ostringstream second;
      save_graph(back, second);
      c.require(back == g && first.str() == second.str(), "round trip not byte-identical");

      Index degree_sum = 0;
      for (NodeId v = 0; v < n; ++v) {
        const auto nbrs = g.neighbors(v);
        degree_sum += static_cast<Index>(nbrs.size());
        for (std::size_t i = 0; i + 1 < nbrs.size(); ++i) {
          c.require(nbrs[i] < nbrs[i + 1], "neighbor list not strictly increasing");
        }
      }
      c.require(degree_sum == 2 * g.num_edges(), "degree sum != 2E");
    }
    c.out << "5 random graphs";
  });
}

inline CheckResult property_reducer_invariances() {
  return detail::run_check("property reducer permutation invariance and identities", [](auto& c) {
    Rng rng(66);
    for (int trial = 0; trial < 10; ++trial) {
      const Index rows = 1 + static_cast<Index>(rng.uniform_below(8));
      FeatureMatrix m(rows, 3);
      for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < 3; ++j) m(i, j) = rng.normal();
      std::vector<Index> perm(static_cast<std::size_t>(rows));
      for (Index i = 0; i < rows; ++i) perm[static_cast<std::size_t>(i)] = i;
      rng.shuffle(perm);
      FeatureMatrix shuffled(rows, 3);
      for (Index i = 0; i < rows; ++i) shuffled.row(i) = m.row(perm[static_cast<std::size_t>(i)]);

      for (ReducerKind k :
           {ReducerKind::Mean, ReducerKind::Sum, ReducerKind::Max, ReducerKind::Min, ReducerKind::Std}) {
        c.require(reduce(k, m, 3) == reduce(k, shuffled, 3), "permutation changed a reducer result");
      }
      c.require(reduce(ReducerKind::Min, m, 3) == (-reduce(ReducerKind::Max, (-m).eval(), 3)).eval(),
                "min(X) != -max(-X)");
      const auto sd = reduce(ReducerKind::Std, m, 3);
      const auto mean = reduce(ReducerKind::Mean, m, 3);
      const auto mean_sq = reduce(ReducerKind::Mean, m.cwiseAbs2().eval(), 3);
      for (Index j = 0; j < 3; ++j) {
        const double lhs = sd(j) * sd(j) + mean(j) * mean(j);
        c.require(std::abs(lhs - mean_sq(j)) <= 1e-9 * std::max(1.0, std::abs(mean_sq(j))),
                  "std^2 + mean^2 != mean of squares");
      }
    }
    c.out << "10 random multisets";
  });
}

inline CheckResult property_cantor_membership() {
  return detail::run_check("property scalar encoder output stays in the Cantor set", [](auto& c) {
    const KaEncoder enc(12);
    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
      // recover the numerator exactly, then peel digits in integer space
      long double scaled = enc.phi_scalar(rng.uniform());
      for (int i = 0; i < 12; ++i) scaled *= 3.0L;
      auto n = static_cast<unsigned long long>(llroundl(scaled));
      for (int digit = 0; digit < 12; ++digit) {
        c.require(n % 3 != 1, "ternary digit 1 in a phi output");
        n /= 3;
      }
    }
    c.out << "200 random inputs, 12 digits each";
  });
}

inline CheckResult property_max_saturation() {
  return detail::run_check("property max-hop indicator saturation on the king grid", [](auto& c) {
    const Dataset ds = gen_minesweeper({.side = 12, .mine_rate = 0.3, .mask_rate = 0.4, .seed = 15});
    FeatureMatrix h = ds.features;
    FeatureMatrix prev;
    for (int k = 1; k <= 5; ++k) {
      prev = h;
      h = hop_features(ds.graph, h, ReducerKind::Max);
      c.require(((h.array() == 0.0) || (h.array() == 1.0)).all(), "max features left {0,1}");
      if (k > 1) c.require((h.array() >= prev.array()).all(), "max features decreased with depth");
    }
    c.out << "5 hops on a 12x12 grid";
  });
}

inline CheckResult property_compile_determinism() {
  return detail::run_check("property compilation determinism and empty-neighborhood rule", [](auto& c) {
    const Dataset ds = gen_minesweeper({.side = 10, .mine_rate = 0.2, .mask_rate = 0.5, .seed = 2});
    FafConfig cfg = detail::faf4_config(3);
    const CompiledFeatures a = compile(ds.graph, ds.features, cfg);
    const CompiledFeatures b = compile(ds.graph, ds.features, cfg);
    c.require(a.matrix == b.matrix && a.columns == b.columns, "repeated compilation differs");

    const Graph isolated = Graph::from_edges(3, {{0, 1}});
    FeatureMatrix x(3, 2);
    x << 1, 0, 0, 1, 0.5, 0.5;
    for (ReducerKind k :
         {ReducerKind::Mean, ReducerKind::Sum, ReducerKind::Max, ReducerKind::Min, ReducerKind::Std, ReducerKind::Ka}) {
      const FeatureMatrix h = hop_features(isolated, x, k);
      c.require(h.row(2) == Eigen::RowVector2d(0, 0), "isolated node row not zero");
    }
    c.out << "bit-identical recompilation; isolated nodes zero for all reducers";
  });
}

/// Every check, in reporting order. Training-backed criteria (6, 7, 8, 10)
/// are skipped when include_training is false.
inline std::vector<CheckResult> run_all(bool include_training = true) {
  std::vector<CheckResult> results;
  results.push_back(criterion_1_sum_injectivity());
  results.push_back(criterion_2_ka_injectivity());
  results.push_back(criterion_3_worked_example());
  results.push_back(criterion_4_dimensionality());
  results.push_back(criterion_5_mean_sum_degree());
  if (include_training) {
    results.push_back(criterion_6_minesweeper_end_to_end());
    results.push_back(criterion_7_last_hop_gap());
    results.push_back(criterion_8_linear_vs_mlp());
    results.push_back(criterion_9_hop_ablation_shape());
    results.push_back(criterion_10_importance_ranks());
  } else {
    for (const char* name : {"criterion-06 regenerated king-grid benchmark end-to-end",
                             "criterion-07 all-hops vs last-hop-only gap",
                             "criterion-08 single affine map vs MLP",
                             "criterion-09 hop ablation gain then plateau on planted partitions",
                             "criterion-10 grouped importance ranks on the king grid"}) {
      CheckResult r;
      r.name = name;
      r.skipped = true;
      r.details = "skipped (quick mode)";
      results.push_back(r);
    }
  }
  results.push_back(criterion_11_trainer_gate());
  results.push_back(criterion_12_rewiring_bookkeeping());
  results.push_back(property_graph_roundtrip());
  results.push_back(property_reducer_invariances());
  results.push_back(property_cantor_membership());
  results.push_back(property_max_saturation());
  results.push_back(property_compile_determinism());
  return results;
}

}  // namespace faf::verify
