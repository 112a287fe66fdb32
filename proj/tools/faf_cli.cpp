// faf — build fixed multi-hop aggregation features from node-attributed
// graphs, train tabular classifiers on them, and verify the toolkit's
// numerical properties.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 verification failure.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "faf/explain.hpp"
#include "faf/faf_engine.hpp"
#include "faf/features.hpp"
#include "faf/graph.hpp"
#include "faf/metrics.hpp"
#include "faf/mlp.hpp"
#include "faf/rewire.hpp"
#include "faf/splits.hpp"
#include "faf/sweep.hpp"
#include "faf/synth.hpp"
#include "faf/verification.hpp"

namespace fs = std::filesystem;
using namespace faf;

namespace {

std::uint64_t env_default_seed() {
  if (const char* s = std::getenv("FAF_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s, &end, 10);
    if (end != s && *end == '\0') return v;
  }
  return 0;
}

void write_config_echo(const CLI::App* cmd, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream out(out_dir / "config_echo.ini");
  out << cmd->config_to_str(/*default_also=*/true, /*write_description=*/false);
}

HopSelection parse_selection(const std::string& s) {
  if (s == "all") return HopSelection::AllHops;
  if (s == "last") return HopSelection::LastHopOnly;
  if (s == "last+base" || s == "lastbase") return HopSelection::LastHopPlusBase;
  throw DataError("unknown hop selection '" + s + "' (expected all|last|last+base)");
}

std::vector<std::uint64_t> parse_u64_list(const std::string& csv) {
  std::vector<std::uint64_t> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    const std::string tok = csv.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!tok.empty()) out.push_back(std::strtoull(tok.c_str(), nullptr, 10));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    const std::string tok = csv.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!tok.empty()) out.push_back(std::strtod(tok.c_str(), nullptr));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  for (std::uint64_t v : parse_u64_list(csv)) out.push_back(static_cast<int>(v));
  return out;
}

struct DatasetArgs {
  std::string graph_path;
  std::string features_path;
  std::string labels_path;
  std::string splits_path;

  void add_to(CLI::App* cmd, bool with_labels = true) {
    cmd->add_option("--graph", graph_path, "edge list file")->required();
    cmd->add_option("--features", features_path, "feature file (csv or binary)")->required();
    if (with_labels) {
      cmd->add_option("--labels", labels_path, "label csv, one integer per node")->required();
      cmd->add_option("--splits", splits_path, "splits json")->required();
    }
  }

  Graph load_g() const { return load_graph(graph_path); }
};

struct MlpArgs {
  int layers = 2;
  int hidden = 64;
  double dropout = 0.0;
  std::string norm = "none";
  double lr = 0.01;
  double wd = 0.0;
  int epochs = 2500;
  std::uint64_t seed = env_default_seed();
  std::string metric = "auto";

  void add_to(CLI::App* cmd) {
    cmd->add_option("--layers", layers, "affine map count (1 = single affine map)");
    cmd->add_option("--hidden", hidden, "hidden channels");
    cmd->add_option("--dropout", dropout, "dropout probability");
    cmd->add_option("--norm", norm, "normalization: ln|bn|none");
    cmd->add_option("--lr", lr, "learning rate");
    cmd->add_option("--wd", wd, "weight decay (decoupled)");
    cmd->add_option("--epochs", epochs, "training epochs");
    cmd->add_option("--seed", seed, "rng seed (default: FAF_SEED env or 0)");
    cmd->add_option("--metric", metric, "accuracy|roc_auc|auto (auto: roc_auc when binary)");
  }

  MlpConfig config() const {
    MlpConfig cfg;
    cfg.num_layers = layers;
    cfg.hidden_channels = hidden;
    cfg.dropout = dropout;
    cfg.normalization = parse_norm(norm);
    cfg.learning_rate = lr;
    cfg.weight_decay = wd;
    cfg.max_epochs = epochs;
    cfg.seed = seed;
    return cfg;
  }

  MetricKind resolve_metric(int num_classes) const {
    if (metric == "auto") return num_classes == 2 ? MetricKind::RocAuc : MetricKind::Accuracy;
    return parse_metric(metric);
  }
};

struct FafArgs {
  std::string reducers = "mean,sum,max,min";
  int hops = 2;
  std::string selection = "all";
  std::string scale = "none";
  int ka_precision = 20;
  std::string rewire;          // empty | drop | split
  std::string rewire_combine = "concat";
  double threshold = 0.0;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--reducers", reducers, "comma-separated reducers: mean,sum,max,min,std,ka");
    cmd->add_option("--hops", hops, "aggregation depth K");
    cmd->add_option("--hop-selection", selection, "all|last|last+base");
    cmd->add_option("--scale", scale, "none|standardize (per output column)");
    cmd->add_option("--ka-precision", ka_precision, "binary digits per coordinate for the ka reducer");
    cmd->add_option("--rewire", rewire, "similarity rewiring: drop|split");
    cmd->add_option("--rewire-combine", rewire_combine, "replace|concat");
    cmd->add_option("--rewire-threshold", threshold, "similarity threshold (edges below it are removed)");
  }

  FafConfig config() const {
    FafConfig cfg;
    cfg.reducers = parse_reducer_list(reducers);
    cfg.hops = hops;
    cfg.selection = parse_selection(selection);
    if (scale == "standardize") {
      cfg.scaling = ColumnScaling::PerColumnStandardize;
    } else if (scale != "none") {
      throw DataError("unknown scale '" + scale + "' (expected none|standardize)");
    }
    cfg.ka_precision = ka_precision;
    return cfg;
  }

  std::optional<RewireSpec> rewire_spec() const {
    if (rewire.empty()) return std::nullopt;
    RewireSpec spec;
    if (rewire == "drop") spec.mode = RewireMode::Drop;
    else if (rewire == "split") spec.mode = RewireMode::Split;
    else throw DataError("unknown rewire mode '" + rewire + "' (expected drop|split)");
    if (rewire_combine == "replace") spec.combine = RewireCombine::Replace;
    else if (rewire_combine == "concat") spec.combine = RewireCombine::Concat;
    else throw DataError("unknown rewire combine '" + rewire_combine + "' (expected replace|concat)");
    spec.similarity_threshold = threshold;
    return spec;
  }

  CompiledFeatures compile_dataset(const Graph& g, const FeatureMatrix& x) const {
    const auto spec = rewire_spec();
    return spec ? compile_augmented(g, x, config(), *spec) : compile(g, x, config());
  }
};

void write_dataset(const Dataset& ds, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  save_graph(ds.graph, out_dir / "graph.edges");
  save_features_binary(ds.features, out_dir / "features.bin");
  save_labels(ds.splits.labels, out_dir / "labels.csv");
  save_splits(ds.splits.splits, out_dir / "splits.json");
}

// --- subcommand implementations -------------------------------------------

int cmd_synth_minesweeper(const MinesweeperSpec& spec, const fs::path& out_dir, const CLI::App* cmd) {
  const Dataset ds = gen_minesweeper(spec);
  write_dataset(ds, out_dir);
  write_config_echo(cmd, out_dir);
  std::cout << "minesweeper: " << ds.graph.num_nodes() << " nodes, " << ds.graph.num_edges() << " edges, "
            << ds.features.cols() << " features -> " << out_dir.string() << "\n";
  return 0;
}

int cmd_synth_fig4(bool collapsed, const fs::path& out_dir, const CLI::App* cmd) {
  auto [g, x] = collapsed ? gen_fig4_collapsed_variant() : gen_fig4_tree();
  fs::create_directories(out_dir);
  save_graph(g, out_dir / "graph.edges");
  save_features_binary(x, out_dir / "features.bin");
  write_config_echo(cmd, out_dir);
  std::cout << "fig4" << (collapsed ? " (collapsed variant)" : "") << ": " << g.num_nodes() << " nodes, "
            << g.num_edges() << " edges -> " << out_dir.string() << "\n";
  return 0;
}

int cmd_synth_sbm(const SbmSpec& spec, const fs::path& out_dir, const CLI::App* cmd) {
  const Dataset ds = gen_planted_partition(spec);
  write_dataset(ds, out_dir);
  write_config_echo(cmd, out_dir);
  std::cout << "sbm: " << ds.graph.num_nodes() << " nodes, " << ds.graph.num_edges() << " edges, "
            << spec.classes << " classes -> " << out_dir.string() << "\n";
  return 0;
}

int cmd_build(const DatasetArgs& data, const FafArgs& faf, const fs::path& out_dir, const CLI::App* cmd) {
  const Graph g = data.load_g();
  const FeatureMatrix x = load_features(data.features_path, g.num_nodes());
  const FafConfig cfg = faf.config();

  // timing pass over the plain per-reducer chains
  if (cfg.hops > 0) {
    const KaEncoder enc(cfg.ka_precision);
    for (ReducerKind r : cfg.reducers) {
      FeatureMatrix chain = x;
      for (int k = 1; k <= cfg.hops; ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        chain = hop_features(g, chain, r, enc);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << "hop " << k << " " << to_string(r) << ": " << secs << "s\n";
      }
    }
  }

  const auto t0 = std::chrono::steady_clock::now();
  const CompiledFeatures cf = faf.compile_dataset(g, x);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  fs::create_directories(out_dir);
  save_features_binary(cf.matrix, out_dir / "faf_features.bin");
  save_column_index(cf.columns, out_dir / "faf_columns.json");
  write_config_echo(cmd, out_dir);
  std::cout << "compiled " << cf.matrix.rows() << " x " << cf.matrix.cols() << " (D = " << cf.matrix.cols()
            << ") in " << secs << "s -> " << out_dir.string() << "\n";
  return 0;
}

int cmd_train(const std::string& features_path, const std::string& labels_path, const std::string& splits_path,
              std::size_t split_index, const MlpArgs& mlp, const std::string& save_model_name,
              const fs::path& out_dir, const CLI::App* cmd) {
  const FeatureMatrix x = load_features(features_path);
  const LabeledSplits ls = load_labeled_splits(labels_path, splits_path, x.rows());
  if (split_index >= ls.splits.size()) throw DataError("split index out of range");
  const MlpConfig cfg = mlp.config();
  const MetricKind metric = mlp.resolve_metric(ls.num_classes);

  Mlp model;
  const TrainReport report =
      train_mlp(x, ls.labels, ls.num_classes, ls.splits[split_index], cfg, metric, &model);

  fs::create_directories(out_dir);
  save_train_report(report, cfg, out_dir / "report.json");
  if (!save_model_name.empty()) model.save(out_dir / save_model_name);
  write_config_echo(cmd, out_dir);
  std::cout << to_string(metric) << ": best val " << report.best_val_metric << " at epoch "
            << report.best_val_epoch << ", test " << report.test_at_best_val << " (" << report.wall_time_seconds
            << "s) -> " << out_dir.string() << "\n";
  return 0;
}

struct SweepGridArgs {
  std::string dropout = "0.0,0.2,0.3,0.5,0.7";
  std::string lr = "0.01,0.005,0.001,0.0001";
  std::string norm = "ln,bn,none";
  std::string hidden = "64,256,512";
  std::string wd = "0.0,0.01,0.001,0.0005,0.00005";
  std::string layers = "2,3,5";

  void add_to(CLI::App* cmd) {
    cmd->add_option("--dropout-grid", dropout, "dropout values");
    cmd->add_option("--lr-grid", lr, "learning rates");
    cmd->add_option("--norm-grid", norm, "normalizations");
    cmd->add_option("--hidden-grid", hidden, "hidden widths");
    cmd->add_option("--wd-grid", wd, "weight decays");
    cmd->add_option("--layers-grid", layers, "layer counts");
  }

  SweepAxes axes() const {
    SweepAxes a;
    a.dropout = parse_double_list(dropout);
    a.learning_rate = parse_double_list(lr);
    a.normalization.clear();
    std::size_t start = 0;
    while (start <= norm.size()) {
      const std::size_t comma = norm.find(',', start);
      const std::string tok = norm.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!tok.empty()) a.normalization.push_back(parse_norm(tok));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    a.hidden_channels = parse_int_list(hidden);
    a.weight_decay = parse_double_list(wd);
    a.num_layers = parse_int_list(layers);
    return a;
  }
};

int cmd_sweep(const std::string& features_path, const std::string& labels_path, const std::string& splits_path,
              const MlpArgs& mlp, const SweepGridArgs& grid, int jobs, const fs::path& out_dir,
              const CLI::App* cmd) {
  const FeatureMatrix x = load_features(features_path);
  const LabeledSplits ls = load_labeled_splits(labels_path, splits_path, x.rows());
  const MetricKind metric = mlp.resolve_metric(ls.num_classes);
  const std::vector<MlpConfig> configs = grid.axes().expand(mlp.config());
  std::cout << "sweep: " << configs.size() << " configs x " << ls.splits.size() << " splits\n";

  const SweepSummary summary =
      run_sweep(x, ls.labels, ls.num_classes, ls.splits, configs, metric, out_dir, jobs);
  save_sweep_csv(summary, out_dir);
  write_config_echo(cmd, out_dir);

  std::vector<std::vector<std::string>> rows{{"rank", "layers", "hidden", "dropout", "norm", "lr", "wd",
                                              "mean_val", "mean_test"}};
  for (std::size_t i = 0; i < summary.ranked.size() && i < 5; ++i) {
    const auto& [c, vals] = summary.ranked[i];
    rows.push_back({std::to_string(i + 1), std::to_string(c.num_layers), std::to_string(c.hidden_channels),
                    std::to_string(c.dropout), to_string(c.normalization), std::to_string(c.learning_rate),
                    std::to_string(c.weight_decay), std::to_string(vals.first), std::to_string(vals.second)});
  }
  std::cout << render_table(rows);
  return 0;
}

struct AblateContext {
  Graph graph;
  FeatureMatrix x;
  LabeledSplits ls;
  MlpArgs mlp;
  std::vector<std::uint64_t> seeds;

  std::pair<double, double> averaged_run(const CompiledFeatures& cf, MlpConfig cfg, MetricKind metric) const {
    double val = 0.0, test = 0.0;
    int count = 0;
    for (std::uint64_t seed : seeds) {
      for (const Split& split : ls.splits) {
        cfg.seed = seed;
        const TrainReport r = train_mlp(cf.matrix, ls.labels, ls.num_classes, split, cfg, metric);
        val += r.best_val_metric;
        test += r.test_at_best_val;
        ++count;
      }
    }
    return {val / count, test / count};
  }
};

int cmd_ablate(const std::string& protocol, const AblateContext& ctx, const FafArgs& faf, const fs::path& out_dir,
               const CLI::App* cmd) {
  const MetricKind metric = ctx.mlp.resolve_metric(ctx.ls.num_classes);
  std::vector<std::vector<std::string>> rows;

  auto fmt = [](double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  };

  if (protocol == "hops") {
    rows.push_back({"hops", "width", "mean_val", "mean_test"});
    FafArgs variant = faf;
    for (int k = 0; k <= faf.hops; ++k) {
      variant.hops = k;
      const CompiledFeatures cf = variant.compile_dataset(ctx.graph, ctx.x);
      const auto [val, test] = ctx.averaged_run(cf, ctx.mlp.config(), metric);
      rows.push_back({std::to_string(k), std::to_string(cf.matrix.cols()), fmt(val), fmt(test)});
    }
  } else if (protocol == "reducers") {
    rows.push_back({"reducers", "width", "mean_val", "mean_test"});
    std::vector<std::string> variants = {"mean", "sum", "max", "min", "std", faf.reducers};
    for (const std::string& r : variants) {
      FafArgs variant = faf;
      variant.reducers = r;
      const CompiledFeatures cf = variant.compile_dataset(ctx.graph, ctx.x);
      const auto [val, test] = ctx.averaged_run(cf, ctx.mlp.config(), metric);
      rows.push_back({r, std::to_string(cf.matrix.cols()), fmt(val), fmt(test)});
    }
  } else if (protocol == "lasthop") {
    rows.push_back({"selection", "width", "mean_val", "mean_test"});
    for (const std::string sel : {"all", "last", "last+base"}) {
      FafArgs variant = faf;
      variant.selection = sel;
      const CompiledFeatures cf = variant.compile_dataset(ctx.graph, ctx.x);
      const auto [val, test] = ctx.averaged_run(cf, ctx.mlp.config(), metric);
      rows.push_back({sel, std::to_string(cf.matrix.cols()), fmt(val), fmt(test)});
    }
  } else if (protocol == "linear") {
    rows.push_back({"classifier", "mean_val", "mean_test"});
    const CompiledFeatures cf = faf.compile_dataset(ctx.graph, ctx.x);
    MlpConfig mlp_cfg = ctx.mlp.config();
    const auto [mval, mtest] = ctx.averaged_run(cf, mlp_cfg, metric);
    MlpConfig lin_cfg = mlp_cfg;
    lin_cfg.num_layers = 1;
    const auto [lval, ltest] = ctx.averaged_run(cf, lin_cfg, metric);
    rows.push_back({"mlp", fmt(mval), fmt(mtest)});
    rows.push_back({"1l", fmt(lval), fmt(ltest)});
  } else {
    throw DataError("unknown ablation protocol '" + protocol + "' (expected hops|reducers|lasthop|linear)");
  }

  fs::create_directories(out_dir);
  save_csv(rows, out_dir / ("ablate_" + protocol + ".csv"));
  write_config_echo(cmd, out_dir);
  std::cout << render_table(rows);
  std::cout << "-> " << (out_dir / ("ablate_" + protocol + ".csv")).string() << "\n";
  return 0;
}

int cmd_explain(const DatasetArgs& data, const FafArgs& faf, const MlpArgs& mlp, const std::string& model_path,
                const std::string& save_model_name, std::size_t split_index, const std::string& mask_name,
                int repeats, const fs::path& out_dir, const CLI::App* cmd) {
  const Graph g = data.load_g();
  const FeatureMatrix x = load_features(data.features_path, g.num_nodes());
  const LabeledSplits ls = load_labeled_splits(data.labels_path, data.splits_path, g.num_nodes());
  if (split_index >= ls.splits.size()) throw DataError("split index out of range");
  const Split& split = ls.splits[split_index];
  const CompiledFeatures cf = faf.compile_dataset(g, x);
  const MetricKind metric = mlp.resolve_metric(ls.num_classes);

  Mlp model;
  if (!model_path.empty()) {
    model = Mlp::load(model_path);
    if (model.input_dim() != cf.matrix.cols()) {
      throw DataError("model input width does not match the compiled features");
    }
  } else {
    train_mlp(cf.matrix, ls.labels, ls.num_classes, split, mlp.config(), metric, &model);
  }

  const std::vector<Index>& mask = mask_name == "train" ? split.train
                                   : mask_name == "test" ? split.test
                                                         : split.val;
  const ImportanceReport report =
      permutation_importance(model, cf, ls.labels, mask, repeats, mlp.seed, metric);

  fs::create_directories(out_dir);
  save_importance_report(report, out_dir / "importance.json", out_dir / "importance.csv");
  if (!save_model_name.empty()) model.save(out_dir / save_model_name);
  write_config_echo(cmd, out_dir);

  std::vector<std::vector<std::string>> rows{{"base_feature", "hop", "reducer", "importance", "rank_in_hop"}};
  const auto stack = hop_stack_report(report);
  for (std::size_t i = 0; i < stack.size() && i < 12; ++i) {
    const auto& r = stack[i];
    std::ostringstream imp;
    imp << r.importance;
    rows.push_back({std::to_string(r.base_feature), std::to_string(r.hop),
                    r.reducer ? to_string(*r.reducer) : "base", imp.str(), std::to_string(r.rank_in_hop)});
  }
  std::cout << "baseline " << to_string(metric) << ": " << report.baseline << "\n" << render_table(rows);
  return 0;
}

int cmd_verify(bool quick, const fs::path& out_dir) {
  const auto results = verify::run_all(!quick);
  nlohmann::json j = nlohmann::json::array();
  int failures = 0;
  for (const auto& r : results) {
    const char* status = r.skipped ? "SKIP" : (r.pass ? "PASS" : "FAIL");
    if (!r.skipped && !r.pass) ++failures;
    std::cout << status << "  " << r.name << " (" << r.seconds << "s)\n";
    if (!r.details.empty()) std::cout << "      " << r.details << "\n";
    std::cout.flush();
    j.push_back({{"name", r.name},
                 {"pass", r.pass},
                 {"skipped", r.skipped},
                 {"details", r.details},
                 {"seconds", r.seconds}});
  }
  fs::create_directories(out_dir);
  std::ofstream out(out_dir / "verify_report.json");
  out << j.dump(2) << "\n";
  std::cout << (results.size() - static_cast<std::size_t>(failures)) << "/" << results.size()
            << " checks passed -> " << (out_dir / "verify_report.json").string() << "\n";
  return failures == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fixed multi-hop aggregation features: build tabular features from graphs, train, explain, verify"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->require_subcommand(1);
  std::string synth_out = "out";

  auto* mines = synth->add_subcommand("minesweeper", "king-grid mine benchmark");
  MinesweeperSpec mines_spec;
  mines_spec.seed = env_default_seed();
  mines->add_option("--side", mines_spec.side, "grid side length");
  mines->add_option("--mine-rate", mines_spec.mine_rate, "mine probability");
  mines->add_option("--mask-rate", mines_spec.mask_rate, "feature mask probability");
  mines->add_option("--seed", mines_spec.seed, "rng seed");
  mines->add_option("--out-dir", synth_out, "output directory");
  mines->set_config("--config");

  auto* fig4 = synth->add_subcommand("fig4", "8-node two-hop example tree");
  bool fig4_collapsed = false;
  fig4->add_flag("--collapsed", fig4_collapsed, "collapsed variant (information-loss witness)");
  fig4->add_option("--out-dir", synth_out, "output directory");
  fig4->set_config("--config");

  auto* sbm = synth->add_subcommand("sbm", "planted-partition graph");
  SbmSpec sbm_spec;
  sbm_spec.seed = env_default_seed();
  sbm->add_option("--n-per-class", sbm_spec.n_per_class, "nodes per class");
  sbm->add_option("--classes", sbm_spec.classes, "class count");
  sbm->add_option("--p-in", sbm_spec.p_in, "within-class edge probability");
  sbm->add_option("--p-out", sbm_spec.p_out, "between-class edge probability");
  sbm->add_option("--noise", sbm_spec.feature_noise, "feature noise scale");
  sbm->add_option("--seed", sbm_spec.seed, "rng seed");
  sbm->add_option("--out-dir", synth_out, "output directory");
  sbm->set_config("--config");

  // build
  auto* build = app.add_subcommand("build", "compile multi-hop aggregation features");
  DatasetArgs build_data;
  build_data.add_to(build, /*with_labels=*/false);
  FafArgs build_faf;
  build_faf.add_to(build);
  std::string build_out = "out";
  build->add_option("--out-dir", build_out, "output directory");
  build->set_config("--config");

  // train
  auto* train = app.add_subcommand("train", "train a classifier on compiled features");
  std::string train_features, train_labels, train_splits, train_save_model;
  std::size_t train_split_index = 0;
  train->add_option("--features", train_features, "compiled feature file")->required();
  train->add_option("--labels", train_labels, "label csv")->required();
  train->add_option("--splits", train_splits, "splits json")->required();
  train->add_option("--split-index", train_split_index, "which split to use");
  train->add_option("--save-model", train_save_model, "also save the trained model under this name");
  MlpArgs train_mlp_args;
  train_mlp_args.add_to(train);
  std::string train_out = "out";
  train->add_option("--out-dir", train_out, "output directory");
  train->set_config("--config");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "hyperparameter grid search with a resumable ledger");
  std::string sweep_features, sweep_labels, sweep_splits;
  sweep->add_option("--features", sweep_features, "compiled feature file")->required();
  sweep->add_option("--labels", sweep_labels, "label csv")->required();
  sweep->add_option("--splits", sweep_splits, "splits json")->required();
  MlpArgs sweep_mlp_args;
  sweep_mlp_args.add_to(sweep);
  SweepGridArgs sweep_grid;
  sweep_grid.add_to(sweep);
  int sweep_jobs = 1;
  sweep->add_option("--jobs", sweep_jobs, "parallel training runs");
  std::string sweep_out = "out";
  sweep->add_option("--out-dir", sweep_out, "output directory");
  sweep->set_config("--config");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "run a named ablation protocol");
  std::string ablate_protocol;
  ablate->add_option("protocol", ablate_protocol, "hops|reducers|lasthop|linear")->required();
  DatasetArgs ablate_data;
  ablate_data.add_to(ablate);
  FafArgs ablate_faf;
  ablate_faf.add_to(ablate);
  MlpArgs ablate_mlp;
  ablate_mlp.add_to(ablate);
  std::string ablate_seeds = "1,2,3";
  ablate->add_option("--seeds", ablate_seeds, "training seeds, comma separated");
  std::string ablate_out = "out";
  ablate->add_option("--out-dir", ablate_out, "output directory");
  ablate->set_config("--config");

  // explain
  auto* explain = app.add_subcommand("explain", "permutation feature importance of a trained classifier");
  DatasetArgs explain_data;
  explain_data.add_to(explain);
  FafArgs explain_faf;
  explain_faf.add_to(explain);
  MlpArgs explain_mlp;
  explain_mlp.add_to(explain);
  std::string explain_model, explain_save_model, explain_mask = "val";
  std::size_t explain_split_index = 0;
  int explain_repeats = 5;
  explain->add_option("--model", explain_model, "load this model instead of training");
  explain->add_option("--save-model", explain_save_model, "save the trained model under this name");
  explain->add_option("--split-index", explain_split_index, "which split to use");
  explain->add_option("--mask", explain_mask, "evaluation mask: train|val|test");
  explain->add_option("--repeats", explain_repeats, "permutations per column");
  std::string explain_out = "out";
  explain->add_option("--out-dir", explain_out, "output directory");
  explain->set_config("--config");

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "run the property and acceptance checks");
  bool verify_quick = false;
  verify_cmd->add_flag("--quick", verify_quick, "skip the training-backed checks");
  std::string verify_out = "out";
  verify_cmd->add_option("--out-dir", verify_out, "output directory for the json verdict");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (mines->parsed()) return cmd_synth_minesweeper(mines_spec, synth_out, mines);
    if (fig4->parsed()) return cmd_synth_fig4(fig4_collapsed, synth_out, fig4);
    if (sbm->parsed()) return cmd_synth_sbm(sbm_spec, synth_out, sbm);
    if (build->parsed()) return cmd_build(build_data, build_faf, build_out, build);
    if (train->parsed()) {
      return cmd_train(train_features, train_labels, train_splits, train_split_index, train_mlp_args,
                       train_save_model, train_out, train);
    }
    if (sweep->parsed()) {
      return cmd_sweep(sweep_features, sweep_labels, sweep_splits, sweep_mlp_args, sweep_grid, sweep_jobs,
                       sweep_out, sweep);
    }
    if (ablate->parsed()) {
      AblateContext ctx{ablate_data.load_g(), {}, {}, ablate_mlp, parse_u64_list(ablate_seeds)};
      ctx.x = load_features(ablate_data.features_path, ctx.graph.num_nodes());
      ctx.ls = load_labeled_splits(ablate_data.labels_path, ablate_data.splits_path, ctx.graph.num_nodes());
      if (ctx.seeds.empty()) ctx.seeds = {ablate_mlp.seed};
      return cmd_ablate(ablate_protocol, ctx, ablate_faf, ablate_out, ablate);
    }
    if (explain->parsed()) {
      return cmd_explain(explain_data, explain_faf, explain_mlp, explain_model, explain_save_model,
                         explain_split_index, explain_mask, explain_repeats, explain_out, explain);
    }
    if (verify_cmd->parsed()) return cmd_verify(verify_quick, verify_out);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
