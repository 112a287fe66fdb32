#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "faf/sweep.hpp"
#include "faf/synth.hpp"

using namespace faf;

namespace {

Dataset small_dataset(std::uint64_t seed) {
  return gen_planted_partition({.n_per_class = 25, .classes = 2, .p_in = 0.3, .p_out = 0.05, .feature_noise = 1.0,
                                .seed = seed});
}

}  // namespace

TEST_CASE("a one-config one-split sweep equals a direct train call") {
  const Dataset ds = small_dataset(1);
  MlpConfig cfg;
  cfg.num_layers = 2;
  cfg.hidden_channels = 8;
  cfg.max_epochs = 30;
  cfg.seed = 5;

  const auto dir = std::filesystem::temp_directory_path() / "faf_sweep_single";
  std::filesystem::remove_all(dir);
  const SweepSummary s = run_sweep(ds.features, ds.splits.labels, 2, ds.splits.splits, {cfg},
                                   MetricKind::Accuracy, dir);
  REQUIRE(s.runs.size() == 1);
  REQUIRE(s.ranked.size() == 1);
  const TrainReport direct = train_mlp(ds.features, ds.splits.labels, 2, ds.splits.splits[0], cfg,
                                       MetricKind::Accuracy);
  CHECK(s.runs[0].val == direct.best_val_metric);
  CHECK(s.runs[0].test == direct.test_at_best_val);
}

TEST_CASE("ranking puts the higher validation metric first") {
  const Dataset ds = small_dataset(2);
  MlpConfig weak;
  weak.num_layers = 1;
  weak.learning_rate = 1e-4;
  weak.max_epochs = 3;
  weak.seed = 5;
  MlpConfig strong = weak;
  strong.num_layers = 2;
  strong.hidden_channels = 16;
  strong.learning_rate = 0.02;
  strong.max_epochs = 60;

  const auto dir = std::filesystem::temp_directory_path() / "faf_sweep_rank";
  std::filesystem::remove_all(dir);
  const SweepSummary s = run_sweep(ds.features, ds.splits.labels, 2, ds.splits.splits, {weak, strong},
                                   MetricKind::Accuracy, dir);
  REQUIRE(s.ranked.size() == 2);
  CHECK(s.ranked[0].second.first >= s.ranked[1].second.first);
  CHECK(s.ranked[0].first.num_layers == 2);
}

TEST_CASE("the ledger makes sweeps resumable and failures non-fatal") {
  const Dataset ds = small_dataset(3);
  MlpConfig good;
  good.num_layers = 2;
  good.hidden_channels = 8;
  good.max_epochs = 10;
  MlpConfig bad = good;
  bad.hidden_channels = 0;  // invalid: the run records an error

  const auto dir = std::filesystem::temp_directory_path() / "faf_sweep_resume";
  std::filesystem::remove_all(dir);
  const SweepSummary first = run_sweep(ds.features, ds.splits.labels, 2, ds.splits.splits, {good, bad},
                                       MetricKind::Accuracy, dir);
  REQUIRE(first.runs.size() == 2);
  int ok_count = 0, fail_count = 0;
  for (const auto& r : first.runs) (r.ok ? ok_count : fail_count)++;
  CHECK(ok_count == 1);
  CHECK(fail_count == 1);

  // second invocation re-runs nothing: results come from the ledger
  const SweepSummary second = run_sweep(ds.features, ds.splits.labels, 2, ds.splits.splits, {good, bad},
                                        MetricKind::Accuracy, dir);
  REQUIRE(second.runs.size() == 2);
  for (const auto& r : second.runs) {
    if (r.ok) CHECK(r.val == first.runs[0].val);
  }

  save_sweep_csv(second, dir);
  CHECK(std::filesystem::exists(dir / "sweep_runs.csv"));
  CHECK(std::filesystem::exists(dir / "sweep_ranked.csv"));
}

TEST_CASE("parallel and serial sweeps agree") {
  const Dataset ds = small_dataset(4);
  std::vector<MlpConfig> configs;
  for (int layers : {1, 2}) {
    for (double lr : {0.02, 0.005}) {
      MlpConfig c;
      c.num_layers = layers;
      c.hidden_channels = 8;
      c.learning_rate = lr;
      c.max_epochs = 15;
      configs.push_back(c);
    }
  }
  const auto dir1 = std::filesystem::temp_directory_path() / "faf_sweep_serial";
  const auto dir2 = std::filesystem::temp_directory_path() / "faf_sweep_parallel";
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
  const SweepSummary serial = run_sweep(ds.features, ds.splits.labels, 2, ds.splits.splits, configs,
                                        MetricKind::Accuracy, dir1, 1);
  const SweepSummary parallel = run_sweep(ds.features, ds.splits.labels, 2, ds.splits.splits, configs,
                                          MetricKind::Accuracy, dir2, 4);
  REQUIRE(serial.ranked.size() == parallel.ranked.size());
  for (std::size_t i = 0; i < serial.ranked.size(); ++i) {
    CHECK(serial.ranked[i].second.first == parallel.ranked[i].second.first);
  }
}

TEST_CASE("default axes expand to the full grid") {
  const SweepAxes axes;
  MlpConfig base;
  CHECK(axes.expand(base).size() == 5u * 4u * 3u * 3u * 5u * 3u);
}

TEST_CASE("train report json echoes the config") {
  TrainReport r;
  r.train_metric = {0.5, 0.75};
  r.val_metric = {0.5, 0.5};
  r.test_metric = {0.25, 0.5};
  r.train_loss = {1.0, 0.5};
  r.best_val_epoch = 0;
  r.test_at_best_val = 0.25;
  MlpConfig cfg;
  cfg.hidden_channels = 123;
  const auto j = train_report_json(r, cfg);
  CHECK(j["config"]["hidden_channels"] == 123);
  CHECK(j["curves"]["val"].size() == 2);
  CHECK(j["best_val_epoch"] == 0);
}
