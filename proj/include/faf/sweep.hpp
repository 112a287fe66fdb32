#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "faf/mlp.hpp"
#include "faf/splits.hpp"
#include "faf/types.hpp"

namespace faf {

inline nlohmann::json mlp_config_json(const MlpConfig& cfg) {
  return {{"num_layers", cfg.num_layers},
          {"hidden_channels", cfg.hidden_channels},
          {"dropout", cfg.dropout},
          {"normalization", to_string(cfg.normalization)},
          {"learning_rate", cfg.learning_rate},
          {"weight_decay", cfg.weight_decay},
          {"max_epochs", cfg.max_epochs},
          {"seed", cfg.seed}};
}

inline nlohmann::json train_report_json(const TrainReport& r, const MlpConfig& cfg) {
  return {{"config", mlp_config_json(cfg)},
          {"metric", to_string(r.metric)},
          {"curves",
           {{"train", r.train_metric}, {"val", r.val_metric}, {"test", r.test_metric}, {"train_loss", r.train_loss}}},
          {"best_val_epoch", r.best_val_epoch},
          {"best_val_metric", r.best_val_metric},
          {"test_at_best_val", r.test_at_best_val},
          {"wall_time_seconds", r.wall_time_seconds}};
}

inline void save_train_report(const TrainReport& r, const MlpConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write report: " + path.string());
  out << train_report_json(r, cfg).dump(2) << "\n";
}

/// Hyperparameter axes swept as a full cartesian product. Defaults follow
/// the standard tuning grid for this model family.
struct SweepAxes {
  std::vector<double> dropout = {0.0, 0.2, 0.3, 0.5, 0.7};
  std::vector<double> learning_rate = {0.01, 0.005, 0.001, 0.0001};
  std::vector<NormKind> normalization = {NormKind::LayerNorm, NormKind::BatchNorm, NormKind::None};
  std::vector<int> hidden_channels = {64, 256, 512};
  std::vector<double> weight_decay = {0.0, 1e-2, 1e-3, 5e-4, 5e-5};
  std::vector<int> num_layers = {2, 3, 5};

  std::vector<MlpConfig> expand(const MlpConfig& base) const {
    std::vector<MlpConfig> out;
    for (double dr : dropout)
      for (double lr : learning_rate)
        for (NormKind nk : normalization)
          for (int hc : hidden_channels)
            for (double wd : weight_decay)
              for (int nl : num_layers) {
                MlpConfig c = base;
                c.dropout = dr;
                c.learning_rate = lr;
                c.normalization = nk;
                c.hidden_channels = hc;
                c.weight_decay = wd;
                c.num_layers = nl;
                out.push_back(c);
              }
    return out;
  }
};

inline std::string sweep_run_key(const MlpConfig& c, std::size_t split_index) {
  std::ostringstream os;
  os << "L" << c.num_layers << "_h" << c.hidden_channels << "_do" << c.dropout << "_" << to_string(c.normalization)
     << "_lr" << c.learning_rate << "_wd" << c.weight_decay << "_s" << split_index;
  return os.str();
}

struct SweepRunResult {
  std::string key;
  MlpConfig config;
  std::size_t split_index = 0;
  bool ok = false;
  std::string error;
  double val = 0.0;
  double test = 0.0;
  int best_epoch = 0;
  double seconds = 0.0;
};

struct SweepSummary {
  std::vector<SweepRunResult> runs;                 // one per (config, split)
  std::vector<std::pair<MlpConfig, std::pair<double, double>>> ranked;  // (config, (mean val, mean test))
};

/// Runs every (config, split) combination, averages over splits, and ranks
/// configs by mean validation metric. Completed runs are recorded in a
/// JSONL ledger inside out_dir and skipped on re-entry, so an interrupted
/// sweep resumes where it stopped. Individual run failures are recorded,
/// not fatal.
inline SweepSummary run_sweep(const FeatureMatrix& features, const std::vector<int>& labels, int num_classes,
                              const std::vector<Split>& splits, const std::vector<MlpConfig>& configs,
                              MetricKind metric, const std::filesystem::path& out_dir, int jobs = 1) {
  std::filesystem::create_directories(out_dir);
  const auto ledger_path = out_dir / "sweep_ledger.jsonl";

  std::vector<SweepRunResult> done;
  std::set<std::string> done_keys;
  if (std::filesystem::exists(ledger_path)) {
    std::ifstream in(ledger_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded()) continue;
      SweepRunResult r;
      r.key = j.value("key", "");
      r.ok = j.value("ok", false);
      r.error = j.value("error", "");
      r.val = j.value("val", 0.0);
      r.test = j.value("test", 0.0);
      r.best_epoch = j.value("best_epoch", 0);
      r.seconds = j.value("seconds", 0.0);
      r.split_index = j.value("split", std::size_t{0});
      if (j.contains("config")) {
        const auto& c = j["config"];
        r.config.num_layers = c.value("num_layers", r.config.num_layers);
        r.config.hidden_channels = c.value("hidden_channels", r.config.hidden_channels);
        r.config.dropout = c.value("dropout", r.config.dropout);
        r.config.normalization = parse_norm(c.value("normalization", "none"));
        r.config.learning_rate = c.value("learning_rate", r.config.learning_rate);
        r.config.weight_decay = c.value("weight_decay", r.config.weight_decay);
        r.config.max_epochs = c.value("max_epochs", r.config.max_epochs);
        r.config.seed = c.value("seed", r.config.seed);
      }
      if (!r.key.empty() && done_keys.insert(r.key).second) done.push_back(std::move(r));
    }
  }

  struct Job {
    MlpConfig config;
    std::size_t config_index;
    std::size_t split_index;
    std::string key;
  };
  std::vector<Job> pending;
  for (std::size_t ci = 0; ci < configs.size(); ++ci) {
    for (std::size_t si = 0; si < splits.size(); ++si) {
      const std::string key = sweep_run_key(configs[ci], si);
      if (!done_keys.count(key)) pending.push_back({configs[ci], ci, si, key});
    }
  }

  std::ofstream ledger(ledger_path, std::ios::app);
  std::mutex ledger_mutex;
  std::vector<SweepRunResult> fresh(pending.size());
  std::size_t next = 0;
  std::mutex next_mutex;

  auto worker = [&]() {
    while (true) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(next_mutex);
        if (next >= pending.size()) return;
        i = next++;
      }
      const Job& job = pending[i];
      SweepRunResult r;
      r.key = job.key;
      r.config = job.config;
      r.split_index = job.split_index;
      try {
        const TrainReport rep =
            train_mlp(features, labels, num_classes, splits[job.split_index], job.config, metric);
        r.ok = true;
        r.val = rep.best_val_metric;
        r.test = rep.test_at_best_val;
        r.best_epoch = rep.best_val_epoch;
        r.seconds = rep.wall_time_seconds;
      } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
      }
      {
        std::lock_guard<std::mutex> lock(ledger_mutex);
        nlohmann::json j = {{"key", r.key},     {"ok", r.ok},           {"error", r.error},
                            {"val", r.val},     {"test", r.test},       {"best_epoch", r.best_epoch},
                            {"seconds", r.seconds}, {"config", mlp_config_json(r.config)}, {"split", r.split_index}};
        ledger << j.dump() << "\n";
        ledger.flush();
      }
      fresh[i] = std::move(r);
    }
  };

  const int n_threads = std::max(1, jobs);
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  SweepSummary summary;
  summary.runs = std::move(done);
  for (auto& r : fresh) summary.runs.push_back(std::move(r));

  // Aggregate by config key (without the split suffix) over splits.
  for (std::size_t ci = 0; ci < configs.size(); ++ci) {
    double val_sum = 0.0, test_sum = 0.0;
    int count = 0;
    for (std::size_t si = 0; si < splits.size(); ++si) {
      const std::string key = sweep_run_key(configs[ci], si);
      for (const auto& r : summary.runs) {
        if (r.key == key && r.ok) {
          val_sum += r.val;
          test_sum += r.test;
          ++count;
          break;
        }
      }
    }
    if (count > 0) {
      summary.ranked.push_back({configs[ci], {val_sum / count, test_sum / count}});
    }
  }
  std::stable_sort(summary.ranked.begin(), summary.ranked.end(),
                   [](const auto& a, const auto& b) { return a.second.first > b.second.first; });
  return summary;
}

inline void save_sweep_csv(const SweepSummary& summary, const std::filesystem::path& out_dir) {
  {
    std::ofstream out(out_dir / "sweep_runs.csv");
    out << "key,layers,hidden,dropout,norm,lr,wd,split,ok,val,test,best_epoch,seconds\n";
    for (const auto& r : summary.runs) {
      out << r.key << "," << r.config.num_layers << "," << r.config.hidden_channels << "," << r.config.dropout << ","
          << to_string(r.config.normalization) << "," << r.config.learning_rate << "," << r.config.weight_decay << ","
          << r.split_index << "," << (r.ok ? 1 : 0) << "," << r.val << "," << r.test << "," << r.best_epoch << ","
          << r.seconds << "\n";
    }
  }
  {
    std::ofstream out(out_dir / "sweep_ranked.csv");
    out << "rank,layers,hidden,dropout,norm,lr,wd,mean_val,mean_test\n";
    int rank = 1;
    for (const auto& [cfg, vals] : summary.ranked) {
      out << rank++ << "," << cfg.num_layers << "," << cfg.hidden_channels << "," << cfg.dropout << ","
          << to_string(cfg.normalization) << "," << cfg.learning_rate << "," << cfg.weight_decay << ","
          << vals.first << "," << vals.second << "\n";
    }
  }
}

/// Renders rows as an aligned text table; the same rows should also be
/// written as CSV for machine diffing.
inline std::string render_table(const std::vector<std::vector<std::string>>& rows) {
  if (rows.empty()) return "";
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream os;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      os << std::left << std::setw(static_cast<int>(width[c]) + 2) << row[c];
    }
    os << "\n";
  }
  return os.str();
}

inline void save_csv(const std::vector<std::vector<std::string>>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write table: " + path.string());
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ",";
      out << row[c];
    }
    out << "\n";
  }
}

}  // namespace faf
