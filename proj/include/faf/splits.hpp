#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "faf/types.hpp"

namespace faf {

struct Split {
  std::vector<Index> train;
  std::vector<Index> val;
  std::vector<Index> test;
};

/// Node labels plus one or more train/val/test mask triples.
/// Label -1 marks an unlabeled node.
struct LabeledSplits {
  std::vector<int> labels;
  int num_classes = 0;
  std::vector<Split> splits;

  void validate(Index num_nodes) const {
    if (static_cast<Index>(labels.size()) != num_nodes) {
      throw DataError("label count " + std::to_string(labels.size()) + " does not match node count " +
                      std::to_string(num_nodes));
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] < -1 || labels[i] >= num_classes) {
        throw DataError("label " + std::to_string(labels[i]) + " at node " + std::to_string(i) +
                        " outside [0, " + std::to_string(num_classes) + ")");
      }
    }
    for (std::size_t s = 0; s < splits.size(); ++s) {
      std::vector<char> seen(static_cast<std::size_t>(num_nodes), 0);
      auto check_mask = [&](const std::vector<Index>& mask, const char* name) {
        for (Index v : mask) {
          if (v < 0 || v >= num_nodes) {
            throw DataError("split " + std::to_string(s) + ": " + name + " index " + std::to_string(v) +
                            " out of range");
          }
          if (seen[static_cast<std::size_t>(v)]++) {
            throw DataError("split " + std::to_string(s) + ": node " + std::to_string(v) +
                            " appears in more than one mask");
          }
        }
      };
      check_mask(splits[s].train, "train");
      check_mask(splits[s].val, "val");
      check_mask(splits[s].test, "test");
    }
  }
};

/// Labels CSV: one integer per line, -1 for unlabeled.
inline std::vector<int> load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open label file: " + path.string());
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    char* end = nullptr;
    const long v = std::strtol(line.c_str(), &end, 10);
    if (end == line.c_str() || v < -1) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": invalid label");
    }
    labels.push_back(static_cast<int>(v));
  }
  if (labels.empty()) throw DataError(path.string() + ": no labels");
  return labels;
}

inline void save_labels(const std::vector<int>& labels, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write label file: " + path.string());
  for (int l : labels) out << l << "\n";
}

/// Splits JSON: array of objects with `train`, `val`, `test` index arrays.
inline std::vector<Split> load_splits(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open split file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (!j.is_array() || j.empty()) throw DataError(path.string() + ": expected a non-empty array of splits");
  std::vector<Split> splits;
  for (const auto& item : j) {
    Split s;
    for (const auto& [key, target] : {std::pair<const char*, std::vector<Index>*>{"train", &s.train},
                                      {"val", &s.val},
                                      {"test", &s.test}}) {
      if (!item.contains(key) || !item[key].is_array()) {
        throw DataError(path.string() + ": split missing '" + std::string(key) + "' array");
      }
      for (const auto& v : item[key]) target->push_back(v.get<Index>());
    }
    splits.push_back(std::move(s));
  }
  return splits;
}

inline void save_splits(const std::vector<Split>& splits, const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& s : splits) {
    j.push_back({{"train", s.train}, {"val", s.val}, {"test", s.test}});
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write split file: " + path.string());
  out << j.dump(2) << "\n";
}

inline LabeledSplits load_labeled_splits(const std::filesystem::path& labels_path,
                                         const std::filesystem::path& splits_path, Index num_nodes) {
  LabeledSplits ls;
  ls.labels = load_labels(labels_path);
  ls.num_classes = 0;
  for (int l : ls.labels) ls.num_classes = std::max(ls.num_classes, l + 1);
  if (ls.num_classes < 1) throw DataError(labels_path.string() + ": all nodes unlabeled");
  ls.splits = load_splits(splits_path);
  ls.validate(num_nodes);
  return ls;
}

/// Seeded disjoint node partition with the given fractions (remainder
/// goes to test).
inline Split make_split(Index num_nodes, std::uint64_t seed, double train_frac = 0.5, double val_frac = 0.25) {
  std::vector<Index> order(static_cast<std::size_t>(num_nodes));
  for (Index i = 0; i < num_nodes; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  rng.shuffle(order);
  const auto n_train = static_cast<std::size_t>(train_frac * static_cast<double>(num_nodes));
  const auto n_val = static_cast<std::size_t>(val_frac * static_cast<double>(num_nodes));
  Split s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
               order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return s;
}

}  // namespace faf
