#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "faf/types.hpp"

namespace faf {

enum class MetricKind { Accuracy, RocAuc };

inline const char* to_string(MetricKind k) {
  return k == MetricKind::Accuracy ? "accuracy" : "roc_auc";
}

inline MetricKind parse_metric(const std::string& name) {
  if (name == "accuracy" || name == "acc") return MetricKind::Accuracy;
  if (name == "roc_auc" || name == "rocauc" || name == "auc") return MetricKind::RocAuc;
  throw DataError("unknown metric '" + name + "' (expected accuracy|roc_auc)");
}

/// Fraction of argmax-correct predictions within the mask; argmax ties
/// break toward the lowest class index.
inline double accuracy(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                       const std::vector<Index>& mask) {
  if (mask.empty()) throw DataError("accuracy: empty mask");
  Index correct = 0;
  for (Index i : mask) {
    int best = 0;
    for (Index c = 1; c < logits.cols(); ++c) {
      if (logits(i, c) > logits(i, best)) best = static_cast<int>(c);
    }
    if (best == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(mask.size());
}

/// Rank-based ROC-AUC: the probability that a uniformly random positive
/// scores above a uniformly random negative, ties counted 0.5.
inline double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels01) {
  const std::size_t n = scores.size();
  if (labels01.size() != n) throw DataError("roc_auc: size mismatch");
  std::size_t n_pos = 0;
  for (int l : labels01) {
    if (l != 0 && l != 1) throw DataError("roc_auc: labels must be binary");
    n_pos += static_cast<std::size_t>(l);
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DataError("roc_auc: mask contains a single class");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average ranks over tie groups, then the Mann-Whitney statistic.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    for (std::size_t k = i; k < j; ++k) {
      if (labels01[order[k]] == 1) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

/// Task metric over a mask. RocAuc requires two-class logits and uses the
/// class-1 margin as the score.
inline double evaluate(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                       const std::vector<Index>& mask, MetricKind kind) {
  if (kind == MetricKind::Accuracy) return accuracy(logits, labels, mask);
  if (logits.cols() != 2) throw DataError("roc_auc: expected binary (2-class) logits");
  std::vector<double> scores;
  std::vector<int> y;
  scores.reserve(mask.size());
  y.reserve(mask.size());
  for (Index i : mask) {
    scores.push_back(logits(i, 1) - logits(i, 0));
    y.push_back(labels[static_cast<std::size_t>(i)]);
  }
  return roc_auc(scores, y);
}

}  // namespace faf
