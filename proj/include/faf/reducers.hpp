#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "faf/ka_encoder.hpp"
#include "faf/types.hpp"

namespace faf {

enum class ReducerKind { Mean, Sum, Max, Min, Std, Ka };

inline const char* to_string(ReducerKind k) {
  switch (k) {
    case ReducerKind::Mean: return "mean";
    case ReducerKind::Sum: return "sum";
    case ReducerKind::Max: return "max";
    case ReducerKind::Min: return "min";
    case ReducerKind::Std: return "std";
    case ReducerKind::Ka: return "ka";
  }
  return "?";
}

inline ReducerKind parse_reducer(const std::string& name) {
  if (name == "mean") return ReducerKind::Mean;
  if (name == "sum") return ReducerKind::Sum;
  if (name == "max") return ReducerKind::Max;
  if (name == "min") return ReducerKind::Min;
  if (name == "std") return ReducerKind::Std;
  if (name == "ka") return ReducerKind::Ka;
  throw DataError("unknown reducer '" + name + "' (expected mean|sum|max|min|std|ka)");
}

/// Comma-separated reducer list, e.g. "mean,sum,max,min".
inline std::vector<ReducerKind> parse_reducer_list(const std::string& csv) {
  std::vector<ReducerKind> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    const std::string tok = csv.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!tok.empty()) out.push_back(parse_reducer(tok));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

/// Reduces a multiset of feature vectors (one matrix row each) to a single
/// length-dim vector.
///
/// Empty multisets map to the zero vector for every kind. Mean, sum and
/// std accumulate in a canonical (lexicographically sorted) row order with
/// 64-bit accumulators, so the result is bit-identical under any input
/// permutation. Std is the population standard deviation. KA consumes the
/// rows in the order given by the caller.
inline Eigen::RowVectorXd reduce(ReducerKind kind, const FeatureMatrix& rows, Index dim,
                                 const KaEncoder& enc = KaEncoder()) {
  if (rows.size() > 0 && rows.cols() != dim) {
    throw DataError("reduce: row length " + std::to_string(rows.cols()) + " does not match dim " +
                    std::to_string(dim));
  }
  if (!rows.array().isFinite().all()) throw DataError("reduce: non-finite input value");

  const Index n = rows.rows();
  Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(dim);
  if (n == 0) return out;

  switch (kind) {
    case ReducerKind::Max:
      out = rows.colwise().maxCoeff();
      break;
    case ReducerKind::Min:
      out = rows.colwise().minCoeff();
      break;
    case ReducerKind::Mean:
    case ReducerKind::Sum:
    case ReducerKind::Std: {
      std::vector<Index> order(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), Index{0});
      std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        for (Index j = 0; j < dim; ++j) {
          if (rows(a, j) != rows(b, j)) return rows(a, j) < rows(b, j);
        }
        return false;
      });
      Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(dim);
      for (Index i : order) sum += rows.row(i);
      if (kind == ReducerKind::Sum) {
        out = sum;
      } else if (kind == ReducerKind::Mean) {
        out = sum / static_cast<double>(n);
      } else {
        // two-pass population deviation: exact zero for constant columns
        const Eigen::RowVectorXd mean = sum / static_cast<double>(n);
        Eigen::RowVectorXd sq_dev = Eigen::RowVectorXd::Zero(dim);
        for (Index i : order) sq_dev += (rows.row(i) - mean).cwiseAbs2();
        out = (sq_dev / static_cast<double>(n)).cwiseSqrt();
      }
      break;
    }
    case ReducerKind::Ka: {
      std::vector<double> column(static_cast<std::size_t>(n));
      for (Index j = 0; j < dim; ++j) {
        for (Index i = 0; i < n; ++i) column[static_cast<std::size_t>(i)] = rows(i, j);
        out(j) = static_cast<double>(enc.aggregate(column));
      }
      break;
    }
  }
  return out;
}

}  // namespace faf
