#pragma once

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "faf/types.hpp"

namespace faf {

namespace detail {

inline void require_finite(const FeatureMatrix& m, const std::string& source) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (!std::isfinite(m(i, j))) {
        throw DataError(source + ": non-finite value at row " + std::to_string(i) +
                        ", column " + std::to_string(j));
      }
    }
  }
}

inline std::uint64_t read_u64_le(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | buf[i];
  return v;
}

inline void write_u64_le(std::ostream& out, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), 8);
}

}  // namespace detail

constexpr char kFeatureMagic[4] = {'F', 'A', 'F', '1'};

/// Reads the binary feature format: magic `FAF1`, u64le rows, u64le cols,
/// then rows*cols f32le values in row-major order.
inline FeatureMatrix load_features_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature file: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kFeatureMagic, 4) != 0) {
    throw DataError(path.string() + ": not a FAF1 feature file");
  }
  const std::uint64_t rows = detail::read_u64_le(in);
  const std::uint64_t cols = detail::read_u64_le(in);
  if (!in) throw DataError(path.string() + ": truncated header");
  FeatureMatrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  std::vector<float> buf(static_cast<std::size_t>(cols));
  for (std::uint64_t i = 0; i < rows; ++i) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(cols * sizeof(float)));
    if (!in) throw DataError(path.string() + ": truncated at row " + std::to_string(i));
    for (std::uint64_t j = 0; j < cols; ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = buf[j];
  }
  detail::require_finite(m, path.string());
  return m;
}

inline void save_features_binary(const FeatureMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write feature file: " + path.string());
  out.write(kFeatureMagic, 4);
  detail::write_u64_le(out, static_cast<std::uint64_t>(m.rows()));
  detail::write_u64_le(out, static_cast<std::uint64_t>(m.cols()));
  std::vector<float> buf(static_cast<std::size_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) buf[static_cast<std::size_t>(j)] = static_cast<float>(m(i, j));
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
}

/// Reads a CSV of one node per row. Every row must have the same number
/// of comma-separated numeric fields; non-finite entries are rejected
/// with their row and column.
inline FeatureMatrix load_features_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open feature file: " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    Index col = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string field = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (end == field.c_str() || (end && *end != '\0' && !std::isspace(static_cast<unsigned char>(*end)))) {
        throw DataError(path.string() + ": unparseable value at row " + std::to_string(rows.size()) +
                        ", column " + std::to_string(col));
      }
      if (!std::isfinite(v)) {
        throw DataError(path.string() + ": non-finite value at row " + std::to_string(rows.size()) +
                        ", column " + std::to_string(col));
      }
      row.push_back(v);
      ++col;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw DataError(path.string() + ": ragged row at line " + std::to_string(line_no) +
                      " (expected " + std::to_string(rows.front().size()) + " fields, got " +
                      std::to_string(row.size()) + ")");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path.string() + ": no feature rows");
  FeatureMatrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return m;
}

/// Dispatches on file content (binary magic vs. text) and enforces the
/// expected row count. Pass num_nodes < 0 to skip the check.
inline FeatureMatrix load_features(const std::filesystem::path& path, Index num_nodes = -1) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw DataError("cannot open feature file: " + path.string());
  char magic[4] = {0, 0, 0, 0};
  probe.read(magic, 4);
  probe.close();
  FeatureMatrix m = (std::memcmp(magic, kFeatureMagic, 4) == 0) ? load_features_binary(path)
                                                                : load_features_csv(path);
  if (num_nodes >= 0 && m.rows() != num_nodes) {
    throw DataError(path.string() + ": row count " + std::to_string(m.rows()) +
                    " does not match node count " + std::to_string(num_nodes));
  }
  return m;
}

}  // namespace faf
