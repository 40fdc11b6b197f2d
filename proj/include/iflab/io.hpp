#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace iflab {

// FNV-1a over the raw bytes; used to stamp every artifact with the config it
// came from.
inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)h);
  return std::string(buf);
}

// Shortest-exact double formatting; the same build writes identical bytes.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

// CSV with "# key=value" comment headers, fixed column names, full-precision
// values.  No timestamps; those belong in the run metadata file only.
inline void write_matrix_csv(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, std::string>>& comments,
    const std::vector<std::string>& columns, const Eigen::MatrixXd& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& [k, v] : comments) out << "# " << k << "=" << v << "\n";
  for (std::size_t c = 0; c < columns.size(); ++c)
    out << columns[c] << (c + 1 == columns.size() ? "\n" : ",");
  for (Eigen::Index r = 0; r < data.rows(); ++r)
    for (Eigen::Index c = 0; c < data.cols(); ++c)
      out << format_double(data(r, c)) << (c + 1 == data.cols() ? "\n" : ",");
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

// Ensemble CSV: row = sample, columns = lattice coordinates, plus a weight
// column when the ensemble is weighted.
inline void write_ensemble_csv(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, std::string>>& comments,
    std::vector<std::string> columns, const Eigen::MatrixXd& samples,
    const Eigen::VectorXd& weights) {
  Eigen::MatrixXd data = samples;
  if (weights.size() > 0) {
    if (weights.size() != samples.rows())
      throw std::invalid_argument("ensemble csv: weight count mismatch");
    columns.push_back("weight");
    data.conservativeResize(Eigen::NoChange, data.cols() + 1);
    data.col(data.cols() - 1) = weights;
  }
  write_matrix_csv(path, comments, columns, data);
}

// Columnar binary ensembles: magic, version, rows, cols, then column-major
// doubles (row = sample, column = lattice coordinate).
inline void write_matrix_binary(const std::filesystem::path& path,
                                const std::string& config_hash,
                                const Eigen::MatrixXd& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const char magic[4] = {'I', 'F', 'L', 'B'};
  out.write(magic, 4);
  const std::uint32_t version = 1;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  char hash[17] = {0};
  std::snprintf(hash, sizeof(hash), "%s", config_hash.c_str());
  out.write(hash, 16);
  const std::uint64_t rows = std::uint64_t(data.rows());
  const std::uint64_t cols = std::uint64_t(data.cols());
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  for (Eigen::Index c = 0; c < data.cols(); ++c)
    out.write(reinterpret_cast<const char*>(data.col(c).data()),
              std::streamsize(sizeof(double) * std::size_t(data.rows())));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline Eigen::MatrixXd read_matrix_binary(const std::filesystem::path& path,
                                          std::string* config_hash = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (std::string(magic, 4) != "IFLB")
    throw std::runtime_error("bad magic in " + path.string());
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != 1) throw std::runtime_error("unsupported ensemble version");
  char hash[17] = {0};
  in.read(hash, 16);
  if (config_hash) *config_hash = std::string(hash, 16);
  std::uint64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  Eigen::MatrixXd data =
      Eigen::MatrixXd::Zero(Eigen::Index(rows), Eigen::Index(cols));
  for (Eigen::Index c = 0; c < data.cols(); ++c)
    in.read(reinterpret_cast<char*>(data.col(c).data()),
            std::streamsize(sizeof(double) * rows));
  if (!in) throw std::runtime_error("truncated ensemble file " + path.string());
  return data;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path,
                       const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

}  // namespace iflab
