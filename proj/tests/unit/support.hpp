#pragma once

// Small builders shared by the unit tests and the acceptance runner.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ho/channel.hpp"

namespace ho::test {

// Trace whose RSRP and SINR matrices are given row by row (one row per tick).
inline channel::RawTrace make_trace(const std::vector<std::vector<double>>& rsrp,
                                    const std::vector<std::vector<double>>& sinr) {
  channel::RawTrace t;
  const std::size_t rows = sinr.size();
  const std::size_t cols = rows ? sinr.front().size() : 0;
  t.rsrp_dbm = channel::Matrix(rows, cols);
  t.sinr_db = channel::Matrix(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      t.rsrp_dbm(r, c) = rsrp[r][c];
      t.sinr_db(r, c) = sinr[r][c];
    }
  }
  return t;
}

// Same values for RSRP and SINR; enough for controllers that only compare.
inline channel::RawTrace make_trace(const std::vector<std::vector<double>>& sinr) { return make_trace(sinr, sinr); }

// Independent uniform SINR values in [lo, hi] dB.
inline channel::RawTrace random_trace(std::size_t ticks, std::size_t n_bs, std::uint64_t seed, double lo = -15.0,
                                      double hi = 25.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<std::vector<double>> rows(ticks, std::vector<double>(n_bs));
  for (auto& row : rows) {
    for (double& v : row) v = u(rng);
  }
  auto t = make_trace(rows);
  t.seed = seed;
  return t;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("ho_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace ho::test
