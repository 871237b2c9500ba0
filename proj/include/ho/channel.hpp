#pragma once

// Synthetic radio traces: base-station layouts, UE mobility, log-distance
// pathloss with Gudmundson-correlated shadowing, and L1/L3 measurement
// filtering. All generators are pure functions of their inputs and seed.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace ho::channel {

inline constexpr double kTickSeconds = 0.010;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

double distance(Point a, Point b);

struct Area {
  double width_m = 0.0;
  double height_m = 0.0;
};

struct BsLayout {
  std::vector<Point> positions;
  std::vector<double> tx_power_dbm;

  std::size_t n_bs() const { return positions.size(); }
};

struct Waypoint {
  double t_s = 0.0;
  double x_m = 0.0;
  double y_m = 0.0;
};

struct MobilityPath {
  std::vector<Waypoint> waypoints;
  double speed_kmh = 0.0;
  double tick_s = kTickSeconds;
};

struct RadioConfig {
  double carrier_hz = 2.1e9;
  double pathloss_exponent = 3.5;
  double shadow_sigma_db = 6.0;
  double shadow_decorrelation_m = 50.0;
  double noise_dbm = -104.0;

  void validate() const;
  // Free-space loss at 1 m for the carrier.
  double reference_loss_db() const;
  double pathloss_db(double distance_m) const;
};

struct FilterConfig {
  int l1_window = 5;
  int l3_k = 4;

  void validate() const;
  // a = 1 / 2^(k/4)
  double l3_coefficient() const;
};

// Dense row-major [rows x cols] matrix; one row per tick, one column per BS.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double> column(std::size_t c) const;
  void set_column(std::size_t c, std::span<const double> values);

  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct RawTrace {
  std::int64_t ue_id = 0;
  double tick_s = kTickSeconds;
  Matrix rsrp_dbm;
  Matrix sinr_db;
  std::uint64_t seed = 0;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();

  std::size_t n_ticks() const { return rsrp_dbm.rows(); }
  std::size_t n_bs() const { return rsrp_dbm.cols(); }

  bool operator==(const RawTrace& other) const;
};

class LayoutError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Places n_bs stations uniformly at random with at least min_spacing_m
// between any two. Throws LayoutError when the area cannot hold them.
BsLayout generate_layout(std::size_t n_bs, Area area, std::uint64_t seed,
                         double tx_power_dbm = 46.0, double min_spacing_m = 100.0);

// Random-waypoint walk inside the area, one sample per tick. Each leg draws a
// speed factor in [0.8, 1.2] of the nominal speed.
MobilityPath generate_path(Area area, double speed_kmh, double duration_s, std::uint64_t seed);

// Straight walk from `from` towards `to` at constant speed for n_ticks samples.
MobilityPath line_path(Point from, Point to, double speed_kmh, std::size_t n_ticks);

RawTrace synthesize_trace(const BsLayout& layout, const MobilityPath& path,
                          const RadioConfig& radio, std::uint64_t seed, std::int64_t ue_id = 0);

// Causal moving average over the last `window` ticks (fewer at the start),
// applied to every BS column of both matrices in the dB domain.
RawTrace l1_filter(const RawTrace& trace, const FilterConfig& cfg);

// F_0 = M_0, F_n = (1 - a) F_{n-1} + a M_n.
std::vector<double> l3_filter(std::span<const double> series, const FilterConfig& cfg);

// Column-wise l3_filter of a per-BS matrix.
Matrix l3_filter(const Matrix& m, const FilterConfig& cfg);

// Linear-domain received power per BS for one UE position (no shadowing);
// exposed for analytic checks.
double received_power_dbm(const BsLayout& layout, std::size_t bs, Point ue, const RadioConfig& radio);

// SINR in dB of every BS given per-BS received powers in dBm.
// Interference is summed in ascending power order so the result is exactly
// equivariant under any permutation of the inputs.
void sinr_from_rsrp(std::span<const double> rsrp_dbm, double noise_dbm, std::span<double> sinr_db);

}  // namespace ho::channel
