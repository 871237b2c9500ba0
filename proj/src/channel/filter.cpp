#include <cmath>
#include <stdexcept>

#include "ho/channel.hpp"

namespace ho::channel {

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

void Matrix::set_column(std::size_t c, std::span<const double> values) {
  if (values.size() != rows_) throw std::invalid_argument("column length mismatch");
  for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = values[r];
}

bool RawTrace::operator==(const RawTrace& other) const {
  return ue_id == other.ue_id && tick_s == other.tick_s && seed == other.seed &&
         rsrp_dbm == other.rsrp_dbm && sinr_db == other.sinr_db && meta == other.meta;
}

void FilterConfig::validate() const {
  if (l1_window < 1) throw std::invalid_argument("l1_window must be >= 1");
  if (l3_k < 0) throw std::invalid_argument("l3_k must be >= 0");
}

double FilterConfig::l3_coefficient() const { return 1.0 / std::pow(2.0, l3_k / 4.0); }

namespace {

Matrix moving_average(const Matrix& in, std::size_t window) {
  Matrix out(in.rows(), in.cols());
  for (std::size_t c = 0; c < in.cols(); ++c) {
    for (std::size_t r = 0; r < in.rows(); ++r) {
      const std::size_t first = r + 1 >= window ? r + 1 - window : 0;
      double sum = 0.0;
      for (std::size_t k = first; k <= r; ++k) sum += in(k, c);
      out(r, c) = sum / static_cast<double>(r - first + 1);
    }
  }
  return out;
}

}  // namespace

RawTrace l1_filter(const RawTrace& trace, const FilterConfig& cfg) {
  cfg.validate();
  if (cfg.l1_window == 1) return trace;
  RawTrace out = trace;
  const auto w = static_cast<std::size_t>(cfg.l1_window);
  out.rsrp_dbm = moving_average(trace.rsrp_dbm, w);
  out.sinr_db = moving_average(trace.sinr_db, w);
  return out;
}

std::vector<double> l3_filter(std::span<const double> series, const FilterConfig& cfg) {
  cfg.validate();
  std::vector<double> out(series.begin(), series.end());
  if (cfg.l3_k == 0 || out.empty()) return out;
  const double a = cfg.l3_coefficient();
  for (std::size_t n = 1; n < out.size(); ++n) out[n] = (1.0 - a) * out[n - 1] + a * series[n];
  return out;
}

Matrix l3_filter(const Matrix& m, const FilterConfig& cfg) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t c = 0; c < m.cols(); ++c) out.set_column(c, l3_filter(m.column(c), cfg));
  return out;
}

}  // namespace ho::channel
