#include <algorithm>
#include <cmath>
#include <string>

#include "ho/metrics.hpp"

namespace ho::metrics {
namespace {

// Rates are accumulated as spectral efficiency (bit/s/Hz) and scaled by B at
// the end, so B cancels exactly in the relative rate.
double spectral_efficiency(double sinr_db) { return std::log2(1.0 + std::pow(10.0, sinr_db / 10.0)); }

}  // namespace

void RateConfig::validate() const {
  if (!(bandwidth_hz > 0.0) || !std::isfinite(bandwidth_hz)) {
    throw std::invalid_argument("metrics: bandwidth_hz must be a positive finite number");
  }
}

double shannon_rate(double sinr_db, double bandwidth_hz) { return bandwidth_hz * spectral_efficiency(sinr_db); }

double mean_spectral_efficiency(const channel::Matrix& sinr_db, std::span<const int> serving) {
  if (serving.size() != sinr_db.rows()) {
    throw MetricsError("serving timeline has " + std::to_string(serving.size()) + " ticks, trace has " +
                       std::to_string(sinr_db.rows()));
  }
  if (serving.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t t = 0; t < serving.size(); ++t) {
    const int b = serving[t];
    if (b == protocol::kNoBs) continue;
    if (b < 0 || static_cast<std::size_t>(b) >= sinr_db.cols()) {
      throw MetricsError("serving BS " + std::to_string(b) + " out of range at tick " + std::to_string(t));
    }
    sum += spectral_efficiency(sinr_db(t, static_cast<std::size_t>(b)));
  }
  return sum / static_cast<double>(serving.size());
}

double max_spectral_efficiency(const channel::Matrix& sinr_db) {
  if (sinr_db.rows() == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t t = 0; t < sinr_db.rows(); ++t) {
    double best = 0.0;
    for (double s : sinr_db.row(t)) best = std::max(best, spectral_efficiency(s));
    sum += best;
  }
  return sum / static_cast<double>(sinr_db.rows());
}

double average_rate(const channel::Matrix& sinr_db, std::span<const int> serving, const RateConfig& cfg) {
  cfg.validate();
  return cfg.bandwidth_hz * mean_spectral_efficiency(sinr_db, serving);
}

double max_rate(const channel::Matrix& sinr_db, const RateConfig& cfg) {
  cfg.validate();
  return cfg.bandwidth_hz * max_spectral_efficiency(sinr_db);
}

double gamma_r(double avg_rate, double max_rate) {
  if (!(max_rate > 0.0)) throw MetricsError("relative rate undefined: maximum rate is zero");
  return avg_rate / max_rate;
}

std::vector<int> oracle_timeline(const channel::Matrix& sinr_db) {
  std::vector<int> out(sinr_db.rows());
  for (std::size_t t = 0; t < sinr_db.rows(); ++t) out[t] = protocol::argmax(sinr_db.row(t));
  return out;
}

}  // namespace ho::metrics
