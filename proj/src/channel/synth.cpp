#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "ho/channel.hpp"

namespace ho::channel {
namespace {

constexpr double kSpeedOfLight = 299792458.0;

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

nlohmann::ordered_json snapshot(const BsLayout& layout, const MobilityPath& path,
                                const RadioConfig& radio) {
  nlohmann::ordered_json j;
  j["generator"] = "log-distance+gudmundson";
  j["carrier_hz"] = radio.carrier_hz;
  j["pathloss_exponent"] = radio.pathloss_exponent;
  j["shadow_sigma_db"] = radio.shadow_sigma_db;
  j["shadow_decorrelation_m"] = radio.shadow_decorrelation_m;
  j["noise_dbm"] = radio.noise_dbm;
  j["speed_kmh"] = path.speed_kmh;
  auto sites = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < layout.n_bs(); ++i) {
    sites.push_back({layout.positions[i].x, layout.positions[i].y, layout.tx_power_dbm[i]});
  }
  j["bs"] = std::move(sites);
  return j;
}

}  // namespace

void RadioConfig::validate() const {
  if (!(pathloss_exponent > 2.0)) throw std::invalid_argument("pathloss_exponent must exceed 2");
  if (!(shadow_sigma_db >= 0.0)) throw std::invalid_argument("shadow_sigma_db must be >= 0");
  if (!(shadow_decorrelation_m > 0.0)) {
    throw std::invalid_argument("shadow_decorrelation_m must be positive");
  }
  if (!std::isfinite(noise_dbm)) throw std::invalid_argument("noise_dbm must be finite");
  if (!(carrier_hz > 0.0)) throw std::invalid_argument("carrier_hz must be positive");
}

double RadioConfig::reference_loss_db() const {
  return 20.0 * std::log10(4.0 * std::numbers::pi * carrier_hz / kSpeedOfLight);
}

double RadioConfig::pathloss_db(double distance_m) const {
  const double d = std::max(distance_m, 1.0);
  return reference_loss_db() + 10.0 * pathloss_exponent * std::log10(d);
}

double received_power_dbm(const BsLayout& layout, std::size_t bs, Point ue, const RadioConfig& radio) {
  return layout.tx_power_dbm.at(bs) - radio.pathloss_db(distance(layout.positions.at(bs), ue));
}

void sinr_from_rsrp(std::span<const double> rsrp_dbm, double noise_dbm, std::span<double> sinr_db) {
  const std::size_t n = rsrp_dbm.size();
  std::vector<double> lin(n);
  for (std::size_t i = 0; i < n; ++i) lin[i] = dbm_to_mw(rsrp_dbm[i]);
  std::vector<double> sorted = lin;
  std::sort(sorted.begin(), sorted.end());

  const double noise = dbm_to_mw(noise_dbm);
  for (std::size_t i = 0; i < n; ++i) {
    double interference = 0.0;
    bool skipped = false;
    for (double p : sorted) {
      if (!skipped && p == lin[i]) {
        skipped = true;
        continue;
      }
      interference += p;
    }
    sinr_db[i] = 10.0 * std::log10(lin[i] / (interference + noise));
  }
}

RawTrace synthesize_trace(const BsLayout& layout, const MobilityPath& path, const RadioConfig& radio,
                          std::uint64_t seed, std::int64_t ue_id) {
  radio.validate();
  const std::size_t n_bs = layout.n_bs();
  if (n_bs == 0 || layout.tx_power_dbm.size() != n_bs) {
    throw std::invalid_argument("layout has inconsistent station data");
  }
  const std::size_t n_ticks = path.waypoints.size();

  RawTrace trace;
  trace.ue_id = ue_id;
  trace.tick_s = path.tick_s;
  trace.seed = seed;
  trace.rsrp_dbm = Matrix(n_ticks, n_bs);
  trace.sinr_db = Matrix(n_ticks, n_bs);
  trace.meta = snapshot(layout, path, radio);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> shadow(n_bs);
  for (double& s : shadow) s = radio.shadow_sigma_db * gauss(rng);

  Point prev{};
  for (std::size_t t = 0; t < n_ticks; ++t) {
    const Point ue{path.waypoints[t].x_m, path.waypoints[t].y_m};
    if (t > 0) {
      // Gudmundson: correlation exp(-d / d_corr) over the distance moved.
      const double rho = std::exp(-distance(ue, prev) / radio.shadow_decorrelation_m);
      const double innov = radio.shadow_sigma_db * std::sqrt(std::max(0.0, 1.0 - rho * rho));
      for (double& s : shadow) s = rho * s + innov * gauss(rng);
    }
    prev = ue;
    auto rsrp = trace.rsrp_dbm.row(t);
    for (std::size_t b = 0; b < n_bs; ++b) {
      rsrp[b] = received_power_dbm(layout, b, ue, radio) - shadow[b];
    }
    sinr_from_rsrp(rsrp, radio.noise_dbm, trace.sinr_db.row(t));
  }
  return trace;
}

}  // namespace ho::channel
