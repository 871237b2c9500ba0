#include <cmath>
#include <random>
#include <stdexcept>

#include "ho/channel.hpp"

namespace ho::channel {
namespace {

constexpr double kmh_to_mps(double kmh) { return kmh / 3.6; }

std::size_t ticks_for(double duration_s, double tick_s) {
  return static_cast<std::size_t>(std::llround(duration_s / tick_s));
}

}  // namespace

MobilityPath generate_path(Area area, double speed_kmh, double duration_s, std::uint64_t seed) {
  if (!(speed_kmh >= 1.0 && speed_kmh <= 120.0)) {
    throw std::invalid_argument("speed_kmh must lie in [1, 120]");
  }
  if (!(duration_s > 0.0)) throw std::invalid_argument("duration_s must be positive");
  if (!(area.width_m > 0.0) || !(area.height_m > 0.0)) {
    throw std::invalid_argument("mobility area is empty");
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, area.width_m);
  std::uniform_real_distribution<double> uy(0.0, area.height_m);
  std::uniform_real_distribution<double> jitter(0.8, 1.2);

  MobilityPath path;
  path.speed_kmh = speed_kmh;
  path.tick_s = kTickSeconds;
  const std::size_t n = ticks_for(duration_s, path.tick_s);
  path.waypoints.reserve(n);

  Point pos{ux(rng), uy(rng)};
  Point dest{ux(rng), uy(rng)};
  double leg_step = kmh_to_mps(speed_kmh) * jitter(rng) * path.tick_s;

  for (std::size_t i = 0; i < n; ++i) {
    path.waypoints.push_back({static_cast<double>(i) * path.tick_s, pos.x, pos.y});
    double budget = leg_step;
    while (budget > 0.0) {
      const double remaining = distance(pos, dest);
      if (remaining > budget) {
        pos.x += (dest.x - pos.x) * budget / remaining;
        pos.y += (dest.y - pos.y) * budget / remaining;
        budget = 0.0;
      } else {
        pos = dest;
        budget -= remaining;
        dest = {ux(rng), uy(rng)};
        leg_step = kmh_to_mps(speed_kmh) * jitter(rng) * path.tick_s;
      }
    }
  }
  return path;
}

MobilityPath line_path(Point from, Point to, double speed_kmh, std::size_t n_ticks) {
  if (!(speed_kmh > 0.0)) throw std::invalid_argument("speed_kmh must be positive");
  const double len = distance(from, to);
  if (!(len > 0.0)) throw std::invalid_argument("line_path endpoints coincide");

  MobilityPath path;
  path.speed_kmh = speed_kmh;
  path.tick_s = kTickSeconds;
  path.waypoints.reserve(n_ticks);
  const double ux = (to.x - from.x) / len;
  const double uy = (to.y - from.y) / len;
  const double step = kmh_to_mps(speed_kmh) * path.tick_s;
  for (std::size_t i = 0; i < n_ticks; ++i) {
    const double s = step * static_cast<double>(i);
    path.waypoints.push_back({static_cast<double>(i) * path.tick_s, from.x + ux * s, from.y + uy * s});
  }
  return path;
}

}  // namespace ho::channel
