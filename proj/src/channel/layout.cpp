#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "ho/channel.hpp"

namespace ho::channel {

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

BsLayout generate_layout(std::size_t n_bs, Area area, std::uint64_t seed, double tx_power_dbm,
                         double min_spacing_m) {
  if (n_bs < 2) throw LayoutError("layout needs at least 2 base stations");
  if (!(area.width_m > 0.0) || !(area.height_m > 0.0)) throw LayoutError("layout area is empty");
  if (!std::isfinite(tx_power_dbm)) throw LayoutError("tx power must be finite");

  // Disks of radius spacing/2 around each site must not overlap.
  const double disk = std::numbers::pi * 0.25 * min_spacing_m * min_spacing_m;
  if (static_cast<double>(n_bs) * disk > area.width_m * area.height_m) {
    throw LayoutError("area " + std::to_string(area.width_m) + "x" + std::to_string(area.height_m) +
                      " m cannot hold " + std::to_string(n_bs) + " stations " +
                      std::to_string(min_spacing_m) + " m apart");
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, area.width_m);
  std::uniform_real_distribution<double> uy(0.0, area.height_m);

  constexpr int kRestarts = 200;
  constexpr int kTriesPerSite = 2000;
  for (int restart = 0; restart < kRestarts; ++restart) {
    BsLayout layout;
    layout.positions.reserve(n_bs);
    while (layout.positions.size() < n_bs) {
      bool placed = false;
      for (int attempt = 0; attempt < kTriesPerSite && !placed; ++attempt) {
        const Point p{ux(rng), uy(rng)};
        bool ok = true;
        for (const Point& q : layout.positions) {
          if (distance(p, q) < min_spacing_m) {
            ok = false;
            break;
          }
        }
        if (ok) {
          layout.positions.push_back(p);
          placed = true;
        }
      }
      if (!placed) break;
    }
    if (layout.positions.size() == n_bs) {
      layout.tx_power_dbm.assign(n_bs, tx_power_dbm);
      return layout;
    }
  }
  throw LayoutError("rejection sampling could not place " + std::to_string(n_bs) + " stations");
}

}  // namespace ho::channel
