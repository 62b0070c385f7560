#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "lodbox/geometry.hpp"
#include "lodbox/pointcloud.hpp"

namespace testutil {

using lodbox::geometry::Footprint;
using lodbox::geometry::Ring;
using lodbox::geometry::Vec2;

class Rand {
 public:
  explicit Rand(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int n) {
    return static_cast<int>(eng_() % static_cast<std::uint64_t>(n));
  }
  double normal() {
    double u1 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586 * uniform());
  }

 private:
  std::mt19937_64 eng_;
};

/// Star-shaped polygon around a center: jittered evenly spaced angles with
/// random radii. Simple by construction, and the bounded angle gaps keep
/// every chord well away from the center so small holes stay inside.
inline Ring random_star_ring(Rand& rng, int n, Vec2 center, double r_min,
                             double r_max) {
  std::vector<Vec2> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i) {
    double a = 6.283185307179586 * (i + 0.35 * rng.uniform()) / n;
    double r = rng.uniform(r_min, r_max);
    pts.push_back({center.x + r * std::cos(a), center.y + r * std::sin(a)});
  }
  return Ring(pts);
}

inline Footprint random_polygon(Rand& rng, int n_min, int n_max,
                                bool with_hole) {
  int n = n_min + rng.uniform_int(n_max - n_min + 1);
  Vec2 c{rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0)};
  Ring outer = random_star_ring(rng, n, c, 6.0, 12.0);
  std::vector<Ring> holes;
  if (with_hole) {
    int hn = 3 + rng.uniform_int(5);
    holes.push_back(random_star_ring(rng, hn, c, 0.8, 2.0));
  }
  return Footprint("t", outer, holes);
}

/// Monte-Carlo area oracle: bounding-box sampling with point membership.
inline double monte_carlo_area(const Footprint& fp, long samples,
                               std::uint64_t seed) {
  Rand rng(seed);
  auto box = lodbox::geometry::bounding_box(fp);
  long hits = 0;
  for (long i = 0; i < samples; ++i) {
    Vec2 p{rng.uniform(box.min.x, box.max.x), rng.uniform(box.min.y, box.max.y)};
    if (lodbox::geometry::point_in_polygon(p, fp)) ++hits;
  }
  return box.width() * box.height() * static_cast<double>(hits) /
         static_cast<double>(samples);
}

/// O(n) clip oracle ignoring the spatial index.
inline std::vector<lodbox::pointcloud::LidarPoint> brute_clip(
    const lodbox::pointcloud::PointCloud& pc, const Footprint& fp) {
  std::vector<lodbox::pointcloud::LidarPoint> out;
  for (const auto& p : pc.points())
    if (lodbox::geometry::point_in_polygon({p.x, p.y}, fp)) out.push_back(p);
  return out;
}

// ---- independent statistics oracles (full sort / histogram scan) ----------

inline double oracle_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double oracle_p90(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double pos = 0.9 * (static_cast<double>(v.size()) - 1.0);
  std::size_t lo = static_cast<std::size_t>(pos);
  double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + frac * (v[lo + 1] - v[lo]);
}

inline double oracle_mode(const std::vector<double>& v, double bin) {
  // scan bins from the lowest occupied upward; first maximal count wins
  std::vector<long long> keys;
  keys.reserve(v.size());
  for (double z : v)
    keys.push_back(static_cast<long long>(std::floor(z / bin)));
  std::sort(keys.begin(), keys.end());
  long long best_key = keys.front();
  std::size_t best_count = 0;
  std::size_t i = 0;
  while (i < keys.size()) {
    std::size_t j = i;
    while (j < keys.size() && keys[j] == keys[i]) ++j;
    if (j - i > best_count) {
      best_count = j - i;
      best_key = keys[i];
    }
    i = j;
  }
  return (best_key + 0.5) * bin;
}

}  // namespace testutil
