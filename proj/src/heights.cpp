#include "lodbox/heights.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "lodbox/errors.hpp"

namespace lodbox::heights {

const std::vector<Measure>& all_measures() {
  static const std::vector<Measure> all = {Measure::maximum, Measure::range,
                                           Measure::mode, Measure::median,
                                           Measure::p90};
  return all;
}

std::string measure_name(Measure m) {
  switch (m) {
    case Measure::maximum: return "maximum";
    case Measure::range: return "range";
    case Measure::mode: return "mode";
    case Measure::median: return "median";
    case Measure::p90: return "p90";
  }
  return "?";
}

std::optional<Measure> measure_from_name(const std::string& name) {
  for (Measure m : all_measures())
    if (measure_name(m) == name) return m;
  if (name == "max") return Measure::maximum;
  return std::nullopt;
}

namespace {

void require_nonempty(std::span<const double> zs) {
  if (zs.empty()) throw NoPointsError("statistic requested on empty sample");
}

}  // namespace

double stat_max(std::span<const double> zs) {
  require_nonempty(zs);
  return *std::max_element(zs.begin(), zs.end());
}

double stat_min(std::span<const double> zs) {
  require_nonempty(zs);
  return *std::min_element(zs.begin(), zs.end());
}

double stat_range(std::span<const double> zs) {
  require_nonempty(zs);
  auto [lo, hi] = std::minmax_element(zs.begin(), zs.end());
  return *hi - *lo;
}

double stat_median(std::span<const double> zs) {
  require_nonempty(zs);
  std::vector<double> v(zs.begin(), zs.end());
  std::size_t n = v.size();
  std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (n % 2 == 1) return hi;
  double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

double stat_mode(std::span<const double> zs, double bin) {
  require_nonempty(zs);
  if (bin <= 0.0) throw Error("mode bin width must be > 0");
  std::map<long long, std::size_t> counts;
  for (double z : zs)
    ++counts[static_cast<long long>(std::floor(z / bin))];
  long long best_bin = counts.begin()->first;
  std::size_t best = 0;
  for (auto [k, c] : counts) {
    if (c > best) {  // strict: ties keep the lowest bin
      best = c;
      best_bin = k;
    }
  }
  return (best_bin + 0.5) * bin;
}

double stat_p90(std::span<const double> zs) {
  require_nonempty(zs);
  std::vector<double> v(zs.begin(), zs.end());
  std::sort(v.begin(), v.end());
  double pos = 0.9 * (static_cast<double>(v.size()) - 1.0);
  std::size_t lo = static_cast<std::size_t>(pos);
  double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + frac * (v[lo + 1] - v[lo]);
}

double stat_p90_nearest_rank(std::span<const double> zs) {
  require_nonempty(zs);
  std::vector<double> v(zs.begin(), zs.end());
  std::sort(v.begin(), v.end());
  std::size_t rank = static_cast<std::size_t>(
      std::ceil(0.9 * static_cast<double>(v.size())));
  rank = std::max<std::size_t>(rank, 1);
  return v[rank - 1];
}

std::optional<double> base_elevation(const pointcloud::PointCloud& ground) {
  if (ground.empty()) return std::nullopt;
  std::vector<double> zs;
  zs.reserve(ground.size());
  for (const auto& p : ground.points()) zs.push_back(p.z);
  return stat_median(zs);
}

BuildingHeights building_heights(const pointcloud::PointCloud& pc,
                                 const geometry::Footprint& fp,
                                 const std::set<Measure>& measures,
                                 const HeightsOptions& opts) {
  pointcloud::PointCloud building = pointcloud::clip_to_footprint(
      pointcloud::filter_by_class(pc, {opts.building_class}), fp);
  if (building.empty())
    throw NoPointsError("no building points inside footprint", fp.id);
  std::vector<double> zs;
  zs.reserve(building.size());
  for (const auto& p : building.points()) zs.push_back(p.z);

  BuildingHeights out;
  out.id = fp.id;
  out.n_points = building.size();

  pointcloud::PointCloud ground =
      pointcloud::ground_ring_points(pc, fp, opts.ground_ring_width);
  out.n_ground = ground.size();
  if (auto base = base_elevation(ground)) {
    out.base_elev = *base;
  } else {
    out.base_elev = stat_min(zs);
    out.flags.push_back("base_fallback_min_building_z");
  }

  for (Measure m : measures) {
    double value = 0.0;
    switch (m) {
      case Measure::maximum: value = stat_max(zs); break;
      case Measure::range: value = stat_range(zs); break;
      case Measure::mode: value = stat_mode(zs, opts.mode_bin); break;
      case Measure::median: value = stat_median(zs); break;
      case Measure::p90:
        value = opts.p90_nearest_rank ? stat_p90_nearest_rank(zs)
                                      : stat_p90(zs);
        break;
    }
    double h;
    if (m == Measure::range) {
      h = value;  // the range is already a height, not an elevation
    } else {
      h = value - out.base_elev;
    }
    if (h < 0.0) {
      h = 0.0;
      out.flags.push_back("negative_height_clamped_" + measure_name(m));
    }
    out.height[m] = h;
    out.top_elev[m] = out.base_elev + h;
  }
  return out;
}

}  // namespace lodbox::heights
