#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "lodbox/geometry.hpp"
#include "lodbox/pointcloud.hpp"

namespace lodbox::heights {

/// The five per-building height statistics computed from clipped points.
enum class Measure { maximum, range, mode, median, p90 };

const std::vector<Measure>& all_measures();
std::string measure_name(Measure m);
std::optional<Measure> measure_from_name(const std::string& name);

double stat_max(std::span<const double> zs);
double stat_min(std::span<const double> zs);
double stat_range(std::span<const double> zs);
double stat_median(std::span<const double> zs);

/// Histogram mode over bins [k*bin, (k+1)*bin); returns the center of the
/// fullest bin, ties going to the lowest bin.
double stat_mode(std::span<const double> zs, double bin = 0.1);

/// Linear interpolation between order statistics at position 0.9*(n-1).
double stat_p90(std::span<const double> zs);
/// Nearest-rank alternative (ceil(0.9*n)-th order statistic).
double stat_p90_nearest_rank(std::span<const double> zs);

/// Median ground elevation; empty input yields nullopt so callers can fall
/// back to the lowest building point.
std::optional<double> base_elevation(const pointcloud::PointCloud& ground);

struct BuildingHeights {
  std::string id;
  double base_elev = 0.0;
  std::map<Measure, double> top_elev;  // absolute; for range, base + range
  std::map<Measure, double> height;    // top - base; for range, the range
  std::size_t n_points = 0;
  std::size_t n_ground = 0;
  std::vector<std::string> flags;
};

struct HeightsOptions {
  double mode_bin = 0.1;
  double ground_ring_width = 2.0;
  bool p90_nearest_rank = false;
  int building_class = pointcloud::kClassBuilding;
};

/// Clip building-class points to the footprint, compute the requested
/// measures, and derive heights against the ground-ring base elevation.
/// Throws NoPointsError (carrying the footprint id) when the footprint
/// contains no building points.
BuildingHeights building_heights(const pointcloud::PointCloud& pc,
                                 const geometry::Footprint& fp,
                                 const std::set<Measure>& measures,
                                 const HeightsOptions& opts = {});

}  // namespace lodbox::heights
