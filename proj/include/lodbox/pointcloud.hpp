#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "lodbox/geometry.hpp"

namespace lodbox::pointcloud {

// ASPRS standard classification codes used throughout the pipeline.
inline constexpr std::uint8_t kClassGround = 2;
inline constexpr std::uint8_t kClassBuilding = 6;

struct LidarPoint {
  double x = 0.0, y = 0.0, z = 0.0;
  std::uint8_t classification = 0;
};

struct Bounds {
  geometry::Vec2 min{0, 0}, max{0, 0};
  double zmin = 0.0, zmax = 0.0;
};

/// Immutable classified point set with a uniform grid index over (x, y).
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(std::vector<LidarPoint> points, double index_cell = 5.0);

  const std::vector<LidarPoint>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Bounds& bounds() const { return bounds_; }
  double index_cell() const { return cell_; }

  /// Indices of points whose (x, y) falls inside the axis-aligned box,
  /// in ascending point order.
  std::vector<std::size_t> query_box(geometry::Box2 box) const;

 private:
  std::vector<LidarPoint> points_;
  double cell_ = 5.0;
  int ncols_ = 0, nrows_ = 0;
  std::vector<std::vector<std::uint32_t>> cells_;
  Bounds bounds_{};
};

enum class PointFormat { las, xyzc_text };

/// LAS 1.2-1.4 (point record formats 0, 1, 6) or whitespace-separated
/// `x y z class` text with '#' comments.
PointCloud load_points(const std::string& path, PointFormat format);
PointCloud parse_xyzc(const std::string& text);
void write_xyzc(const PointCloud& pc, const std::string& path);

PointCloud filter_by_class(const PointCloud& pc,
                           const std::set<int>& classes);
PointCloud clip_to_footprint(const PointCloud& pc,
                             const geometry::Footprint& fp);

/// Ground (class 2) points inside the footprint buffered outward by
/// `ring_width`; supplies base-height samples when the interior has none.
PointCloud ground_ring_points(const PointCloud& pc,
                              const geometry::Footprint& fp,
                              double ring_width = 2.0);

}  // namespace lodbox::pointcloud
