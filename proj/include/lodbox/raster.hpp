#pragma once

#include <string>
#include <vector>

#include "lodbox/geometry.hpp"
#include "lodbox/pointcloud.hpp"

namespace lodbox::raster {

/// Georeferenced grid. `origin` is the center of the lower-left cell and
/// values are stored row-major with row 0 at the bottom (the ESRI ASCII
/// serialization writes the top row first).
struct Grid {
  geometry::Vec2 origin{0, 0};
  double cell = 0.23;
  int ncols = 0, nrows = 0;
  std::vector<double> values;
  double nodata = -9999.0;

  double& at(int col, int row) {
    return values[static_cast<std::size_t>(row) * ncols + col];
  }
  double at(int col, int row) const {
    return values[static_cast<std::size_t>(row) * ncols + col];
  }
  geometry::Vec2 center(int col, int row) const {
    return {origin.x + col * cell, origin.y + row * cell};
  }
  bool is_binary() const;
  static Grid filled(geometry::Vec2 origin, double cell, int ncols, int nrows,
                     double value);
};

/// DSM by Delaunay triangulation of (x, y, z) and per-triangle linear
/// interpolation at cell centers; centers outside the convex hull get
/// nodata. `threads` partitions the interpolation only; results are
/// identical for any thread count.
Grid rasterize_dsm(const pointcloud::PointCloud& pc, double cell = 0.23,
                   int threads = 1);

/// 3x3 majority filter on a binary grid: each cell takes the majority of
/// its 8 neighbors; ties keep the center, nodata neighbors are ignored.
Grid majority_filter(const Grid& g);

enum class Connectivity { four, eight };

/// Connected components of 1-cells traced along cell edges into
/// axis-aligned polygons (holes included), ordered by component seed in
/// scanline order. Footprint ids are left empty.
std::vector<geometry::Footprint> polygonize(
    const Grid& g, Connectivity conn = Connectivity::eight);

/// Binary mask on the template's extent: 1 iff the cell center is inside.
Grid rasterize_polygon(const geometry::Footprint& fp, const Grid& templ);

/// ESRI ASCII grid I/O (header keys ncols, nrows, xllcenter, yllcenter,
/// cellsize, NODATA_value). Doubles render shortest-round-trip, so
/// write-then-read is value exact.
Grid read_grid(const std::string& path);
void write_grid(const Grid& g, const std::string& path);
Grid parse_grid(const std::string& text);
std::string format_grid(const Grid& g);

}  // namespace lodbox::raster
