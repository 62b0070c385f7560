#pragma once

#include <map>
#include <string>
#include <vector>

#include "lodbox/geometry.hpp"
#include "lodbox/raster.hpp"

namespace lodbox::footprint {

struct PostprocessConfig {
  double min_area = 10.0;       // m², inclusive keep threshold
  double buffer_dist = 0.05;    // m, outward expansion before regularization
  double simplify_tol = 0.3;    // m, Douglas-Peucker tolerance
  double snap_angle_tol = 15.0; // degrees, snap window around the dominant axes
  raster::Connectivity connectivity = raster::Connectivity::eight;
};

/// Union of aligned binary tiles; overlapping cells combine by OR of
/// building pixels, uncovered cells stay nodata.
raster::Grid merge_tiles(const std::vector<raster::Grid>& tiles);

std::vector<geometry::Footprint> drop_small(
    const std::vector<geometry::Footprint>& fps, double min_area);

struct RegularizeResult {
  geometry::Footprint footprint;
  std::vector<std::string> flags;
};

/// Simplify (Douglas-Peucker), find the dominant orientation, snap edges
/// within snap_angle_tol of it (or its perpendicular) and re-intersect.
/// Falls back to the simplified polygon when the result degenerates or its
/// area drifts more than 25% from the input, flagging the fallback.
RegularizeResult regularize(const geometry::Footprint& fp,
                            const PostprocessConfig& cfg);

struct PostprocessResult {
  std::vector<geometry::Footprint> footprints;
  std::map<std::string, std::vector<std::string>> flags;  // by footprint id
};

/// The full mask-to-footprint chain, in order: majority filter,
/// polygonize, area threshold, buffer, regularize. Ids are assigned by
/// scanline order of the component seed cells.
PostprocessResult postprocess(const raster::Grid& mask,
                              const PostprocessConfig& cfg = {});

}  // namespace lodbox::footprint
