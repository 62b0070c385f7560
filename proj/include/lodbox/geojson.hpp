#pragma once

#include <string>
#include <vector>

#include "lodbox/geometry.hpp"

namespace lodbox::geojson {

/// RFC 7946 FeatureCollection of Polygon features with properties
/// `id` (string) and `source` ("predicted" | "reference").
std::vector<geometry::Footprint> read_footprints(const std::string& path);
void write_footprints(const std::vector<geometry::Footprint>& fps,
                      const std::string& path);

std::vector<geometry::Footprint> footprints_from_geojson(
    const std::string& text);
std::string footprints_to_geojson(const std::vector<geometry::Footprint>& fps);

}  // namespace lodbox::geojson
