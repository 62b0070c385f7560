#include "lodbox/geojson.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lodbox/errors.hpp"

namespace lodbox::geojson {

using geometry::Footprint;
using geometry::Ring;
using geometry::Source;
using geometry::Vec2;
using nlohmann::json;

namespace {

Ring ring_from_coords(const json& coords) {
  std::vector<Vec2> pts;
  pts.reserve(coords.size());
  for (const auto& c : coords) {
    if (!c.is_array() || c.size() < 2)
      throw ParseError("geojson: position must be [x, y]");
    pts.push_back({c[0].get<double>(), c[1].get<double>()});
  }
  return Ring(pts);
}

json ring_to_coords(const Ring& r) {
  json coords = json::array();
  for (Vec2 p : r.vertices()) coords.push_back({p.x, p.y});
  coords.push_back(coords.front());  // RFC 7946 rings are closed
  return coords;
}

}  // namespace

std::vector<Footprint> footprints_from_geojson(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("geojson: ") + e.what());
  }
  if (doc.value("type", "") != "FeatureCollection")
    throw ParseError("geojson: expected a FeatureCollection");

  std::vector<Footprint> fps;
  std::size_t idx = 0;
  for (const auto& feat : doc.value("features", json::array())) {
    ++idx;
    const auto& geom = feat.at("geometry");
    std::string gtype = geom.value("type", "");
    if (gtype != "Polygon")
      throw ParseError("geojson: feature " + std::to_string(idx) +
                       " has geometry type '" + gtype +
                       "' (only Polygon is supported)");
    const auto& coords = geom.at("coordinates");
    if (coords.empty())
      throw ParseError("geojson: feature " + std::to_string(idx) +
                       " has no rings");
    Ring outer = ring_from_coords(coords[0]);
    std::vector<Ring> holes;
    for (std::size_t i = 1; i < coords.size(); ++i)
      holes.push_back(ring_from_coords(coords[i]));

    json props = feat.value("properties", json::object());
    if (props.is_null()) props = json::object();
    std::string id = props.contains("id") ? props["id"].get<std::string>()
                                          : "f" + std::to_string(idx);
    Source src = Source::predicted;
    if (props.contains("source")) {
      std::string s = props["source"].get<std::string>();
      if (s == "reference")
        src = Source::reference;
      else if (s == "predicted")
        src = Source::predicted;
      else
        throw ParseError("geojson: feature " + std::to_string(idx) +
                         " has unknown source '" + s + "'");
    }
    fps.emplace_back(id, std::move(outer), std::move(holes), src);
  }
  return fps;
}

std::string footprints_to_geojson(const std::vector<Footprint>& fps) {
  json features = json::array();
  for (const auto& fp : fps) {
    json coords = json::array();
    coords.push_back(ring_to_coords(fp.outer));
    for (const auto& h : fp.holes) coords.push_back(ring_to_coords(h));
    features.push_back(
        {{"type", "Feature"},
         {"properties",
          {{"id", fp.id},
           {"source",
            fp.source == Source::reference ? "reference" : "predicted"}}},
         {"geometry", {{"type", "Polygon"}, {"coordinates", coords}}}});
  }
  json doc = {{"type", "FeatureCollection"}, {"features", features}};
  return doc.dump(2) + "\n";
}

std::vector<Footprint> read_footprints(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return footprints_from_geojson(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_footprints(const std::vector<Footprint>& fps,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << footprints_to_geojson(fps);
}

}  // namespace lodbox::geojson
