#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "lodbox/geometry.hpp"
#include "lodbox/heights.hpp"

namespace lodbox::reconstruct {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  bool operator==(const Vec3&) const = default;
};

/// Flat-roofed prism over a footprint.
struct Lod1Solid {
  std::string id;
  geometry::Footprint footprint;
  double base = 0.0;
  double top = 0.0;
  std::optional<heights::Measure> measure;
};

enum class FaceKind { wall, roof, ground };

struct Face {
  std::vector<std::vector<Vec3>> rings;  // rings[0] outer, rest holes
  FaceKind kind = FaceKind::wall;
  double area = 0.0;
};

/// Throws on top <= base.
Lod1Solid extrude(const geometry::Footprint& fp, double base, double top,
                  std::optional<heights::Measure> measure = std::nullopt);

/// Boundary decomposition with outward normals. Faces are classified by
/// slope: vertical faces are walls, horizontal ones roof (at the top) or
/// ground (at the base).
std::vector<Face> faces(const Lod1Solid& solid);

/// Volume by the divergence theorem over the triangulated boundary.
double solid_volume(const Lod1Solid& solid);

/// Ear-clipping triangulation of a planar face (holes bridged first).
std::vector<std::array<Vec3, 3>> triangulate_face(const Face& face);

/// CityJSON 2.0: one Building per solid, Solid geometry at lod "1",
/// vertices quantized to 1 mm by the document transform.
void write_cityjson(const std::vector<Lod1Solid>& solids,
                    const std::string& path);
std::string to_cityjson(const std::vector<Lod1Solid>& solids);
std::vector<Lod1Solid> read_cityjson(const std::string& path);
std::vector<Lod1Solid> from_cityjson(const std::string& text);

/// Wavefront OBJ, one group per building, triangulated faces.
void write_obj(const std::vector<Lod1Solid>& solids, const std::string& path);

}  // namespace lodbox::reconstruct
