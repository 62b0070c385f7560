#pragma once

#include <cmath>
#include <string>
#include <vector>

namespace lodbox::geometry {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Vec2&) const = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

struct Box2 {
  Vec2 min{0, 0};
  Vec2 max{0, 0};

  double width() const { return max.x - min.x; }
  double height() const { return max.y - min.y; }
  bool intersects(const Box2& o) const {
    return min.x <= o.max.x && o.min.x <= max.x && min.y <= o.max.y &&
           o.min.y <= max.y;
  }
  void expand(Vec2 p) {
    min.x = std::min(min.x, p.x);
    min.y = std::min(min.y, p.y);
    max.x = std::max(max.x, p.x);
    max.y = std::max(max.y, p.y);
  }
};

/// A closed ring stored open (last vertex != first). Construction drops
/// exact duplicate and exactly collinear vertices and rejects degenerate
/// input; orientation is kept as given (Footprint normalizes it).
class Ring {
 public:
  Ring() = default;
  explicit Ring(std::vector<Vec2> vertices);

  const std::vector<Vec2>& vertices() const { return verts_; }
  std::size_t size() const { return verts_.size(); }
  Vec2 at(std::size_t i) const { return verts_[i % verts_.size()]; }

  double signed_area() const;
  double perimeter() const;
  Box2 bbox() const;
  bool is_ccw() const { return signed_area() > 0.0; }
  Ring reversed() const;

 private:
  std::vector<Vec2> verts_;
};

enum class Source { predicted, reference };

/// Building footprint: one outer ring plus optional hole rings.
/// Construction normalizes orientation (outer CCW, holes CW) and checks
/// that holes lie inside the outer ring and net area is positive.
struct Footprint {
  Footprint() = default;
  Footprint(std::string id, Ring outer, std::vector<Ring> holes = {},
            Source source = Source::predicted);

  std::string id;
  Ring outer;
  std::vector<Ring> holes;
  Source source = Source::predicted;
};

double polygon_area(const Footprint& fp);
double polygon_perimeter(const Footprint& fp);

/// Point membership; ring boundaries (outer and hole) count as inside.
bool point_in_polygon(Vec2 p, const Footprint& fp);

/// Outward miter-join offset of the outer ring, inward offset of holes.
/// Throws BufferError if the offset result self-intersects.
Footprint buffer_polygon(const Footprint& fp, double distance);

struct OrientedBox {
  Vec2 center;
  double angle = 0.0;  // radians, normalized to [0, pi/2)
  double width = 0.0;  // extent along the angle axis
  double height = 0.0;
};

/// Minimum-area bounding rectangle of the convex hull (rotating calipers).
OrientedBox min_area_rect(const Footprint& fp);

/// IoU by rasterizing both polygons onto a grid derived from the joint
/// bounding box at resolution `cell`. Deterministic for a fixed cell and
/// invariant under common translation. Disjoint boxes give 0.
double polygon_iou(const Footprint& a, const Footprint& b, double cell = 0.05);

Box2 bounding_box(const Footprint& fp);
Footprint translated(const Footprint& fp, Vec2 delta);
Vec2 centroid(const Footprint& fp);

/// Inward miter-join offset (holes grow). Throws BufferError on collapse.
Footprint inset_polygon(const Footprint& fp, double distance);

/// True when no two non-adjacent edges properly cross (self-touching at
/// isolated vertices, as pinched rasterized outlines do, still counts).
bool ring_is_simple(const Ring& r);

std::vector<Vec2> convex_hull(std::vector<Vec2> pts);

}  // namespace lodbox::geometry
