#pragma once

#include <vector>

#include "lodbox/geometry.hpp"

namespace lodbox::raster::detail {

/// Incremental Bowyer-Watson triangulation with z attributes, used for DSM
/// interpolation. Vertices 0..2 are the enclosing super-triangle; locate()
/// runs over the full structure so out-of-hull queries land on a triangle
/// touching a super vertex.
class Delaunay {
 public:
  struct Tri {
    int v[3];  // CCW
    int n[3];  // neighbor across the edge opposite v[i], -1 on the border
  };

  /// Throws GridError when fewer than 3 distinct points remain after
  /// deduplication or all points are collinear.
  Delaunay(const std::vector<geometry::Vec2>& pts,
           const std::vector<double>& zs);

  /// Walk from `hint` to the triangle containing p.
  int locate(geometry::Vec2 p, int hint) const;

  bool touches_super(int tri) const;

  /// Barycentric interpolation of z inside triangle `tri`.
  double interpolate(geometry::Vec2 p, int tri) const;

  /// True plus an interpolated value when p is inside the hull.
  bool sample(geometry::Vec2 p, int& hint, double& z_out) const;

  int any_triangle() const { return first_alive_; }
  std::size_t triangle_count() const;

 private:
  void insert(int vi, int& hint);
  bool in_circumcircle(int tri, geometry::Vec2 p) const;

  std::vector<geometry::Vec2> verts_;
  std::vector<double> z_;
  std::vector<Tri> tris_;
  std::vector<char> alive_;
  std::vector<int> free_;
  int first_alive_ = 0;
};

}  // namespace lodbox::raster::detail
