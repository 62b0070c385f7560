#include "lodbox/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lodbox/errors.hpp"

namespace lodbox::geometry {

namespace {

constexpr double kDegenerateArea = 1e-12;

bool finite(Vec2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

double ring_signed_area(const std::vector<Vec2>& v) {
  double a = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    Vec2 p = v[i];
    Vec2 q = v[(i + 1) % v.size()];
    a += cross(p, q);
  }
  return 0.5 * a;
}

// Squared distance from p to segment [a,b].
double seg_dist2(Vec2 p, Vec2 a, Vec2 b) {
  Vec2 ab = b - a;
  double len2 = dot(ab, ab);
  if (len2 == 0.0) {
    Vec2 d = p - a;
    return dot(d, d);
  }
  double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  Vec2 proj = a + ab * t;
  Vec2 d = p - proj;
  return dot(d, d);
}

constexpr double kOnBoundaryTol = 1e-9;

bool on_ring_boundary(Vec2 p, const Ring& r) {
  const auto& v = r.vertices();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (seg_dist2(p, v[i], v[(i + 1) % v.size()]) <
        kOnBoundaryTol * kOnBoundaryTol) {
      return true;
    }
  }
  return false;
}

// Even-odd crossing test, half-open in y so vertices are not double counted.
bool inside_ring(Vec2 p, const Ring& r) {
  const auto& v = r.vertices();
  bool in = false;
  for (std::size_t i = 0; i < v.size(); ++i) {
    Vec2 a = v[i];
    Vec2 b = v[(i + 1) % v.size()];
    if ((a.y > p.y) != (b.y > p.y)) {
      double xint = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < xint) in = !in;
    }
  }
  return in;
}

bool rings_intersect(const Ring& r1, const Ring& r2, bool same_ring);

// Proper segment intersection (shared endpoints of adjacent edges excluded
// by the callers).
bool segments_cross(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  double d1 = cross(b - a, c - a);
  double d2 = cross(b - a, d - a);
  double d3 = cross(d - c, a - c);
  double d4 = cross(d - c, b - c);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

bool ring_self_intersects(const Ring& r) {
  const auto& v = r.vertices();
  std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      // skip adjacent edges (they share a vertex)
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]))
        return true;
    }
  }
  return false;
}

bool rings_intersect(const Ring& r1, const Ring& r2, bool) {
  const auto& a = r1.vertices();
  const auto& b = r2.vertices();
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      if (segments_cross(a[i], a[(i + 1) % a.size()], b[j],
                         b[(j + 1) % b.size()]))
        return true;
  return false;
}

}  // namespace

Ring::Ring(std::vector<Vec2> vertices) {
  // drop an explicit closing vertex
  if (vertices.size() > 1 && vertices.front() == vertices.back())
    vertices.pop_back();
  for (Vec2 p : vertices) {
    if (!finite(p)) throw InvalidGeometryError("ring vertex is not finite");
  }
  // drop exact consecutive duplicates
  std::vector<Vec2> v;
  v.reserve(vertices.size());
  for (Vec2 p : vertices) {
    if (v.empty() || !(v.back() == p)) v.push_back(p);
  }
  while (v.size() > 1 && v.front() == v.back()) v.pop_back();
  // drop exactly collinear vertices
  bool changed = true;
  while (changed && v.size() > 3) {
    changed = false;
    for (std::size_t i = 0; i < v.size() && v.size() > 3; ++i) {
      Vec2 prev = v[(i + v.size() - 1) % v.size()];
      Vec2 cur = v[i];
      Vec2 next = v[(i + 1) % v.size()];
      if (cross(cur - prev, next - cur) == 0.0) {
        v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  if (v.size() < 3)
    throw InvalidGeometryError("ring needs at least 3 distinct vertices");
  if (std::abs(ring_signed_area(v)) < kDegenerateArea)
    throw InvalidGeometryError("ring is degenerate (zero area)");
  verts_ = std::move(v);
}

double Ring::signed_area() const { return ring_signed_area(verts_); }

double Ring::perimeter() const {
  double p = 0.0;
  for (std::size_t i = 0; i < verts_.size(); ++i)
    p += norm(verts_[(i + 1) % verts_.size()] - verts_[i]);
  return p;
}

Box2 Ring::bbox() const {
  Box2 b{verts_[0], verts_[0]};
  for (Vec2 p : verts_) b.expand(p);
  return b;
}

Ring Ring::reversed() const {
  std::vector<Vec2> v(verts_.rbegin(), verts_.rend());
  Ring r;
  r.verts_ = std::move(v);
  return r;
}

Footprint::Footprint(std::string id_, Ring outer_, std::vector<Ring> holes_,
                     Source source_)
    : id(std::move(id_)),
      outer(std::move(outer_)),
      holes(std::move(holes_)),
      source(source_) {
  if (!outer.is_ccw()) outer = outer.reversed();
  double net = outer.signed_area();
  for (auto& h : holes) {
    if (h.is_ccw()) h = h.reversed();
    net += h.signed_area();  // holes are CW, negative area
    for (Vec2 p : h.vertices()) {
      if (!inside_ring(p, outer) && !on_ring_boundary(p, outer))
        throw InvalidGeometryError("hole vertex outside outer ring");
    }
  }
  if (net <= kDegenerateArea)
    throw InvalidGeometryError("footprint has non-positive area");
}

double polygon_area(const Footprint& fp) {
  double a = fp.outer.signed_area();
  for (const auto& h : fp.holes) a += h.signed_area();
  return a;
}

double polygon_perimeter(const Footprint& fp) {
  double p = fp.outer.perimeter();
  for (const auto& h : fp.holes) p += h.perimeter();
  return p;
}

bool point_in_polygon(Vec2 p, const Footprint& fp) {
  if (on_ring_boundary(p, fp.outer)) return true;
  for (const auto& h : fp.holes)
    if (on_ring_boundary(p, h)) return true;
  if (!inside_ring(p, fp.outer)) return false;
  for (const auto& h : fp.holes)
    if (inside_ring(p, h)) return false;
  return true;
}

namespace {

// Translate every edge by `d` along its right-hand normal and re-intersect
// consecutive edge lines (miter join). For a CCW outer ring the right normal
// points away from the interior; for CW holes it points into the hole, so the
// same rule offsets both correctly.
std::vector<Vec2> offset_ring_vertices(const Ring& r, double d) {
  const auto& v = r.vertices();
  std::size_t n = v.size();
  std::vector<Vec2> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 p0 = v[(i + n - 1) % n];
    Vec2 p1 = v[i];
    Vec2 p2 = v[(i + 1) % n];
    Vec2 e0 = p1 - p0;
    Vec2 e1 = p2 - p1;
    double l0 = norm(e0), l1 = norm(e1);
    Vec2 n0{e0.y / l0, -e0.x / l0};  // right normal of incoming edge
    Vec2 n1{e1.y / l1, -e1.x / l1};
    Vec2 a0 = p0 + n0 * d;  // offset line of incoming edge: a0 + t*e0
    Vec2 a1 = p1 + n1 * d;
    double denom = cross(e0, e1);
    if (denom == 0.0) {
      out[i] = p1 + n0 * d;  // parallel (collinear was stripped): translate
      continue;
    }
    double t = cross(a1 - a0, e1) / denom;
    out[i] = a0 + e0 * t;
  }
  return out;
}

// An offset larger than the local feature size reverses edges (the ring
// turns itself inside out without necessarily self-intersecting).
bool offset_reverses_edges(const std::vector<Vec2>& before,
                           const std::vector<Vec2>& after) {
  std::size_t n = before.size();
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 e0 = before[(i + 1) % n] - before[i];
    Vec2 e1 = after[(i + 1) % n] - after[i];
    if (dot(e0, e1) <= 0.0) return true;
  }
  return false;
}

}  // namespace

Footprint buffer_polygon(const Footprint& fp, double distance) {
  if (distance < 0.0)
    throw InvalidGeometryError("buffer distance must be non-negative");
  if (distance == 0.0) return fp;

  std::vector<Vec2> raw = offset_ring_vertices(fp.outer, distance);
  if (offset_reverses_edges(fp.outer.vertices(), raw))
    throw BufferError("offset exceeds the outer ring's feature size");
  Ring outer;
  try {
    outer = Ring(raw);
  } catch (const InvalidGeometryError&) {
    throw BufferError("outer ring collapsed while offsetting");
  }
  if (!outer.is_ccw() || ring_self_intersects(outer))
    throw BufferError("offset outer ring self-intersects");
  if (outer.signed_area() <= fp.outer.signed_area())
    throw BufferError("outward offset did not grow the outer ring");

  std::vector<Ring> holes;
  for (const auto& h : fp.holes) {
    // Holes shrink; a hole narrower than 2*distance collapses and is filled.
    std::vector<Vec2> hraw = offset_ring_vertices(h, distance);
    if (offset_reverses_edges(h.vertices(), hraw)) continue;
    Ring hh;
    try {
      hh = Ring(hraw);
    } catch (const InvalidGeometryError&) {
      continue;
    }
    if (hh.is_ccw() || ring_self_intersects(hh)) continue;  // collapsed
    holes.push_back(std::move(hh));
  }
  for (const auto& h : holes)
    if (rings_intersect(outer, h, false))
      throw BufferError("offset hole crosses outer ring");
  return Footprint(fp.id, std::move(outer), std::move(holes), fp.source);
}

Footprint inset_polygon(const Footprint& fp, double distance) {
  if (distance < 0.0)
    throw InvalidGeometryError("inset distance must be non-negative");
  if (distance == 0.0) return fp;
  std::vector<Vec2> raw = offset_ring_vertices(fp.outer, -distance);
  if (offset_reverses_edges(fp.outer.vertices(), raw))
    throw BufferError("inset exceeds the polygon's feature size");
  Ring outer;
  try {
    outer = Ring(raw);
  } catch (const InvalidGeometryError&) {
    throw BufferError("polygon collapsed while insetting");
  }
  if (!outer.is_ccw() || ring_self_intersects(outer))
    throw BufferError("inset outer ring self-intersects");
  std::vector<Ring> holes;
  for (const auto& h : fp.holes) {
    std::vector<Vec2> hraw = offset_ring_vertices(h, -distance);
    if (offset_reverses_edges(h.vertices(), hraw))
      throw BufferError("inset reverses a hole edge");
    Ring hh(hraw);
    if (hh.is_ccw() || ring_self_intersects(hh))
      throw BufferError("inset hole self-intersects");
    holes.push_back(std::move(hh));
  }
  try {
    return Footprint(fp.id, std::move(outer), std::move(holes), fp.source);
  } catch (const InvalidGeometryError&) {
    throw BufferError("inset produced an invalid footprint");
  }
}

bool ring_is_simple(const Ring& r) { return !ring_self_intersects(r); }

std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  std::size_t n = pts.size();
  if (n < 3) return pts;
  std::vector<Vec2> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 &&
           cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0)
      --k;
    hull[k++] = pts[i];
  }
  std::size_t lower = k + 1;
  for (std::size_t i = n - 1; i-- > 0;) {
    while (k >= lower &&
           cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0)
      --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

OrientedBox min_area_rect(const Footprint& fp) {
  std::vector<Vec2> hull = convex_hull(fp.outer.vertices());
  if (hull.size() < 3)
    throw InvalidGeometryError("degenerate hull for min_area_rect");

  double best_area = std::numeric_limits<double>::infinity();
  OrientedBox best;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    Vec2 e = hull[(i + 1) % hull.size()] - hull[i];
    double len = norm(e);
    if (len == 0.0) continue;
    Vec2 dir{e.x / len, e.y / len};
    Vec2 perp{-dir.y, dir.x};
    double umin = std::numeric_limits<double>::infinity(), umax = -umin;
    double vmin = umin, vmax = -umin;
    for (Vec2 p : hull) {
      double u = dot(p, dir), v = dot(p, perp);
      umin = std::min(umin, u);
      umax = std::max(umax, u);
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
    }
    double area = (umax - umin) * (vmax - vmin);
    if (area < best_area) {
      best_area = area;
      double uc = 0.5 * (umin + umax), vc = 0.5 * (vmin + vmax);
      best.center = {dir.x * uc + perp.x * vc, dir.y * uc + perp.y * vc};
      best.width = umax - umin;
      best.height = vmax - vmin;
      best.angle = std::atan2(dir.y, dir.x);
    }
  }
  // normalize angle to [0, pi/2), swapping extents when the axis flips
  constexpr double kHalfPi = 1.5707963267948966;
  double a = best.angle;
  while (a < 0.0) a += kHalfPi * 2;  // into [0, pi)
  if (a >= kHalfPi * 2) a = std::fmod(a, kHalfPi * 2);
  if (a >= kHalfPi) {
    a -= kHalfPi;
    std::swap(best.width, best.height);
  }
  if (a >= kHalfPi) a -= kHalfPi;  // guard fp edge at exactly pi
  best.angle = a;
  return best;
}

Box2 bounding_box(const Footprint& fp) { return fp.outer.bbox(); }

Footprint translated(const Footprint& fp, Vec2 delta) {
  auto shift = [&](const Ring& r) {
    std::vector<Vec2> v = r.vertices();
    for (Vec2& p : v) p = p + delta;
    return Ring(v);
  };
  std::vector<Ring> holes;
  holes.reserve(fp.holes.size());
  for (const auto& h : fp.holes) holes.push_back(shift(h));
  return Footprint(fp.id, shift(fp.outer), std::move(holes), fp.source);
}

Vec2 centroid(const Footprint& fp) {
  // area-weighted centroid of outer minus holes
  double a_sum = 0.0;
  Vec2 c{0, 0};
  auto accumulate = [&](const Ring& r) {
    const auto& v = r.vertices();
    for (std::size_t i = 0; i < v.size(); ++i) {
      Vec2 p = v[i], q = v[(i + 1) % v.size()];
      double w = cross(p, q);
      a_sum += w;
      c.x += (p.x + q.x) * w;
      c.y += (p.y + q.y) * w;
    }
  };
  accumulate(fp.outer);
  for (const auto& h : fp.holes) accumulate(h);
  return {c.x / (3.0 * a_sum), c.y / (3.0 * a_sum)};
}

double polygon_iou(const Footprint& a, const Footprint& b, double cell) {
  if (cell <= 0.0) throw InvalidGeometryError("iou cell size must be > 0");
  Box2 ba = bounding_box(a), bb = bounding_box(b);
  if (!ba.intersects(bb)) return 0.0;
  Box2 joint = ba;
  joint.expand(bb.min);
  joint.expand(bb.max);

  double c = cell;
  for (int refine = 0; refine < 20; ++refine) {
    int ncols = std::max(1, static_cast<int>(std::ceil(joint.width() / c)));
    int nrows = std::max(1, static_cast<int>(std::ceil(joint.height() / c)));
    long long inter = 0, uni = 0;
    for (int row = 0; row < nrows; ++row) {
      double y = joint.min.y + (row + 0.5) * c;
      for (int col = 0; col < ncols; ++col) {
        Vec2 p{joint.min.x + (col + 0.5) * c, y};
        bool ina = point_in_polygon(p, a);
        bool inb = point_in_polygon(p, b);
        inter += (ina && inb);
        uni += (ina || inb);
      }
    }
    if (uni > 0) return static_cast<double>(inter) / static_cast<double>(uni);
    c *= 0.25;  // both masks empty: the cell is coarser than the polygons
  }
  return 0.0;
}

}  // namespace lodbox::geometry
