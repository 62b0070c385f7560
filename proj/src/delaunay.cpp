#include "delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>

#include "lodbox/errors.hpp"

namespace lodbox::raster::detail {

using geometry::cross;
using geometry::Vec2;

namespace {

std::uint64_t spread_bits(std::uint32_t v) {
  std::uint64_t x = v & 0xffff;
  x = (x | (x << 16)) & 0x0000ffff0000ffffULL;
  x = (x | (x << 8)) & 0x00ff00ff00ff00ffULL;
  x = (x | (x << 4)) & 0x0f0f0f0f0f0f0f0fULL;
  x = (x | (x << 2)) & 0x3333333333333333ULL;
  x = (x | (x << 1)) & 0x5555555555555555ULL;
  return x;
}

std::uint64_t morton(std::uint32_t x, std::uint32_t y) {
  return spread_bits(x) | (spread_bits(y) << 1);
}

double orient(Vec2 a, Vec2 b, Vec2 p) { return cross(b - a, p - a); }

}  // namespace

Delaunay::Delaunay(const std::vector<Vec2>& pts,
                   const std::vector<double>& zs) {
  // deduplicate coincident (x, y); the first z wins
  std::unordered_map<std::uint64_t, int> seen;
  seen.reserve(pts.size() * 2);
  std::vector<Vec2> uniq;
  std::vector<double> uz;
  uniq.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    auto qx = static_cast<std::int64_t>(std::llround(pts[i].x * 1e9));
    auto qy = static_cast<std::int64_t>(std::llround(pts[i].y * 1e9));
    std::uint64_t key = static_cast<std::uint64_t>(qx) * 0x9e3779b97f4a7c15ULL ^
                        static_cast<std::uint64_t>(qy);
    if (seen.emplace(key, static_cast<int>(i)).second) {
      uniq.push_back(pts[i]);
      uz.push_back(zs[i]);
    }
  }
  if (uniq.size() < 3)
    throw GridError("triangulation needs at least 3 distinct points");

  geometry::Box2 box{uniq[0], uniq[0]};
  for (Vec2 p : uniq) box.expand(p);
  double extent = std::max({box.width(), box.height(), 1.0});

  bool non_collinear = false;
  for (std::size_t i = 2; i < uniq.size() && !non_collinear; ++i)
    if (std::abs(orient(uniq[0], uniq[1], uniq[i])) >
        1e-12 * extent * extent)
      non_collinear = true;
  // uniq[0] == uniq[1] cannot happen after dedup, but the first pair may be
  // nearly coincident; fall back to a full scan before giving up.
  if (!non_collinear) {
    for (std::size_t i = 1; i < uniq.size() && !non_collinear; ++i)
      for (std::size_t j = i + 1; j < uniq.size() && !non_collinear; ++j)
        if (std::abs(orient(uniq[0], uniq[i], uniq[j])) >
            1e-12 * extent * extent)
          non_collinear = true;
  }
  if (!non_collinear)
    throw GridError("triangulation input points are collinear");

  double cx = 0.5 * (box.min.x + box.max.x);
  double cy = 0.5 * (box.min.y + box.max.y);
  double m = 32.0 * extent;
  verts_ = {{cx - 3 * m, cy - m}, {cx + 3 * m, cy - m}, {cx, cy + 3 * m}};
  z_ = {0.0, 0.0, 0.0};
  verts_.insert(verts_.end(), uniq.begin(), uniq.end());
  z_.insert(z_.end(), uz.begin(), uz.end());

  tris_.push_back({{0, 1, 2}, {-1, -1, -1}});
  alive_.push_back(1);
  first_alive_ = 0;

  // insert in Morton order for walk locality
  std::vector<int> order(uniq.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    order[i] = static_cast<int>(i) + 3;
  auto key_of = [&](int vi) {
    auto qx = static_cast<std::uint32_t>(
        (verts_[vi].x - box.min.x) / extent * 65535.0);
    auto qy = static_cast<std::uint32_t>(
        (verts_[vi].y - box.min.y) / extent * 65535.0);
    return morton(qx, qy);
  };
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return key_of(a) < key_of(b); });

  int hint = 0;
  for (int vi : order) insert(vi, hint);
}

bool Delaunay::in_circumcircle(int tri, Vec2 p) const {
  const Tri& t = tris_[tri];
  Vec2 a = verts_[t.v[0]] - p;
  Vec2 b = verts_[t.v[1]] - p;
  Vec2 c = verts_[t.v[2]] - p;
  double aa = a.x * a.x + a.y * a.y;
  double bb = b.x * b.x + b.y * b.y;
  double cc = c.x * c.x + c.y * c.y;
  double det = a.x * (b.y * cc - c.y * bb) - a.y * (b.x * cc - c.x * bb) +
               aa * (b.x * c.y - c.x * b.y);
  double mx = std::max({std::abs(a.x), std::abs(a.y), std::abs(b.x),
                        std::abs(b.y), std::abs(c.x), std::abs(c.y)});
  return det > 1e-11 * mx * mx * mx * mx;
}

int Delaunay::locate(Vec2 p, int hint) const {
  int t = (hint >= 0 && hint < static_cast<int>(tris_.size()) && alive_[hint])
              ? hint
              : first_alive_;
  std::size_t cap = tris_.size() + 16;
  for (std::size_t step = 0; step < cap; ++step) {
    const Tri& tr = tris_[t];
    bool moved = false;
    for (int i = 0; i < 3; ++i) {
      Vec2 a = verts_[tr.v[(i + 1) % 3]];
      Vec2 b = verts_[tr.v[(i + 2) % 3]];
      if (orient(a, b, p) < 0.0) {
        int nb = tr.n[i];
        if (nb >= 0) {
          t = nb;
          moved = true;
          break;
        }
      }
    }
    if (!moved) return t;
  }
  // walk cycled on a degenerate configuration; scan instead
  for (std::size_t i = 0; i < tris_.size(); ++i) {
    if (!alive_[i]) continue;
    const Tri& tr = tris_[i];
    bool inside = true;
    for (int e = 0; e < 3 && inside; ++e)
      if (orient(verts_[tr.v[(e + 1) % 3]], verts_[tr.v[(e + 2) % 3]], p) <
          -1e-9)
        inside = false;
    if (inside) return static_cast<int>(i);
  }
  throw GridError("triangulation point location failed");
}

void Delaunay::insert(int vi, int& hint) {
  Vec2 p = verts_[vi];
  int t0 = locate(p, hint);

  std::vector<int> bad{t0};
  std::vector<char> in_bad(tris_.size(), 0);
  in_bad[t0] = 1;
  for (std::size_t k = 0; k < bad.size(); ++k) {
    const Tri tr = tris_[bad[k]];
    for (int i = 0; i < 3; ++i) {
      int nb = tr.n[i];
      if (nb < 0 || in_bad[nb] || !alive_[nb]) continue;
      if (in_circumcircle(nb, p)) {
        in_bad[nb] = 1;
        bad.push_back(nb);
      }
    }
  }

  struct Edge {
    int a, b, outside;
  };
  std::vector<Edge> boundary;
  for (int pass = 0;; ++pass) {
    boundary.clear();
    bool grew = false;
    for (std::size_t k = 0; k < bad.size(); ++k) {
      const Tri tr = tris_[bad[k]];
      for (int i = 0; i < 3; ++i) {
        int nb = tr.n[i];
        if (nb >= 0 && in_bad[nb]) continue;
        int a = tr.v[(i + 1) % 3];
        int b = tr.v[(i + 2) % 3];
        // p must see every cavity edge; if it is collinear with one, the
        // neighbor also has p in its circumcircle, so pull it in
        if (nb >= 0 && orient(verts_[a], verts_[b], p) <= 0.0 && pass < 8) {
          in_bad[nb] = 1;
          bad.push_back(nb);
          grew = true;
          break;
        }
        boundary.push_back({a, b, nb});
      }
      if (grew) break;
    }
    if (!grew) break;
  }

  for (int b : bad) {
    alive_[b] = 0;
    free_.push_back(b);
  }

  auto alloc = [&]() {
    if (!free_.empty()) {
      int id = free_.back();
      free_.pop_back();
      alive_[id] = 1;
      return id;
    }
    tris_.push_back({});
    alive_.push_back(1);
    return static_cast<int>(tris_.size()) - 1;
  };

  std::unordered_map<std::uint64_t, std::pair<int, int>> spokes;
  spokes.reserve(boundary.size() * 2);
  int last = -1;
  for (const Edge& e : boundary) {
    int id = alloc();
    tris_[id] = {{e.a, e.b, vi}, {-1, -1, e.outside}};
    if (e.outside >= 0) {
      Tri& out = tris_[e.outside];
      for (int i = 0; i < 3; ++i)
        if (out.v[(i + 1) % 3] == e.b && out.v[(i + 2) % 3] == e.a)
          out.n[i] = id;
    }
    // link around the fan: edge (b, vi) is opposite slot 0, (vi, a) slot 1
    auto link = [&](int u, int v, int slot) {
      std::uint64_t fwd =
          (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) |
          static_cast<std::uint32_t>(v);
      std::uint64_t rev =
          (static_cast<std::uint64_t>(static_cast<std::uint32_t>(v)) << 32) |
          static_cast<std::uint32_t>(u);
      auto it = spokes.find(rev);
      if (it != spokes.end()) {
        tris_[id].n[slot] = it->second.first;
        tris_[it->second.first].n[it->second.second] = id;
        spokes.erase(it);
      } else {
        spokes.emplace(fwd, std::make_pair(id, slot));
      }
    };
    link(e.b, vi, 0);
    link(vi, e.a, 1);
    last = id;
  }
  hint = last;
  first_alive_ = last;
}

bool Delaunay::touches_super(int tri) const {
  const Tri& t = tris_[tri];
  return t.v[0] < 3 || t.v[1] < 3 || t.v[2] < 3;
}

double Delaunay::interpolate(Vec2 p, int tri) const {
  const Tri& t = tris_[tri];
  Vec2 a = verts_[t.v[0]], b = verts_[t.v[1]], c = verts_[t.v[2]];
  double denom = cross(b - a, c - a);
  double la = cross(b - p, c - p) / denom;
  double lb = cross(c - p, a - p) / denom;
  double lc = 1.0 - la - lb;
  return la * z_[t.v[0]] + lb * z_[t.v[1]] + lc * z_[t.v[2]];
}

bool Delaunay::sample(Vec2 p, int& hint, double& z_out) const {
  int t = locate(p, hint);
  hint = t;
  if (touches_super(t)) return false;
  z_out = interpolate(p, t);
  return true;
}

std::size_t Delaunay::triangle_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < tris_.size(); ++i)
    if (alive_[i] && !touches_super(static_cast<int>(i))) ++n;
  return n;
}

}  // namespace lodbox::raster::detail
