#include "lodbox/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "lodbox/errors.hpp"

namespace lodbox::reconstruct {

using geometry::Footprint;
using geometry::Ring;
using geometry::Vec2;
using nlohmann::json;

namespace {

Vec3 cross3(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z,
          a.x * b.y - a.y * b.x};
}

double dot3(const Vec3& a, const Vec3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

Vec3 newell_normal(const std::vector<Vec3>& ring) {
  Vec3 n{0, 0, 0};
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const Vec3& p = ring[i];
    const Vec3& q = ring[(i + 1) % ring.size()];
    n.x += (p.y - q.y) * (p.z + q.z);
    n.y += (p.z - q.z) * (p.x + q.x);
    n.z += (p.x - q.x) * (p.y + q.y);
  }
  return n;
}

FaceKind classify_by_slope(const std::vector<Vec3>& outer) {
  Vec3 n = newell_normal(outer);
  double len = std::sqrt(dot3(n, n));
  if (len == 0.0) throw InvalidGeometryError("face has zero normal");
  double nz = n.z / len;
  if (std::abs(nz) < 1e-9) return FaceKind::wall;  // slope 90
  return nz > 0.0 ? FaceKind::roof : FaceKind::ground;
}

std::vector<Vec3> ring_at(const Ring& r, double z) {
  std::vector<Vec3> out;
  out.reserve(r.size());
  for (Vec2 p : r.vertices()) out.push_back({p.x, p.y, z});
  return out;
}

double face_net_area(const Face& f) {
  // planar polygon area via the face normal; holes carry opposite
  // orientation and subtract
  double area2 = 0.0;
  Vec3 n = newell_normal(f.rings[0]);
  double len = std::sqrt(dot3(n, n));
  Vec3 unit{n.x / len, n.y / len, n.z / len};
  for (const auto& ring : f.rings) {
    Vec3 acc{0, 0, 0};
    for (std::size_t i = 0; i < ring.size(); ++i) {
      Vec3 c = cross3(ring[i], ring[(i + 1) % ring.size()]);
      acc.x += c.x;
      acc.y += c.y;
      acc.z += c.z;
    }
    area2 += dot3(unit, acc);
  }
  return 0.5 * area2;
}

}  // namespace

Lod1Solid extrude(const Footprint& fp, double base, double top,
                  std::optional<heights::Measure> measure) {
  if (!(top > base))
    throw InvalidGeometryError("extrude needs top > base (got top=" +
                               std::to_string(top) + ", base=" +
                               std::to_string(base) + ")");
  return {fp.id, fp, base, top, measure};
}

std::vector<Face> faces(const Lod1Solid& s) {
  std::vector<Face> out;

  Face ground;
  ground.rings.push_back(ring_at(s.footprint.outer.reversed(), s.base));
  for (const auto& h : s.footprint.holes)
    ground.rings.push_back(ring_at(h.reversed(), s.base));
  ground.kind = classify_by_slope(ground.rings[0]);
  ground.area = face_net_area(ground);
  out.push_back(std::move(ground));

  Face roof;
  roof.rings.push_back(ring_at(s.footprint.outer, s.top));
  for (const auto& h : s.footprint.holes) roof.rings.push_back(ring_at(h, s.top));
  roof.kind = classify_by_slope(roof.rings[0]);
  roof.area = face_net_area(roof);
  out.push_back(std::move(roof));

  auto wall_ring = [&](const Ring& r) {
    const auto& v = r.vertices();
    for (std::size_t i = 0; i < v.size(); ++i) {
      Vec2 a = v[i];
      Vec2 b = v[(i + 1) % v.size()];
      Face w;
      w.rings.push_back({{a.x, a.y, s.base},
                         {b.x, b.y, s.base},
                         {b.x, b.y, s.top},
                         {a.x, a.y, s.top}});
      w.kind = classify_by_slope(w.rings[0]);
      w.area = face_net_area(w);
      out.push_back(std::move(w));
    }
  };
  wall_ring(s.footprint.outer);
  for (const auto& h : s.footprint.holes) wall_ring(h);
  return out;
}

namespace {

struct Basis {
  Vec3 u, v;
};

Basis plane_basis(const Vec3& unit_normal) {
  Vec3 pick = std::abs(unit_normal.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
  Vec3 u = cross3(pick, unit_normal);
  double lu = std::sqrt(dot3(u, u));
  u = {u.x / lu, u.y / lu, u.z / lu};
  Vec3 v = cross3(unit_normal, u);
  return {u, v};
}

struct FlatVertex {
  Vec2 p;
  Vec3 world;
};

bool strictly_inside_tri(Vec2 p, Vec2 a, Vec2 b, Vec2 c) {
  double d1 = geometry::cross(b - a, p - a);
  double d2 = geometry::cross(c - b, p - b);
  double d3 = geometry::cross(a - c, p - c);
  return d1 > 0 && d2 > 0 && d3 > 0;
}

bool segments_properly_cross(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  double d1 = geometry::cross(b - a, c - a);
  double d2 = geometry::cross(b - a, d - a);
  double d3 = geometry::cross(d - c, a - c);
  double d4 = geometry::cross(d - c, b - c);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

// Bridge holes into the outer contour via mutually visible vertex pairs,
// then ear-clip.
std::vector<std::array<Vec3, 3>> triangulate_flat(
    std::vector<FlatVertex> outer, std::vector<std::vector<FlatVertex>> holes) {
  // holes with the largest max-x vertex get bridged first
  std::sort(holes.begin(), holes.end(), [](const auto& a, const auto& b) {
    auto mx = [](const std::vector<FlatVertex>& h) {
      double m = -1e300;
      for (const auto& fv : h) m = std::max(m, fv.p.x);
      return m;
    };
    return mx(a) > mx(b);
  });

  for (auto& hole : holes) {
    std::size_t hi = 0;
    for (std::size_t i = 1; i < hole.size(); ++i)
      if (hole[i].p.x > hole[hi].p.x) hi = i;
    Vec2 m = hole[hi].p;

    // nearest outer vertex visible from m
    std::size_t best = outer.size();
    double best_d2 = 1e300;
    for (std::size_t i = 0; i < outer.size(); ++i) {
      Vec2 c = outer[i].p;
      Vec2 d = c - m;
      double d2 = geometry::dot(d, d);
      if (d2 >= best_d2) continue;
      bool blocked = false;
      for (std::size_t e = 0; e < outer.size() && !blocked; ++e) {
        if (e == i || (e + 1) % outer.size() == i) continue;
        if (segments_properly_cross(m, c, outer[e].p,
                                    outer[(e + 1) % outer.size()].p))
          blocked = true;
      }
      for (const auto& other : holes) {
        if (blocked) break;
        for (std::size_t e = 0; e < other.size() && !blocked; ++e) {
          Vec2 ea = other[e].p, eb = other[(e + 1) % other.size()].p;
          if ((ea == m) || (eb == m)) continue;
          if (segments_properly_cross(m, c, ea, eb)) blocked = true;
        }
      }
      if (!blocked) {
        best = i;
        best_d2 = d2;
      }
    }
    if (best == outer.size())
      throw InvalidGeometryError("hole bridging failed");

    // splice: ... best, (hole from hi around), hi, best ...
    std::vector<FlatVertex> merged;
    merged.reserve(outer.size() + hole.size() + 2);
    for (std::size_t i = 0; i <= best; ++i) merged.push_back(outer[i]);
    for (std::size_t k = 0; k <= hole.size(); ++k)
      merged.push_back(hole[(hi + k) % hole.size()]);
    for (std::size_t i = best; i < outer.size(); ++i)
      merged.push_back(outer[i]);
    outer = std::move(merged);
  }

  std::vector<std::array<Vec3, 3>> tris;
  std::vector<FlatVertex>& poly = outer;
  std::size_t guard = poly.size() * poly.size() + 16;
  while (poly.size() > 3 && guard-- > 0) {
    bool clipped = false;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      std::size_t ip = (i + poly.size() - 1) % poly.size();
      std::size_t in = (i + 1) % poly.size();
      Vec2 a = poly[ip].p, b = poly[i].p, c = poly[in].p;
      double turn = geometry::cross(b - a, c - b);
      if (std::abs(turn) < 1e-12) {  // collinear spike: drop, no triangle
        poly.erase(poly.begin() + static_cast<std::ptrdiff_t>(i));
        clipped = true;
        break;
      }
      if (turn < 0) continue;  // reflex
      bool blocked = false;
      for (std::size_t k = 0; k < poly.size() && !blocked; ++k) {
        if (k == ip || k == i || k == in) continue;
        if (strictly_inside_tri(poly[k].p, a, b, c)) blocked = true;
      }
      if (blocked) continue;
      tris.push_back({poly[ip].world, poly[i].world, poly[in].world});
      poly.erase(poly.begin() + static_cast<std::ptrdiff_t>(i));
      clipped = true;
      break;
    }
    if (!clipped) {
      // degenerate leftovers: clip the least-reflex vertex to terminate
      std::size_t besti = 0;
      double best_turn = -1e300;
      for (std::size_t i = 0; i < poly.size(); ++i) {
        std::size_t ip = (i + poly.size() - 1) % poly.size();
        std::size_t in = (i + 1) % poly.size();
        double turn = geometry::cross(poly[i].p - poly[ip].p,
                                      poly[in].p - poly[i].p);
        if (turn > best_turn) {
          best_turn = turn;
          besti = i;
        }
      }
      std::size_t ip = (besti + poly.size() - 1) % poly.size();
      std::size_t in = (besti + 1) % poly.size();
      tris.push_back({poly[ip].world, poly[besti].world, poly[in].world});
      poly.erase(poly.begin() + static_cast<std::ptrdiff_t>(besti));
    }
  }
  if (poly.size() == 3)
    tris.push_back({poly[0].world, poly[1].world, poly[2].world});
  return tris;
}

}  // namespace

std::vector<std::array<Vec3, 3>> triangulate_face(const Face& face) {
  Vec3 n = newell_normal(face.rings[0]);
  double len = std::sqrt(dot3(n, n));
  if (len == 0.0) throw InvalidGeometryError("cannot triangulate a zero-area face");
  Vec3 unit{n.x / len, n.y / len, n.z / len};
  Basis basis = plane_basis(unit);

  auto flatten = [&](const std::vector<Vec3>& ring) {
    std::vector<FlatVertex> flat;
    flat.reserve(ring.size());
    for (const Vec3& w : ring)
      flat.push_back({{dot3(w, basis.u), dot3(w, basis.v)}, w});
    return flat;
  };
  std::vector<FlatVertex> outer = flatten(face.rings[0]);
  std::vector<std::vector<FlatVertex>> holes;
  for (std::size_t i = 1; i < face.rings.size(); ++i)
    holes.push_back(flatten(face.rings[i]));
  return triangulate_flat(std::move(outer), std::move(holes));
}

double solid_volume(const Lod1Solid& s) {
  double six_v = 0.0;
  for (const Face& f : faces(s)) {
    for (const auto& t : triangulate_face(f))
      six_v += dot3(t[0], cross3(t[1], t[2]));
  }
  return six_v / 6.0;
}

namespace {

constexpr double kQuantum = 0.001;  // 1 mm

struct VertexPool {
  std::map<std::array<std::int64_t, 3>, int> lookup;
  std::vector<std::array<std::int64_t, 3>>* all;
  int add(const Vec3& w, const Vec3& translate) {
    std::array<std::int64_t, 3> q{
        static_cast<std::int64_t>(std::llround((w.x - translate.x) / kQuantum)),
        static_cast<std::int64_t>(std::llround((w.y - translate.y) / kQuantum)),
        static_cast<std::int64_t>(std::llround((w.z - translate.z) / kQuantum))};
    auto it = lookup.find(q);
    if (it != lookup.end()) return it->second;
    int idx = static_cast<int>(all->size());
    all->push_back(q);
    lookup.emplace(q, idx);
    return idx;
  }
};

}  // namespace

std::string to_cityjson(const std::vector<Lod1Solid>& solids) {
  if (solids.empty())
    throw Error("cityjson output needs at least one solid");

  Vec3 translate{1e300, 1e300, 1e300};
  for (const auto& s : solids) {
    geometry::Box2 b = geometry::bounding_box(s.footprint);
    translate.x = std::min(translate.x, b.min.x);
    translate.y = std::min(translate.y, b.min.y);
    translate.z = std::min(translate.z, s.base);
  }

  std::vector<std::array<std::int64_t, 3>> vertices;
  json objects = json::object();
  for (const auto& s : solids) {
    VertexPool pool;  // vertices dedup within a building only
    pool.all = &vertices;
    json shell = json::array();
    for (const Face& f : faces(s)) {
      json surface = json::array();
      for (const auto& ring : f.rings) {
        json jring = json::array();
        for (const Vec3& w : ring) jring.push_back(pool.add(w, translate));
        surface.push_back(jring);
      }
      shell.push_back(surface);
    }
    json geom = {{"type", "Solid"}, {"lod", "1"},
                 {"boundaries", json::array({shell})}};
    json attrs = {{"id", s.id}, {"base", s.base}, {"top", s.top}};
    if (s.measure) attrs["measure"] = heights::measure_name(*s.measure);
    objects[s.id] = {{"type", "Building"},
                     {"attributes", attrs},
                     {"geometry", json::array({geom})}};
  }

  json verts = json::array();
  for (const auto& q : vertices) verts.push_back({q[0], q[1], q[2]});
  json doc = {{"type", "CityJSON"},
              {"version", "2.0"},
              {"transform",
               {{"scale", {kQuantum, kQuantum, kQuantum}},
                {"translate", {translate.x, translate.y, translate.z}}}},
              {"CityObjects", objects},
              {"vertices", verts}};
  return doc.dump(2) + "\n";
}

void write_cityjson(const std::vector<Lod1Solid>& solids,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << to_cityjson(solids);
}

std::vector<Lod1Solid> from_cityjson(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("cityjson: ") + e.what());
  }
  if (doc.value("type", "") != "CityJSON")
    throw ParseError("cityjson: not a CityJSON document");
  const auto& tr = doc.at("transform");
  double sx = tr.at("scale")[0].get<double>();
  double sy = tr.at("scale")[1].get<double>();
  double sz = tr.at("scale")[2].get<double>();
  double tx = tr.at("translate")[0].get<double>();
  double ty = tr.at("translate")[1].get<double>();
  double tz = tr.at("translate")[2].get<double>();
  const auto& verts = doc.at("vertices");

  auto vertex = [&](int idx) -> Vec3 {
    const auto& v = verts.at(idx);
    return {v[0].get<double>() * sx + tx, v[1].get<double>() * sy + ty,
            v[2].get<double>() * sz + tz};
  };

  std::vector<Lod1Solid> out;
  for (const auto& [id, obj] : doc.at("CityObjects").items()) {
    if (obj.value("type", "") != "Building") continue;
    const auto& geoms = obj.at("geometry");
    if (geoms.empty()) throw ParseError("cityjson: building without geometry");
    const auto& geom = geoms[0];
    if (geom.value("type", "") != "Solid")
      throw ParseError("cityjson: expected Solid geometry");
    const auto& shell = geom.at("boundaries").at(0);

    double zmin = 1e300, zmax = -1e300;
    for (const auto& surface : shell)
      for (const auto& ring : surface)
        for (const auto& idx : ring) {
          double z = vertex(idx.get<int>()).z;
          zmin = std::min(zmin, z);
          zmax = std::max(zmax, z);
        }

    // the roof surface (every vertex at the top) carries the footprint
    const json* roof = nullptr;
    for (const auto& surface : shell) {
      bool at_top = true;
      for (const auto& ring : surface)
        for (const auto& idx : ring)
          if (std::abs(vertex(idx.get<int>()).z - zmax) > 1e-6) at_top = false;
      if (at_top) {
        roof = &surface;
        break;
      }
    }
    if (!roof) throw ParseError("cityjson: no horizontal roof surface found");

    auto ring_of = [&](const json& jring) {
      std::vector<Vec2> pts;
      for (const auto& idx : jring) {
        Vec3 w = vertex(idx.get<int>());
        pts.push_back({w.x, w.y});
      }
      return Ring(pts);
    };
    Ring outer = ring_of((*roof)[0]);
    std::vector<Ring> holes;
    for (std::size_t i = 1; i < roof->size(); ++i)
      holes.push_back(ring_of((*roof)[i]));

    std::optional<heights::Measure> measure;
    json attrs = obj.value("attributes", json::object());
    if (attrs.contains("measure"))
      measure = heights::measure_from_name(attrs["measure"].get<std::string>());
    out.push_back({id, Footprint(id, outer, holes), zmin, zmax, measure});
  }
  return out;
}

std::vector<Lod1Solid> read_cityjson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_cityjson(ss.str());
}

void write_obj(const std::vector<Lod1Solid>& solids, const std::string& path) {
  if (solids.empty()) throw Error("obj output needs at least one solid");
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);

  long vertex_base = 0;
  char line[160];
  for (const auto& s : solids) {
    out << "g " << s.id << "\n";
    std::map<std::array<long long, 3>, long> lookup;
    std::vector<Vec3> verts;
    std::vector<std::array<long, 3>> tris;
    auto add = [&](const Vec3& w) {
      std::array<long long, 3> q{std::llround(w.x * 1e6),
                                 std::llround(w.y * 1e6),
                                 std::llround(w.z * 1e6)};
      auto it = lookup.find(q);
      if (it != lookup.end()) return it->second;
      long idx = static_cast<long>(verts.size());
      verts.push_back(w);
      lookup.emplace(q, idx);
      return idx;
    };
    for (const Face& f : faces(s))
      for (const auto& t : triangulate_face(f))
        tris.push_back({add(t[0]), add(t[1]), add(t[2])});
    for (const Vec3& v : verts) {
      std::snprintf(line, sizeof(line), "v %.6f %.6f %.6f\n", v.x, v.y, v.z);
      out << line;
    }
    for (const auto& t : tris) {
      std::snprintf(line, sizeof(line), "f %ld %ld %ld\n",
                    vertex_base + t[0] + 1, vertex_base + t[1] + 1,
                    vertex_base + t[2] + 1);
      out << line;
    }
    vertex_base += static_cast<long>(verts.size());
  }
}

}  // namespace lodbox::reconstruct
