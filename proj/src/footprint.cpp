#include "lodbox/footprint.hpp"

#include <algorithm>
#include <cmath>

#include "lodbox/errors.hpp"

namespace lodbox::footprint {

using geometry::cross;
using geometry::dot;
using geometry::Footprint;
using geometry::norm;
using geometry::Ring;
using geometry::Vec2;
using raster::Grid;

Grid merge_tiles(const std::vector<Grid>& tiles) {
  if (tiles.empty()) throw GridError("merge_tiles: no tiles");
  const Grid& first = tiles.front();
  for (const auto& t : tiles) {
    if (std::abs(t.cell - first.cell) > 1e-9 * first.cell)
      throw GridError("merge_tiles: cell-size mismatch");
    if (!t.is_binary()) throw GridError("merge_tiles: tile is not binary");
    double dx = (t.origin.x - first.origin.x) / first.cell;
    double dy = (t.origin.y - first.origin.y) / first.cell;
    if (std::abs(dx - std::round(dx)) > 1e-6 ||
        std::abs(dy - std::round(dy)) > 1e-6)
      throw GridError("merge_tiles: tile origins are not grid-aligned");
  }

  double minx = first.origin.x, miny = first.origin.y;
  double maxx = minx + (first.ncols - 1) * first.cell;
  double maxy = miny + (first.nrows - 1) * first.cell;
  for (const auto& t : tiles) {
    minx = std::min(minx, t.origin.x);
    miny = std::min(miny, t.origin.y);
    maxx = std::max(maxx, t.origin.x + (t.ncols - 1) * t.cell);
    maxy = std::max(maxy, t.origin.y + (t.nrows - 1) * t.cell);
  }
  Grid out;
  out.cell = first.cell;
  out.origin = {minx, miny};
  out.ncols = static_cast<int>(std::round((maxx - minx) / out.cell)) + 1;
  out.nrows = static_cast<int>(std::round((maxy - miny) / out.cell)) + 1;
  out.values.assign(static_cast<std::size_t>(out.ncols) * out.nrows,
                    out.nodata);
  for (const auto& t : tiles) {
    int c0 = static_cast<int>(std::round((t.origin.x - minx) / out.cell));
    int r0 = static_cast<int>(std::round((t.origin.y - miny) / out.cell));
    for (int r = 0; r < t.nrows; ++r) {
      for (int c = 0; c < t.ncols; ++c) {
        double v = t.at(c, r);
        if (v == t.nodata) continue;
        double& dst = out.at(c0 + c, r0 + r);
        if (dst == out.nodata)
          dst = v;
        else
          dst = std::max(dst, v);  // OR of building pixels
      }
    }
  }
  return out;
}

std::vector<Footprint> drop_small(const std::vector<Footprint>& fps,
                                  double min_area) {
  std::vector<Footprint> out;
  for (const auto& fp : fps)
    if (geometry::polygon_area(fp) >= min_area) out.push_back(fp);
  return out;
}

namespace {

double point_line_dist(Vec2 p, Vec2 a, Vec2 b) {
  Vec2 ab = b - a;
  double len = norm(ab);
  if (len == 0.0) return norm(p - a);
  return std::abs(cross(ab, p - a)) / len;
}

void dp_keep(const std::vector<Vec2>& v, std::size_t first, std::size_t last,
             double tol, std::vector<char>& keep) {
  if (last <= first + 1) return;
  double dmax = -1.0;
  std::size_t imax = first;
  for (std::size_t i = first + 1; i < last; ++i) {
    double d = point_line_dist(v[i], v[first], v[last]);
    if (d > dmax) {
      dmax = d;
      imax = i;
    }
  }
  if (dmax > tol) {
    keep[imax] = 1;
    dp_keep(v, first, imax, tol, keep);
    dp_keep(v, imax, last, tol, keep);
  }
}

// Douglas-Peucker on a closed ring: anchor at vertex 0 and the vertex
// farthest from it, simplify both chains. Returns the kept indices.
std::vector<std::size_t> simplify_indices(const Ring& ring, double tol) {
  const auto& v = ring.vertices();
  std::vector<std::size_t> all(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) all[i] = i;
  if (tol <= 0.0 || v.size() <= 4) return all;
  std::size_t far = 1;
  double dmax = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    double d = dot(v[i] - v[0], v[i] - v[0]);
    if (d > dmax) {
      dmax = d;
      far = i;
    }
  }
  std::vector<char> keep(v.size() + 1, 0);
  std::vector<Vec2> closed = v;
  closed.push_back(v[0]);
  keep[0] = keep[far] = keep[v.size()] = 1;
  dp_keep(closed, 0, far, tol, keep);
  dp_keep(closed, far, v.size(), tol, keep);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (keep[i]) out.push_back(i);
  return out;
}

std::vector<Vec2> at_indices(const std::vector<Vec2>& v,
                             const std::vector<std::size_t>& idx) {
  std::vector<Vec2> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(v[i]);
  return out;
}

struct EdgeLine {
  Vec2 point;     // a point on the line
  Vec2 dir;       // unit direction
  double weight;  // accumulated edge length
  Vec2 junction;  // original vertex shared with the next line
  bool oblique;   // not snapped to either dominant axis
};

double direction_dist(double phi, double psi) {
  double d = std::fmod(std::abs(phi - psi), M_PI);
  return std::min(d, M_PI - d);
}

// Snap simplified edges near the dominant axes and re-intersect. A snapped
// line's offset comes from the length-weighted raw boundary it replaces,
// which keeps raster staircases centered instead of biased toward chord
// midpoints. Consecutive parallel lines merge when close, or get a
// connector at the original junction when they stay apart.
std::vector<Vec2> snap_ring(const std::vector<Vec2>& raw,
                            const std::vector<std::size_t>& kept,
                            double theta, double angle_tol_rad,
                            double merge_dist) {
  std::size_t n = raw.size();
  std::size_t m = kept.size();
  Vec2 axis_a{std::cos(theta), std::sin(theta)};
  Vec2 axis_b{-axis_a.y, axis_a.x};

  std::vector<EdgeLine> lines;
  lines.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    std::size_t p = kept[k];
    std::size_t q = kept[(k + 1) % m];
    Vec2 a = raw[p];
    Vec2 b = raw[q];
    Vec2 chord = b - a;
    double len = norm(chord);
    if (len < 1e-12) continue;
    double phi = std::atan2(chord.y, chord.x);
    Vec2 dir;
    bool oblique = false;
    if (direction_dist(phi, theta) <= angle_tol_rad)
      dir = axis_a;
    else if (direction_dist(phi, theta + M_PI_2) <= angle_tol_rad)
      dir = axis_b;
    else {
      dir = chord * (1.0 / len);
      oblique = true;
    }
    if (dot(dir, chord) < 0.0) dir = {-dir.x, -dir.y};

    Vec2 mid = (a + b) * 0.5;
    Vec2 point = mid;
    if (!oblique) {
      Vec2 nrm{-dir.y, dir.x};
      double wsum = 0.0, osum = 0.0;
      for (std::size_t j = p; j != q; j = (j + 1) % n) {
        Vec2 e = raw[(j + 1) % n] - raw[j];
        double w = std::abs(dot(e, dir));
        Vec2 emid = (raw[j] + raw[(j + 1) % n]) * 0.5;
        osum += w * dot(emid, nrm);
        wsum += w;
      }
      if (wsum > 1e-12)
        point = mid + nrm * (osum / wsum - dot(mid, nrm));
    }
    lines.push_back({point, dir, len, b, oblique});
  }

  // short oblique stubs (simplification anchors, corner chamfers) are noise
  for (bool removed = true; removed && lines.size() > 3;) {
    removed = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].oblique && lines[i].weight < 2.0 * merge_dist) {
        lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(i));
        removed = true;
        break;
      }
    }
  }

  // merge runs of close parallel neighbors
  for (int pass = 0; pass < 8 && lines.size() > 2; ++pass) {
    bool merged = false;
    for (std::size_t i = 0; i < lines.size() && lines.size() > 2; ++i) {
      EdgeLine& cur = lines[i];
      EdgeLine& nxt = lines[(i + 1) % lines.size()];
      if (std::abs(cross(cur.dir, nxt.dir)) > 1e-9) continue;
      if (dot(cur.dir, nxt.dir) < 0.0) continue;  // opposite runs stay apart
      double offset = std::abs(cross(cur.dir, nxt.point - cur.point));
      if (offset > merge_dist) continue;
      double w = cur.weight + nxt.weight;
      Vec2 p{(cur.point.x * cur.weight + nxt.point.x * nxt.weight) / w,
             (cur.point.y * cur.weight + nxt.point.y * nxt.weight) / w};
      cur.point = p;
      cur.weight = w;
      cur.junction = nxt.junction;
      lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(
                                      (i + 1) % lines.size()));
      merged = true;
    }
    if (!merged) break;
  }

  std::vector<Vec2> out;
  out.reserve(lines.size() + 4);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const EdgeLine& cur = lines[i];
    const EdgeLine& nxt = lines[(i + 1) % lines.size()];
    double denom = cross(cur.dir, nxt.dir);
    if (std::abs(denom) < 1e-9) {
      // parallel but offset: connect via projections of the junction
      Vec2 j = cur.junction;
      out.push_back(cur.point + cur.dir * dot(j - cur.point, cur.dir));
      out.push_back(nxt.point + nxt.dir * dot(j - nxt.point, nxt.dir));
    } else {
      double t = cross(nxt.point - cur.point, nxt.dir) / denom;
      out.push_back(cur.point + cur.dir * t);
    }
  }
  // drop near-duplicate consecutive vertices
  std::vector<Vec2> dedup;
  for (Vec2 p : out) {
    if (dedup.empty() || norm(p - dedup.back()) > 1e-9) dedup.push_back(p);
  }
  while (dedup.size() > 1 && norm(dedup.front() - dedup.back()) <= 1e-9)
    dedup.pop_back();
  return dedup;
}

}  // namespace

RegularizeResult regularize(const Footprint& fp, const PostprocessConfig& cfg) {
  RegularizeResult res{fp, {}};
  double area_in = geometry::polygon_area(fp);

  // stage 1: simplification
  auto outer_idx = simplify_indices(fp.outer, cfg.simplify_tol);
  Ring outer_s;
  std::vector<Ring> holes_s;
  std::vector<std::vector<std::size_t>> hole_idx;
  try {
    outer_s = Ring(at_indices(fp.outer.vertices(), outer_idx));
  } catch (const InvalidGeometryError&) {
    res.flags.push_back("regularize_failed");
    return res;
  }
  std::vector<std::size_t> hole_src;
  for (std::size_t j = 0; j < fp.holes.size(); ++j) {
    auto idx = simplify_indices(fp.holes[j], cfg.simplify_tol);
    try {
      holes_s.emplace_back(at_indices(fp.holes[j].vertices(), idx));
      hole_idx.push_back(std::move(idx));
      hole_src.push_back(j);
    } catch (const InvalidGeometryError&) {
      res.flags.push_back("hole_dropped");
    }
  }
  Footprint simplified;
  try {
    simplified = Footprint(fp.id, outer_s, holes_s, fp.source);
  } catch (const InvalidGeometryError&) {
    res.flags.push_back("regularize_failed");
    return res;
  }

  // stage 2: dominant orientation, estimated on the unsimplified outline
  // (simplification can tilt chords by up to the tolerance)
  double theta = geometry::min_area_rect(fp).angle;

  // stage 3: snap and re-intersect
  double tol_rad = cfg.snap_angle_tol * M_PI / 180.0;
  try {
    Ring outer_r{snap_ring(fp.outer.vertices(), outer_idx, theta, tol_rad,
                           cfg.simplify_tol)};
    std::vector<Ring> holes_r;
    for (std::size_t i = 0; i < holes_s.size(); ++i)
      holes_r.emplace_back(snap_ring(fp.holes[hole_src[i]].vertices(),
                                     hole_idx[i], theta, tol_rad,
                                     cfg.simplify_tol));
    Footprint snapped(fp.id, outer_r, holes_r, fp.source);
    double area_out = geometry::polygon_area(snapped);
    if (!geometry::ring_is_simple(snapped.outer))
      throw InvalidGeometryError("non-simple after snapping");
    if (std::abs(area_out - area_in) > 0.25 * area_in)
      throw InvalidGeometryError("area drift beyond 25%");
    res.footprint = std::move(snapped);
    return res;
  } catch (const InvalidGeometryError& e) {
    res.flags.push_back(std::string("regularize_fallback: ") + e.what());
    res.footprint = std::move(simplified);
    return res;
  }
}

PostprocessResult postprocess(const Grid& mask, const PostprocessConfig& cfg) {
  PostprocessResult result;
  Grid filtered;
  try {
    filtered = majority_filter(mask);
  } catch (const Error& e) {
    throw GridError(std::string("postprocess/majority_filter: ") + e.what());
  }
  std::vector<Footprint> comps;
  try {
    comps = raster::polygonize(filtered, cfg.connectivity);
  } catch (const Error& e) {
    throw GridError(std::string("postprocess/polygonize: ") + e.what());
  }
  comps = drop_small(comps, cfg.min_area);

  int seq = 0;
  for (auto& fp : comps) {
    char id[16];
    std::snprintf(id, sizeof(id), "b%06d", ++seq);
    fp.id = id;
    std::vector<std::string> flags;

    Footprint buffered = fp;
    if (cfg.buffer_dist > 0.0) {
      try {
        buffered = buffer_polygon(fp, cfg.buffer_dist);
      } catch (const BufferError&) {
        flags.push_back("buffer_failed");
      }
    }
    RegularizeResult reg = regularize(buffered, cfg);
    flags.insert(flags.end(), reg.flags.begin(), reg.flags.end());

    result.footprints.push_back(std::move(reg.footprint));
    if (!flags.empty()) result.flags[fp.id] = std::move(flags);
  }
  return result;
}

}  // namespace lodbox::footprint
