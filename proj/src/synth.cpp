#include "lodbox/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lodbox/errors.hpp"
#include "rng.hpp"

namespace lodbox::synth {

using detail::Rng;
using geometry::Box2;
using geometry::Footprint;
using geometry::Ring;
using geometry::Vec2;
using pointcloud::LidarPoint;
using pointcloud::PointCloud;

namespace {

double terrain_z(const SceneSpec& spec, Vec2 p) {
  return spec.terrain == TerrainKind::ramp ? spec.ramp_slope * p.x : 0.0;
}

double roof_z(const BuildingTruth& b, Vec2 p) {
  if (b.roof == RoofKind::flat) return b.eave;
  // gable ridge along the long axis of the bounding box
  Box2 box = b.footprint.outer.bbox();
  double t;
  if (box.width() >= box.height()) {
    double cy = 0.5 * (box.min.y + box.max.y);
    t = std::abs(p.y - cy) / (0.5 * box.height());
  } else {
    double cx = 0.5 * (box.min.x + box.max.x);
    t = std::abs(p.x - cx) / (0.5 * box.width());
  }
  return b.ridge - (b.ridge - b.eave) * std::min(1.0, t);
}

Footprint make_rect(const std::string& id, double x0, double y0, double w,
                    double h) {
  return Footprint(id,
                   Ring({{x0, y0}, {x0 + w, y0}, {x0 + w, y0 + h},
                         {x0, y0 + h}}),
                   {}, geometry::Source::reference);
}

Footprint make_l_shape(const std::string& id, double x0, double y0, double w,
                       double h, double cw, double ch) {
  // rectangle minus its top-right quadrant
  return Footprint(id,
                   Ring({{x0, y0},
                         {x0 + w, y0},
                         {x0 + w, y0 + h - ch},
                         {x0 + w - cw, y0 + h - ch},
                         {x0 + w - cw, y0 + h},
                         {x0, y0 + h}}),
                   {}, geometry::Source::reference);
}

}  // namespace

std::pair<PointCloud, GroundTruth> generate_scene(const SceneSpec& spec) {
  if (spec.density <= 0.0) throw SynthError("density must be > 0");
  if (spec.n_buildings < 0) throw SynthError("n_buildings must be >= 0");
  if (spec.extent_x <= 0.0 || spec.extent_y <= 0.0)
    throw SynthError("extent must be positive");
  if (spec.kinds.empty()) throw SynthError("at least one footprint kind");
  if (spec.side_max < spec.side_min || spec.height_max < spec.height_min)
    throw SynthError("invalid size or height range");

  Rng master(spec.seed);
  GroundTruth truth;
  std::vector<Box2> placed;

  const double margin = 1.0;
  for (int i = 0; i < spec.n_buildings; ++i) {
    bool ok = false;
    for (int attempt = 0; attempt < 200 && !ok; ++attempt) {
      FootprintKind kind =
          spec.kinds[master.uniform_int(static_cast<int>(spec.kinds.size()))];
      double w = master.uniform(spec.side_min, spec.side_max);
      double h = master.uniform(spec.side_min, spec.side_max);
      if (spec.extent_x - w - 2 * margin <= 0 ||
          spec.extent_y - h - 2 * margin <= 0)
        continue;
      double x0 = master.uniform(margin, spec.extent_x - w - margin);
      double y0 = master.uniform(margin, spec.extent_y - h - margin);
      Box2 box{{x0 - spec.min_gap, y0 - spec.min_gap},
               {x0 + w + spec.min_gap, y0 + h + spec.min_gap}};
      bool clash = false;
      for (const Box2& other : placed)
        if (box.intersects(other)) clash = true;
      if (clash) continue;

      char id[16];
      std::snprintf(id, sizeof(id), "b%04d", i + 1);
      Footprint fp =
          kind == FootprintKind::rect
              ? make_rect(id, x0, y0, w, h)
              : make_l_shape(id, x0, y0, w, h,
                             master.uniform(0.3, 0.6) * w,
                             master.uniform(0.3, 0.6) * h);

      BuildingTruth b;
      b.kind = kind;
      b.roof = spec.roof;
      b.base = terrain_z(spec, geometry::centroid(fp));
      b.eave = b.base + master.uniform(spec.height_min, spec.height_max);
      b.ridge = spec.roof == RoofKind::gabled
                    ? b.eave + master.uniform(spec.gable_rise_min,
                                              spec.gable_rise_max)
                    : b.eave;
      b.area = geometry::polygon_area(fp);
      b.perimeter = geometry::polygon_perimeter(fp);
      b.footprint = std::move(fp);
      truth.buildings.push_back(std::move(b));
      placed.push_back(box);
      ok = true;
    }
    if (!ok)
      throw SynthError("could not place building " + std::to_string(i + 1) +
                       ": scene too dense");
  }

  // keep-out zones: no point within 0.1 m of a footprint edge
  std::vector<Footprint> expanded;
  std::vector<Footprint> shrunk;
  std::vector<Box2> exp_boxes;
  for (const auto& b : truth.buildings) {
    expanded.push_back(buffer_polygon(b.footprint, 0.1));
    shrunk.push_back(inset_polygon(b.footprint, 0.1));
    exp_boxes.push_back(geometry::bounding_box(expanded.back()));
  }

  std::vector<LidarPoint> points;
  long n_ground =
      master.poisson(spec.density * spec.extent_x * spec.extent_y);
  for (long k = 0; k < n_ground; ++k) {
    Vec2 p{master.uniform(0.0, spec.extent_x),
           master.uniform(0.0, spec.extent_y)};
    double zn = master.normal();  // draw before rejection to keep streams
    bool blocked = false;         // aligned across rejection patterns
    for (std::size_t j = 0; j < expanded.size() && !blocked; ++j) {
      if (p.x < exp_boxes[j].min.x || p.x > exp_boxes[j].max.x ||
          p.y < exp_boxes[j].min.y || p.y > exp_boxes[j].max.y)
        continue;
      if (geometry::point_in_polygon(p, expanded[j])) blocked = true;
    }
    if (blocked) continue;
    points.push_back({p.x, p.y, terrain_z(spec, p) + spec.z_sigma * zn,
                      pointcloud::kClassGround});
  }

  for (std::size_t j = 0; j < truth.buildings.size(); ++j) {
    const BuildingTruth& b = truth.buildings[j];
    Rng rng(detail::mix_seed(spec.seed, j + 1));
    long n_roof = rng.poisson(spec.density * b.area);
    Box2 box = geometry::bounding_box(shrunk[j]);
    long placed_pts = 0;
    long guard = 200 * n_roof + 1000;
    while (placed_pts < n_roof && guard-- > 0) {
      Vec2 p{rng.uniform(box.min.x, box.max.x),
             rng.uniform(box.min.y, box.max.y)};
      if (!geometry::point_in_polygon(p, shrunk[j])) continue;
      points.push_back({p.x, p.y, roof_z(b, p) + spec.z_sigma * rng.normal(),
                        pointcloud::kClassBuilding});
      ++placed_pts;
    }
    if (placed_pts < n_roof)
      throw SynthError("roof sampling failed for " + b.footprint.id);
  }

  return {PointCloud(std::move(points)), std::move(truth)};
}

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

SceneSpec parse_scene_spec(const std::string& text) {
  SceneSpec spec;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw ParseError("scene spec line " + std::to_string(lineno) +
                         ": expected 'key = value'");
      continue;
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
    };
    trim(key);
    trim(value);
    auto num = [&]() {
      try {
        return std::stod(value);
      } catch (...) {
        throw ParseError("scene spec line " + std::to_string(lineno) +
                         ": bad numeric value for '" + key + "'");
      }
    };

    if (key == "extent_x") spec.extent_x = num();
    else if (key == "extent_y") spec.extent_y = num();
    else if (key == "n_buildings") spec.n_buildings = static_cast<int>(num());
    else if (key == "height_min") spec.height_min = num();
    else if (key == "height_max") spec.height_max = num();
    else if (key == "gable_rise_min") spec.gable_rise_min = num();
    else if (key == "gable_rise_max") spec.gable_rise_max = num();
    else if (key == "density") spec.density = num();
    else if (key == "z_sigma") spec.z_sigma = num();
    else if (key == "ramp_slope") spec.ramp_slope = num();
    else if (key == "side_min") spec.side_min = num();
    else if (key == "side_max") spec.side_max = num();
    else if (key == "min_gap") spec.min_gap = num();
    else if (key == "seed") spec.seed = static_cast<std::uint64_t>(num());
    else if (key == "roof") {
      if (value == "flat") spec.roof = RoofKind::flat;
      else if (value == "gabled") spec.roof = RoofKind::gabled;
      else throw ParseError("scene spec line " + std::to_string(lineno) +
                            ": roof must be flat|gabled");
    } else if (key == "terrain") {
      if (value == "flat") spec.terrain = TerrainKind::flat;
      else if (value == "ramp") spec.terrain = TerrainKind::ramp;
      else throw ParseError("scene spec line " + std::to_string(lineno) +
                            ": terrain must be flat|ramp");
    } else if (key == "kinds") {
      spec.kinds.clear();
      for (const auto& k : split_list(value)) {
        if (k == "rect") spec.kinds.push_back(FootprintKind::rect);
        else if (k == "l-shape") spec.kinds.push_back(FootprintKind::l_shape);
        else throw ParseError("scene spec line " + std::to_string(lineno) +
                              ": unknown footprint kind '" + k + "'");
      }
    } else {
      throw ParseError("scene spec line " + std::to_string(lineno) +
                       ": unknown key '" + key + "'");
    }
  }
  return spec;
}

SceneSpec read_scene_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_scene_spec(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::string truth_csv(const GroundTruth& truth) {
  std::ostringstream out;
  out << "id,kind,roof,base_m,eave_m,ridge_m,area_m2,perimeter_m\n";
  char buf[200];
  for (const auto& b : truth.buildings) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%s,%.3f,%.3f,%.3f,%.3f,%.3f\n",
                  b.footprint.id.c_str(),
                  b.kind == FootprintKind::rect ? "rect" : "l-shape",
                  b.roof == RoofKind::flat ? "flat" : "gabled", b.base,
                  b.eave, b.ridge, b.area, b.perimeter);
    out << buf;
  }
  return out.str();
}

namespace {

std::optional<Footprint> displace_edge(const Footprint& fp, std::size_t edge,
                                       double delta) {
  const auto& v = fp.outer.vertices();
  std::size_t n = v.size();
  Vec2 a = v[edge % n];
  Vec2 b = v[(edge + 1) % n];
  Vec2 e = b - a;
  double len = geometry::norm(e);
  if (len < 1e-12) return std::nullopt;
  Vec2 normal{e.y / len, -e.x / len};  // right normal: outward for CCW
  Vec2 shift = normal * delta;

  std::vector<Vec2> out = v;
  auto intersect = [&](Vec2 p0, Vec2 d0, Vec2 p1, Vec2 d1,
                       Vec2& res) {
    double denom = geometry::cross(d0, d1);
    if (std::abs(denom) < 1e-12) return false;
    double t = geometry::cross(p1 - p0, d1) / denom;
    res = p0 + d0 * t;
    return true;
  };
  Vec2 prev = v[(edge + n - 1) % n];
  Vec2 next2 = v[(edge + 2) % n];
  Vec2 na, nb;
  if (!intersect(prev, a - prev, a + shift, e, na)) return std::nullopt;
  if (!intersect(a + shift, e, b, next2 - b, nb)) return std::nullopt;
  out[edge % n] = na;
  out[(edge + 1) % n] = nb;
  try {
    Ring ring(out);
    if (!geometry::ring_is_simple(ring)) return std::nullopt;
    std::vector<Ring> holes = fp.holes;
    return Footprint(fp.id, std::move(ring), std::move(holes), fp.source);
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::optional<Footprint> scale_about_centroid(const Footprint& fp,
                                              double factor) {
  if (factor < 0.05) return std::nullopt;
  Vec2 c = geometry::centroid(fp);
  auto scale_ring = [&](const Ring& r) {
    std::vector<Vec2> v = r.vertices();
    for (Vec2& p : v) p = c + (p - c) * factor;
    return Ring(v);
  };
  try {
    std::vector<Ring> holes;
    for (const auto& h : fp.holes) holes.push_back(scale_ring(h));
    return Footprint(fp.id, scale_ring(fp.outer), std::move(holes),
                     fp.source);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

PerturbResult perturb_to_iou(const Footprint& fp, double target,
                             std::uint64_t seed, const PerturbOptions& opts) {
  if (!(target > 0.0 && target <= 1.0))
    throw SynthError("perturbation target must be in (0, 1]");
  if (target >= 1.0 - 1e-12) return {fp, 1.0};

  Rng rng(seed);
  double angle = rng.uniform(0.0, 6.283185307179586);
  Vec2 dir = opts.direction ? *opts.direction
                            : Vec2{std::cos(angle), std::sin(angle)};
  double dn = geometry::norm(dir);
  if (dn == 0.0) throw SynthError("zero perturbation direction");
  dir = dir * (1.0 / dn);
  double scale_sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
  int edge = rng.uniform_int(static_cast<int>(fp.outer.size()));
  double edge_sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
  double wt = rng.uniform(0.3, 1.0);
  double ws = rng.uniform(0.3, 1.0);
  double we = rng.uniform(0.3, 1.0);

  double size = std::sqrt(geometry::polygon_area(fp));
  bool do_translate =
      opts.mode == PerturbMode::mixed || opts.mode == PerturbMode::translate;
  bool do_scale =
      opts.mode == PerturbMode::mixed || opts.mode == PerturbMode::scale;
  bool do_edge =
      opts.mode == PerturbMode::mixed || opts.mode == PerturbMode::edge;

  auto apply = [&](double m) -> std::optional<Footprint> {
    std::optional<Footprint> cur = fp;
    if (do_scale) {
      cur = scale_about_centroid(*cur, 1.0 + scale_sign * ws * m * 0.6);
      if (!cur) return std::nullopt;
    }
    if (do_edge) {
      cur = displace_edge(*cur, static_cast<std::size_t>(edge),
                          edge_sign * we * m * 0.6 * size);
      if (!cur) return std::nullopt;
    }
    if (do_translate) cur = geometry::translated(*cur, dir * (wt * m * size));
    return cur;
  };
  auto iou_at = [&](double m) {
    auto cand = apply(m);
    if (!cand) return 0.0;
    return geometry::polygon_iou(*cand, fp, opts.iou_cell);
  };

  double hi = 1.0;
  double iou_hi = iou_at(hi);
  int grow = 0;
  while (iou_hi > target && grow++ < 7) {
    hi *= 2.0;
    iou_hi = iou_at(hi);
  }
  if (iou_hi > target)
    throw SynthError("perturbation cannot reach target IoU " +
                     std::to_string(target));

  double lo = 0.0;
  for (int step = 0; step < 60; ++step) {
    double mid = 0.5 * (lo + hi);
    double iou = iou_at(mid);
    if (std::abs(iou - target) <= 0.02) {
      auto cand = apply(mid);
      if (cand) return {*cand, iou};
    }
    if (iou > target)
      lo = mid;
    else
      hi = mid;
  }
  throw SynthError("perturbation bisection did not converge to IoU " +
                   std::to_string(target));
}

Footprint merge_footprints(const Footprint& a, const Footprint& b) {
  std::vector<Vec2> pts = a.outer.vertices();
  const auto& bv = b.outer.vertices();
  pts.insert(pts.end(), bv.begin(), bv.end());
  std::vector<Vec2> hull = geometry::convex_hull(pts);
  return Footprint(a.id + "+" + b.id, Ring(hull), {}, a.source);
}

}  // namespace lodbox::synth
