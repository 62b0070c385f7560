#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "lodbox/errors.hpp"
#include "lodbox/reconstruct.hpp"
#include "testutil.hpp"

using namespace lodbox;
using geometry::Footprint;
using geometry::Ring;
using reconstruct::Face;
using reconstruct::FaceKind;
using reconstruct::Lod1Solid;
using reconstruct::Vec3;

namespace {

Footprint unit_square() {
  return Footprint("cube", Ring({{0, 0}, {1, 0}, {1, 1}, {0, 1}}));
}

Footprint holed_square() {
  return Footprint("ring", Ring({{0, 0}, {10, 0}, {10, 10}, {0, 10}}),
                   {Ring({{4, 4}, {6, 4}, {6, 6}, {4, 6}})});
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

struct Key3 {
  long long x, y, z;
  auto operator<=>(const Key3&) const = default;
};

Key3 quantize(const Vec3& v) {
  return {std::llround(v.x * 1e7), std::llround(v.y * 1e7),
          std::llround(v.z * 1e7)};
}

// counts of distinct vertices / undirected edges / faces
std::tuple<int, int, int> count_elements(const std::vector<Face>& faces) {
  std::set<Key3> verts;
  std::set<std::pair<Key3, Key3>> edges;
  for (const auto& f : faces) {
    for (const auto& ring : f.rings) {
      for (std::size_t i = 0; i < ring.size(); ++i) {
        Key3 a = quantize(ring[i]);
        Key3 b = quantize(ring[(i + 1) % ring.size()]);
        verts.insert(a);
        edges.insert(a < b ? std::make_pair(a, b) : std::make_pair(b, a));
      }
    }
  }
  return {static_cast<int>(verts.size()), static_cast<int>(edges.size()),
          static_cast<int>(faces.size())};
}

}  // namespace

TEST_SUITE("reconstruct") {

TEST_CASE("extrude validates the height interval") {
  auto s = reconstruct::extrude(unit_square(), 0.0, 3.0);
  CHECK(reconstruct::solid_volume(s) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK_THROWS_AS(reconstruct::extrude(unit_square(), 2.0, 2.0),
                  InvalidGeometryError);

  Footprint lshape("l", Ring({{0, 0}, {10, 0}, {10, 10}, {5, 10}, {5, 5},
                              {0, 5}}));
  auto ls = reconstruct::extrude(lshape, 0.0, 4.0);
  CHECK(reconstruct::solid_volume(ls) == doctest::Approx(300.0).epsilon(1e-12));
}

TEST_CASE("faces of a unit-square prism") {
  auto s = reconstruct::extrude(unit_square(), 0.0, 3.0);
  auto fs = reconstruct::faces(s);
  REQUIRE(fs.size() == 6);
  int walls = 0, roofs = 0, grounds = 0;
  for (const auto& f : fs) {
    if (f.kind == FaceKind::wall) {
      ++walls;
      CHECK(f.area == doctest::Approx(3.0));
    } else if (f.kind == FaceKind::roof) {
      ++roofs;
      CHECK(f.area == doctest::Approx(1.0));
    } else {
      ++grounds;
      CHECK(f.area == doctest::Approx(1.0));
    }
  }
  CHECK(walls == 4);
  CHECK(roofs == 1);
  CHECK(grounds == 1);
}

TEST_CASE("wall areas sum to perimeter times height") {
  Footprint sq("s", Ring({{0, 0}, {10, 0}, {10, 10}, {0, 10}}));
  auto s = reconstruct::extrude(sq, 0.0, 3.0);
  double wall_sum = 0.0;
  for (const auto& f : reconstruct::faces(s))
    if (f.kind == FaceKind::wall) wall_sum += f.area;
  CHECK(wall_sum == doctest::Approx(120.0).epsilon(1e-12));
}

TEST_CASE("hole prisms carry hole walls and satisfy the element count") {
  auto s = reconstruct::extrude(holed_square(), 0.0, 3.0);
  auto fs = reconstruct::faces(s);
  // 4 outer walls + 4 hole walls + roof + ground
  REQUIRE(fs.size() == 10);
  auto [v, e, f] = count_elements(fs);
  CHECK(v == 16);
  CHECK(e == 24);
  CHECK(f == 10);
  CHECK(v - e + f == 2);

  auto cube = reconstruct::extrude(unit_square(), 0.0, 1.0);
  auto [cv, ce, cf] = count_elements(reconstruct::faces(cube));
  CHECK(cv == 8);
  CHECK(ce == 12);
  CHECK(cf == 6);
  CHECK(cv - ce + cf == 2);
}

TEST_CASE("shell closure: every edge is shared by exactly two faces") {
  for (const Footprint& fp : {unit_square(), holed_square()}) {
    auto s = reconstruct::extrude(fp, 1.0, 4.0);
    std::map<std::pair<Key3, Key3>, int> edge_count;
    for (const auto& f : reconstruct::faces(s)) {
      for (const auto& ring : f.rings) {
        for (std::size_t i = 0; i < ring.size(); ++i) {
          Key3 a = quantize(ring[i]);
          Key3 b = quantize(ring[(i + 1) % ring.size()]);
          ++edge_count[a < b ? std::make_pair(a, b) : std::make_pair(b, a)];
        }
      }
    }
    for (const auto& [edge, count] : edge_count) CHECK(count == 2);
  }
}

TEST_CASE("prism identities hold on random polygons") {
  testutil::Rand rng(1234);
  for (int trial = 0; trial < 30; ++trial) {
    Footprint fp = testutil::random_polygon(rng, 4, 16, trial % 3 == 0);
    double base = rng.uniform(-5, 5);
    double h = rng.uniform(0.5, 20);
    auto s = reconstruct::extrude(fp, base, base + h);

    double volume = reconstruct::solid_volume(s);
    double expect_v = geometry::polygon_area(fp) * h;
    CHECK(std::abs(volume - expect_v) / expect_v < 1e-9);

    double wall_sum = 0.0;
    for (const auto& f : reconstruct::faces(s))
      if (f.kind == FaceKind::wall) wall_sum += f.area;
    double expect_w = geometry::polygon_perimeter(fp) * h;
    CHECK(std::abs(wall_sum - expect_w) / expect_w < 1e-9);
  }
}

TEST_CASE("cityjson document structure for the unit cube") {
  auto s = reconstruct::extrude(unit_square(), 0.0, 1.0,
                                heights::Measure::median);
  std::string text = reconstruct::to_cityjson({s});
  CHECK(text.find("\"type\": \"CityJSON\"") != std::string::npos);
  CHECK(text.find("\"version\": \"2.0\"") != std::string::npos);

  auto back = reconstruct::from_cityjson(text);
  REQUIRE(back.size() == 1);
  CHECK(back[0].id == "cube");
  CHECK(back[0].base == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(back[0].top == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(back[0].measure == heights::Measure::median);

  // 8 distinct vertices, one Building, 6 boundary surfaces
  auto count = [&text](const std::string& needle) {
    std::size_t n = 0, pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
      ++n;
      pos += needle.size();
    }
    return n;
  };
  CHECK(count("\"Building\"") == 1);
  std::size_t vpos = text.find("\"vertices\"");
  REQUIRE(vpos != std::string::npos);
  std::size_t open = 0;
  for (std::size_t i = text.find('[', vpos); i < text.size(); ++i) {
    if (text[i] == '[') ++open;
    if (text[i] == ']') {
      if (open == 2) break;
    }
  }
  auto solids = reconstruct::from_cityjson(text);
  CHECK(geometry::polygon_area(solids[0].footprint) == doctest::Approx(1.0));
}

TEST_CASE("cityjson round trip stays within the 1 mm quantum") {
  testutil::Rand rng(55);
  std::vector<Lod1Solid> solids;
  for (int i = 0; i < 3; ++i) {
    Footprint fp = testutil::random_polygon(rng, 4, 9, false);
    fp.id = "b" + std::to_string(i);
    solids.push_back(
        reconstruct::extrude(fp, rng.uniform(0, 2), rng.uniform(3, 20),
                             heights::Measure::p90));
  }
  std::string path = temp_path("roundtrip.city.json");
  reconstruct::write_cityjson(solids, path);
  auto back = reconstruct::read_cityjson(path);
  REQUIRE(back.size() == solids.size());
  std::map<std::string, const Lod1Solid*> by_id;
  for (const auto& s : back) by_id[s.id] = &s;
  for (const auto& s : solids) {
    REQUIRE(by_id.count(s.id));
    const Lod1Solid& r = *by_id[s.id];
    CHECK(std::abs(r.base - s.base) <= 0.001);
    CHECK(std::abs(r.top - s.top) <= 0.001);
    const auto& va = s.footprint.outer.vertices();
    const auto& vb = r.footprint.outer.vertices();
    REQUIRE(va.size() == vb.size());
    for (std::size_t i = 0; i < va.size(); ++i) {
      CHECK(std::abs(va[i].x - vb[i].x) <= 0.001);
      CHECK(std::abs(va[i].y - vb[i].y) <= 0.001);
    }
  }
}

TEST_CASE("cityjson vertex pools are not shared across buildings") {
  auto a = reconstruct::extrude(unit_square(), 0.0, 1.0);
  Footprint sq2("b2", Ring({{5, 5}, {6, 5}, {6, 6}, {5, 6}}));
  auto b = reconstruct::extrude(sq2, 0.0, 1.0);
  std::string text = reconstruct::to_cityjson({a, b});
  auto doc_pos = text.find("\"vertices\"");
  int brackets = 0;
  std::size_t count = 0;
  for (std::size_t i = text.find('[', doc_pos); i < text.size(); ++i) {
    if (text[i] == '[') {
      ++brackets;
      if (brackets == 2) ++count;
    } else if (text[i] == ']') {
      if (brackets == 1) break;
      --brackets;
    }
  }
  CHECK(count == 16);  // 8 + 8
}

TEST_CASE("cityjson rejects an empty list") {
  CHECK_THROWS_AS(reconstruct::to_cityjson({}), Error);
}

TEST_CASE("obj output of the unit cube") {
  auto s = reconstruct::extrude(unit_square(), 0.0, 1.0);
  std::string path = temp_path("cube.obj");
  reconstruct::write_obj({s}, path);
  std::ifstream in(path);
  std::string line;
  int v_lines = 0, f_lines = 0, g_lines = 0;
  while (std::getline(in, line)) {
    if (line.starts_with("v ")) ++v_lines;
    if (line.starts_with("f ")) ++f_lines;
    if (line.starts_with("g ")) ++g_lines;
  }
  CHECK(v_lines == 8);
  CHECK(f_lines == 12);
  CHECK(g_lines == 1);
  CHECK_THROWS_AS(reconstruct::write_obj({}, path), Error);
}

TEST_CASE("roof triangulation covers the annulus exactly") {
  auto s = reconstruct::extrude(holed_square(), 0.0, 3.0);
  for (const auto& f : reconstruct::faces(s)) {
    if (f.kind != FaceKind::roof) continue;
    double tri_area = 0.0;
    for (const auto& t : reconstruct::triangulate_face(f)) {
      Vec3 u = t[1] - t[0];
      Vec3 v = t[2] - t[0];
      Vec3 c{u.y * v.z - u.z * v.y, u.z * v.x - u.x * v.z,
             u.x * v.y - u.y * v.x};
      tri_area += 0.5 * std::sqrt(c.x * c.x + c.y * c.y + c.z * c.z);
    }
    CHECK(std::abs(tri_area - f.area) / f.area < 1e-9);
    CHECK(f.area == doctest::Approx(96.0));
  }
}

}  // TEST_SUITE
