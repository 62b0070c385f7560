#include <doctest.h>

#include <cmath>

#include "lodbox/errors.hpp"
#include "lodbox/geometry.hpp"
#include "testutil.hpp"

using namespace lodbox;
using geometry::Footprint;
using geometry::Ring;
using geometry::Vec2;

namespace {

Footprint unit_square() {
  return Footprint("sq", Ring({{0, 0}, {1, 0}, {1, 1}, {0, 1}}));
}

Footprint square(double side, Vec2 at = {0, 0}) {
  return Footprint("sq", Ring({{at.x, at.y},
                               {at.x + side, at.y},
                               {at.x + side, at.y + side},
                               {at.x, at.y + side}}));
}

Footprint rotated(const Footprint& fp, double angle) {
  double c = std::cos(angle), s = std::sin(angle);
  auto rot = [&](const Ring& r) {
    std::vector<Vec2> v;
    for (Vec2 p : r.vertices()) v.push_back({c * p.x - s * p.y, s * p.x + c * p.y});
    return Ring(v);
  };
  std::vector<Ring> holes;
  for (const auto& h : fp.holes) holes.push_back(rot(h));
  return Footprint(fp.id, rot(fp.outer), holes);
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("polygon_area basics") {
  CHECK(geometry::polygon_area(unit_square()) == doctest::Approx(1.0));

  Footprint holed("h", Ring({{0, 0}, {10, 0}, {10, 10}, {0, 10}}),
                  {Ring({{4, 4}, {6, 4}, {6, 6}, {4, 6}})});
  CHECK(geometry::polygon_area(holed) == doctest::Approx(96.0));
}

TEST_CASE("polygon_area matches the Monte-Carlo oracle on a random 8-gon") {
  testutil::Rand rng(42);
  Footprint fp("g", testutil::random_star_ring(rng, 8, {0, 0}, 4.0, 9.0));
  double area = geometry::polygon_area(fp);
  double mc = testutil::monte_carlo_area(fp, 1000000, 7);
  CHECK(std::abs(mc - area) / area < 0.005);
}

TEST_CASE("polygon_perimeter") {
  CHECK(geometry::polygon_perimeter(unit_square()) == doctest::Approx(4.0));
  CHECK(geometry::polygon_perimeter(square(10)) == doctest::Approx(40.0));
  Footprint tri("t", Ring({{0, 0}, {3, 0}, {0, 4}}));
  CHECK(geometry::polygon_perimeter(tri) == doctest::Approx(12.0));
}

TEST_CASE("degenerate rings are rejected") {
  CHECK_THROWS_AS(Ring({{0, 0}, {1, 1}}), InvalidGeometryError);
  CHECK_THROWS_AS(Ring({{0, 0}, {1, 1}, {2, 2}, {3, 3}}),
                  InvalidGeometryError);
}

TEST_CASE("ring orientation is normalized on construction") {
  Footprint cw("c", Ring({{0, 0}, {0, 1}, {1, 1}, {1, 0}}));  // given CW
  CHECK(cw.outer.is_ccw());
  Footprint holed("h", Ring({{0, 0}, {10, 0}, {10, 10}, {0, 10}}),
                  {Ring({{4, 4}, {6, 4}, {6, 6}, {4, 6}})});
  CHECK_FALSE(holed.holes[0].is_ccw());
}

TEST_CASE("point_in_polygon") {
  Footprint sq = unit_square();
  CHECK(geometry::point_in_polygon({0.5, 0.5}, sq));
  CHECK_FALSE(geometry::point_in_polygon({2, 2}, sq));
  CHECK(geometry::point_in_polygon({0.0, 0.5}, sq));  // boundary is inside
  CHECK(geometry::point_in_polygon({1.0, 1.0}, sq));

  Footprint holed("h", Ring({{0, 0}, {10, 0}, {10, 10}, {0, 10}}),
                  {Ring({{4, 4}, {6, 4}, {6, 6}, {4, 6}})});
  CHECK_FALSE(geometry::point_in_polygon({5, 5}, holed));
  CHECK(geometry::point_in_polygon({4, 5}, holed));  // hole boundary
  CHECK(geometry::point_in_polygon({2, 2}, holed));
}

TEST_CASE("buffer_polygon analytic offsets") {
  Footprint out = geometry::buffer_polygon(unit_square(), 0.05);
  CHECK(geometry::polygon_area(out) == doctest::Approx(1.21).epsilon(1e-12));

  // the 5 cm value applied to a 10x10 block
  Footprint big = geometry::buffer_polygon(square(10), 0.05);
  CHECK(geometry::polygon_area(big) == doctest::Approx(102.01).epsilon(1e-12));

  Footprint same = geometry::buffer_polygon(unit_square(), 0.0);
  CHECK(geometry::polygon_area(same) == doctest::Approx(1.0));
  CHECK(same.outer.size() == 4);
}

TEST_CASE("buffer grows convex polygons") {
  testutil::Rand rng(3);
  for (int i = 0; i < 30; ++i) {
    auto hull = geometry::convex_hull(
        testutil::random_star_ring(rng, 10, {0, 0}, 3.0, 8.0).vertices());
    Footprint fp("c", Ring(hull));
    double d = rng.uniform(0.01, 1.0);
    CHECK(geometry::polygon_area(geometry::buffer_polygon(fp, d)) >
          geometry::polygon_area(fp));
  }
}

TEST_CASE("buffer failure on a narrow canyon") {
  Footprint u("u", Ring({{0, 0}, {5, 0}, {5, 5}, {4, 5}, {4, 1}, {1, 1},
                         {1, 5}, {0, 5}}));
  CHECK_NOTHROW(geometry::buffer_polygon(u, 0.5));
  CHECK_THROWS_AS(geometry::buffer_polygon(u, 1.8), BufferError);
}

TEST_CASE("inset_polygon shrinks") {
  Footprint in = geometry::inset_polygon(square(10), 1.0);
  CHECK(geometry::polygon_area(in) == doctest::Approx(64.0));
  CHECK_THROWS_AS(geometry::inset_polygon(unit_square(), 0.6), BufferError);
}

TEST_CASE("min_area_rect") {
  auto box = geometry::min_area_rect(unit_square());
  CHECK(box.angle == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(box.width == doctest::Approx(1.0));
  CHECK(box.height == doctest::Approx(1.0));

  auto rot = geometry::min_area_rect(rotated(unit_square(), M_PI / 6));
  CHECK(rot.angle == doctest::Approx(M_PI / 6).epsilon(1e-9));

  Footprint rect("r", Ring({{0, 0}, {2, 0}, {2, 1}, {0, 1}}));
  auto b2 = geometry::min_area_rect(rect);
  CHECK(b2.width * b2.height == doctest::Approx(2.0));
}

TEST_CASE("polygon_iou basics") {
  Footprint a = unit_square();
  CHECK(geometry::polygon_iou(a, a) == 1.0);
  CHECK(geometry::polygon_iou(a, square(1, {5, 5})) == 0.0);

  Footprint b = square(1, {0.5, 0.0});
  double iou = geometry::polygon_iou(a, b);
  CHECK(std::abs(iou - 1.0 / 3.0) < 0.02);
}

TEST_CASE("polygon_iou is exact 1 on self for any cell") {
  Footprint fp = unit_square();
  for (double cell : {0.01, 0.05, 0.3, 2.0, 50.0})
    CHECK(geometry::polygon_iou(fp, fp, cell) == 1.0);
}

TEST_CASE("polygon_iou symmetry and translation invariance") {
  testutil::Rand rng(11);
  for (int i = 0; i < 10; ++i) {
    Footprint a = testutil::random_polygon(rng, 4, 10, false);
    Footprint b = geometry::translated(a, {rng.uniform(-3, 3), rng.uniform(-3, 3)});
    double ab = geometry::polygon_iou(a, b);
    double ba = geometry::polygon_iou(b, a);
    CHECK(ab == ba);
    // the grid origin follows the joint bounding box, so a common shift
    // changes at most a layer of boundary cells (rounding)
    Vec2 d{100.0, -250.0};
    double shifted = geometry::polygon_iou(geometry::translated(a, d),
                                           geometry::translated(b, d));
    CHECK(shifted == doctest::Approx(ab).epsilon(0.02));
  }
}

TEST_CASE("polygon_area invariance under vertex rotation and rigid rotation") {
  testutil::Rand rng(5);
  for (int i = 0; i < 20; ++i) {
    Footprint fp = testutil::random_polygon(rng, 5, 12, i % 2 == 0);
    double area = geometry::polygon_area(fp);

    auto v = fp.outer.vertices();
    std::rotate(v.begin(), v.begin() + 2 % v.size(), v.end());
    Footprint rotated_list("r", Ring(v), fp.holes);
    CHECK(geometry::polygon_area(rotated_list) ==
          doctest::Approx(area).epsilon(1e-12));

    Footprint rigid = rotated(fp, rng.uniform(0.0, 3.14));
    CHECK(geometry::polygon_area(rigid) == doctest::Approx(area).epsilon(1e-9));
  }
}

TEST_CASE("footprint validation") {
  CHECK_THROWS_AS(
      Footprint("bad", Ring({{0, 0}, {1, 0}, {1, 1}, {0, 1}}),
                {Ring({{5, 5}, {6, 5}, {6, 6}, {5, 6}})}),
      InvalidGeometryError);
}

}  // TEST_SUITE
