#include <doctest.h>

#include <filesystem>

#include "lodbox/errors.hpp"
#include "lodbox/raster.hpp"
#include "testutil.hpp"

using namespace lodbox;
using geometry::Footprint;
using geometry::Ring;
using pointcloud::LidarPoint;
using pointcloud::PointCloud;
using raster::Grid;

namespace {

Grid binary_grid(int ncols, int nrows, std::initializer_list<int> ones,
                 double cell = 1.0) {
  Grid g = Grid::filled({0.5 * cell, 0.5 * cell}, cell, ncols, nrows, 0.0);
  auto it = ones.begin();
  while (it != ones.end()) {
    int c = *it++;
    int r = *it++;
    g.at(c, r) = 1.0;
  }
  return g;
}

}  // namespace

TEST_SUITE("raster") {

TEST_CASE("rasterize_dsm constant field") {
  PointCloud pc{{{0, 0, 5, 6}, {1, 0, 5, 6}, {1, 1, 5, 6}, {0, 1, 5, 6}}};
  Grid dsm = raster::rasterize_dsm(pc, 0.5);
  CHECK(dsm.ncols == 2);
  CHECK(dsm.nrows == 2);
  for (double v : dsm.values) CHECK(v == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("rasterize_dsm reproduces a linear ramp exactly") {
  testutil::Rand rng(21);
  std::vector<LidarPoint> pts;
  for (int i = 0; i < 100; ++i) {
    double x = rng.uniform(0, 20), y = rng.uniform(0, 20);
    pts.push_back({x, y, x, 2});  // z = x
  }
  PointCloud pc{pts};
  Grid dsm = raster::rasterize_dsm(pc, 0.4);
  int checked = 0;
  for (int r = 0; r < dsm.nrows; ++r) {
    for (int c = 0; c < dsm.ncols; ++c) {
      if (dsm.at(c, r) == dsm.nodata) continue;  // outside the hull
      CHECK(dsm.at(c, r) == doctest::Approx(dsm.center(c, r).x).epsilon(1e-9));
      ++checked;
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("rasterize_dsm marks cells outside the hull as nodata") {
  PointCloud pc{{{0, 0, 1, 2}, {10, 0, 1, 2}, {0, 10, 1, 2}}};  // triangle
  Grid dsm = raster::rasterize_dsm(pc, 1.0);
  CHECK(dsm.at(dsm.ncols - 1, dsm.nrows - 1) == dsm.nodata);  // far corner
  CHECK(dsm.at(1, 1) != dsm.nodata);
}

TEST_CASE("rasterize_dsm rejects degenerate input") {
  CHECK_THROWS_AS(raster::rasterize_dsm(PointCloud{{{0, 0, 1, 2}, {1, 1, 1, 2}}},
                                        1.0),
                  GridError);
  CHECK_THROWS_AS(
      raster::rasterize_dsm(
          PointCloud{{{0, 0, 1, 2}, {1, 1, 1, 2}, {2, 2, 1, 2}, {3, 3, 1, 2}}},
          1.0),
      GridError);
}

TEST_CASE("rasterize_dsm is independent of the thread partition") {
  testutil::Rand rng(4);
  std::vector<LidarPoint> pts;
  for (int i = 0; i < 4000; ++i)
    pts.push_back({rng.uniform(0, 40), rng.uniform(0, 40),
                   rng.uniform(0, 9), 6});
  PointCloud pc{pts};
  Grid a = raster::rasterize_dsm(pc, 0.23, 1);
  Grid b = raster::rasterize_dsm(pc, 0.23, 4);
  REQUIRE(a.values.size() == b.values.size());
  for (std::size_t i = 0; i < a.values.size(); ++i)
    CHECK(a.values[i] == b.values[i]);
}

TEST_CASE("majority_filter removes isolated pixels and keeps blocks") {
  Grid g = binary_grid(5, 5, {2, 2});
  Grid f = raster::majority_filter(g);
  CHECK(f.at(2, 2) == 0.0);

  Grid block = Grid::filled({0.5, 0.5}, 1.0, 7, 7, 0.0);
  for (int r = 1; r <= 5; ++r)
    for (int c = 1; c <= 5; ++c) block.at(c, r) = 1.0;
  Grid fb = raster::majority_filter(block);
  CHECK(fb.at(3, 3) == 1.0);       // interior unchanged
  CHECK(fb.at(1, 1) == 0.0);       // corners erode (3 of 8 neighbors set)
  CHECK(fb.at(3, 1) == 1.0);       // edge midpoints survive (5 of 8)
}

TEST_CASE("majority_filter tie keeps the center") {
  // 3x3 checkerboard: the center's 8 neighbors split 4-4
  Grid g = binary_grid(3, 3, {0, 0, 2, 0, 1, 1, 0, 2, 2, 2});
  CHECK(raster::majority_filter(g).at(1, 1) == 1.0);
  g.at(1, 1) = 0.0;
  CHECK(raster::majority_filter(g).at(1, 1) == 0.0);
}

TEST_CASE("majority_filter requires binary input") {
  Grid g = Grid::filled({0, 0}, 1.0, 2, 2, 0.5);
  CHECK_THROWS_AS(raster::majority_filter(g), GridError);
}

TEST_CASE("polygonize single cell and block") {
  Grid one = binary_grid(3, 3, {1, 1});
  auto fps = raster::polygonize(one);
  REQUIRE(fps.size() == 1);
  CHECK(geometry::polygon_area(fps[0]) == doctest::Approx(1.0));
  CHECK(fps[0].outer.size() == 4);

  Grid block = binary_grid(5, 5, {1, 1, 2, 1, 1, 2, 2, 2, 1, 3, 2, 3});
  auto bf = raster::polygonize(block);
  REQUIRE(bf.size() == 1);
  CHECK(geometry::polygon_area(bf[0]) == doctest::Approx(6.0));
}

TEST_CASE("polygonize traces holes") {
  Grid g = Grid::filled({0.5, 0.5}, 1.0, 5, 5, 0.0);
  for (int r = 1; r <= 3; ++r)
    for (int c = 1; c <= 3; ++c) g.at(c, r) = 1.0;
  g.at(2, 2) = 0.0;
  auto fps = raster::polygonize(g);
  REQUIRE(fps.size() == 1);
  REQUIRE(fps[0].holes.size() == 1);
  CHECK(geometry::polygon_area(fps[0]) == doctest::Approx(8.0));
}

TEST_CASE("polygonize connectivity semantics on diagonal contact") {
  Grid g = binary_grid(4, 4, {1, 1, 2, 2});
  auto eight = raster::polygonize(g, raster::Connectivity::eight);
  REQUIRE(eight.size() == 1);
  CHECK(geometry::polygon_area(eight[0]) == doctest::Approx(2.0));

  auto four = raster::polygonize(g, raster::Connectivity::four);
  CHECK(four.size() == 2);
}

TEST_CASE("polygonize areas sum to the cell count") {
  testutil::Rand rng(17);
  Grid g = Grid::filled({0.115, 0.115}, 0.23, 24, 18, 0.0);
  int ones = 0;
  for (auto& v : g.values) {
    if (rng.uniform() < 0.4) {
      v = 1.0;
      ++ones;
    }
  }
  auto fps = raster::polygonize(g);
  double total = 0.0;
  for (const auto& fp : fps) total += geometry::polygon_area(fp);
  CHECK(total == doctest::Approx(ones * 0.23 * 0.23).epsilon(1e-12));
}

TEST_CASE("polygonize then rasterize_polygon is the identity") {
  testutil::Rand rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    Grid g = Grid::filled({0.5, 0.5}, 1.0, 16, 12, 0.0);
    for (auto& v : g.values) v = rng.uniform() < 0.45 ? 1.0 : 0.0;
    auto fps = raster::polygonize(g);
    Grid back = Grid::filled(g.origin, g.cell, g.ncols, g.nrows, 0.0);
    for (const auto& fp : fps) {
      Grid mask = raster::rasterize_polygon(fp, g);
      for (std::size_t i = 0; i < back.values.size(); ++i)
        back.values[i] = std::max(back.values[i], mask.values[i]);
    }
    for (std::size_t i = 0; i < g.values.size(); ++i)
      CHECK(back.values[i] == g.values[i]);
  }
}

TEST_CASE("rasterize_polygon cell-center rule") {
  Footprint sq("s", Ring({{0, 0}, {1, 0}, {1, 1}, {0, 1}}));
  Grid templ = Grid::filled({0.25, 0.25}, 0.5, 4, 4, 0.0);
  Grid mask = raster::rasterize_polygon(sq, templ);
  int ones = 0;
  for (double v : mask.values) ones += v == 1.0;
  CHECK(ones == 4);

  Footprint far("f", Ring({{10, 10}, {11, 10}, {11, 11}, {10, 11}}));
  Grid empty = raster::rasterize_polygon(far, templ);
  for (double v : empty.values) CHECK(v == 0.0);
}

TEST_CASE("grid ascii format") {
  Grid g = Grid::filled({1.5, 2.5}, 1.0, 1, 1, 5.0);
  std::string text = raster::format_grid(g);
  CHECK(text ==
        "ncols 1\nnrows 1\nxllcenter 1.5\nyllcenter 2.5\ncellsize 1\n"
        "NODATA_value -9999\n5\n");
}

TEST_CASE("grid round-trip is bit exact") {
  testutil::Rand rng(31);
  Grid g = Grid::filled({-3.25, 7.125}, 0.23, 100, 100, 0.0);
  for (auto& v : g.values) v = rng.uniform(-1000.0, 1000.0);
  Grid back = raster::parse_grid(raster::format_grid(g));
  REQUIRE(back.values.size() == g.values.size());
  CHECK(back.origin.x == g.origin.x);
  CHECK(back.cell == g.cell);
  for (std::size_t i = 0; i < g.values.size(); ++i)
    CHECK(back.values[i] == g.values[i]);
}

TEST_CASE("grid parse errors name the problem") {
  CHECK_THROWS_WITH_AS(raster::parse_grid("ncols 2\nnrows 2\n"),
                       doctest::Contains("truncated"), ParseError);
  CHECK_THROWS_WITH_AS(
      raster::parse_grid("ncols 1\nncols 1\nxllcenter 0\nyllcenter 0\n"
                         "cellsize 1\nNODATA_value -9999\n1\n"),
      doctest::Contains("duplicate key 'ncols'"), ParseError);
  CHECK_THROWS_WITH_AS(
      raster::parse_grid("ncols 2\nnrows 2\nxllcenter 0\nyllcenter 0\n"
                         "cellsize 1\nNODATA_value -9999\n1 2 3\n"),
      doctest::Contains("expected 4 values"), ParseError);
}

}  // TEST_SUITE
