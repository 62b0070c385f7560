#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lodbox/errors.hpp"
#include "lodbox/eval.hpp"
#include "lodbox/raster.hpp"
#include "testutil.hpp"

using namespace lodbox;
using eval::BuildingMatch;
using eval::ConfusionCounts;
using geometry::Footprint;
using geometry::Ring;
using heights::Measure;

namespace {

Footprint square(double x0, double y0, double side, const std::string& id) {
  return Footprint(id, Ring({{x0, y0}, {x0 + side, y0}, {x0 + side, y0 + side},
                             {x0, y0 + side}}));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

eval::EvalReport tiny_report() {
  eval::EvalReport rep;
  rep.measures = {Measure::median, Measure::p90};
  testutil::Rand rng(6);
  for (int i = 0; i < 12; ++i) {
    eval::BuildingRecord r;
    r.pred_id = "p" + std::to_string(i);
    r.ref_id = "r" + std::to_string(i);
    r.iou = rng.uniform(0.4, 1.0);
    for (Measure m : rep.measures) {
      double ref = rng.uniform(3, 12);
      r.height_ref[m] = ref;
      r.height_est[m] = ref + rng.normal() * 0.3;
      r.wall_ref[m] = ref * 40;
      r.wall_est[m] = r.height_est[m] * 40 + rng.normal();
    }
    r.area_ref = rng.uniform(50, 200);
    r.area_est = *r.area_ref + rng.normal() * 5;
    rep.records.push_back(std::move(r));
  }
  eval::summarize(rep);
  return rep;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("pixel_metrics hand-computed case") {
  auto m = eval::pixel_metrics({4, 2, 4, 90});
  CHECK(*m.iou == doctest::Approx(0.4));
  CHECK(*m.dice == doctest::Approx(4.0 / 7.0));
  CHECK(*m.accuracy == doctest::Approx(0.94));
  CHECK(*m.precision == doctest::Approx(2.0 / 3.0));
  CHECK(*m.recall == doctest::Approx(0.5));
}

TEST_CASE("pixel_metrics edges") {
  auto perfect = eval::pixel_metrics({50, 0, 0, 50});
  CHECK(*perfect.iou == 1.0);
  CHECK(*perfect.dice == 1.0);
  CHECK(*perfect.accuracy == 1.0);

  auto zero_tp = eval::pixel_metrics({0, 3, 4, 93});
  CHECK(*zero_tp.iou == 0.0);
  CHECK(*zero_tp.dice == 0.0);

  auto empty = eval::pixel_metrics({0, 0, 0, 10});
  CHECK_FALSE(empty.iou.has_value());  // undefined, not zero
  CHECK_FALSE(empty.precision.has_value());
  CHECK(empty.accuracy.has_value());
}

TEST_CASE("dice equals 2iou/(1+iou) identically") {
  testutil::Rand rng(13);
  for (int i = 0; i < 10000; ++i) {
    ConfusionCounts c{rng.uniform_int(1000) + 1, rng.uniform_int(1000),
                      rng.uniform_int(1000), rng.uniform_int(1000)};
    auto m = eval::pixel_metrics(c);
    CHECK(std::abs(*m.dice - 2.0 * *m.iou / (1.0 + *m.iou)) < 1e-12);
  }
}

TEST_CASE("mean_ci_t matches the t-table on 1..5") {
  std::vector<double> v = {1, 2, 3, 4, 5};
  auto ci = eval::mean_ci_t(v, 0.95);
  CHECK(ci.mean == doctest::Approx(3.0));
  CHECK(ci.half_width == doctest::Approx(1.963).epsilon(0.001));
  CHECK(eval::t_quantile(0.975, 4) == doctest::Approx(2.776).epsilon(1e-3));

  std::vector<double> flat = {2, 2, 2, 2};
  CHECK(eval::mean_ci_t(flat, 0.95).half_width == 0.0);
  CHECK_THROWS_AS(eval::mean_ci_t(std::vector<double>{1.0}, 0.95), Error);
}

TEST_CASE("mean_ci_t half-width shrinks as 1/sqrt(n) toward the normal") {
  std::vector<double> base = {1, 2, 3, 4, 5};
  std::vector<double> big;
  for (int k = 0; k < 400; ++k) big.insert(big.end(), base.begin(), base.end());
  auto ci = eval::mean_ci_t(big, 0.95);
  double sd = std::sqrt(2.5);  // sample variance of the pattern, ~n large
  double normal_hw = 1.959964 * sd / std::sqrt(2000.0);
  CHECK(std::abs(ci.half_width - normal_hw) / normal_hw < 0.02);
}

TEST_CASE("match_buildings greedy one-to-one") {
  std::vector<Footprint> set = {square(0, 0, 10, "a"), square(20, 0, 8, "b")};
  auto matches = eval::match_buildings(set, set);
  REQUIRE(matches.size() == 2);
  for (const auto& m : matches) {
    CHECK(m.ref_id.has_value());
    CHECK(m.iou == doctest::Approx(1.0));
  }

  // one prediction overlapping two references takes the higher IoU
  std::vector<Footprint> pred = {square(0, 0, 10, "p")};
  std::vector<Footprint> refs = {square(1, 1, 10, "near"),
                                 square(8, 8, 10, "far")};
  auto m2 = eval::match_buildings(pred, refs);
  REQUIRE(m2.size() == 1);
  CHECK(*m2[0].ref_id == "near");

  auto m3 = eval::match_buildings(pred, {});
  REQUIRE(m3.size() == 1);
  CHECK_FALSE(m3[0].ref_id.has_value());
  CHECK(m3[0].iou == 0.0);
}

TEST_CASE("match_buildings is one-to-one and order invariant") {
  testutil::Rand rng(3);
  std::vector<Footprint> preds, refs;
  for (int i = 0; i < 6; ++i) {
    preds.push_back(square(i * 15.0, 0, 10, "p" + std::to_string(i)));
    refs.push_back(square(i * 15.0 + rng.uniform(-2, 2), rng.uniform(-2, 2),
                          10, "r" + std::to_string(i)));
  }
  auto fwd = eval::match_buildings(preds, refs);
  std::set<std::string> used;
  for (const auto& m : fwd)
    if (m.ref_id) CHECK(used.insert(*m.ref_id).second);

  std::vector<Footprint> shuffled = refs;
  std::reverse(shuffled.begin(), shuffled.end());
  auto rev = eval::match_buildings(preds, shuffled);
  for (std::size_t i = 0; i < fwd.size(); ++i) {
    CHECK(fwd[i].pred_id == rev[i].pred_id);
    CHECK(fwd[i].ref_id == rev[i].ref_id);
    CHECK(fwd[i].iou == rev[i].iou);
  }
}

TEST_CASE("error_stats") {
  std::vector<double> est = {1, 3}, ref = {2, 2};
  auto s = eval::error_stats(est, ref);
  CHECK(s.rmse == doctest::Approx(1.0));
  CHECK(s.mae == doctest::Approx(1.0));
  CHECK_FALSE(s.r2.has_value());  // zero reference variance

  std::vector<double> same = {1, 2, 3};
  auto s2 = eval::error_stats(same, same);
  CHECK(s2.rmse == 0.0);
  CHECK(s2.mae == 0.0);
  CHECK(*s2.r2 == doctest::Approx(1.0));

  CHECK_THROWS_AS(eval::error_stats(est, same), Error);
}

TEST_CASE("rmse >= mae always") {
  testutil::Rand rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 2 + rng.uniform_int(60);
    std::vector<double> est(n), ref(n);
    for (int i = 0; i < n; ++i) {
      ref[i] = rng.uniform(0, 10);
      est[i] = ref[i] + rng.normal();
    }
    auto s = eval::error_stats(est, ref);
    CHECK(s.rmse >= s.mae - 1e-12);
  }
}

TEST_CASE("height_error_histogram uses the fixed ten bins") {
  auto hist = eval::height_error_histogram(std::vector<double>{0.05, 0.05, 1.2});
  REQUIRE(hist.size() == 10);
  CHECK(hist[0].first == "E < 0.1");
  CHECK(hist[0].second == doctest::Approx(66.6667).epsilon(1e-3));
  CHECK(hist[6].first == "1 < E < 1.5");
  CHECK(hist[6].second == doctest::Approx(33.3333).epsilon(1e-3));
  CHECK(hist[9].first == "5 < E");

  const char* expected[] = {"E < 0.1",        "0.1 < E < 0.2",
                            "0.2 < E < 0.35", "0.35 < E < 0.5",
                            "0.5 < E < 0.75", "0.75 < E < 1",
                            "1 < E < 1.5",    "1.5 < E < 2.5",
                            "2.5 < E < 5",    "5 < E"};
  for (int i = 0; i < 10; ++i) CHECK(hist[i].first == expected[i]);

  auto zeros = eval::height_error_histogram(std::vector<double>{0, 0, 0});
  CHECK(zeros[0].second == doctest::Approx(100.0));
  CHECK(eval::height_error_histogram({}).empty());

  double total = 0.0;
  for (const auto& [label, pct] : hist) total += pct;
  CHECK(total == doctest::Approx(100.0).epsilon(1e-9));
}

TEST_CASE("iou_binned_mae") {
  std::vector<BuildingMatch> matches = {{"a", "ra", 0.92}, {"b", "rb", 0.93}};
  std::map<std::string, double> errs = {{"a", 0.1}, {"b", -0.1}};
  auto pts = eval::iou_binned_mae(matches, errs);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].first == doctest::Approx(0.95));
  CHECK(pts[0].second == doctest::Approx(0.1));
  CHECK(eval::iou_binned_mae({}, {}).empty());
}

TEST_CASE("pearson_r") {
  std::vector<double> x = {1, 2, 3, 4};
  std::vector<double> y = {3, 5, 7, 9};  // y = 2x + 1
  CHECK(*eval::pearson_r(x, y) == doctest::Approx(1.0));
  std::vector<double> neg = {-1, -2, -3, -4};
  CHECK(*eval::pearson_r(x, neg) == doctest::Approx(-1.0));
  std::vector<double> flat = {5, 5, 5, 5};
  CHECK_FALSE(eval::pearson_r(x, flat).has_value());
}

TEST_CASE("confusion counts from grids agree with polygon iou") {
  Footprint a = square(0, 0, 10, "a");
  Footprint b = square(2.5, 0, 10, "b");
  raster::Grid templ = raster::Grid::filled({-2.0, -2.0}, 0.05, 340, 300, 0.0);
  auto ca = raster::rasterize_polygon(a, templ);
  auto cb = raster::rasterize_polygon(b, templ);
  auto counts = eval::confusion_from_grids(ca, cb);
  auto pm = eval::pixel_metrics(counts);
  double piou = geometry::polygon_iou(a, b, 0.05);
  CHECK(std::abs(*pm.iou - piou) < 0.01);  // one boundary-cell layer
}

TEST_CASE("write_eval_report emits 4 CSVs and 3 SVGs, byte stable") {
  auto rep = tiny_report();
  auto dir1 = std::filesystem::temp_directory_path() / "evalrep1";
  auto dir2 = std::filesystem::temp_directory_path() / "evalrep2";
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
  eval::write_eval_report(rep, dir1.string());
  eval::write_eval_report(rep, dir2.string());

  const char* names[] = {"matches.csv",
                         "error_stats.csv",
                         "height_error_histogram.csv",
                         "iou_binned_mae.csv",
                         "iou_histogram.svg",
                         "iou_vs_mae.svg",
                         "wall_vs_height_error.svg"};
  for (const char* n : names) {
    CAPTURE(n);
    REQUIRE(std::filesystem::exists(dir1 / n));
    CHECK(slurp(dir1 / n) == slurp(dir2 / n));
  }

  // histogram percentages re-sum to 100 after fixed-precision rendering
  std::istringstream in(slurp(dir1 / "height_error_histogram.csv"));
  std::string line;
  std::getline(in, line);  // header
  std::map<std::string, double> sums;
  while (std::getline(in, line)) {
    auto c1 = line.find(',');
    auto c2 = line.rfind(',');
    sums[line.substr(0, c1)] += std::stod(line.substr(c2 + 1));
  }
  REQUIRE(sums.size() == 2);
  for (const auto& [measure, total] : sums)
    CHECK(std::abs(total - 100.0) <= 0.02);
}

TEST_CASE("summarize aggregates the records") {
  auto rep = tiny_report();
  CHECK(rep.unmatched_preds == 0);
  REQUIRE(rep.iou_ci.has_value());
  CHECK(rep.iou_ci->n == 12);
  REQUIRE(rep.height_stats.count(Measure::median));
  CHECK(rep.height_stats.at(Measure::median).n == 12);
  REQUIRE(rep.wall_height_corr.count(Measure::median));
}

}  // TEST_SUITE
