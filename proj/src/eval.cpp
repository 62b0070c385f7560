#include "lodbox/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "lodbox/errors.hpp"

namespace lodbox::eval {

using geometry::Footprint;
using heights::Measure;

PixelMetrics pixel_metrics(const ConfusionCounts& c) {
  if (c.tp < 0 || c.fp < 0 || c.fn < 0 || c.tn < 0)
    throw Error("confusion counts must be non-negative");
  PixelMetrics m;
  if (c.tp + c.fp + c.fn > 0)
    m.iou = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp + c.fn);
  if (2 * c.tp + c.fp + c.fn > 0)
    m.dice = static_cast<double>(2 * c.tp) /
             static_cast<double>(2 * c.tp + c.fp + c.fn);
  if (c.total() > 0)
    m.accuracy =
        static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  if (c.tp + c.fp > 0)
    m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0)
    m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  return m;
}

ConfusionCounts confusion_from_grids(const raster::Grid& pred,
                                     const raster::Grid& ref) {
  if (pred.ncols != ref.ncols || pred.nrows != ref.nrows ||
      std::abs(pred.cell - ref.cell) > 1e-9 ||
      std::abs(pred.origin.x - ref.origin.x) > 1e-9 ||
      std::abs(pred.origin.y - ref.origin.y) > 1e-9)
    throw GridError("confusion_from_grids: grids are not aligned");
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    double p = pred.values[i], r = ref.values[i];
    if (p == pred.nodata || r == ref.nodata) continue;
    if (p == 1.0 && r == 1.0)
      ++c.tp;
    else if (p == 1.0 && r == 0.0)
      ++c.fp;
    else if (p == 0.0 && r == 1.0)
      ++c.fn;
    else
      ++c.tn;
  }
  return c;
}

double t_quantile(double p, int dof) {
  if (dof < 1) throw Error("t_quantile needs dof >= 1");
  boost::math::students_t dist(static_cast<double>(dof));
  return boost::math::quantile(dist, p);
}

MetricCI mean_ci_t(std::span<const double> samples, double confidence) {
  if (samples.size() < 2)
    throw Error("mean_ci_t needs at least 2 samples");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw Error("confidence must be in (0, 1)");
  std::size_t n = samples.size();
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  double sd = std::sqrt(ss / static_cast<double>(n - 1));
  double sem = sd / std::sqrt(static_cast<double>(n));
  double t = t_quantile(0.5 * (1.0 + confidence), static_cast<int>(n) - 1);
  return {mean, t * sem, n, confidence};
}

std::vector<BuildingMatch> match_buildings(const std::vector<Footprint>& preds,
                                           const std::vector<Footprint>& refs,
                                           double iou_cell) {
  struct Candidate {
    double iou;
    std::size_t pred, ref;
  };
  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    geometry::Box2 bi = geometry::bounding_box(preds[i]);
    for (std::size_t j = 0; j < refs.size(); ++j) {
      if (!bi.intersects(geometry::bounding_box(refs[j]))) continue;
      double iou = geometry::polygon_iou(preds[i], refs[j], iou_cell);
      if (iou > 0.0) cands.push_back({iou, i, j});
    }
  }
  std::sort(cands.begin(), cands.end(), [&](const Candidate& a,
                                            const Candidate& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (preds[a.pred].id != preds[b.pred].id)
      return preds[a.pred].id < preds[b.pred].id;
    return refs[a.ref].id < refs[b.ref].id;
  });

  std::vector<char> pred_used(preds.size(), 0), ref_used(refs.size(), 0);
  std::vector<BuildingMatch> out(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i)
    out[i] = {preds[i].id, std::nullopt, 0.0};
  for (const Candidate& c : cands) {
    if (pred_used[c.pred] || ref_used[c.ref]) continue;
    pred_used[c.pred] = 1;
    ref_used[c.ref] = 1;
    out[c.pred] = {preds[c.pred].id, refs[c.ref].id, c.iou};
  }
  return out;
}

ErrorStats error_stats(std::span<const double> est,
                       std::span<const double> ref) {
  if (est.size() != ref.size())
    throw Error("error_stats: length mismatch");
  if (est.empty()) throw Error("error_stats: empty input");
  std::size_t n = est.size();
  double se = 0.0, ae = 0.0, ref_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = est[i] - ref[i];
    se += d * d;
    ae += std::abs(d);
    ref_mean += ref[i];
  }
  ref_mean /= static_cast<double>(n);
  double ss_ref = 0.0;
  for (double r : ref) ss_ref += (r - ref_mean) * (r - ref_mean);
  ErrorStats s;
  s.rmse = std::sqrt(se / static_cast<double>(n));
  s.mae = ae / static_cast<double>(n);
  s.n = n;
  if (ss_ref > 0.0) s.r2 = 1.0 - se / ss_ref;
  return s;
}

namespace {

// Bin edges and labels exactly as the height-error frequency table uses them.
const double kHistEdges[] = {0.0, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.5, 5.0};
const char* kHistLabels[] = {
    "E < 0.1",        "0.1 < E < 0.2", "0.2 < E < 0.35", "0.35 < E < 0.5",
    "0.5 < E < 0.75", "0.75 < E < 1",  "1 < E < 1.5",    "1.5 < E < 2.5",
    "2.5 < E < 5",    "5 < E"};

}  // namespace

std::vector<std::pair<std::string, double>> height_error_histogram(
    std::span<const double> errors) {
  if (errors.empty()) return {};
  std::array<std::size_t, 10> counts{};
  for (double e : errors) {
    double a = std::abs(e);
    std::size_t bin = 9;
    for (std::size_t k = 1; k < 10; ++k) {
      if (a < kHistEdges[k]) {
        bin = k - 1;
        break;
      }
    }
    ++counts[bin];
  }
  std::vector<std::pair<std::string, double>> out;
  out.reserve(10);
  for (std::size_t k = 0; k < 10; ++k)
    out.emplace_back(kHistLabels[k], 100.0 * static_cast<double>(counts[k]) /
                                         static_cast<double>(errors.size()));
  return out;
}

std::vector<std::pair<double, double>> iou_binned_mae(
    const std::vector<BuildingMatch>& matches,
    const std::map<std::string, double>& error_by_pred) {
  std::array<double, 10> sums{};
  std::array<std::size_t, 10> counts{};
  for (const auto& m : matches) {
    if (!m.ref_id) continue;
    auto it = error_by_pred.find(m.pred_id);
    if (it == error_by_pred.end()) continue;
    int bin = std::min(9, static_cast<int>(m.iou / 0.1));
    sums[bin] += std::abs(it->second);
    ++counts[bin];
  }
  std::vector<std::pair<double, double>> out;
  for (int k = 0; k < 10; ++k)
    if (counts[k] > 0)
      out.emplace_back(0.1 * k + 0.05, sums[k] / static_cast<double>(counts[k]));
  return out;
}

std::optional<double> pearson_r(std::span<const double> x,
                                std::span<const double> y) {
  if (x.size() != y.size()) throw Error("pearson_r: length mismatch");
  if (x.size() < 2) throw Error("pearson_r: need at least 2 samples");
  std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

void summarize(EvalReport& report) {
  report.unmatched_preds = 0;
  for (const auto& r : report.records)
    if (!r.ref_id) ++report.unmatched_preds;

  std::vector<double> ious;
  for (const auto& r : report.records)
    if (r.ref_id) ious.push_back(r.iou);
  report.iou_ci.reset();
  if (ious.size() >= 2) report.iou_ci = mean_ci_t(ious);

  std::vector<BuildingMatch> matches;
  for (const auto& r : report.records)
    matches.push_back({r.pred_id, r.ref_id, r.iou});

  report.height_stats.clear();
  report.wall_stats.clear();
  report.height_hist.clear();
  report.binned_mae.clear();
  report.wall_height_corr.clear();
  report.area_stats.reset();

  for (Measure m : report.measures) {
    std::vector<double> est, ref, errs, werrs_abs, herrs_abs;
    std::vector<double> west, wref;
    std::map<std::string, double> err_by_pred;
    for (const auto& r : report.records) {
      if (!r.ref_id) continue;
      auto ie = r.height_est.find(m);
      auto ir = r.height_ref.find(m);
      if (ie == r.height_est.end() || ir == r.height_ref.end()) continue;
      est.push_back(ie->second);
      ref.push_back(ir->second);
      double err = ie->second - ir->second;
      errs.push_back(err);
      err_by_pred[r.pred_id] = err;
      auto iwe = r.wall_est.find(m);
      auto iwr = r.wall_ref.find(m);
      if (iwe != r.wall_est.end() && iwr != r.wall_ref.end()) {
        west.push_back(iwe->second);
        wref.push_back(iwr->second);
        herrs_abs.push_back(std::abs(err));
        werrs_abs.push_back(std::abs(iwe->second - iwr->second));
      }
    }
    if (!est.empty()) {
      report.height_stats[m] = error_stats(est, ref);
      report.height_hist[m] = height_error_histogram(errs);
      report.binned_mae[m] = iou_binned_mae(matches, err_by_pred);
    }
    if (!west.empty()) report.wall_stats[m] = error_stats(west, wref);
    if (herrs_abs.size() >= 2)
      report.wall_height_corr[m] = pearson_r(herrs_abs, werrs_abs);
  }

  std::vector<double> aest, aref;
  for (const auto& r : report.records) {
    if (!r.ref_id || !r.area_est || !r.area_ref) continue;
    aest.push_back(*r.area_est);
    aref.push_back(*r.area_ref);
  }
  if (!aest.empty()) report.area_stats = error_stats(aest, aref);
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) {
  return v ? fmt(*v) : "NA";
}

std::string matches_csv(const EvalReport& rep) {
  std::ostringstream out;
  out << "pred_id,ref_id,iou,area_est,area_ref,area_err";
  for (Measure m : rep.measures) {
    std::string name = heights::measure_name(m);
    out << ",height_est_" << name << ",height_ref_" << name << ",height_err_"
        << name << ",wall_est_" << name << ",wall_ref_" << name
        << ",wall_err_" << name;
  }
  out << "\n";
  for (const auto& r : rep.records) {
    out << r.pred_id << "," << (r.ref_id ? *r.ref_id : "") << ","
        << fmt(r.iou);
    out << "," << fmt_opt(r.area_est) << "," << fmt_opt(r.area_ref);
    if (r.area_est && r.area_ref)
      out << "," << fmt(*r.area_est - *r.area_ref);
    else
      out << ",NA";
    for (Measure m : rep.measures) {
      auto he = r.height_est.find(m);
      auto hr = r.height_ref.find(m);
      bool have_h = he != r.height_est.end() && hr != r.height_ref.end();
      out << "," << (he != r.height_est.end() ? fmt(he->second) : "NA");
      out << "," << (hr != r.height_ref.end() ? fmt(hr->second) : "NA");
      out << "," << (have_h ? fmt(he->second - hr->second) : "NA");
      auto we = r.wall_est.find(m);
      auto wr = r.wall_ref.find(m);
      bool have_w = we != r.wall_est.end() && wr != r.wall_ref.end();
      out << "," << (we != r.wall_est.end() ? fmt(we->second) : "NA");
      out << "," << (wr != r.wall_ref.end() ? fmt(wr->second) : "NA");
      out << "," << (have_w ? fmt(we->second - wr->second) : "NA");
    }
    out << "\n";
  }
  return out.str();
}

std::string stats_csv(const EvalReport& rep) {
  std::ostringstream out;
  out << "quantity,rmse,mae,r2,n\n";
  auto row = [&](const std::string& name, const ErrorStats& s) {
    out << name << "," << fmt(s.rmse) << "," << fmt(s.mae) << ","
        << fmt_opt(s.r2) << "," << s.n << "\n";
  };
  for (Measure m : rep.measures) {
    auto it = rep.height_stats.find(m);
    if (it != rep.height_stats.end())
      row("height_" + heights::measure_name(m), it->second);
  }
  if (rep.area_stats) row("area", *rep.area_stats);
  for (Measure m : rep.measures) {
    auto it = rep.wall_stats.find(m);
    if (it != rep.wall_stats.end())
      row("wall_area_" + heights::measure_name(m), it->second);
  }
  return out.str();
}

std::string hist_csv(const EvalReport& rep) {
  std::ostringstream out;
  out << "measure,bin,percent\n";
  for (Measure m : rep.measures) {
    auto it = rep.height_hist.find(m);
    if (it == rep.height_hist.end()) continue;
    for (const auto& [label, pct] : it->second)
      out << heights::measure_name(m) << "," << label << "," << fmt(pct)
          << "\n";
  }
  return out.str();
}

std::string binned_csv(const EvalReport& rep) {
  std::ostringstream out;
  out << "measure,iou_bin_center,mae\n";
  for (Measure m : rep.measures) {
    auto it = rep.binned_mae.find(m);
    if (it == rep.binned_mae.end()) continue;
    for (const auto& [center, mae] : it->second)
      out << heights::measure_name(m) << "," << fmt(center) << "," << fmt(mae)
          << "\n";
  }
  return out.str();
}

// ---- minimal deterministic SVG plotting ----------------------------------

constexpr int kW = 640, kH = 480, kMargin = 56;
const char* kSeriesColors[] = {"#1f6f8b", "#c1554d", "#4d9a51",
                               "#8b6caf", "#c98a2e"};

std::string svg_head(const std::string& title) {
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
      << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW << " " << kH
      << "\">\n";
  out << "<rect width=\"" << kW << "\" height=\"" << kH
      << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << kW / 2
      << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"15\">"
      << title << "</text>\n";
  return out.str();
}

std::string svg_axes(const std::string& xlabel, const std::string& ylabel) {
  std::ostringstream out;
  out << "<line x1=\"" << kMargin << "\" y1=\"" << kH - kMargin << "\" x2=\""
      << kW - 16 << "\" y2=\"" << kH - kMargin
      << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  out << "<line x1=\"" << kMargin << "\" y1=\"" << kH - kMargin << "\" x2=\""
      << kMargin << "\" y2=\"32\" stroke=\"black\" stroke-width=\"1\"/>\n";
  out << "<text x=\"" << (kW + kMargin) / 2 << "\" y=\"" << kH - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\">"
      << xlabel << "</text>\n";
  out << "<text x=\"16\" y=\"" << kH / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\" transform=\"rotate(-90 16 "
      << kH / 2 << ")\">" << ylabel << "</text>\n";
  return out.str();
}

double sx(double t) { return kMargin + t * (kW - kMargin - 16); }
double sy(double t) { return (kH - kMargin) - t * (kH - kMargin - 32); }

std::string iou_histogram_svg(const EvalReport& rep) {
  std::array<std::size_t, 10> counts{};
  std::size_t total = 0;
  for (const auto& r : rep.records) {
    if (!r.ref_id) continue;
    int bin = std::min(9, static_cast<int>(r.iou / 0.1));
    ++counts[bin];
    ++total;
  }
  std::size_t peak = 1;
  for (auto c : counts) peak = std::max(peak, c);

  std::string title = "IoU distribution (matched buildings)";
  if (rep.iou_ci) {
    char buf[80];
    std::snprintf(buf, sizeof(buf), ": mean %.3f ± %.3f", rep.iou_ci->mean,
                  rep.iou_ci->half_width);
    title += buf;
  }
  std::ostringstream out;
  out << svg_head(title) << svg_axes("IoU", "buildings");
  char buf[256];
  for (int k = 0; k < 10; ++k) {
    double x0 = sx(k / 10.0) + 2;
    double x1 = sx((k + 1) / 10.0) - 2;
    double y = sy(static_cast<double>(counts[k]) / static_cast<double>(peak));
    std::snprintf(buf, sizeof(buf),
                  "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" "
                  "fill=\"#1f6f8b\"/>\n",
                  x0, y, x1 - x0, sy(0.0) - y);
    out << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.2f\" y=\"%d\" text-anchor=\"middle\" "
                  "font-family=\"sans-serif\" font-size=\"10\">%.1f</text>\n",
                  0.5 * (x0 + x1), kH - kMargin + 14, 0.1 * k + 0.05);
    out << buf;
  }
  out << "</svg>\n";
  return out.str();
}

std::string iou_vs_mae_svg(const EvalReport& rep) {
  double peak = 1e-9;
  for (const auto& [m, pts] : rep.binned_mae)
    for (const auto& [c, mae] : pts) peak = std::max(peak, mae);

  std::ostringstream out;
  out << svg_head("Height MAE by IoU bin")
      << svg_axes("IoU bin center", "MAE (m)");
  char buf[256];
  int si = 0;
  for (Measure m : rep.measures) {
    auto it = rep.binned_mae.find(m);
    if (it == rep.binned_mae.end()) continue;
    const char* color = kSeriesColors[si % 5];
    std::ostringstream path;
    for (std::size_t i = 0; i < it->second.size(); ++i) {
      auto [c, mae] = it->second[i];
      std::snprintf(buf, sizeof(buf), "%s%.2f %.2f", i ? " L" : "M", sx(c),
                    sy(mae / peak));
      path << buf;
      std::snprintf(buf, sizeof(buf),
                    "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\"/>\n",
                    sx(c), sy(mae / peak), color);
      out << buf;
    }
    out << "<path d=\"" << path.str() << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\"/>\n";
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" "
                  "font-size=\"11\" fill=\"%s\">%s</text>\n",
                  kW - 140, 48 + 16 * si, color,
                  heights::measure_name(m).c_str());
    out << buf;
    ++si;
  }
  out << "</svg>\n";
  return out.str();
}

std::string wall_corr_svg(const EvalReport& rep) {
  double px = 1e-9, py = 1e-9;
  for (const auto& r : rep.records) {
    if (!r.ref_id) continue;
    for (Measure m : rep.measures) {
      auto he = r.height_est.find(m), hr = r.height_ref.find(m);
      auto we = r.wall_est.find(m), wr = r.wall_ref.find(m);
      if (he == r.height_est.end() || hr == r.height_ref.end() ||
          we == r.wall_est.end() || wr == r.wall_ref.end())
        continue;
      px = std::max(px, std::abs(he->second - hr->second));
      py = std::max(py, std::abs(we->second - wr->second));
    }
  }
  std::ostringstream out;
  out << svg_head("Wall-area error vs height error")
      << svg_axes("|height error| (m)", "|wall-area error| (m2)");
  char buf[256];
  int si = 0;
  for (Measure m : rep.measures) {
    const char* color = kSeriesColors[si % 5];
    for (const auto& r : rep.records) {
      if (!r.ref_id) continue;
      auto he = r.height_est.find(m), hr = r.height_ref.find(m);
      auto we = r.wall_est.find(m), wr = r.wall_ref.find(m);
      if (he == r.height_est.end() || hr == r.height_ref.end() ||
          we == r.wall_est.end() || wr == r.wall_ref.end())
        continue;
      std::snprintf(buf, sizeof(buf),
                    "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2.5\" fill=\"%s\" "
                    "fill-opacity=\"0.6\"/>\n",
                    sx(std::abs(he->second - hr->second) / px),
                    sy(std::abs(we->second - wr->second) / py), color);
      out << buf;
    }
    std::string label = heights::measure_name(m);
    auto it = rep.wall_height_corr.find(m);
    if (it != rep.wall_height_corr.end() && it->second) {
      char rbuf[48];
      std::snprintf(rbuf, sizeof(rbuf), " (r=%.2f)", *it->second);
      label += rbuf;
    }
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" "
                  "font-size=\"11\" fill=\"%s\">%s</text>\n",
                  kW - 180, 48 + 16 * si, color, label.c_str());
    out << buf;
    ++si;
  }
  out << "</svg>\n";
  return out.str();
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + p.string());
  out << content;
}

}  // namespace

void write_eval_report(const EvalReport& report, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::filesystem::path base(dir);
  write_file(base / "matches.csv", matches_csv(report));
  write_file(base / "error_stats.csv", stats_csv(report));
  write_file(base / "height_error_histogram.csv", hist_csv(report));
  write_file(base / "iou_binned_mae.csv", binned_csv(report));
  write_file(base / "iou_histogram.svg", iou_histogram_svg(report));
  write_file(base / "iou_vs_mae.svg", iou_vs_mae_svg(report));
  write_file(base / "wall_vs_height_error.svg", wall_corr_svg(report));
}

}  // namespace lodbox::eval
