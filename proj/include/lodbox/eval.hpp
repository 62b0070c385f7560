#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lodbox/geometry.hpp"
#include "lodbox/heights.hpp"
#include "lodbox/raster.hpp"

namespace lodbox::eval {

struct ConfusionCounts {
  long long tp = 0, fp = 0, fn = 0, tn = 0;
  long long total() const { return tp + fp + fn + tn; }
};

/// Undefined metrics (zero denominators) stay nullopt, never 0.
struct PixelMetrics {
  std::optional<double> iou, dice, accuracy, precision, recall;
};

PixelMetrics pixel_metrics(const ConfusionCounts& c);

/// Counts over two aligned binary grids (prediction vs reference); nodata
/// cells in either grid are skipped.
ConfusionCounts confusion_from_grids(const raster::Grid& pred,
                                     const raster::Grid& ref);

struct MetricCI {
  double mean = 0.0;
  double half_width = 0.0;
  std::size_t n = 0;
  double confidence = 0.95;
};

/// mean +- t_{(1+c)/2, n-1} * s / sqrt(n); needs n >= 2.
MetricCI mean_ci_t(std::span<const double> samples, double confidence = 0.95);

/// Student-t inverse CDF.
double t_quantile(double p, int dof);

struct BuildingMatch {
  std::string pred_id;
  std::optional<std::string> ref_id;
  double iou = 0.0;
};

/// Greedy one-to-one maximum-IoU matching over bounding-box candidates;
/// deterministic tie-break by (pred_id, ref_id). Unmatched predictions get
/// no ref and iou 0.
std::vector<BuildingMatch> match_buildings(
    const std::vector<geometry::Footprint>& preds,
    const std::vector<geometry::Footprint>& refs, double iou_cell = 0.05);

struct ErrorStats {
  double rmse = 0.0;
  double mae = 0.0;
  std::optional<double> r2;  // undefined when the reference has no variance
  std::size_t n = 0;
};

ErrorStats error_stats(std::span<const double> est, std::span<const double> ref);

/// The fixed ten-bin |error| histogram ("E < 0.1" ... "5 < E") as
/// (label, percent) pairs; empty input gives an empty histogram.
std::vector<std::pair<std::string, double>> height_error_histogram(
    std::span<const double> errors);

/// MAE of |error| within IoU bins of width 0.1 centered at 0.05..0.95;
/// empty bins are omitted. Unmatched entries (no ref) are skipped.
std::vector<std::pair<double, double>> iou_binned_mae(
    const std::vector<BuildingMatch>& matches,
    const std::map<std::string, double>& error_by_pred);

std::optional<double> pearson_r(std::span<const double> x,
                                std::span<const double> y);

/// Paired per-building values; errors are est - ref throughout.
struct BuildingRecord {
  std::string pred_id;
  std::optional<std::string> ref_id;
  double iou = 0.0;
  std::map<heights::Measure, double> height_est, height_ref;
  std::optional<double> area_est, area_ref;
  std::map<heights::Measure, double> wall_est, wall_ref;
};

struct EvalReport {
  std::vector<heights::Measure> measures;
  std::vector<BuildingRecord> records;
  std::size_t unmatched_preds = 0;
  std::size_t unmatched_refs = 0;
  std::map<heights::Measure, ErrorStats> height_stats;
  std::map<heights::Measure, ErrorStats> wall_stats;
  std::optional<ErrorStats> area_stats;
  std::map<heights::Measure, std::vector<std::pair<std::string, double>>>
      height_hist;
  std::map<heights::Measure, std::vector<std::pair<double, double>>> binned_mae;
  std::map<heights::Measure, std::optional<double>> wall_height_corr;
  std::optional<MetricCI> iou_ci;
};

/// Fill every aggregate of the report from its records.
void summarize(EvalReport& report);

/// Four CSV tables plus three self-contained SVG plots under `dir`;
/// byte-identical for identical input.
void write_eval_report(const EvalReport& report, const std::string& dir);

}  // namespace lodbox::eval
