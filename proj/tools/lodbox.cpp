#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lodbox/errors.hpp"
#include "lodbox/eval.hpp"
#include "lodbox/footprint.hpp"
#include "lodbox/geojson.hpp"
#include "lodbox/geometry.hpp"
#include "lodbox/heights.hpp"
#include "lodbox/morphology.hpp"
#include "lodbox/pointcloud.hpp"
#include "lodbox/raster.hpp"
#include "lodbox/reconstruct.hpp"
#include "lodbox/synth.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace lodbox;

namespace {

constexpr const char* kVersion = "0.1.0";

pointcloud::PointCloud load_any_points(const std::string& path,
                                       const std::string& format) {
  pointcloud::PointFormat f;
  if (format == "las")
    f = pointcloud::PointFormat::las;
  else if (format == "xyzc")
    f = pointcloud::PointFormat::xyzc_text;
  else
    f = path.ends_with(".las") ? pointcloud::PointFormat::las
                               : pointcloud::PointFormat::xyzc_text;
  return pointcloud::load_points(path, f);
}

std::set<heights::Measure> parse_measures(const std::string& csv) {
  std::set<heights::Measure> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto m = heights::measure_from_name(item);
    if (!m) throw Error("unknown measure '" + item + "'");
    out.insert(*m);
  }
  if (out.empty()) throw Error("no measures given");
  return out;
}

void write_manifest(const fs::path& path, json manifest) {
  manifest["version"] = kVersion;
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << manifest.dump(2) << "\n";
}

void log_stage(const std::string& msg) { std::cerr << "[lodbox] " << msg << "\n"; }

// ---- rasterize -------------------------------------------------------------

int cmd_rasterize(const std::string& in, const std::string& out, double cell,
                  const std::string& format, int threads) {
  log_stage("loading points from " + in);
  auto pc = load_any_points(in, format);
  log_stage("triangulating " + std::to_string(pc.size()) + " points");
  raster::Grid dsm = raster::rasterize_dsm(pc, cell, threads);
  raster::write_grid(dsm, out);
  log_stage("wrote " + out);
  write_manifest(out + ".manifest.json",
                 {{"command", "rasterize"},
                  {"inputs", {{"points", in}}},
                  {"parameters",
                   {{"cell", cell}, {"format", format}, {"threads", threads}}},
                  {"outputs", {out}},
                  {"skipped", json::array()}});
  return 0;
}

// ---- footprints ------------------------------------------------------------

int cmd_footprints(const std::string& in, const std::string& out,
                   const footprint::PostprocessConfig& cfg,
                   const std::string& connectivity) {
  log_stage("reading mask " + in);
  raster::Grid mask = raster::read_grid(in);
  log_stage("postprocessing");
  footprint::PostprocessResult res = footprint::postprocess(mask, cfg);
  geojson::write_footprints(res.footprints, out);
  log_stage("wrote " + std::to_string(res.footprints.size()) +
            " footprints to " + out);
  json flags = json::object();
  for (const auto& [id, fl] : res.flags) flags[id] = fl;
  write_manifest(out + ".manifest.json",
                 {{"command", "footprints"},
                  {"inputs", {{"mask", in}}},
                  {"parameters",
                   {{"min_area", cfg.min_area},
                    {"buffer", cfg.buffer_dist},
                    {"simplify_tol", cfg.simplify_tol},
                    {"snap_angle", cfg.snap_angle_tol},
                    {"connectivity", connectivity}}},
                  {"outputs", {out}},
                  {"flags", flags},
                  {"skipped", json::array()}});
  return 0;
}

// ---- reconstruct -----------------------------------------------------------

int cmd_reconstruct(const std::string& points_path,
                    const std::string& footprints_path,
                    const std::string& out_dir, const std::string& measures_csv,
                    const std::string& formats_csv,
                    const heights::HeightsOptions& hopts) {
  auto measures = parse_measures(measures_csv);
  std::set<std::string> formats;
  {
    std::stringstream ss(formats_csv);
    std::string item;
    while (std::getline(ss, item, ',')) formats.insert(item);
  }
  for (const auto& f : formats)
    if (f != "cityjson" && f != "obj") throw Error("unknown format '" + f + "'");

  log_stage("loading points from " + points_path);
  auto pc = load_any_points(points_path, "auto");
  auto fps = geojson::read_footprints(footprints_path);
  log_stage("reconstructing " + std::to_string(fps.size()) + " footprints");

  fs::create_directories(out_dir);
  std::map<heights::Measure, std::vector<reconstruct::Lod1Solid>> solids;
  std::vector<morphology::MorphRecord> records;
  json skipped = json::array();
  json flags = json::object();

  for (const auto& fp : fps) {
    heights::BuildingHeights bh;
    try {
      bh = heights::building_heights(pc, fp, measures, hopts);
    } catch (const NoPointsError&) {
      skipped.push_back({{"id", fp.id}, {"reason", "no building points"}});
      continue;
    }
    if (!bh.flags.empty()) flags[fp.id] = bh.flags;
    for (heights::Measure m : measures) {
      if (!(bh.top_elev[m] > bh.base_elev)) {
        skipped.push_back({{"id", fp.id},
                           {"reason", "degenerate height"},
                           {"measure", heights::measure_name(m)}});
        continue;
      }
      auto solid = reconstruct::extrude(fp, bh.base_elev, bh.top_elev[m], m);
      records.push_back(morphology::morphology_of(solid));
      solids[m].push_back(std::move(solid));
    }
  }

  json outputs = json::array();
  for (auto& [m, list] : solids) {
    std::sort(list.begin(), list.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });
    std::string stem = "model_" + heights::measure_name(m);
    if (formats.count("cityjson")) {
      std::string path = (fs::path(out_dir) / (stem + ".city.json")).string();
      reconstruct::write_cityjson(list, path);
      outputs.push_back(path);
    }
    if (formats.count("obj")) {
      std::string path = (fs::path(out_dir) / (stem + ".obj")).string();
      reconstruct::write_obj(list, path);
      outputs.push_back(path);
    }
  }
  std::string morph_path = (fs::path(out_dir) / "morphology.csv").string();
  morphology::write_morphology_csv(morphology::merge_records(records),
                                   morph_path);
  outputs.push_back(morph_path);
  log_stage("wrote models and morphology to " + out_dir);

  std::string measures_list;
  for (auto m : measures)
    measures_list += (measures_list.empty() ? "" : ",") + heights::measure_name(m);
  write_manifest(fs::path(out_dir) / "manifest.json",
                 {{"command", "reconstruct"},
                  {"inputs",
                   {{"points", points_path}, {"footprints", footprints_path}}},
                  {"parameters",
                   {{"measures", measures_list},
                    {"formats", formats_csv},
                    {"ground_ring", hopts.ground_ring_width},
                    {"mode_bin", hopts.mode_bin},
                    {"building_class", hopts.building_class}}},
                  {"outputs", outputs},
                  {"flags", flags},
                  {"skipped", skipped}});
  return 0;
}

// ---- evaluate --------------------------------------------------------------

int cmd_evaluate(const std::string& pred_path, const std::string& ref_path,
                 const std::string& points_path, const std::string& out_dir,
                 const std::string& measures_csv, double iou_cell,
                 bool matched_only, const heights::HeightsOptions& hopts) {
  auto measures = parse_measures(measures_csv);
  auto preds = geojson::read_footprints(pred_path);
  auto refs = geojson::read_footprints(ref_path);
  log_stage("loading points from " + points_path);
  auto pc = load_any_points(points_path, "auto");
  log_stage("matching " + std::to_string(preds.size()) + " predictions to " +
            std::to_string(refs.size()) + " references");

  auto matches = eval::match_buildings(preds, refs, iou_cell);
  std::map<std::string, const geometry::Footprint*> ref_by_id;
  for (const auto& r : refs) ref_by_id[r.id] = &r;
  std::map<std::string, const geometry::Footprint*> pred_by_id;
  for (const auto& p : preds) pred_by_id[p.id] = &p;

  eval::EvalReport report;
  report.measures.assign(measures.begin(), measures.end());
  json skipped = json::array();

  auto measure_heights =
      [&](const geometry::Footprint& fp) -> std::optional<heights::BuildingHeights> {
    try {
      return heights::building_heights(pc, fp, measures, hopts);
    } catch (const NoPointsError&) {
      return std::nullopt;
    }
  };

  std::set<std::string> matched_ref_ids;
  for (const auto& m : matches) {
    eval::BuildingRecord rec;
    rec.pred_id = m.pred_id;
    rec.ref_id = m.ref_id;
    rec.iou = m.iou;
    if (m.ref_id) {
      matched_ref_ids.insert(*m.ref_id);
      const auto& pred_fp = *pred_by_id[m.pred_id];
      const auto& ref_fp = *ref_by_id[*m.ref_id];
      rec.area_est = geometry::polygon_area(pred_fp);
      rec.area_ref = geometry::polygon_area(ref_fp);
      auto hp = measure_heights(pred_fp);
      auto hr = measure_heights(ref_fp);
      if (hp && hr) {
        for (heights::Measure mm : measures) {
          rec.height_est[mm] = hp->height[mm];
          rec.height_ref[mm] = hr->height[mm];
          rec.wall_est[mm] =
              geometry::polygon_perimeter(pred_fp) * hp->height[mm];
          rec.wall_ref[mm] =
              geometry::polygon_perimeter(ref_fp) * hr->height[mm];
        }
      } else {
        skipped.push_back({{"id", m.pred_id},
                           {"reason", hp ? "no points in reference footprint"
                                         : "no points in predicted footprint"}});
      }
    }
    report.records.push_back(std::move(rec));
  }
  report.unmatched_refs = refs.size() - matched_ref_ids.size();

  if (!matched_only) {
    // count every unmatched reference as a miss with zero estimated height
    for (const auto& r : refs) {
      if (matched_ref_ids.count(r.id)) continue;
      auto hr = measure_heights(r);
      if (!hr) continue;
      eval::BuildingRecord rec;
      rec.pred_id = "(miss:" + r.id + ")";
      rec.ref_id = r.id;
      rec.iou = 0.0;
      rec.area_est = 0.0;
      rec.area_ref = geometry::polygon_area(r);
      for (heights::Measure mm : measures) {
        rec.height_est[mm] = 0.0;
        rec.height_ref[mm] = hr->height[mm];
        rec.wall_est[mm] = 0.0;
        rec.wall_ref[mm] = geometry::polygon_perimeter(r) * hr->height[mm];
      }
      report.records.push_back(std::move(rec));
    }
  }

  eval::summarize(report);
  eval::write_eval_report(report, out_dir);
  log_stage("wrote evaluation report to " + out_dir);

  std::string measures_list;
  for (auto m : measures)
    measures_list += (measures_list.empty() ? "" : ",") + heights::measure_name(m);
  write_manifest(fs::path(out_dir) / "manifest.json",
                 {{"command", "evaluate"},
                  {"inputs",
                   {{"pred", pred_path},
                    {"ref", ref_path},
                    {"points", points_path}}},
                  {"parameters",
                   {{"measures", measures_list},
                    {"iou_cell", iou_cell},
                    {"matched_only", matched_only}}},
                  {"unmatched_preds", report.unmatched_preds},
                  {"unmatched_refs", report.unmatched_refs},
                  {"skipped", skipped}});
  return 0;
}

// ---- synth -----------------------------------------------------------------

int cmd_synth(const std::string& spec_path, const std::string& out_dir,
              const std::string& perturb_ious, std::uint64_t perturb_seed,
              const std::string& perturb_mode) {
  synth::SceneSpec spec = synth::read_scene_spec(spec_path);
  log_stage("generating scene (" + std::to_string(spec.n_buildings) +
            " buildings)");
  auto [pc, truth] = synth::generate_scene(spec);

  fs::create_directories(out_dir);
  std::string points_path = (fs::path(out_dir) / "points.xyzc").string();
  pointcloud::write_xyzc(pc, points_path);

  std::vector<geometry::Footprint> fps;
  for (const auto& b : truth.buildings) fps.push_back(b.footprint);
  std::string fps_path = (fs::path(out_dir) / "footprints.geojson").string();
  geojson::write_footprints(fps, fps_path);

  std::string truth_path = (fs::path(out_dir) / "truth.csv").string();
  {
    std::ofstream out(truth_path);
    out << synth::truth_csv(truth);
  }
  json outputs = {points_path, fps_path, truth_path};
  json achieved = json::object();

  if (!perturb_ious.empty()) {
    synth::PerturbOptions popts;
    if (perturb_mode == "mixed") popts.mode = synth::PerturbMode::mixed;
    else if (perturb_mode == "translate") popts.mode = synth::PerturbMode::translate;
    else if (perturb_mode == "scale") popts.mode = synth::PerturbMode::scale;
    else if (perturb_mode == "edge") popts.mode = synth::PerturbMode::edge;
    else throw Error("unknown perturb mode '" + perturb_mode + "'");

    std::stringstream ss(perturb_ious);
    std::string item;
    int tidx = 0;
    while (std::getline(ss, item, ',')) {
      double target = std::stod(item);
      std::vector<geometry::Footprint> perturbed;
      json per_building = json::object();
      for (std::size_t i = 0; i < fps.size(); ++i) {
        auto res = synth::perturb_to_iou(
            fps[i], target,
            perturb_seed * 1000003ULL + tidx * 1009ULL + i, popts);
        res.footprint.source = geometry::Source::predicted;
        per_building[fps[i].id] = res.achieved_iou;
        perturbed.push_back(std::move(res.footprint));
      }
      char name[64];
      std::snprintf(name, sizeof(name), "perturbed_iou_%.2f.geojson", target);
      std::string path = (fs::path(out_dir) / name).string();
      geojson::write_footprints(perturbed, path);
      outputs.push_back(path);
      achieved[item] = per_building;
      ++tidx;
    }
  }
  log_stage("wrote synthetic scene to " + out_dir);

  write_manifest(fs::path(out_dir) / "manifest.json",
                 {{"command", "synth"},
                  {"inputs", {{"spec", spec_path}}},
                  {"parameters",
                   {{"perturb_ious", perturb_ious},
                    {"perturb_seed", perturb_seed},
                    {"perturb_mode", perturb_mode},
                    {"seed", spec.seed}}},
                  {"outputs", outputs},
                  {"achieved_iou", achieved},
                  {"skipped", json::array()}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LOD1 building reconstruction from LiDAR and footprint masks"};
  app.require_subcommand(1);

  // rasterize
  auto* rast = app.add_subcommand("rasterize", "Point cloud to DSM grid");
  std::string r_in, r_out, r_format = "auto";
  double r_cell = 0.23;
  int r_threads = 1;
  rast->add_option("--in", r_in, "input points (.las or xyzc text)")
      ->required();
  rast->add_option("--out", r_out, "output ESRI ASCII grid")->required();
  rast->add_option("--cell", r_cell, "grid resolution in meters");
  rast->add_option("--format", r_format, "las|xyzc|auto");
  rast->add_option("--threads", r_threads, "interpolation threads");

  // footprints
  auto* fpcmd = app.add_subcommand("footprints", "Mask to vector footprints");
  std::string f_in, f_out, f_conn = "eight";
  footprint::PostprocessConfig f_cfg;
  fpcmd->add_option("--in", f_in, "binary mask grid")->required();
  fpcmd->add_option("--out", f_out, "output GeoJSON")->required();
  fpcmd->add_option("--min-area", f_cfg.min_area, "area threshold in m2");
  fpcmd->add_option("--buffer", f_cfg.buffer_dist, "buffer distance in m");
  fpcmd->add_option("--simplify-tol", f_cfg.simplify_tol,
                    "simplification tolerance in m");
  fpcmd->add_option("--snap-angle", f_cfg.snap_angle_tol,
                    "snap window in degrees");
  fpcmd->add_option("--connectivity", f_conn, "eight|four");

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct", "Extrude LOD1 models");
  std::string c_points, c_fps, c_out, c_measures = "median,p90",
              c_formats = "cityjson";
  heights::HeightsOptions c_hopts;
  rec->add_option("--points", c_points, "classified points")->required();
  rec->add_option("--footprints", c_fps, "footprints GeoJSON")->required();
  rec->add_option("--out-dir", c_out, "output directory")->required();
  rec->add_option("--measures", c_measures,
                  "comma list of maximum,range,mode,median,p90");
  rec->add_option("--formats", c_formats, "comma list of cityjson,obj");
  rec->add_option("--ground-ring", c_hopts.ground_ring_width,
                  "ground search ring width in m");
  rec->add_option("--mode-bin", c_hopts.mode_bin, "mode histogram bin in m");
  rec->add_option("--building-class", c_hopts.building_class,
                  "ASPRS class code for buildings");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Compare predictions to reference");
  std::string e_pred, e_ref, e_points, e_out, e_measures = "median,p90";
  double e_iou_cell = 0.05;
  bool e_all_refs = false;
  heights::HeightsOptions e_hopts;
  ev->add_option("--pred", e_pred, "predicted footprints GeoJSON")->required();
  ev->add_option("--ref", e_ref, "reference footprints GeoJSON")->required();
  ev->add_option("--points", e_points, "classified points")->required();
  ev->add_option("--out-dir", e_out, "output directory")->required();
  ev->add_option("--measures", e_measures, "height measures");
  ev->add_option("--iou-cell", e_iou_cell, "IoU rasterization cell in m");
  ev->add_flag("--all-refs", e_all_refs,
               "count unmatched references as zero-height misses");
  ev->add_option("--building-class", e_hopts.building_class,
                 "ASPRS class code for buildings");

  // synth
  auto* sy = app.add_subcommand("synth", "Generate a synthetic scene");
  std::string s_spec, s_out, s_ious, s_mode = "mixed";
  std::uint64_t s_seed = 1;
  sy->add_option("--spec", s_spec, "scene spec file")->required();
  sy->add_option("--out-dir", s_out, "output directory")->required();
  sy->add_option("--perturb-ious", s_ious,
                 "comma list of target IoUs for perturbed footprint sets");
  sy->add_option("--perturb-seed", s_seed, "perturbation seed");
  sy->add_option("--perturb-mode", s_mode, "mixed|translate|scale|edge");

  CLI11_PARSE(app, argc, argv);

  try {
    if (rast->parsed()) {
      if (r_cell <= 0.0) throw Error("rasterize: --cell must be > 0");
      if (r_threads < 1) throw Error("rasterize: --threads must be >= 1");
      return cmd_rasterize(r_in, r_out, r_cell, r_format, r_threads);
    }
    if (fpcmd->parsed()) {
      if (f_cfg.min_area < 0 || f_cfg.buffer_dist < 0 ||
          f_cfg.simplify_tol < 0 || f_cfg.snap_angle_tol < 0)
        throw Error("footprints: config values must be non-negative");
      if (f_conn == "four")
        f_cfg.connectivity = raster::Connectivity::four;
      else if (f_conn != "eight")
        throw Error("footprints: --connectivity must be eight|four");
      return cmd_footprints(f_in, f_out, f_cfg, f_conn);
    }
    if (rec->parsed()) {
      if (c_hopts.mode_bin <= 0 || c_hopts.ground_ring_width <= 0)
        throw Error("reconstruct: options must be positive");
      return cmd_reconstruct(c_points, c_fps, c_out, c_measures, c_formats,
                             c_hopts);
    }
    if (ev->parsed()) {
      if (e_iou_cell <= 0) throw Error("evaluate: --iou-cell must be > 0");
      return cmd_evaluate(e_pred, e_ref, e_points, e_out, e_measures,
                          e_iou_cell, !e_all_refs, e_hopts);
    }
    if (sy->parsed())
      return cmd_synth(s_spec, s_out, s_ious, s_seed, s_mode);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
