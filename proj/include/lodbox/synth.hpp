#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lodbox/geometry.hpp"
#include "lodbox/pointcloud.hpp"

namespace lodbox::synth {

enum class FootprintKind { rect, l_shape };
enum class RoofKind { flat, gabled };
enum class TerrainKind { flat, ramp };

struct SceneSpec {
  double extent_x = 100.0, extent_y = 100.0;  // m
  int n_buildings = 10;
  std::vector<FootprintKind> kinds = {FootprintKind::rect};
  double height_min = 3.0, height_max = 12.0;  // eave height above base
  RoofKind roof = RoofKind::flat;
  double gable_rise_min = 1.0, gable_rise_max = 3.0;  // ridge above eave
  double density = 8.0;   // points per m²
  double z_sigma = 0.02;  // Gaussian noise on elevations
  TerrainKind terrain = TerrainKind::flat;
  double ramp_slope = 0.02;  // dz/dx when terrain == ramp
  double side_min = 6.0, side_max = 16.0;  // building side lengths
  double min_gap = 1.0;                    // clearance between buildings
  std::uint64_t seed = 1;
};

struct BuildingTruth {
  geometry::Footprint footprint;  // tagged Source::reference
  FootprintKind kind = FootprintKind::rect;
  RoofKind roof = RoofKind::flat;
  double base = 0.0;   // ground elevation under the building
  double eave = 0.0;   // flat-roof elevation, or gable eave
  double ridge = 0.0;  // equals eave for flat roofs
  double area = 0.0;
  double perimeter = 0.0;
};

struct GroundTruth {
  std::vector<BuildingTruth> buildings;
};

/// Deterministic scene: ground points (class 2) over the free terrain and
/// roof points (class 6) per building, both Poisson-sampled at `density`
/// with z noise; no point falls within 0.1 m of a footprint edge.
std::pair<pointcloud::PointCloud, GroundTruth> generate_scene(
    const SceneSpec& spec);

/// Plain-text `key = value` configuration ('#' comments); unknown keys are
/// an error naming the key.
SceneSpec parse_scene_spec(const std::string& text);
SceneSpec read_scene_spec(const std::string& path);

std::string truth_csv(const GroundTruth& truth);

enum class PerturbMode { mixed, translate, scale, edge };

struct PerturbOptions {
  PerturbMode mode = PerturbMode::mixed;
  std::optional<geometry::Vec2> direction;  // translation direction override
  double iou_cell = 0.05;
};

struct PerturbResult {
  geometry::Footprint footprint;
  double achieved_iou = 1.0;
};

/// Seeded random translation / scaling / single-edge displacement whose
/// magnitude is bisected until polygon_iou(result, fp) lands in
/// target ± 0.02. Throws SynthError when the window stays unreachable.
PerturbResult perturb_to_iou(const geometry::Footprint& fp, double target,
                             std::uint64_t seed,
                             const PerturbOptions& opts = {});

/// Convex hull of two footprints: the merged-adjacent-buildings failure
/// mode of segmentation outputs.
geometry::Footprint merge_footprints(const geometry::Footprint& a,
                                     const geometry::Footprint& b);

}  // namespace lodbox::synth
