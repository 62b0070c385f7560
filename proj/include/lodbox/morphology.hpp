#pragma once

#include <map>
#include <string>
#include <vector>

#include "lodbox/heights.hpp"
#include "lodbox/reconstruct.hpp"

namespace lodbox::morphology {

/// Per-building morphological parameters; wall areas and volumes are kept
/// per height measure.
struct MorphRecord {
  std::string id;
  double area = 0.0;       // m²
  double perimeter = 0.0;  // m
  struct PerMeasure {
    double height = 0.0;
    double wall_area = 0.0;
    double volume = 0.0;
  };
  std::map<heights::Measure, PerMeasure> by_measure;
  std::vector<std::string> flags;
};

/// Area from the footprint, wall area by summing the slope-classified wall
/// faces, volume by the divergence theorem. The solid must carry a measure
/// tag.
MorphRecord morphology_of(const reconstruct::Lod1Solid& solid);

/// Merge records of the same building (one per measure) into one row set.
std::vector<MorphRecord> merge_records(const std::vector<MorphRecord>& records);

/// CSV `id,area_m2,perimeter_m,measure,height_m,wall_area_m2,volume_m3,flags`
/// with one row per (building, measure), 3-decimal fixed rendering, sorted
/// by id then measure.
void write_morphology_csv(const std::vector<MorphRecord>& records,
                          const std::string& path);
std::string morphology_csv(const std::vector<MorphRecord>& records);

}  // namespace lodbox::morphology
