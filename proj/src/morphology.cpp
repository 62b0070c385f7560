#include "lodbox/morphology.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "lodbox/errors.hpp"

namespace lodbox::morphology {

using heights::Measure;
using reconstruct::Face;
using reconstruct::FaceKind;
using reconstruct::Lod1Solid;

MorphRecord morphology_of(const Lod1Solid& solid) {
  if (!solid.measure)
    throw Error("morphology_of needs a measure-tagged solid (id=" + solid.id +
                ")");
  MorphRecord rec;
  rec.id = solid.id;
  rec.area = geometry::polygon_area(solid.footprint);
  rec.perimeter = geometry::polygon_perimeter(solid.footprint);

  double wall_area = 0.0;
  for (const Face& f : reconstruct::faces(solid))
    if (f.kind == FaceKind::wall) wall_area += f.area;

  MorphRecord::PerMeasure pm;
  pm.height = solid.top - solid.base;
  pm.wall_area = wall_area;
  pm.volume = reconstruct::solid_volume(solid);
  rec.by_measure[*solid.measure] = pm;
  return rec;
}

std::vector<MorphRecord> merge_records(
    const std::vector<MorphRecord>& records) {
  std::vector<MorphRecord> out;
  std::map<std::string, std::size_t> by_id;
  for (const auto& rec : records) {
    auto it = by_id.find(rec.id);
    if (it == by_id.end()) {
      by_id[rec.id] = out.size();
      out.push_back(rec);
      continue;
    }
    MorphRecord& dst = out[it->second];
    for (const auto& [m, pm] : rec.by_measure) dst.by_measure[m] = pm;
    for (const auto& f : rec.flags)
      if (std::find(dst.flags.begin(), dst.flags.end(), f) == dst.flags.end())
        dst.flags.push_back(f);
  }
  return out;
}

std::string morphology_csv(const std::vector<MorphRecord>& records) {
  std::vector<const MorphRecord*> sorted;
  sorted.reserve(records.size());
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](const MorphRecord* a, const MorphRecord* b) {
              return a->id < b->id;
            });

  std::ostringstream out;
  out << "id,area_m2,perimeter_m,measure,height_m,wall_area_m2,volume_m3,"
         "flags\n";
  char buf[256];
  for (const MorphRecord* rec : sorted) {
    std::string flags;
    for (const auto& f : rec->flags) {
      if (!flags.empty()) flags += ';';
      flags += f;
    }
    for (Measure m : heights::all_measures()) {
      auto it = rec->by_measure.find(m);
      if (it == rec->by_measure.end()) continue;
      const auto& pm = it->second;
      std::snprintf(buf, sizeof(buf), "%s,%.3f,%.3f,%s,%.3f,%.3f,%.3f,%s\n",
                    rec->id.c_str(), rec->area, rec->perimeter,
                    heights::measure_name(m).c_str(), pm.height, pm.wall_area,
                    pm.volume, flags.c_str());
      out << buf;
    }
  }
  return out.str();
}

void write_morphology_csv(const std::vector<MorphRecord>& records,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << morphology_csv(records);
}

}  // namespace lodbox::morphology
