#include "lodbox/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "lodbox/errors.hpp"

namespace lodbox::pointcloud {

using geometry::Box2;
using geometry::Footprint;
using geometry::Vec2;

PointCloud::PointCloud(std::vector<LidarPoint> points, double index_cell)
    : points_(std::move(points)), cell_(index_cell) {
  if (cell_ <= 0.0) throw Error("index cell must be > 0");
  if (points_.empty()) return;
  bounds_.min = {points_[0].x, points_[0].y};
  bounds_.max = bounds_.min;
  bounds_.zmin = bounds_.zmax = points_[0].z;
  for (const auto& p : points_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
      throw Error("point coordinates must be finite");
    bounds_.min.x = std::min(bounds_.min.x, p.x);
    bounds_.min.y = std::min(bounds_.min.y, p.y);
    bounds_.max.x = std::max(bounds_.max.x, p.x);
    bounds_.max.y = std::max(bounds_.max.y, p.y);
    bounds_.zmin = std::min(bounds_.zmin, p.z);
    bounds_.zmax = std::max(bounds_.zmax, p.z);
  }
  ncols_ = std::max(
      1, static_cast<int>(std::ceil((bounds_.max.x - bounds_.min.x) / cell_)));
  nrows_ = std::max(
      1, static_cast<int>(std::ceil((bounds_.max.y - bounds_.min.y) / cell_)));
  cells_.resize(static_cast<std::size_t>(ncols_) * nrows_);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    int c = std::min(ncols_ - 1,
                     static_cast<int>((points_[i].x - bounds_.min.x) / cell_));
    int r = std::min(nrows_ - 1,
                     static_cast<int>((points_[i].y - bounds_.min.y) / cell_));
    cells_[static_cast<std::size_t>(r) * ncols_ + c].push_back(
        static_cast<std::uint32_t>(i));
  }
}

std::vector<std::size_t> PointCloud::query_box(Box2 box) const {
  std::vector<std::size_t> out;
  if (points_.empty()) return out;
  int c0 = std::clamp(
      static_cast<int>(std::floor((box.min.x - bounds_.min.x) / cell_)), 0,
      ncols_ - 1);
  int c1 = std::clamp(
      static_cast<int>(std::floor((box.max.x - bounds_.min.x) / cell_)), 0,
      ncols_ - 1);
  int r0 = std::clamp(
      static_cast<int>(std::floor((box.min.y - bounds_.min.y) / cell_)), 0,
      nrows_ - 1);
  int r1 = std::clamp(
      static_cast<int>(std::floor((box.max.y - bounds_.min.y) / cell_)), 0,
      nrows_ - 1);
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      for (std::uint32_t i : cells_[static_cast<std::size_t>(r) * ncols_ + c]) {
        const auto& p = points_[i];
        if (p.x >= box.min.x && p.x <= box.max.x && p.y >= box.min.y &&
            p.y <= box.max.y)
          out.push_back(i);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

PointCloud parse_xyzc(const std::string& text) {
  std::vector<LidarPoint> pts;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double x, y, z;
    long cls;
    if (!(ls >> x)) continue;  // blank or comment-only line
    if (!(ls >> y >> z >> cls))
      throw ParseError("xyzc line " + std::to_string(lineno) +
                       ": expected 'x y z class'");
    std::string rest;
    if (ls >> rest)
      throw ParseError("xyzc line " + std::to_string(lineno) +
                       ": trailing data '" + rest + "'");
    if (cls < 0 || cls > 255)
      throw ParseError("xyzc line " + std::to_string(lineno) +
                       ": class out of range [0,255]");
    pts.push_back({x, y, z, static_cast<std::uint8_t>(cls)});
  }
  return PointCloud(std::move(pts));
}

namespace {

template <typename T>
T read_le(const std::vector<char>& buf, std::size_t off,
          const std::string& what) {
  if (off + sizeof(T) > buf.size())
    throw ParseError("las: truncated reading " + what + " at byte " +
                     std::to_string(off));
  T v;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  return v;
}

PointCloud parse_las(const std::vector<char>& buf) {
  if (buf.size() < 227) throw ParseError("las: file shorter than any header");
  if (std::memcmp(buf.data(), "LASF", 4) != 0)
    throw ParseError("las: bad signature at byte 0 (expected 'LASF')");
  auto ver_major = read_le<std::uint8_t>(buf, 24, "version major");
  auto ver_minor = read_le<std::uint8_t>(buf, 25, "version minor");
  if (ver_major != 1 || ver_minor < 2 || ver_minor > 4)
    throw ParseError("las: unsupported version " + std::to_string(ver_major) +
                     "." + std::to_string(ver_minor));
  auto header_size = read_le<std::uint16_t>(buf, 94, "header size");
  auto point_offset = read_le<std::uint32_t>(buf, 96, "point data offset");
  auto prf_raw = read_le<std::uint8_t>(buf, 104, "point record format");
  std::uint8_t prf = prf_raw & 0x3f;  // mask compression bits
  auto rec_len = read_le<std::uint16_t>(buf, 105, "point record length");
  std::uint64_t n = read_le<std::uint32_t>(buf, 107, "legacy point count");
  if (ver_minor == 4 && n == 0 && header_size >= 255)
    n = read_le<std::uint64_t>(buf, 247, "point count");
  double sx = read_le<double>(buf, 131, "x scale");
  double sy = read_le<double>(buf, 139, "y scale");
  double sz = read_le<double>(buf, 147, "z scale");
  double ox = read_le<double>(buf, 155, "x offset");
  double oy = read_le<double>(buf, 163, "y offset");
  double oz = read_le<double>(buf, 171, "z offset");

  std::size_t class_off;
  std::size_t min_len;
  switch (prf) {
    case 0:
      class_off = 15;
      min_len = 20;
      break;
    case 1:
      class_off = 15;
      min_len = 28;
      break;
    case 6:
      class_off = 16;
      min_len = 30;
      break;
    default:
      throw ParseError("las: unsupported point record format " +
                       std::to_string(prf));
  }
  if (rec_len < min_len)
    throw ParseError("las: record length " + std::to_string(rec_len) +
                     " too small for format " + std::to_string(prf));

  std::vector<LidarPoint> pts;
  pts.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    std::size_t off = point_offset + i * rec_len;
    auto xi = read_le<std::int32_t>(buf, off, "point x");
    auto yi = read_le<std::int32_t>(buf, off + 4, "point y");
    auto zi = read_le<std::int32_t>(buf, off + 8, "point z");
    auto cls = read_le<std::uint8_t>(buf, off + class_off, "classification");
    if (prf <= 1) cls &= 0x1f;  // low 5 bits; high bits are flag bits
    pts.push_back({xi * sx + ox, yi * sy + oy, zi * sz + oz, cls});
  }
  return PointCloud(std::move(pts));
}

}  // namespace

PointCloud load_points(const std::string& path, PointFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::vector<char> buf((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
  try {
    if (format == PointFormat::las) return parse_las(buf);
    return parse_xyzc(std::string(buf.begin(), buf.end()));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_xyzc(const PointCloud& pc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  char line[128];
  for (const auto& p : pc.points()) {
    std::snprintf(line, sizeof(line), "%.3f %.3f %.3f %d\n", p.x, p.y, p.z,
                  static_cast<int>(p.classification));
    out << line;
  }
}

PointCloud filter_by_class(const PointCloud& pc, const std::set<int>& classes) {
  std::vector<LidarPoint> pts;
  for (const auto& p : pc.points())
    if (classes.count(p.classification)) pts.push_back(p);
  return PointCloud(std::move(pts), pc.index_cell());
}

PointCloud clip_to_footprint(const PointCloud& pc, const Footprint& fp) {
  std::vector<LidarPoint> pts;
  for (std::size_t i : pc.query_box(geometry::bounding_box(fp))) {
    const auto& p = pc.points()[i];
    if (geometry::point_in_polygon({p.x, p.y}, fp)) pts.push_back(p);
  }
  return PointCloud(std::move(pts), pc.index_cell());
}

PointCloud ground_ring_points(const PointCloud& pc, const Footprint& fp,
                              double ring_width) {
  if (ring_width <= 0.0) throw Error("ring width must be > 0");
  Footprint search = fp;
  try {
    search = buffer_polygon(fp, ring_width);
  } catch (const BufferError&) {
    // keep the unbuffered footprint; interior ground points still count
  }
  PointCloud ground = filter_by_class(pc, {kClassGround});
  return clip_to_footprint(ground, search);
}

}  // namespace lodbox::pointcloud
