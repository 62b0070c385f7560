#include "lodbox/raster.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "delaunay.hpp"
#include "lodbox/errors.hpp"

namespace lodbox::raster {

using geometry::Footprint;
using geometry::Ring;
using geometry::Vec2;

bool Grid::is_binary() const {
  for (double v : values)
    if (v != 0.0 && v != 1.0 && v != nodata) return false;
  return true;
}

Grid Grid::filled(Vec2 origin, double cell, int ncols, int nrows,
                  double value) {
  Grid g;
  g.origin = origin;
  g.cell = cell;
  g.ncols = ncols;
  g.nrows = nrows;
  g.values.assign(static_cast<std::size_t>(ncols) * nrows, value);
  return g;
}

Grid rasterize_dsm(const pointcloud::PointCloud& pc, double cell,
                   int threads) {
  if (cell <= 0.0) throw GridError("cell size must be > 0");
  std::vector<Vec2> pts;
  std::vector<double> zs;
  pts.reserve(pc.size());
  zs.reserve(pc.size());
  for (const auto& p : pc.points()) {
    pts.push_back({p.x, p.y});
    zs.push_back(p.z);
  }
  detail::Delaunay tin(pts, zs);

  const auto& b = pc.bounds();
  Grid g;
  g.cell = cell;
  g.origin = {b.min.x + cell / 2, b.min.y + cell / 2};
  g.ncols = std::max(1, static_cast<int>(std::ceil((b.max.x - b.min.x) / cell)));
  g.nrows = std::max(1, static_cast<int>(std::ceil((b.max.y - b.min.y) / cell)));
  g.values.assign(static_cast<std::size_t>(g.ncols) * g.nrows, g.nodata);

  auto run_rows = [&](int row0, int row1) {
    int hint = tin.any_triangle();
    for (int row = row0; row < row1; ++row) {
      for (int col = 0; col < g.ncols; ++col) {
        double z;
        if (tin.sample(g.center(col, row), hint, z)) g.at(col, row) = z;
      }
    }
  };

  threads = std::max(1, threads);
  if (threads == 1 || g.nrows < 2 * threads) {
    run_rows(0, g.nrows);
  } else {
    std::vector<std::thread> pool;
    int chunk = (g.nrows + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      int r0 = t * chunk;
      int r1 = std::min(g.nrows, r0 + chunk);
      if (r0 < r1) pool.emplace_back(run_rows, r0, r1);
    }
    for (auto& th : pool) th.join();
  }
  return g;
}

Grid majority_filter(const Grid& g) {
  if (!g.is_binary())
    throw GridError("majority_filter requires a binary grid");
  Grid out = g;
  for (int r = 0; r < g.nrows; ++r) {
    for (int c = 0; c < g.ncols; ++c) {
      double center = g.at(c, r);
      if (center == g.nodata) continue;
      int ones = 0, zeros = 0;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          int rr = r + dr, cc = c + dc;
          if (rr < 0 || rr >= g.nrows || cc < 0 || cc >= g.ncols) continue;
          double v = g.at(cc, rr);
          if (v == 1.0)
            ++ones;
          else if (v == 0.0)
            ++zeros;
        }
      }
      if (ones > zeros)
        out.at(c, r) = 1.0;
      else if (zeros > ones)
        out.at(c, r) = 0.0;
      // tie: keep the center value
    }
  }
  return out;
}

namespace {

struct CornerEdge {
  int ax, ay, bx, by;  // directed, in cell-corner coordinates
};

// Directed boundary edges keep the component on the left, so outer loops
// come out CCW and hole loops CW.
std::vector<std::vector<Vec2>> trace_component(
    const Grid& g, const std::vector<std::pair<int, int>>& cells,
    const std::vector<int>& label, int comp, Connectivity conn) {
  auto in_comp = [&](int c, int r) {
    if (c < 0 || c >= g.ncols || r < 0 || r >= g.nrows) return false;
    return label[static_cast<std::size_t>(r) * g.ncols + c] == comp;
  };

  std::vector<CornerEdge> edges;
  for (auto [c, r] : cells) {
    if (!in_comp(c - 1, r)) edges.push_back({c, r + 1, c, r});
    if (!in_comp(c, r - 1)) edges.push_back({c, r, c + 1, r});
    if (!in_comp(c + 1, r)) edges.push_back({c + 1, r, c + 1, r + 1});
    if (!in_comp(c, r + 1)) edges.push_back({c + 1, r + 1, c, r + 1});
  }

  // index outgoing edges by start corner
  std::map<std::pair<int, int>, std::vector<int>> by_start;
  for (std::size_t i = 0; i < edges.size(); ++i)
    by_start[{edges[i].ax, edges[i].ay}].push_back(static_cast<int>(i));

  std::vector<char> used(edges.size(), 0);
  std::vector<std::vector<Vec2>> loops;
  for (std::size_t start = 0; start < edges.size(); ++start) {
    if (used[start]) continue;
    std::vector<std::pair<int, int>> corners;
    int cur = static_cast<int>(start);
    while (!used[cur]) {
      used[cur] = 1;
      corners.push_back({edges[cur].ax, edges[cur].ay});
      auto it = by_start.find({edges[cur].bx, edges[cur].by});
      int din_x = edges[cur].bx - edges[cur].ax;
      int din_y = edges[cur].by - edges[cur].ay;
      int next = -1;
      for (int cand : it->second) {
        if (used[cand] && cand != static_cast<int>(start)) continue;
        int dx = edges[cand].bx - edges[cand].ax;
        int dy = edges[cand].by - edges[cand].ay;
        if (dx == -din_x && dy == -din_y) continue;  // no U-turns
        if (next < 0) {
          next = cand;
        } else {
          // saddle corner: 8-connectivity hugs the inside (right turn),
          // 4-connectivity keeps diagonal cells apart (left turn)
          int dpx = edges[next].bx - edges[next].ax;
          int dpy = edges[next].by - edges[next].ay;
          long turn_next = static_cast<long>(din_x) * dpy - din_y * dpx;
          long turn_cand = static_cast<long>(din_x) * dy - din_y * dx;
          bool prefer_cand = (conn == Connectivity::eight) ? turn_cand < turn_next
                                                           : turn_cand > turn_next;
          if (prefer_cand) next = cand;
        }
      }
      if (next < 0 || next == static_cast<int>(start)) break;
      cur = next;
    }

    // merge straight runs and convert to world coordinates
    std::vector<Vec2> loop;
    std::size_t n = corners.size();
    for (std::size_t i = 0; i < n; ++i) {
      auto [px, py] = corners[(i + n - 1) % n];
      auto [cx, cy] = corners[i];
      auto [nx, ny] = corners[(i + 1) % n];
      if ((cx - px) * (ny - cy) - (cy - py) * (nx - cx) == 0) continue;
      loop.push_back({g.origin.x + (cx - 0.5) * g.cell,
                      g.origin.y + (cy - 0.5) * g.cell});
    }
    if (loop.size() >= 3) loops.push_back(std::move(loop));
  }
  return loops;
}

}  // namespace

std::vector<Footprint> polygonize(const Grid& g, Connectivity conn) {
  if (!g.is_binary()) throw GridError("polygonize requires a binary grid");
  std::vector<int> label(g.values.size(), -1);
  std::vector<Footprint> out;

  const int off8[8][2] = {{1, 0},  {-1, 0}, {0, 1},  {0, -1},
                          {1, 1},  {1, -1}, {-1, 1}, {-1, -1}};
  int n_off = conn == Connectivity::eight ? 8 : 4;

  int comp = 0;
  for (int r = 0; r < g.nrows; ++r) {
    for (int c = 0; c < g.ncols; ++c) {
      if (g.at(c, r) != 1.0 ||
          label[static_cast<std::size_t>(r) * g.ncols + c] >= 0)
        continue;
      std::vector<std::pair<int, int>> cells;
      std::vector<std::pair<int, int>> stack{{c, r}};
      label[static_cast<std::size_t>(r) * g.ncols + c] = comp;
      while (!stack.empty()) {
        auto [cc, cr] = stack.back();
        stack.pop_back();
        cells.push_back({cc, cr});
        for (int k = 0; k < n_off; ++k) {
          int nc = cc + off8[k][0], nr = cr + off8[k][1];
          if (nc < 0 || nc >= g.ncols || nr < 0 || nr >= g.nrows) continue;
          std::size_t idx = static_cast<std::size_t>(nr) * g.ncols + nc;
          if (g.at(nc, nr) == 1.0 && label[idx] < 0) {
            label[idx] = comp;
            stack.push_back({nc, nr});
          }
        }
      }

      auto loops = trace_component(g, cells, label, comp, conn);
      Ring outer;
      std::vector<Ring> holes;
      bool have_outer = false;
      for (auto& loop : loops) {
        Ring ring(loop);
        if (ring.is_ccw()) {
          if (have_outer)
            throw GridError("polygonize produced multiple outer rings");
          outer = std::move(ring);
          have_outer = true;
        } else {
          holes.push_back(std::move(ring));
        }
      }
      if (!have_outer)
        throw GridError("polygonize produced no outer ring");
      ++comp;
      out.emplace_back(std::to_string(comp), std::move(outer),
                       std::move(holes), geometry::Source::predicted);
    }
  }
  return out;
}

Grid rasterize_polygon(const Footprint& fp, const Grid& templ) {
  Grid out = Grid::filled(templ.origin, templ.cell, templ.ncols, templ.nrows,
                          0.0);
  out.nodata = templ.nodata;
  geometry::Box2 box = geometry::bounding_box(fp);
  int c0 = std::clamp(
      static_cast<int>(std::floor((box.min.x - templ.origin.x) / templ.cell)),
      0, templ.ncols - 1);
  int c1 = std::clamp(
      static_cast<int>(std::ceil((box.max.x - templ.origin.x) / templ.cell)),
      0, templ.ncols - 1);
  int r0 = std::clamp(
      static_cast<int>(std::floor((box.min.y - templ.origin.y) / templ.cell)),
      0, templ.nrows - 1);
  int r1 = std::clamp(
      static_cast<int>(std::ceil((box.max.y - templ.origin.y) / templ.cell)),
      0, templ.nrows - 1);
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c)
      if (geometry::point_in_polygon(out.center(c, r), fp)) out.at(c, r) = 1.0;
  return out;
}

namespace {

std::string render_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string format_grid(const Grid& g) {
  std::ostringstream out;
  out << "ncols " << g.ncols << "\n";
  out << "nrows " << g.nrows << "\n";
  out << "xllcenter " << render_double(g.origin.x) << "\n";
  out << "yllcenter " << render_double(g.origin.y) << "\n";
  out << "cellsize " << render_double(g.cell) << "\n";
  out << "NODATA_value " << render_double(g.nodata) << "\n";
  for (int r = g.nrows - 1; r >= 0; --r) {
    for (int c = 0; c < g.ncols; ++c) {
      if (c) out << ' ';
      out << render_double(g.at(c, r));
    }
    out << "\n";
  }
  return out.str();
}

Grid parse_grid(const std::string& text) {
  std::istringstream in(text);
  std::map<std::string, double> header;
  static const char* keys[6] = {"ncols",    "nrows",    "xllcenter",
                                "yllcenter", "cellsize", "NODATA_value"};
  std::string line;
  int lineno = 0;
  for (int i = 0; i < 6; ++i) {
    if (!std::getline(in, line))
      throw ParseError("grid header truncated at line " +
                       std::to_string(lineno + 1));
    ++lineno;
    std::istringstream ls(line);
    std::string key;
    double value;
    if (!(ls >> key >> value))
      throw ParseError("grid line " + std::to_string(lineno) +
                       ": expected 'key value'");
    if (header.count(key))
      throw ParseError("grid line " + std::to_string(lineno) +
                       ": duplicate key '" + key + "'");
    header[key] = value;
  }
  for (const char* k : keys)
    if (!header.count(k))
      throw ParseError(std::string("grid header missing key '") + k + "'");

  Grid g;
  g.ncols = static_cast<int>(header["ncols"]);
  g.nrows = static_cast<int>(header["nrows"]);
  g.origin = {header["xllcenter"], header["yllcenter"]};
  g.cell = header["cellsize"];
  g.nodata = header["NODATA_value"];
  if (g.ncols <= 0 || g.nrows <= 0)
    throw ParseError("grid header: ncols/nrows must be positive");
  if (g.cell <= 0.0) throw ParseError("grid header: cellsize must be > 0");

  g.values.assign(static_cast<std::size_t>(g.ncols) * g.nrows, g.nodata);
  for (int r = g.nrows - 1; r >= 0; --r) {
    for (int c = 0; c < g.ncols; ++c) {
      double v;
      if (!(in >> v))
        throw ParseError("grid values truncated: expected " +
                         std::to_string(static_cast<long long>(g.ncols) *
                                        g.nrows) +
                         " values");
      g.at(c, r) = v;
    }
  }
  double extra;
  if (in >> extra) throw ParseError("grid has trailing values beyond ncols*nrows");
  return g;
}

Grid read_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_grid(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_grid(const Grid& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << format_grid(g);
}

}  // namespace lodbox::raster
