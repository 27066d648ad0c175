#include "vern/costmap.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "vern/error.hpp"

namespace vern::costmap {

void ClearingWeights::validate() const {
  if (!(w_s > 0.0 && w_d > 0.0 && w_npv > 0.0 && b_npv > 0.0)) {
    throw ConfigError("clearing weights must be positive");
  }
  if (!(w_d > w_s)) throw ConfigError("clearing weights need w_d > w_s");
  if (!(b_npv > w_d + 1.0)) throw ConfigError("clearing weights need b_npv > w_d + 1");
}

CostMap build_layer(const ScanLayer& scan, const GridGeometry& grid) {
  CostMap layer(grid);
  for (Eigen::Index k = 0; k < scan.ranges.size(); ++k) {
    if (!scan.is_hit(k)) continue;
    const double a = scan.pose.theta + scan.bearings[k];
    // Nudge past the cell boundary the beam entered through.
    const double r = scan.ranges[k] + 1e-6;
    const Vec2 end = scan.pose.position() + r * Vec2(std::cos(a), std::sin(a));
    if (const auto cell = grid.cell_of(end)) layer(cell->x(), cell->y()) = kOccupied;
  }
  return layer;
}

CostMap critical_sum(const CostMap& low, const CostMap& mid, const CostMap& high) {
  if (!low.geometry.same_as(mid.geometry) || !low.geometry.same_as(high.geometry)) {
    throw std::invalid_argument("critical_sum needs layers on the same grid");
  }
  CostMap crit(low.geometry);
  crit.values = low.values + mid.values + high.values;
  return crit;
}

double height_measure(const CostMap& crit, const perception::QuadrantFootprint& fp) {
  if (fp.cells.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& c : fp.cells) sum += crit(c.x(), c.y());
  return sum / fp.cells.size() / kCriticalMax * (std::numbers::pi / 2.0);
}

double clear_value(const perception::QuadrantClassification& c, double h,
                   const ClearingWeights& w) {
  w.validate();
  if (c.pliable) {
    const double weight = c.cls == VegClass::DenseGrass ? w.w_d : w.w_s;
    return weight * (1.0 - c.confidence) + 2.0 * h / std::numbers::pi;
  }
  return (w.w_npv * c.confidence + w.b_npv) + std::sin(h);
}

CostMap apply_clearing(const CostMap& low, std::span<const QuadrantClearing> quadrants,
                       const ClearingWeights& w) {
  w.validate();
  CostMap out = low;
  const double norm = w.normalizer();
  for (const auto& q : quadrants) {
    if (q.footprint == nullptr) continue;
    const double scale = clear_value(q.classification, q.height, w) / norm;
    for (const auto& c : q.footprint->cells) {
      double& v = out(c.x(), c.y());
      if (v != kMaxCost) v = low(c.x(), c.y()) * scale;
    }
  }
  return out;
}

bool mark_unsafe(CostMap& map, const Vec2& location, double inflation) {
  bool any = false;
  map.geometry.for_each_cell_in_disc(location, inflation, [&](int r, int c) {
    map(r, c) = kMaxCost;
    any = true;
  });
  return any;
}

int stamp_unsafe(CostMap& map, std::span<const Vec2> locations, double inflation) {
  int n = 0;
  for (const Vec2& p : locations) n += mark_unsafe(map, p, inflation);
  return n;
}

void inflate_unsafe(CostMap& map, std::span<const Vec2> locations, double inflation, double halo,
                    double peak) {
  if (!(halo > 0.0)) return;
  const auto& g = map.geometry;
  for (const Vec2& p : locations) {
    g.for_each_cell_in_disc(p, inflation + halo, [&](int r, int c) {
      double& v = map(r, c);
      if (v == kMaxCost) return;
      const double d = std::max(0.0, (g.center(r, c) - p).norm() - inflation);
      v = std::max(v, peak * std::max(0.0, 1.0 - d / halo));
    });
  }
}

std::string to_text(const CostMap& map) {
  std::ostringstream os;
  os << std::setprecision(17);
  const auto& g = map.geometry;
  os << "vern-costmap 1\n"
     << g.rows << ' ' << g.cols << ' ' << g.resolution << ' ' << g.origin.x() << ' '
     << g.origin.y() << '\n';
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      if (c) os << ' ';
      if (map(r, c) == kMaxCost) {
        os << "MAX";
      } else {
        os << map(r, c);
      }
    }
    os << '\n';
  }
  return os.str();
}

CostMap from_text(const std::string& text) {
  std::istringstream is(text);
  std::string magic;
  int version = 0;
  is >> magic >> version;
  if (magic != "vern-costmap" || version != 1) throw ConfigError("not a version-1 cost map dump");
  GridGeometry g;
  double ox = 0, oy = 0;
  is >> g.rows >> g.cols >> g.resolution >> ox >> oy;
  if (!is || g.rows <= 0 || g.cols <= 0) throw ConfigError("bad cost map header");
  g.origin = Vec2(ox, oy);
  CostMap map(g);
  std::string tok;
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      if (!(is >> tok)) throw ConfigError("truncated cost map dump");
      map(r, c) = tok == "MAX" ? kMaxCost : std::stod(tok);
    }
  }
  return map;
}

void save(const CostMap& map, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_text(map);
}

}  // namespace vern::costmap
