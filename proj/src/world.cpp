#include "vern/world.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "vern/error.hpp"
#include "vern/random.hpp"

namespace vern {

namespace {

constexpr std::string_view kClassNames[kNumVegClasses] = {
    "Free", "SparseGrass", "DenseGrass", "Bush", "Tree", "Unknown"};

bool point_in_polygon(const std::vector<Vec2>& poly, const Vec2& p) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x_cross = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
      if (p.x() < x_cross) inside = !inside;
    }
  }
  return inside;
}

std::string blob_label(std::size_t i, const BlobSpec& b) {
  std::ostringstream os;
  os << "blob " << i << " (" << to_string(b.cls) << ")";
  return os.str();
}

}  // namespace

std::string_view to_string(VegClass c) {
  return kClassNames[static_cast<int>(c)];
}

VegClass veg_class_from_string(std::string_view name) {
  for (int i = 0; i < kNumVegClasses; ++i) {
    if (kClassNames[i] == name) return static_cast<VegClass>(i);
  }
  throw ConfigError("unknown vegetation class '" + std::string(name) + "'");
}

WorldGrid::WorldGrid(int width, int height, double resolution)
    : width_(width), height_(height), resolution_(resolution) {
  if (width <= 0 || height <= 0) throw ConfigError("world dimensions must be positive");
  if (!(resolution > 0.0)) throw ConfigError("world resolution must be positive");
  cells_.assign(static_cast<std::size_t>(width) * height, Cell{});
}

bool WorldGrid::contains(const Vec2& p) const {
  return p.x() >= 0.0 && p.y() >= 0.0 && p.x() < width_ * resolution_ &&
         p.y() < height_ * resolution_;
}

std::optional<CellIndex> WorldGrid::cell_of(const Vec2& p) const {
  const int ix = static_cast<int>(std::floor(p.x() / resolution_));
  const int iy = static_cast<int>(std::floor(p.y() / resolution_));
  if (!in_bounds(ix, iy)) return std::nullopt;
  return CellIndex(ix, iy);
}

VegClass WorldGrid::class_at(const Vec2& p) const {
  const auto c = cell_of(p);
  return c ? at(c->x(), c->y()).cls : VegClass::Free;
}

std::size_t WorldGrid::count(VegClass c) const {
  std::size_t n = 0;
  for (const Cell& cell : cells_) n += cell.cls == c;
  return n;
}

bool BlobSpec::contains(const Vec2& p) const {
  switch (shape) {
    case BlobShape::Rect: {
      const Vec2 lo = points[0].cwiseMin(points[1]);
      const Vec2 hi = points[0].cwiseMax(points[1]);
      return p.x() >= lo.x() && p.y() >= lo.y() && p.x() <= hi.x() && p.y() <= hi.y();
    }
    case BlobShape::Circle:
      return (p - points[0]).norm() <= radius;
    case BlobShape::Polygon:
      return point_in_polygon(points, p);
  }
  return false;
}

void validate_blob(const BlobSpec& b) {
  const auto fail = [&](const std::string& why) {
    throw ConfigError(std::string(to_string(b.cls)) + " blob: " + why);
  };
  switch (b.shape) {
    case BlobShape::Rect:
      if (b.points.size() != 2) fail("rect needs exactly two corners");
      break;
    case BlobShape::Circle:
      if (b.points.size() != 1 || !(b.radius > 0.0)) fail("circle needs a center and positive radius");
      break;
    case BlobShape::Polygon:
      if (b.points.size() < 3) fail("polygon needs at least three vertices");
      break;
  }
  if (!(b.density > 0.0 && b.density <= 1.0)) fail("density must lie in (0, 1]");
  if (!(b.drag >= 0.0 && b.drag <= 1.0)) fail("drag must lie in [0, 1]");
  if (b.drag > 0.0 && !is_pliable(b.cls)) fail("only pliable vegetation may carry drag");
  switch (b.cls) {
    case VegClass::Free:
      if (b.height != 0.0) fail("free cells have zero height");
      break;
    case VegClass::SparseGrass:
    case VegClass::DenseGrass:
      if (!(b.height > 0.3)) fail("tall grass must be taller than 0.3 m");
      break;
    case VegClass::Bush:
      if (!(b.height >= 0.1 && b.height <= 0.5)) fail("bush height must lie in [0.1, 0.5] m");
      break;
    case VegClass::Tree:
      if (!(b.height > 2.0)) fail("tree height must exceed 2 m");
      break;
    case VegClass::Unknown:
      if (!(b.height > 0.0)) fail("unknown obstacle needs positive height");
      break;
  }
}

WorldGrid build_world(const WorldSpec& spec) {
  WorldGrid grid(spec.width, spec.height, spec.resolution);
  for (std::size_t i = 0; i < spec.blobs.size(); ++i) {
    const BlobSpec& blob = spec.blobs[i];
    try {
      validate_blob(blob);
    } catch (const ConfigError& e) {
      throw ConfigError(blob_label(i, blob) + ": " + e.what());
    }
    for (int iy = 0; iy < grid.height(); ++iy) {
      for (int ix = 0; ix < grid.width(); ++ix) {
        if (!blob.contains(grid.cell_center(ix, iy))) continue;
        if (blob.density < 1.0) {
          const double u = unit_from_bits(mix_seed({spec.seed, i, static_cast<std::uint64_t>(ix),
                                                    static_cast<std::uint64_t>(iy)}));
          if (u >= blob.density) continue;
        }
        grid.at(ix, iy) = Cell{blob.cls, blob.height, blob.drag};
      }
    }
  }
  return grid;
}

ScanLayer raycast_scan(const WorldGrid& world, const Pose2D& pose, double z,
                       int n_beams, double max_range, double min_range) {
  if (!world.contains(pose.position())) throw std::out_of_range("scan pose outside world");
  if (z < 0.0) throw std::invalid_argument("scan height must be nonnegative");
  if (n_beams < 8) throw std::invalid_argument("need at least 8 beams");

  ScanLayer scan;
  scan.pose = pose;
  scan.z = z;
  scan.max_range = max_range;
  scan.bearings.resize(n_beams);
  scan.ranges.resize(n_beams);

  const double res = world.resolution();
  const double inf = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n_beams; ++k) {
    const double bearing = normalize_angle(2.0 * std::numbers::pi * k / n_beams);
    scan.bearings[k] = bearing;
    const double heading = pose.theta + bearing;
    const Vec2 dir(std::cos(heading), std::sin(heading));
    const Vec2 start = pose.position() + min_range * dir;

    double range = max_range;
    if (min_range < max_range && world.contains(start)) {
      int ix = static_cast<int>(std::floor(start.x() / res));
      int iy = static_cast<int>(std::floor(start.y() / res));
      const int step_x = dir.x() > 0 ? 1 : -1;
      const int step_y = dir.y() > 0 ? 1 : -1;
      double t_max_x = inf, t_max_y = inf, t_delta_x = inf, t_delta_y = inf;
      if (dir.x() != 0.0) {
        const double edge = (step_x > 0 ? ix + 1 : ix) * res;
        t_max_x = (edge - start.x()) / dir.x();
        t_delta_x = res / std::abs(dir.x());
      }
      if (dir.y() != 0.0) {
        const double edge = (step_y > 0 ? iy + 1 : iy) * res;
        t_max_y = (edge - start.y()) / dir.y();
        t_delta_y = res / std::abs(dir.y());
      }
      double t = 0.0;
      while (min_range + t < max_range && world.in_bounds(ix, iy)) {
        const Cell& c = world.at(ix, iy);
        if (c.cls != VegClass::Free && c.height >= z) {
          range = min_range + t;
          break;
        }
        if (t_max_x < t_max_y) {
          t = t_max_x;
          t_max_x += t_delta_x;
          ix += step_x;
        } else {
          t = t_max_y;
          t_max_y += t_delta_y;
          iy += step_y;
        }
      }
    }
    scan.ranges[k] = range;
  }
  return scan;
}

bool is_zero(const VelocityCommand& cmd) {
  return std::visit(
      [](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, UnicycleCommand>) {
          return c.v == 0.0 && c.omega == 0.0;
        } else {
          return c.vx == 0.0 && c.vy == 0.0;
        }
      },
      cmd);
}

double footprint_drag(const WorldGrid& world, const Vec2& center, double radius) {
  double sum = 0.0;
  world.for_each_cell_in_disc(center, radius, [&](int ix, int iy) { sum += world.at(ix, iy).drag; });
  return sum;
}

bool footprint_touches(const WorldGrid& world, const Vec2& center, double radius,
                       VegClass cls) {
  bool found = false;
  world.for_each_cell_in_disc(center, radius, [&](int ix, int iy) {
    found = found || world.at(ix, iy).cls == cls;
  });
  return found;
}

bool collision_check(const WorldGrid& world, const Pose2D& pose, double radius) {
  if (!world.contains(pose.position())) throw std::out_of_range("pose outside world");
  bool hit = false;
  world.for_each_cell_in_disc(pose.position(), radius, [&](int ix, int iy) {
    hit = hit || is_non_pliable(world.at(ix, iy).cls);
  });
  return hit;
}

StepResult step_dynamics(const RobotState& state, const VelocityCommand& cmd,
                         const WorldGrid& world, double dt,
                         const DynamicsParams& params, std::uint64_t rng_seed,
                         bool force_snag) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  StepResult out{state, {}};
  RobotState& s = out.state;

  const auto* uni = std::get_if<UnicycleCommand>(&cmd);
  const auto* hol = std::get_if<HolonomicCommand>(&cmd);
  s.v = uni ? uni->v : 0.0;
  s.omega = uni ? uni->omega : 0.0;

  if (!s.snagged && footprint_touches(world, s.pose.position(), s.radius, VegClass::DenseGrass)) {
    const double u = unit_from_bits(splitmix64(rng_seed));
    if (force_snag || u < params.p_snag * dt) {
      s.snagged = true;
      s.escape_remaining = params.escape_time;
      out.events.snag_onset = true;
    }
  }

  if (s.snagged) {
    if (hol && !is_zero(cmd)) {
      s.escape_remaining -= dt;
      if (s.escape_remaining <= 1e-9) {
        s.snagged = false;
        s.escape_remaining = 0.0;
        out.events.escaped = true;
      }
    } else {
      s.escape_remaining = params.escape_time;
    }
    return out;
  }

  const int n_sub = std::max(1, static_cast<int>(std::ceil(dt / params.max_substep - 1e-9)));
  const double h = dt / n_sub;
  for (int i = 0; i < n_sub; ++i) {
    const double f = std::max(0.0, 1.0 - footprint_drag(world, s.pose.position(), s.radius));
    double x = s.pose.x, y = s.pose.y, th = s.pose.theta;
    if (uni) {
      const double v = uni->v * f;
      const double w = uni->omega * f;
      if (std::abs(w) < 1e-12) {
        x += v * h * std::cos(th);
        y += v * h * std::sin(th);
      } else {
        x += v / w * (std::sin(th + w * h) - std::sin(th));
        y -= v / w * (std::cos(th + w * h) - std::cos(th));
      }
      th += w * h;
    } else {
      x += hol->vx * f * h;
      y += hol->vy * f * h;
    }
    s.pose = Pose2D(x, y, th);
    // Leaving the mapped area counts as hitting its boundary.
    if (!world.contains(s.pose.position()) || collision_check(world, s.pose, s.radius)) {
      out.events.collision = true;
      break;
    }
  }
  return out;
}

}  // namespace vern
