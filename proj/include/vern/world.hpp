#ifndef VERN_WORLD_HPP_
#define VERN_WORLD_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "vern/geometry.hpp"

namespace vern {

enum class VegClass : std::uint8_t {
  Free = 0,
  SparseGrass = 1,
  DenseGrass = 2,
  Bush = 3,
  Tree = 4,
  Unknown = 5,  // obstacle the classifier was never trained on
};

inline constexpr int kNumVegClasses = 6;

/// Pliable vegetation: the robot can push through it.
constexpr bool is_pliable(VegClass c) {
  return c == VegClass::SparseGrass || c == VegClass::DenseGrass;
}
constexpr bool is_non_pliable(VegClass c) {
  return c == VegClass::Bush || c == VegClass::Tree || c == VegClass::Unknown;
}

std::string_view to_string(VegClass c);
/// Throws ConfigError on an unknown name.
VegClass veg_class_from_string(std::string_view name);

struct Cell {
  VegClass cls = VegClass::Free;
  double height = 0.0;  // meters
  double drag = 0.0;    // dimensionless, summed over the footprint
};

using CellIndex = Eigen::Vector2i;  // (ix, iy)

/// Ground-truth vegetation map. Cell (ix, iy) covers
/// [ix*res, (ix+1)*res) x [iy*res, (iy+1)*res) in the odom frame.
class WorldGrid {
 public:
  WorldGrid() = default;
  WorldGrid(int width, int height, double resolution);

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }
  Vec2 extent() const { return {width_ * resolution_, height_ * resolution_}; }

  bool in_bounds(int ix, int iy) const {
    return ix >= 0 && iy >= 0 && ix < width_ && iy < height_;
  }
  bool contains(const Vec2& p) const;

  const Cell& at(int ix, int iy) const { return cells_[index(ix, iy)]; }
  Cell& at(int ix, int iy) { return cells_[index(ix, iy)]; }

  /// Cell containing `p`, or nullopt outside the grid.
  std::optional<CellIndex> cell_of(const Vec2& p) const;
  /// Class at `p`; Free outside the grid.
  VegClass class_at(const Vec2& p) const;
  Vec2 cell_center(int ix, int iy) const {
    return {(ix + 0.5) * resolution_, (iy + 0.5) * resolution_};
  }

  /// Calls f(ix, iy) for every in-bounds cell whose square intersects the
  /// closed disc (center, radius).
  template <typename F>
  void for_each_cell_in_disc(const Vec2& center, double radius, F&& f) const;

  std::size_t count(VegClass c) const;

 private:
  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * width_ + ix;
  }

  int width_ = 0;
  int height_ = 0;
  double resolution_ = 0.1;
  std::vector<Cell> cells_;
};

template <typename F>
void WorldGrid::for_each_cell_in_disc(const Vec2& center, double radius,
                                      F&& f) const {
  const int x0 = std::max(0, static_cast<int>(std::floor((center.x() - radius) / resolution_)));
  const int x1 = std::min(width_ - 1, static_cast<int>(std::floor((center.x() + radius) / resolution_)));
  const int y0 = std::max(0, static_cast<int>(std::floor((center.y() - radius) / resolution_)));
  const int y1 = std::min(height_ - 1, static_cast<int>(std::floor((center.y() + radius) / resolution_)));
  for (int iy = y0; iy <= y1; ++iy) {
    for (int ix = x0; ix <= x1; ++ix) {
      const Vec2 lo(ix * resolution_, iy * resolution_);
      const Vec2 hi = lo + Vec2::Constant(resolution_);
      if (point_to_box_distance(center, lo, hi) <= radius) f(ix, iy);
    }
  }
}

// ---------------------------------------------------------------------------
// World description

enum class BlobShape { Rect, Circle, Polygon };

/// One vegetation patch. Rect uses points[0], points[1] as opposite corners;
/// Circle uses points[0] as center plus `radius`; Polygon uses all points.
struct BlobSpec {
  VegClass cls = VegClass::Free;
  BlobShape shape = BlobShape::Rect;
  std::vector<Vec2> points;
  double radius = 0.0;
  double height = 0.0;
  double drag = 0.0;
  double density = 1.0;  // fraction of covered cells that are filled

  bool contains(const Vec2& p) const;
};

struct WorldSpec {
  int width = 0;   // cells
  int height = 0;  // cells
  double resolution = 0.1;
  std::uint64_t seed = 0;  // drives partial-density fills
  std::vector<BlobSpec> blobs;
};

/// Rasterizes `spec`; later blobs overwrite earlier ones. Throws ConfigError
/// when a blob violates the class height/drag ranges or dimensions are bad.
WorldGrid build_world(const WorldSpec& spec);

/// Throws ConfigError describing the first violated constraint.
void validate_blob(const BlobSpec& blob);

// ---------------------------------------------------------------------------
// Lidar

/// One planar scan at height z. Bearings are relative to the robot heading,
/// counter-clockwise positive.
struct ScanLayer {
  Pose2D pose;
  double z = 0.0;
  double max_range = 0.0;
  Eigen::VectorXd bearings;
  Eigen::VectorXd ranges;

  bool is_hit(Eigen::Index k) const { return ranges[k] < max_range; }
};

/// Grid traversal per beam; a beam stops at the first cell with
/// plant_height >= z. Beams start `min_range` out from the sensor. Throws
/// std::out_of_range if the pose lies outside the world.
ScanLayer raycast_scan(const WorldGrid& world, const Pose2D& pose, double z,
                       int n_beams, double max_range, double min_range = 0.0);

// ---------------------------------------------------------------------------
// Robot

struct UnicycleCommand {
  double v = 0.0;      // m/s along heading
  double omega = 0.0;  // rad/s
};
/// Odom-frame translational velocity, no rotation.
struct HolonomicCommand {
  double vx = 0.0;
  double vy = 0.0;
};
using VelocityCommand = std::variant<UnicycleCommand, HolonomicCommand>;

bool is_zero(const VelocityCommand& cmd);

struct RobotState {
  Pose2D pose;
  double v = 0.0;       // last commanded unicycle velocity
  double omega = 0.0;
  double radius = 0.3;
  bool snagged = false;
  double escape_remaining = 0.0;  // seconds of straight holonomic push still needed
};

struct DynamicsParams {
  double p_snag = 0.0;       // snag rate per second while in dense grass
  double escape_time = 1.0;  // sustained straight holonomic push that frees a snag
  double max_substep = 0.05;
};

struct StepEvents {
  bool collision = false;
  bool snag_onset = false;
  bool escaped = false;
};

struct StepResult {
  RobotState state;
  StepEvents events;
};

/// Sum of per-cell drag over the robot footprint.
double footprint_drag(const WorldGrid& world, const Vec2& center, double radius);
bool footprint_touches(const WorldGrid& world, const Vec2& center, double radius,
                       VegClass cls);

/// Advances the robot by dt. Velocity is attenuated by max(0, 1 - drag sum);
/// a snagged robot does not move. `force_snag` snags the robot this step if
/// it is in dense grass (scripted entrapment).
StepResult step_dynamics(const RobotState& state, const VelocityCommand& cmd,
                         const WorldGrid& world, double dt,
                         const DynamicsParams& params, std::uint64_t rng_seed,
                         bool force_snag = false);

/// True iff any non-pliable cell intersects the closed robot disc.
bool collision_check(const WorldGrid& world, const Pose2D& pose, double radius);

}  // namespace vern

#endif  // VERN_WORLD_HPP_
