#ifndef VERN_PLANNER_HPP_
#define VERN_PLANNER_HPP_

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "vern/costmap.hpp"
#include "vern/perception.hpp"
#include "vern/world.hpp"

namespace vern::planner {

struct PlannerParams {
  // Objective weights for heading, obstacle and velocity terms.
  double gamma_head = 1.0;
  double gamma_obs = 2.0;
  double gamma_vel = 0.5;

  double v_max = 1.0;      // m/s
  double omega_max = 1.0;  // rad/s
  double acc_v = 1.0;      // m/s^2
  double acc_omega = 2.0;  // rad/s^2
  double dt = 0.2;         // control period, s

  double horizon = 2.0;       // rollout length, s
  double rollout_step = 0.1;  // s
  int n_v = 11;
  int n_omega = 21;

  double robot_radius = 0.3;
  double k_p = 1.0;                 // recovery gain
  double freeze_window = 5.0;       // s
  double freeze_epsilon = 0.3;      // m of net motion over the window
  double freeze_confirm = 1.0;      // s an empty velocity space must last before recovery; 0 reacts at once
  double safe_period = 1.0;         // s between stored safe points
  std::size_t safe_capacity = 256;
  double arrival_tolerance = 0.2;   // m
  double unsafe_inflation = 0.3;    // m
  double unsafe_halo = 1.0;         // soft cost ring beyond each stamp, m; 0 disables
  double recovery_standoff = 1.0;   // extra distance kept between recovery points and unsafe spots, m

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x, double tol = 1e-12) const { return x >= lo - tol && x <= hi + tol; }
  bool empty() const { return lo > hi; }
};

/// Static limits (possibly stunted), reachable window, and the searched
/// intersection. Admissibility is decided per sample.
struct VelocityWindow {
  Interval static_v, static_omega;
  Interval dynamic_v, dynamic_omega;
  Interval v, omega;
  bool collapsed = false;  // true when the limits had to override the window
};

/// kappa scales the static space to [0, kappa v_max] x kappa[-w_max, w_max].
/// If the reachable window misses the stunted space entirely, the search
/// interval collapses onto the nearest admissible bound.
VelocityWindow dynamic_window(double v, double omega, const PlannerParams& p, double kappa = 1.0);

struct Trajectory {
  double v = 0.0;
  double omega = 0.0;
  std::vector<Pose2D> poses;  // odom frame, poses[0] is the start
};

/// Constant-velocity arc sampled at `step`, exact closed form per sample.
Trajectory rollout(const Pose2D& start, double v, double omega, double horizon, double step);

/// Unique cost-map cells met by the robot disc along the trajectory
/// (poses off the grid contribute nothing).
std::vector<GridIndex> swept_cells(const Trajectory& t, const GridGeometry& g, double radius);

struct ObjectiveTerms {
  double head = 0.0;  // [0,1], final heading error to the goal / pi
  double obs = 0.0;   // sum of cell costs / (cells * 100)
  double vel = 0.0;   // (v_max - v) / v_max
  double total = 0.0; // +inf if any swept cell is MAX
  bool admissible = true;
};

/// Per-cycle inputs from perception and mapping.
struct PlanningSnapshot {
  costmap::CostMap cost;     // map planned over (C_VA, or C_low for the baseline)
  costmap::CostMap low;      // raw low layer
  Eigen::MatrixXi quadrants; // quadrant id per cell, 0 outside the camera wedge
  perception::Classifications classes;
  double threshold = 0.0;    // admissibility threshold on cell cost
  bool cautious = true;      // stunt velocities by classification confidence
};

ObjectiveTerms objective(const Trajectory& t, const costmap::CostMap& cost, const Vec2& goal,
                         double threshold, const PlannerParams& p);

/// False iff the swept cells include one above `threshold` or a MAX cell.
bool admissible(const Trajectory& t, const costmap::CostMap& cost, double threshold,
                const PlannerParams& p);

struct Selection {
  bool frozen = false;
  UnicycleCommand cmd;
  double kappa = 1.0;  // stunting factor applied to the final search
  ObjectiveTerms terms;
  VelocityWindow window;
};

/// Sample values of an interval, endpoints included.
std::vector<double> sample_interval(const Interval& in, int n);

/// Grid search over the window; returns the first strict minimum in
/// (v-major, omega-minor) order.
Selection search_window(const Pose2D& pose, const VelocityWindow& w, const PlanningSnapshot& s,
                        const Vec2& goal, const PlannerParams& p);

/// Lowest confidence among quadrants holding a nonzero-cost cell on `t`;
/// 1 when none.
double cautious_kappa(const Trajectory& t, const PlanningSnapshot& s, const PlannerParams& p);

/// Search, then re-search in the space stunted by cautious_kappa of the
/// provisional best. Frozen when no sample is admissible.
Selection select_velocity(const Pose2D& pose, double v, double omega, const PlanningSnapshot& s,
                          const Vec2& goal, const PlannerParams& p);

// ---------------------------------------------------------------------------
// Adverse phenomena and recovery

/// Entry k: pose at time t and the command applied over [t, t + dt).
struct HistoryEntry {
  double t = 0.0;
  Pose2D pose;
  bool commanded = false;  // command was nonzero
  bool frozen = false;     // planner reported an empty velocity space
};

enum class Adverse { None, Freezing, Entrapment };

/// Freezing: planner frozen on the latest entry, or net displacement below
/// epsilon across the window. Entrapment: nonzero command with exactly zero
/// pose change on every step of the window. None with less than a window,
/// and None while the latest commanded step is motionless but the window is
/// not yet fully so (entrapment still pending).
Adverse detect_adverse(std::span<const HistoryEntry> history, const PlannerParams& p);

/// detect_adverse, except that a planner freeze counts only once the
/// trailing run of frozen entries has lasted freeze_confirm. One frame of
/// misclassified grass should not cost an unsafe mark and a retreat.
Adverse confirmed_adverse(std::span<const HistoryEntry> history, const PlannerParams& p);

enum class Mode { Normal, Cautious, Recovering };

enum class TraversalLabel : std::uint8_t { Free, Pliable, NonPliable };

/// Odom-frame record of the last classification seen for each cell.
class TraversabilityMemory {
 public:
  explicit TraversabilityMemory(double resolution = 0.1) : resolution_(resolution) {}

  void update(const PlanningSnapshot& s);
  std::optional<TraversalLabel> lookup(const Vec2& p) const;
  std::size_t size() const { return labels_.size(); }

 private:
  std::int64_t key(const Vec2& p) const;
  double resolution_;
  std::unordered_map<std::int64_t, TraversalLabel> labels_;
};

struct SafePoint {
  Vec2 position;
  double t = 0.0;
};

struct PlannerState {
  Mode mode = Mode::Normal;
  std::deque<SafePoint> safe;
  std::vector<Vec2> unsafe;
  std::optional<Vec2> recovery_target;
  double last_safe_time = -1e300;
  TraversabilityMemory memory;
};

/// Appends the pose every safe_period seconds, evicting the oldest entry
/// at capacity.
void record_safe(PlannerState& state, double t, const Pose2D& pose, const PlannerParams& p);

/// Minimum distance between a recovery point and any unsafe location: the
/// robot parked there must not overlap a stamped cell, plus a standoff that
/// leaves the planner room to steer around the stamp afterwards.
double recovery_clearance(const PlannerParams& p, double resolution);

/// Point the heading term aims at. The goal itself, unless the straight line
/// to it passes an unsafe location closely enough to hit the stamp; then a
/// point beside the nearest such location, recovery_clearance away from
/// every unsafe location. The local objective alone has no gradient around
/// a disc sitting on the goal line.
Vec2 steering_goal(const Vec2& robot, const Vec2& goal, std::span<const Vec2> unsafe,
                   const PlanningSnapshot& s, const PlannerParams& p);

/// Whether the straight segment robot -> target crosses only free or
/// pliable cells. The stamped disc around `robot` itself is ignored.
bool segment_traversable(const Vec2& robot, const Vec2& target, const PlanningSnapshot& s,
                         const TraversabilityMemory& memory, const PlannerParams& p);

/// Marks the robot's location unsafe (list and map), then picks the safe
/// point nearest the goal whose segment is traversable. nullopt when none
/// qualifies.
std::optional<Vec2> select_recovery_point(PlannerState& state, const Vec2& robot,
                                          const Vec2& goal, PlanningSnapshot& s,
                                          const PlannerParams& p);

/// k_p (target - robot), scaled down to norm v_max if needed.
HolonomicCommand recovery_command(const Vec2& robot, const Vec2& target, double k_p,
                                  double v_max);

bool recovery_arrived(const Vec2& robot, const Vec2& target, const PlannerParams& p);

}  // namespace vern::planner

#endif  // VERN_PLANNER_HPP_
