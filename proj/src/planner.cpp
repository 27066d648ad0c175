#include "vern/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "vern/error.hpp"

namespace vern::planner {

using costmap::CostMap;
using costmap::kMaxCost;

namespace {

/// Visits each cell swept by the disc exactly once. The stamp buffer is
/// reused between calls on the same thread.
template <typename F>
void visit_swept(const Trajectory& t, const GridGeometry& g, double radius, F&& f) {
  thread_local Eigen::MatrixXi stamp;
  thread_local int generation = 0;
  if (stamp.rows() != g.rows || stamp.cols() != g.cols) {
    stamp = Eigen::MatrixXi::Zero(g.rows, g.cols);
    generation = 0;
  }
  if (++generation == std::numeric_limits<int>::max()) {
    stamp.setZero();
    generation = 1;
  }
  for (const Pose2D& pose : t.poses) {
    g.for_each_cell_in_disc(pose.position(), radius, [&](int r, int c) {
      if (stamp(r, c) == generation) return;
      stamp(r, c) = generation;
      f(r, c);
    });
  }
}

double heading_error(const Pose2D& end, const Vec2& goal) {
  const Vec2 d = goal - end.position();
  if (d.norm() < 1e-9) return 0.0;
  return std::abs(normalize_angle(std::atan2(d.y(), d.x()) - end.theta)) / std::numbers::pi;
}

Interval intersect(const Interval& a, const Interval& b) {
  return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
}

}  // namespace

void PlannerParams::validate() const {
  const double positives[] = {gamma_head, gamma_obs, gamma_vel, v_max, omega_max, acc_v,
                              acc_omega, dt, horizon, rollout_step, robot_radius, k_p,
                              freeze_window, freeze_epsilon, safe_period, arrival_tolerance,
                              unsafe_inflation};
  if (!(freeze_confirm >= 0.0)) throw ConfigError("freeze confirmation time must be nonnegative");
  for (double x : positives) {
    if (!(x > 0.0)) throw ConfigError("planner parameters must be positive");
  }
  if (n_v < 5 || n_omega < 5) throw ConfigError("velocity grid needs at least 5x5 samples");
  if (safe_capacity == 0) throw ConfigError("safe buffer capacity must be positive");
  if (!(recovery_standoff >= 0.0) || !(unsafe_halo >= 0.0)) {
    throw ConfigError("recovery standoff and unsafe halo must be nonnegative");
  }
}

VelocityWindow dynamic_window(double v, double omega, const PlannerParams& p, double kappa) {
  VelocityWindow w;
  w.static_v = {0.0, kappa * p.v_max};
  w.static_omega = {-kappa * p.omega_max, kappa * p.omega_max};
  w.dynamic_v = {v - p.acc_v * p.dt, v + p.acc_v * p.dt};
  w.dynamic_omega = {omega - p.acc_omega * p.dt, omega + p.acc_omega * p.dt};
  w.v = intersect(w.static_v, w.dynamic_v);
  w.omega = intersect(w.static_omega, w.dynamic_omega);
  if (w.v.empty()) {
    const double x = std::clamp(v, w.static_v.lo, w.static_v.hi);
    w.v = {x, x};
    w.collapsed = true;
  }
  if (w.omega.empty()) {
    const double x = std::clamp(omega, w.static_omega.lo, w.static_omega.hi);
    w.omega = {x, x};
    w.collapsed = true;
  }
  return w;
}

Trajectory rollout(const Pose2D& start, double v, double omega, double horizon, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("rollout step must be positive");
  Trajectory t{v, omega, {}};
  const int n = static_cast<int>(std::floor(horizon / step + 1e-9));
  t.poses.reserve(n + 1);
  const double c = std::cos(start.theta), s = std::sin(start.theta);
  for (int k = 0; k <= n; ++k) {
    const double tau = k * step;
    double fx, fy;  // displacement in the start frame
    if (std::abs(omega) < 1e-12) {
      fx = v * tau;
      fy = 0.0;
    } else {
      fx = v / omega * std::sin(omega * tau);
      fy = v / omega * (1.0 - std::cos(omega * tau));
    }
    t.poses.emplace_back(start.x + c * fx - s * fy, start.y + s * fx + c * fy,
                         start.theta + omega * tau);
  }
  return t;
}

std::vector<GridIndex> swept_cells(const Trajectory& t, const GridGeometry& g, double radius) {
  std::vector<GridIndex> cells;
  visit_swept(t, g, radius, [&](int r, int c) { cells.emplace_back(r, c); });
  return cells;
}

ObjectiveTerms objective(const Trajectory& t, const CostMap& cost, const Vec2& goal,
                         double threshold, const PlannerParams& p) {
  ObjectiveTerms terms;
  double sum = 0.0;
  std::size_t n = 0;
  bool blocked = false;
  visit_swept(t, cost.geometry, p.robot_radius, [&](int r, int c) {
    const double v = cost(r, c);
    ++n;
    if (v == kMaxCost) {
      blocked = true;
      terms.admissible = false;
      return;
    }
    if (v > threshold) terms.admissible = false;
    sum += v;
  });
  terms.head = heading_error(t.poses.back(), goal);
  terms.obs = n ? sum / (static_cast<double>(n) * costmap::kOccupied) : 0.0;
  terms.vel = (p.v_max - t.v) / p.v_max;
  terms.total = blocked ? std::numeric_limits<double>::infinity()
                        : p.gamma_head * terms.head + p.gamma_obs * terms.obs +
                              p.gamma_vel * terms.vel;
  return terms;
}

bool admissible(const Trajectory& t, const CostMap& cost, double threshold,
                const PlannerParams& p) {
  bool ok = true;
  visit_swept(t, cost.geometry, p.robot_radius, [&](int r, int c) {
    const double v = cost(r, c);
    ok = ok && v != kMaxCost && v <= threshold;
  });
  return ok;
}

std::vector<double> sample_interval(const Interval& in, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    out[i] = n == 1 ? in.lo : in.lo + (in.hi - in.lo) * i / (n - 1);
  }
  if (n > 1) out.back() = in.hi;
  return out;
}

Selection search_window(const Pose2D& pose, const VelocityWindow& w, const PlanningSnapshot& s,
                        const Vec2& goal, const PlannerParams& p) {
  Selection best;
  best.frozen = true;
  best.window = w;
  best.terms.total = std::numeric_limits<double>::infinity();
  for (double v : sample_interval(w.v, p.n_v)) {
    for (double om : sample_interval(w.omega, p.n_omega)) {
      const Trajectory t = rollout(pose, v, om, p.horizon, p.rollout_step);
      const ObjectiveTerms terms = objective(t, s.cost, goal, s.threshold, p);
      if (!terms.admissible) continue;
      if (best.frozen || terms.total < best.terms.total) {
        best.frozen = false;
        best.cmd = {v, om};
        best.terms = terms;
      }
    }
  }
  return best;
}

double cautious_kappa(const Trajectory& t, const PlanningSnapshot& s, const PlannerParams& p) {
  double kappa = 1.0;
  if (s.quadrants.size() == 0) return kappa;
  visit_swept(t, s.cost.geometry, p.robot_radius, [&](int r, int c) {
    const int q = s.quadrants(r, c);
    const double v = s.cost(r, c);
    if (q > 0 && v > 0.0 && v != kMaxCost) kappa = std::min(kappa, s.classes[q - 1].confidence);
  });
  return kappa;
}

Selection select_velocity(const Pose2D& pose, double v, double omega, const PlanningSnapshot& s,
                          const Vec2& goal, const PlannerParams& p) {
  Selection sel = search_window(pose, dynamic_window(v, omega, p), s, goal, p);
  if (sel.frozen || !s.cautious) return sel;
  const Trajectory best = rollout(pose, sel.cmd.v, sel.cmd.omega, p.horizon, p.rollout_step);
  const double kappa = cautious_kappa(best, s, p);
  if (kappa >= 1.0) return sel;
  Selection stunted = search_window(pose, dynamic_window(v, omega, p, kappa), s, goal, p);
  stunted.kappa = kappa;
  return stunted;
}

Adverse detect_adverse(std::span<const HistoryEntry> history, const PlannerParams& p) {
  if (history.empty()) return Adverse::None;
  if (history.back().frozen) return Adverse::Freezing;
  const double t_end = history.back().t;
  const double t_start = t_end - p.freeze_window;
  if (history.front().t > t_start + 1e-9) return Adverse::None;

  std::size_t first = 0;
  while (first + 1 < history.size() && history[first + 1].t <= t_start + 1e-9) ++first;
  const auto window = history.subspan(first);

  const auto stuck_step = [&](std::size_t k) {
    const Pose2D& a = window[k].pose;
    const Pose2D& b = window[k + 1].pose;
    return window[k].commanded && a.x == b.x && a.y == b.y && a.theta == b.theta;
  };
  bool trapped = window.size() >= 2;
  for (std::size_t k = 0; trapped && k + 1 < window.size(); ++k) trapped = stuck_step(k);
  if (trapped) return Adverse::Entrapment;
  // A commanded step that did not move may be the start of an entrapment;
  // let the full window decide before calling it a freeze.
  if (window.size() >= 2 && stuck_step(window.size() - 2)) return Adverse::None;

  const double moved = (window.back().pose.position() - window.front().pose.position()).norm();
  return moved < p.freeze_epsilon ? Adverse::Freezing : Adverse::None;
}

Adverse confirmed_adverse(std::span<const HistoryEntry> history, const PlannerParams& p) {
  const Adverse a = detect_adverse(history, p);
  if (a != Adverse::Freezing || !history.back().frozen) return a;
  std::size_t k = history.size() - 1;
  while (k > 0 && history[k - 1].frozen) --k;
  if (history.back().t - history[k].t >= p.freeze_confirm - 1e-9) return a;
  std::vector<HistoryEntry> h(history.begin(), history.end());
  h.back().frozen = false;
  return detect_adverse(h, p);
}

std::int64_t TraversabilityMemory::key(const Vec2& p) const {
  const auto ix = static_cast<std::int64_t>(std::floor(p.x() / resolution_));
  const auto iy = static_cast<std::int64_t>(std::floor(p.y() / resolution_));
  return (ix << 32) ^ (iy & 0xffffffffLL);
}

void TraversabilityMemory::update(const PlanningSnapshot& s) {
  const auto& g = s.cost.geometry;
  if (s.quadrants.rows() != g.rows || s.quadrants.cols() != g.cols) return;
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      const int q = s.quadrants(r, c);
      if (q == 0) continue;
      TraversalLabel label = TraversalLabel::Free;
      if (s.low(r, c) > 0.0) {
        label = s.classes[q - 1].pliable ? TraversalLabel::Pliable : TraversalLabel::NonPliable;
      }
      labels_[key(g.center(r, c))] = label;
    }
  }
}

std::optional<TraversalLabel> TraversabilityMemory::lookup(const Vec2& p) const {
  const auto it = labels_.find(key(p));
  if (it == labels_.end()) return std::nullopt;
  return it->second;
}

void record_safe(PlannerState& state, double t, const Pose2D& pose, const PlannerParams& p) {
  if (t - state.last_safe_time < p.safe_period - 1e-9) return;
  state.safe.push_back({pose.position(), t});
  state.last_safe_time = t;
  while (state.safe.size() > p.safe_capacity) state.safe.pop_front();
}

double recovery_clearance(const PlannerParams& p, double resolution) {
  return p.unsafe_inflation + p.robot_radius + resolution * std::numbers::sqrt2 + p.recovery_standoff;
}

Vec2 steering_goal(const Vec2& robot, const Vec2& goal, std::span<const Vec2> unsafe,
                   const PlanningSnapshot& s, const PlannerParams& p) {
  const Vec2 d = goal - robot;
  const double len = d.norm();
  if (unsafe.empty() || len < 1e-9) return goal;
  const Vec2 dir = d / len;
  const Vec2 left(-dir.y(), dir.x());
  const double res = s.cost.geometry.resolution;
  const double hit = p.unsafe_inflation + p.robot_radius + res * std::numbers::sqrt2;
  const double clearance = recovery_clearance(p, res);

  const Vec2* block = nullptr;
  double block_s = len;
  for (const Vec2& u : unsafe) {
    const double along = (u - robot).dot(dir);
    if (along <= 0.0 || along >= len) continue;
    if (std::abs((u - robot).dot(left)) < hit && along < block_s) {
      block_s = along;
      block = &u;
    }
  }
  if (!block) return goal;

  const auto clear_of_all = [&](const Vec2& q) {
    return std::all_of(unsafe.begin(), unsafe.end(),
                       [&](const Vec2& u) { return (q - u).norm() >= clearance - 1e-9; });
  };
  const auto passable = [&](const Vec2& q) {
    const auto cell = s.cost.geometry.cell_of(q);
    return !cell || s.cost(cell->x(), cell->y()) <= s.threshold;
  };
  // Pass on the side away from the stamp's offset; left on an exact tie.
  const double offset = (*block - robot).dot(left);
  const double first = offset > 0.0 ? -1.0 : 1.0;
  for (double extra = 0.0; extra <= 4.0 * clearance; extra += res) {
    for (double side : {first, -first}) {
      const Vec2 q = *block + side * (clearance + extra) * left;
      if (clear_of_all(q) && passable(q)) return q;
    }
  }
  return goal;
}

bool segment_traversable(const Vec2& robot, const Vec2& target, const PlanningSnapshot& s,
                         const TraversabilityMemory& memory, const PlannerParams& p) {
  const auto& g = s.cost.geometry;
  const double skip = p.unsafe_inflation + g.resolution * std::numbers::sqrt2;
  const double len = (target - robot).norm();
  const int n = std::max(1, static_cast<int>(std::ceil(len / (0.25 * g.resolution))));
  for (int i = 0; i <= n; ++i) {
    const Vec2 q = robot + (target - robot) * (static_cast<double>(i) / n);
    if ((q - robot).norm() <= skip) continue;
    const auto cell = g.cell_of(q);
    if (cell && s.cost(cell->x(), cell->y()) == kMaxCost) return false;
    const bool in_view = cell && s.quadrants.size() > 0 && s.quadrants(cell->x(), cell->y()) > 0;
    if (!in_view) {
      if (const auto label = memory.lookup(q)) {
        if (*label == TraversalLabel::NonPliable) return false;
        continue;
      }
    }
    if (!cell || s.cost(cell->x(), cell->y()) > s.threshold) return false;
  }
  return true;
}

std::optional<Vec2> select_recovery_point(PlannerState& state, const Vec2& robot,
                                          const Vec2& goal, PlanningSnapshot& s,
                                          const PlannerParams& p) {
  state.unsafe.push_back(robot);
  costmap::mark_unsafe(s.cost, robot, p.unsafe_inflation);

  const double clearance = recovery_clearance(p, s.cost.geometry.resolution);
  std::optional<Vec2> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const SafePoint& sp : state.safe) {
    const bool clear = std::all_of(state.unsafe.begin(), state.unsafe.end(), [&](const Vec2& u) {
      return (sp.position - u).norm() > clearance;
    });
    if (!clear || !segment_traversable(robot, sp.position, s, state.memory, p)) continue;
    const double d = (goal - sp.position).norm();
    if (d < best_dist) {
      best_dist = d;
      best = sp.position;
    }
  }
  return best;
}

HolonomicCommand recovery_command(const Vec2& robot, const Vec2& target, double k_p,
                                  double v_max) {
  Vec2 u = k_p * (target - robot);
  const double n = u.norm();
  if (n > v_max) u *= v_max / n;
  return {u.x(), u.y()};
}

bool recovery_arrived(const Vec2& robot, const Vec2& target, const PlannerParams& p) {
  return (target - robot).norm() <= p.arrival_tolerance;
}

}  // namespace vern::planner
