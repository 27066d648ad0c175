#include "vern/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "vern/costmap.hpp"
#include "vern/error.hpp"
#include "vern/random.hpp"

namespace vern::harness {

namespace {

constexpr std::array<std::string_view, 4> kVariantNames = {"vern", "vern-no-height",
                                                           "vern-no-recovery", "dwa-baseline"};
constexpr std::array<std::string_view, 5> kOutcomeNames = {"Success", "Frozen", "Collision",
                                                           "Timeout", "RecoveryFailure"};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_negative_truth(int cls) {
  return is_non_pliable(static_cast<VegClass>(cls));
}

// Net displacement below epsilon across a full freeze window.
bool stalled(std::span<const planner::HistoryEntry> h, const planner::PlannerParams& p) {
  if (h.size() < 2 || h.back().t - h.front().t < p.freeze_window - 1e-9) return false;
  return (h.back().pose.position() - h.front().pose.position()).norm() < p.freeze_epsilon;
}

}  // namespace

std::string_view to_string(Variant v) { return kVariantNames[static_cast<int>(v)]; }

Variant variant_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kVariantNames.size(); ++i) {
    if (kVariantNames[i] == name) return static_cast<Variant>(i);
  }
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

std::string_view to_string(Outcome o) { return kOutcomeNames[static_cast<int>(o)]; }

Outcome outcome_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kOutcomeNames.size(); ++i) {
    if (kOutcomeNames[i] == name) return static_cast<Outcome>(i);
  }
  throw ConfigError("unknown outcome '" + std::string(name) + "'");
}

std::optional<double> false_positive_rate(const Confusion& c) {
  std::int64_t negatives = 0, fp = 0;
  for (int truth = 0; truth < kNumVegClasses; ++truth) {
    if (!is_negative_truth(truth)) continue;
    for (int j = 0; j < 4; ++j) {
      negatives += c[truth][j];
      if (is_pliable(perception::class_of_column(j))) fp += c[truth][j];
    }
  }
  if (negatives == 0) return std::nullopt;
  return static_cast<double>(fp) / static_cast<double>(negatives);
}

std::optional<double> misclassification_rate(const Confusion& c) {
  std::int64_t total = 0, wrong = 0;
  for (int j_truth = 0; j_truth < 4; ++j_truth) {
    const int truth = static_cast<int>(perception::class_of_column(j_truth));
    for (int j = 0; j < 4; ++j) {
      total += c[truth][j];
      if (j != j_truth) wrong += c[truth][j];
    }
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(wrong) / static_cast<double>(total);
}

std::int64_t logged_predictions(const Confusion& c) {
  std::int64_t n = 0;
  for (const auto& row : c) {
    for (auto v : row) n += v;
  }
  return n;
}

std::uint64_t trial_seed(std::uint64_t base_seed, const ScenarioSpec& spec, int trial) {
  return mix_seed({base_seed, fnv1a(spec.name.c_str()), spec.seed,
                   static_cast<std::uint64_t>(trial)});
}

TrialResult run_trial(const ScenarioSpec& spec, Variant variant, std::uint64_t seed, int trial,
                      const TrialOptions& options) {
  spec.validate();
  const WorldGrid world = build_world(spec.world);

  planner::PlannerParams p = spec.planner;
  p.robot_radius = spec.robot_radius;
  const double dt = p.dt;
  const double threshold = spec.weights.admissibility_threshold();
  const bool clearing = variant != Variant::DwaBaseline;
  const bool use_height = variant == Variant::Vern || variant == Variant::VernNoRecovery;
  const bool recovery = variant == Variant::Vern || variant == Variant::VernNoHeight;

  TrialResult out;
  out.scenario = spec.name;
  out.spec_hash = scenario_hash(spec);
  out.variant = variant;
  out.trial = trial;
  out.seed = seed;

  std::mt19937_64 start_rng(mix_seed({seed, fnv1a("start")}));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double jx = unit(start_rng) * spec.start_jitter_xy;
  const double jy = unit(start_rng) * spec.start_jitter_xy;
  const double jt = unit(start_rng) * spec.start_jitter_theta;

  RobotState state;
  state.pose = Pose2D(spec.start.x + jx, spec.start.y + jy, spec.start.theta + jt);
  state.radius = spec.robot_radius;
  if (!world.contains(state.pose.position()) ||
      collision_check(world, state.pose, state.radius)) {
    throw ConfigError("start pose of '" + spec.name + "' is in collision");
  }
  const Vec2 goal = spec.goal;
  out.straight_distance = (goal - state.pose.position()).norm();

  planner::PlannerState ps;
  ps.memory = planner::TraversabilityMemory(spec.costmap_resolution);
  ps.unsafe = options.initial_unsafe;

  std::deque<planner::HistoryEntry> history;
  bool forced_snag_done = false;
  double recovery_start = 0.0;
  int recoveries = 0;
  double t = 0.0;

  const auto finish = [&](Outcome o) {
    out.outcome = o;
    out.duration = t;
    out.final_distance = (goal - state.pose.position()).norm();
    out.unsafe = ps.unsafe;
  };

  for (int cycle = 0;; ++cycle) {
    const Pose2D pose = state.pose;
    out.trajectory.push_back(pose);
    if ((goal - pose.position()).norm() <= spec.goal_tolerance) {
      finish(Outcome::Success);
      break;
    }
    if (t >= spec.duration - 1e-9) {
      finish(Outcome::Timeout);
      break;
    }

    // Perception and mapping.
    const GridGeometry grid =
        GridGeometry::centered_on(pose.position(), spec.costmap_cells, spec.costmap_resolution);
    const auto& sp = spec.sensors;
    const auto layer = [&](double z) {
      return costmap::build_layer(
          raycast_scan(world, pose, z, sp.n_beams, sp.max_range, sp.min_range), grid);
    };
    const costmap::CostMap low = layer(sp.z_low);
    const costmap::CostMap crit = costmap::critical_sum(low, layer(sp.z_mid), layer(sp.z_high));
    const perception::Footprints fp = perception::extract_footprints(pose, spec.camera, grid);
    const std::uint64_t perception_seed = mix_seed({seed, fnv1a("perception"),
                                                    static_cast<std::uint64_t>(cycle)});
    const perception::PredictionMatrix m =
        options.fewshot ? options.fewshot->classify(world, fp, perception_seed)
                        : perception::classify_oracle(world, fp, spec.noise, perception_seed);
    const perception::Classifications classes = perception::summarize(m, spec.alpha);

    for (int q = 0; q < perception::kNumQuadrants; ++q) {
      if (fp[q].cells.empty()) continue;
      const VegClass truth = perception::dominant_class(world, fp[q]);
      if (truth == VegClass::Free) continue;
      const int col = static_cast<int>(classes[q].cls) - 1;
      ++out.confusion[static_cast<int>(truth)][col];
    }

    planner::PlanningSnapshot snap;
    snap.low = low;
    snap.threshold = threshold;
    snap.classes = classes;
    snap.quadrants = perception::quadrant_mask(fp, grid);
    snap.cautious = clearing;
    if (clearing) {
      std::array<costmap::QuadrantClearing, perception::kNumQuadrants> qc;
      for (int q = 0; q < perception::kNumQuadrants; ++q) {
        qc[q].footprint = &fp[q];
        qc[q].classification = classes[q];
        qc[q].height = use_height ? costmap::height_measure(crit, fp[q]) : 0.0;
      }
      snap.cost = costmap::apply_clearing(low, qc, spec.weights);
    } else {
      snap.cost = low;
    }
    // The ring peaks just under the threshold: avoided when possible, never forbidden.
    costmap::inflate_unsafe(snap.cost, ps.unsafe, p.unsafe_inflation, p.unsafe_halo,
                            0.9 * threshold);
    costmap::stamp_unsafe(snap.cost, ps.unsafe, p.unsafe_inflation);
    ps.memory.update(snap);

    if (options.observer) options.observer(CycleView{cycle, t, pose, &snap, &ps});

    // Command selection.
    VelocityCommand cmd = UnicycleCommand{0.0, 0.0};
    bool planned = true;
    if (ps.mode == planner::Mode::Recovering) {
      const Vec2 target = *ps.recovery_target;
      if (planner::recovery_arrived(pose.position(), target, p)) {
        out.recoveries.back().arrived_t = t;
        ps.mode = planner::Mode::Normal;
        ps.recovery_target.reset();
        history.clear();
      } else if (t - recovery_start > spec.recovery_timeout) {
        finish(Outcome::RecoveryFailure);
        break;
      } else {
        cmd = planner::recovery_command(pose.position(), target, p.k_p, p.v_max);
        planned = false;
      }
    }
    if (planned) {
      const planner::Selection sel =
          planner::select_velocity(
          pose, state.v, state.omega, snap,
          planner::steering_goal(pose.position(), goal, ps.unsafe, snap, p), p);
      ps.mode = sel.kappa < 1.0 ? planner::Mode::Cautious : planner::Mode::Normal;
      if (!sel.frozen) cmd = sel.cmd;
      history.push_back({t, pose, !is_zero(cmd), sel.frozen});
      while (history.size() >= 2 && history[1].t <= t - p.freeze_window + 1e-9) {
        history.pop_front();
      }
      const std::vector<planner::HistoryEntry> window(history.begin(), history.end());
      const planner::Adverse adverse = planner::confirmed_adverse(window, p);
      if (!recovery) {
        // Without recovery there is nothing to trigger; the metric counts a
        // robot that made no net progress over a whole window.
        if (stalled(window, p)) {
          finish(Outcome::Frozen);
          break;
        }
      } else if (adverse != planner::Adverse::None) {
        RecoveryEvent ev;
        ev.t = t;
        ev.cause = adverse;
        ev.position = pose.position();
        if (++recoveries > spec.max_recoveries) {
          out.recoveries.push_back(ev);
          finish(Outcome::RecoveryFailure);
          break;
        }
        ev.target = planner::select_recovery_point(ps, pose.position(), goal, snap, p);
        out.recoveries.push_back(ev);
        if (!ev.target) {
          finish(Outcome::RecoveryFailure);
          break;
        }
        ps.mode = planner::Mode::Recovering;
        ps.recovery_target = ev.target;
        recovery_start = t;
        history.clear();
        cmd = planner::recovery_command(pose.position(), *ev.target, p.k_p, p.v_max);
      } else {
        planner::record_safe(ps, t, pose, p);
      }
    }

    // Actuation.
    bool force = false;
    if (spec.force_snag_time >= 0.0 && !forced_snag_done && t >= spec.force_snag_time - 1e-9 &&
        footprint_touches(world, pose.position(), state.radius, VegClass::DenseGrass)) {
      force = true;
      forced_snag_done = true;
    }
    const StepResult step =
        step_dynamics(state, cmd, world, dt, spec.dynamics,
                      mix_seed({seed, fnv1a("dynamics"), static_cast<std::uint64_t>(cycle)}),
                      force);
    out.path_length += (step.state.pose.position() - pose.position()).norm();
    if (step.events.snag_onset) out.snag_times.push_back(t);
    state = step.state;
    t += dt;
    if (step.events.collision) {
      out.trajectory.push_back(state.pose);
      finish(Outcome::Collision);
      break;
    }
  }
  return out;
}

MetricsReport compute_metrics(std::span<const TrialResult> results) {
  if (results.empty()) throw std::invalid_argument("compute_metrics needs at least one trial");
  MetricsReport r;
  r.scenario = results.front().scenario;
  r.variant = results.front().variant;
  r.trials = static_cast<int>(results.size());

  std::array<int, 5> counts{};
  double len_sum = 0.0, fpr_sum = 0.0, progress_sum = 0.0;
  int successes = 0, fpr_trials = 0, failures = 0;
  for (const TrialResult& tr : results) {
    ++counts[static_cast<int>(tr.outcome)];
    if (tr.outcome == Outcome::Success) {
      ++successes;
      // Against the start-to-end chord, so the goal tolerance cannot push it below 1.
      const double chord = (tr.trajectory.back().position() - tr.trajectory.front().position()).norm();
      len_sum += tr.path_length / chord;
    } else {
      ++failures;
      progress_sum += (tr.straight_distance - tr.final_distance) / tr.straight_distance;
    }
    if (const auto f = false_positive_rate(tr.confusion)) {
      ++fpr_trials;
      fpr_sum += *f;
    }
  }
  const double n = static_cast<double>(results.size());
  r.success_rate = counts[static_cast<int>(Outcome::Success)] / n;
  r.freezing_rate = (counts[static_cast<int>(Outcome::Frozen)] +
                     counts[static_cast<int>(Outcome::RecoveryFailure)]) / n;
  r.collision_rate = counts[static_cast<int>(Outcome::Collision)] / n;
  r.timeout_rate = counts[static_cast<int>(Outcome::Timeout)] / n;
  r.norm_traj_len = successes ? len_sum / successes : kNaN;
  r.fpr = fpr_trials ? fpr_sum / fpr_trials : kNaN;
  r.progress = failures ? progress_sum / failures : kNaN;
  return r;
}

std::vector<MetricsReport> metrics_table(std::span<const TrialResult> results) {
  std::vector<std::pair<std::string, Variant>> order;
  std::map<std::pair<std::string, int>, std::vector<TrialResult>> groups;
  for (const TrialResult& tr : results) {
    const auto key = std::make_pair(tr.scenario, static_cast<int>(tr.variant));
    auto [it, fresh] = groups.try_emplace(key);
    if (fresh) order.emplace_back(tr.scenario, tr.variant);
    it->second.push_back(tr);
  }
  std::vector<MetricsReport> table;
  for (const auto& [name, v] : order) {
    table.push_back(compute_metrics(groups.at({name, static_cast<int>(v)})));
  }
  return table;
}

BatchResult run_batch(std::span<const ScenarioSpec> scenarios, std::span<const Variant> variants,
                      int n_trials, std::uint64_t base_seed, const BatchOptions& options) {
  if (n_trials < 1) throw std::invalid_argument("n_trials must be at least 1");
  for (const auto& s : scenarios) s.validate();

  struct Job {
    const ScenarioSpec* spec;
    Variant variant;
    int trial;
  };
  std::vector<Job> jobs;
  for (const auto& s : scenarios) {
    for (Variant v : variants) {
      for (int k = 0; k < n_trials; ++k) jobs.push_back({&s, v, k});
    }
  }

  BatchResult batch;
  batch.base_seed = base_seed;
  batch.results.resize(jobs.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) {
      const Job& j = jobs[i];
      try {
        TrialOptions opt;
        opt.fewshot = options.fewshot;
        batch.results[i] = run_trial(*j.spec, j.variant, trial_seed(base_seed, *j.spec, j.trial),
                                     j.trial, opt);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = jobs.size();
      }
    }
  };
  unsigned n_threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  n_threads = std::max(1u, std::min<unsigned>(n_threads, static_cast<unsigned>(jobs.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  batch.table = metrics_table(batch.results);
  return batch;
}

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string table_csv(std::span<const MetricsReport> table) {
  std::ostringstream os;
  os << "scenario,variant,success_rate,freezing_rate,norm_traj_len,fpr,progress\n";
  for (const auto& r : table) {
    os << r.scenario << ',' << to_string(r.variant) << ',' << num(r.success_rate) << ','
       << num(r.freezing_rate) << ',' << num(r.norm_traj_len) << ',' << num(r.fpr) << ','
       << num(r.progress) << '\n';
  }
  return os.str();
}

}  // namespace vern::harness
