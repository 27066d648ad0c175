#ifndef VERN_SCENARIO_HPP_
#define VERN_SCENARIO_HPP_

#include <cstdint>
#include <string>

#include "vern/costmap.hpp"
#include "vern/perception.hpp"
#include "vern/planner.hpp"
#include "vern/world.hpp"

namespace vern {

struct SensorParams {
  int n_beams = 360;
  double max_range = 4.0;
  double min_range = 0.5;  // returns closer than this are dropped (robot body)
  double z_low = 0.2;
  double z_mid = 0.7;
  double z_high = 1.2;
};

/// Everything one trial needs. Text form: one "key = value" per line, '#'
/// starts a comment, blobs are written as
///   blob = <Class> rect x0 y0 x1 y1 [height=H] [drag=D] [density=P]
///   blob = <Class> circle cx cy r [...]
///   blob = <Class> polygon x,y x,y x,y ... [...]
struct ScenarioSpec {
  std::string name = "scenario";
  WorldSpec world;
  Pose2D start;
  Vec2 goal = Vec2::Zero();
  double duration = 120.0;  // s of simulated time
  std::uint64_t seed = 1;

  double robot_radius = 0.3;
  double goal_tolerance = 0.3;
  double start_jitter_xy = 0.0;     // uniform +- offset per trial, m
  double start_jitter_theta = 0.0;  // rad
  double force_snag_time = -1.0;    // scripted snag once in dense grass after this time; < 0 off
  int max_recoveries = 5;
  double recovery_timeout = 15.0;   // s allowed to reach a recovery point

  int costmap_cells = 81;
  double costmap_resolution = 0.1;

  SensorParams sensors;
  DynamicsParams dynamics;
  perception::CameraModel camera;
  perception::NoiseModel noise;
  double alpha = 2.0;
  costmap::ClearingWeights weights;
  planner::PlannerParams planner;

  /// Throws ConfigError on the first inconsistent field.
  void validate() const;
};

/// Parses the text form. Unknown keys and malformed values raise ConfigError
/// naming the line.
ScenarioSpec parse_scenario(const std::string& text);
/// Writes every field; parse_scenario(serialize_scenario(s)) reproduces s.
std::string serialize_scenario(const ScenarioSpec& spec);
ScenarioSpec load_scenario(const std::string& path);

/// FNV-1a of the serialized text, hex encoded.
std::string scenario_hash(const ScenarioSpec& spec);

/// Directory holding the bundled scenario files.
std::string bundled_scenario_dir();

}  // namespace vern

#endif  // VERN_SCENARIO_HPP_
