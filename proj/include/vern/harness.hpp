#ifndef VERN_HARNESS_HPP_
#define VERN_HARNESS_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vern/perception.hpp"
#include "vern/planner.hpp"
#include "vern/scenario.hpp"

namespace vern::harness {

enum class Variant { Vern, VernNoHeight, VernNoRecovery, DwaBaseline };

inline constexpr std::array<Variant, 4> kAllVariants = {
    Variant::Vern, Variant::VernNoHeight, Variant::VernNoRecovery, Variant::DwaBaseline};

std::string_view to_string(Variant v);
/// Accepts vern, vern-no-height, vern-no-recovery, dwa-baseline.
Variant variant_from_string(std::string_view name);

enum class Outcome { Success, Frozen, Collision, Timeout, RecoveryFailure };

std::string_view to_string(Outcome o);
Outcome outcome_from_string(std::string_view name);

/// Logged quadrant predictions: rows are the ground-truth dominant class
/// (VegClass index), columns the predicted class column (SparseGrass..Tree).
using Confusion = std::array<std::array<std::int64_t, 4>, kNumVegClasses>;

struct RecoveryEvent {
  double t = 0.0;
  planner::Adverse cause = planner::Adverse::None;
  Vec2 position = Vec2::Zero();
  std::optional<Vec2> target;  // empty when no safe point qualified
  double arrived_t = -1.0;     // < 0 if never reached
};

struct TrialResult {
  std::string scenario;
  std::string spec_hash;
  Variant variant = Variant::Vern;
  int trial = 0;
  std::uint64_t seed = 0;

  Outcome outcome = Outcome::Timeout;
  double duration = 0.0;           // simulated seconds until the outcome
  std::vector<Pose2D> trajectory;  // one pose per control cycle, final pose last
  double path_length = 0.0;
  double straight_distance = 0.0;  // start -> goal
  double final_distance = 0.0;     // final pose -> goal
  Confusion confusion{};
  std::vector<RecoveryEvent> recoveries;
  std::vector<Vec2> unsafe;        // unsafe list at the end of the trial
  std::vector<double> snag_times;  // cycle start time of each snag onset
};

/// Negatives are non-pliable ground truth (Bush, Tree, Unknown); a false
/// positive is such a quadrant predicted as grass. nullopt with no negatives.
std::optional<double> false_positive_rate(const Confusion& c);
/// Logged predictions whose class column differs from the truth, over those
/// with a vegetation truth that has a column. nullopt when none.
std::optional<double> misclassification_rate(const Confusion& c);
std::int64_t logged_predictions(const Confusion& c);

/// What an observer sees after mapping and before the command is chosen.
struct CycleView {
  int cycle = 0;
  double t = 0.0;
  Pose2D pose;
  const planner::PlanningSnapshot* snapshot = nullptr;
  const planner::PlannerState* state = nullptr;
};

struct TrialOptions {
  const perception::FewShotBackend* fewshot = nullptr;  // oracle when null
  std::vector<Vec2> initial_unsafe;  // carried over from an earlier trial
  std::function<void(const CycleView&)> observer;
};

/// Closed loop at the planner period until goal, collision, unrecoverable
/// freeze or timeout. Same inputs give the same result.
TrialResult run_trial(const ScenarioSpec& spec, Variant variant, std::uint64_t seed,
                      int trial = 0, const TrialOptions& options = {});

/// Seed of one trial. The variant is deliberately left out so every planner
/// faces the same start jitter and noise draws.
std::uint64_t trial_seed(std::uint64_t base_seed, const ScenarioSpec& spec, int trial);

struct MetricsReport {
  std::string scenario;
  Variant variant = Variant::Vern;
  int trials = 0;
  double success_rate = 0.0;
  double freezing_rate = 0.0;   // Frozen and RecoveryFailure
  double collision_rate = 0.0;
  double timeout_rate = 0.0;
  double norm_traj_len = 0.0;   // path / start-to-end distance, mean over successes; NaN without any
  double fpr = 0.0;             // mean over trials that saw negatives; NaN without any
  double progress = 0.0;        // mean fraction of the start distance covered by failures; NaN without any
};

/// Throws std::invalid_argument on an empty list.
MetricsReport compute_metrics(std::span<const TrialResult> results);

struct BatchResult {
  std::uint64_t base_seed = 0;
  std::vector<TrialResult> results;  // scenario-major, then variant, then trial
  std::vector<MetricsReport> table;  // one row per (scenario, variant)
};

struct BatchOptions {
  unsigned threads = 0;  // 0: hardware concurrency
  const perception::FewShotBackend* fewshot = nullptr;
};

BatchResult run_batch(std::span<const ScenarioSpec> scenarios, std::span<const Variant> variants,
                      int n_trials, std::uint64_t base_seed, const BatchOptions& options = {});

/// Regroups results by (scenario, variant) in first-seen order.
std::vector<MetricsReport> metrics_table(std::span<const TrialResult> results);

/// scenario,variant,success_rate,freezing_rate,norm_traj_len,fpr,progress
std::string table_csv(std::span<const MetricsReport> table);
std::string table_json(std::span<const MetricsReport> table);

/// Raw archive (JSON). archive_from_json(archive_to_json(b)) reproduces b.
std::string archive_to_json(const BatchResult& batch);
BatchResult archive_from_json(const std::string& text);

}  // namespace vern::harness

#endif  // VERN_HARNESS_HPP_
