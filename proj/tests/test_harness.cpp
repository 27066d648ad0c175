#include <doctest.h>

#include <cmath>
#include <vector>

#include "vern/harness.hpp"
#include "vern/scenario.hpp"

using namespace vern;
using namespace vern::harness;

namespace {

ScenarioSpec open_field(const std::string& name, double goal_x) {
  ScenarioSpec s;
  s.name = name;
  s.world.width = 100;
  s.world.height = 60;
  s.start = Pose2D(1.0, 3.0, 0.0);
  s.goal = Vec2(goal_x, 3.0);
  s.duration = 30.0;
  return s;
}

BlobSpec rect(VegClass c, double x0, double y0, double x1, double y1, double h, double drag = 0.0) {
  BlobSpec b;
  b.cls = c;
  b.points = {Vec2(x0, y0), Vec2(x1, y1)};
  b.height = h;
  b.drag = drag;
  return b;
}

// Dense grass wall between two tree fences: the only way on is through it.
ScenarioSpec grass_wall() {
  ScenarioSpec s;
  s.name = "grass-wall";
  s.world.width = 100;
  s.world.height = 60;
  s.start = Pose2D(1.0, 3.0, 0.0);
  s.goal = Vec2(8.5, 3.0);
  s.duration = 60.0;
  s.camera.fov_deg = 120.0;
  s.world.blobs = {rect(VegClass::Tree, 0, 0, 10, 0.3, 3.0), rect(VegClass::Tree, 0, 5.7, 10, 6, 3.0),
                   rect(VegClass::DenseGrass, 4, 0.3, 6, 5.7, 1.0, 0.008)};
  return s;
}

TrialResult with_outcome(Outcome o) {
  TrialResult r;
  r.scenario = "s";
  r.outcome = o;
  r.trajectory = {Pose2D(0, 0, 0), Pose2D(1, 0, 0)};
  r.path_length = 1.0;
  r.straight_distance = 2.0;
  r.final_distance = o == Outcome::Success ? 0.0 : 1.5;
  return r;
}

}  // namespace

TEST_CASE("unobstructed goal five meters ahead") {
  const auto r = run_trial(open_field("open", 6.0), Variant::Vern, 1);
  CHECK(r.outcome == Outcome::Success);
  CHECK(r.path_length == doctest::Approx(5.0).epsilon(0.07));
  const auto m = compute_metrics(std::vector<TrialResult>{r});
  CHECK(m.norm_traj_len == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::isnan(m.fpr));
  CHECK(r.trajectory.front().x == 1.0);
  CHECK(r.recoveries.empty());
}

TEST_CASE("grass wall: baseline freezes, vern pushes through") {
  const ScenarioSpec s = grass_wall();
  const auto base = run_trial(s, Variant::DwaBaseline, 3);
  CHECK(base.outcome == Outcome::Frozen);
  CHECK(base.final_distance > 3.0);
  const auto v = run_trial(s, Variant::Vern, 3);
  CHECK(v.outcome == Outcome::Success);
  CHECK(*false_positive_rate(v.confusion) == 0.0);
}

TEST_CASE("metrics counting") {
  std::vector<TrialResult> rs;
  for (int i = 0; i < 7; ++i) rs.push_back(with_outcome(Outcome::Success));
  rs.push_back(with_outcome(Outcome::Frozen));
  rs.push_back(with_outcome(Outcome::RecoveryFailure));
  rs.push_back(with_outcome(Outcome::Collision));
  const auto m = compute_metrics(rs);
  CHECK(m.trials == 10);
  CHECK(m.success_rate == doctest::Approx(0.7));
  CHECK(m.freezing_rate == doctest::Approx(0.2));
  CHECK(m.collision_rate == doctest::Approx(0.1));
  CHECK(m.success_rate + m.freezing_rate + m.collision_rate + m.timeout_rate == doctest::Approx(1.0));
  CHECK(m.norm_traj_len == doctest::Approx(1.0));
  CHECK(m.progress == doctest::Approx(0.25));
  CHECK_THROWS(compute_metrics(std::vector<TrialResult>{}));
}

TEST_CASE("names round trip") {
  for (Variant v : kAllVariants) CHECK(variant_from_string(to_string(v)) == v);
  for (Outcome o : {Outcome::Success, Outcome::Frozen, Outcome::Collision, Outcome::Timeout,
                    Outcome::RecoveryFailure}) {
    CHECK(outcome_from_string(to_string(o)) == o);
  }
  CHECK_THROWS(variant_from_string("vern-fast"));
}

TEST_CASE("trial seeds ignore the variant and differ by trial") {
  const auto s = open_field("a", 3.0);
  CHECK(trial_seed(1, s, 0) == trial_seed(1, s, 0));
  CHECK(trial_seed(1, s, 0) != trial_seed(1, s, 1));
  CHECK(trial_seed(1, s, 0) != trial_seed(2, s, 0));
  CHECK(trial_seed(1, s, 0) != trial_seed(1, open_field("b", 3.0), 0));
}

TEST_CASE("batch cardinality, partition and byte-identical reruns") {
  std::vector<ScenarioSpec> specs;
  for (int i = 0; i < 4; ++i) {
    auto s = open_field("field" + std::to_string(i), 2.5 + 0.2 * i);
    s.start_jitter_xy = 0.1;
    specs.push_back(s);
  }
  const BatchResult a = run_batch(specs, kAllVariants, 10, 42, {1, nullptr});
  CHECK(a.results.size() == 160u);
  CHECK(a.table.size() == 16u);
  for (const auto& m : a.table) {
    CHECK(m.trials == 10);
    CHECK(m.success_rate + m.freezing_rate + m.collision_rate + m.timeout_rate == doctest::Approx(1.0));
  }
  const BatchResult b = run_batch(specs, kAllVariants, 10, 42, {1, nullptr});
  CHECK(archive_to_json(a) == archive_to_json(b));
  CHECK(table_csv(a.table) == table_csv(b.table));

  // One trial rerun alone matches its batch record.
  const TrialResult& rec = a.results[3 * 10 + 7];  // field0, dwa-baseline, trial 7
  CHECK(rec.variant == Variant::DwaBaseline);
  const auto alone = run_trial(specs[0], Variant::DwaBaseline, trial_seed(42, specs[0], 7), 7);
  CHECK(alone.trajectory.size() == rec.trajectory.size());
  CHECK(alone.trajectory.back().x == rec.trajectory.back().x);
}

TEST_CASE("archive round trip reproduces the table") {
  std::vector<ScenarioSpec> specs = {open_field("a", 3.0), grass_wall()};
  const std::vector<Variant> vs = {Variant::Vern, Variant::DwaBaseline};
  const BatchResult a = run_batch(specs, vs, 2, 5, {1, nullptr});
  const std::string text = archive_to_json(a);
  const BatchResult back = archive_from_json(text);
  CHECK(archive_to_json(back) == text);
  CHECK(table_csv(back.table) == table_csv(a.table));
  CHECK(table_json(back.table) == table_json(a.table));
  CHECK_THROWS(archive_from_json("{"));
  CHECK_THROWS(archive_from_json("{\"format\":\"other\",\"version\":1}"));
}

TEST_CASE("single trial rates are zero or one") {
  std::vector<ScenarioSpec> specs = {grass_wall()};
  const BatchResult b = run_batch(specs, kAllVariants, 1, 9, {1, nullptr});
  for (const auto& m : b.table) {
    for (double r : {m.success_rate, m.freezing_rate, m.collision_rate, m.timeout_rate}) {
      CHECK((r == 0.0 || r == 1.0));
    }
  }
}

TEST_CASE("csv layout") {
  std::vector<TrialResult> rs = {with_outcome(Outcome::Success)};
  const auto csv = table_csv(metrics_table(rs));
  CHECK(csv.rfind("scenario,variant,success_rate,freezing_rate,norm_traj_len,fpr,progress\n", 0) == 0);
  CHECK(csv.find("s,vern,1.000000,0.000000,1.000000,nan,nan\n") != std::string::npos);
}

TEST_CASE("start in collision is a configuration error") {
  auto s = grass_wall();
  s.start = Pose2D(1.0, 0.4, 0.0);
  CHECK_THROWS(run_trial(s, Variant::Vern, 1));
}
