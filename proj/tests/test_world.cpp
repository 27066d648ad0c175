#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "vern/error.hpp"
#include "vern/world.hpp"

using namespace vern;

namespace {

BlobSpec rect(VegClass c, double x0, double y0, double x1, double y1, double h, double drag = 0.0) {
  BlobSpec b;
  b.cls = c;
  b.shape = BlobShape::Rect;
  b.points = {Vec2(x0, y0), Vec2(x1, y1)};
  b.height = h;
  b.drag = drag;
  return b;
}

BlobSpec circle(VegClass c, double cx, double cy, double r, double h) {
  BlobSpec b;
  b.cls = c;
  b.shape = BlobShape::Circle;
  b.points = {Vec2(cx, cy)};
  b.radius = r;
  b.height = h;
  return b;
}

}  // namespace

TEST_CASE("tree blob at the center of a 20x20 world") {
  WorldSpec s;
  s.width = s.height = 20;
  s.blobs.push_back(circle(VegClass::Tree, 1.0, 1.0, 0.25, 3.0));
  const WorldGrid w = build_world(s);
  CHECK(w.count(VegClass::Tree) > 0);
  const auto c = w.cell_of(Vec2(1.0, 1.0));
  REQUIRE(c);
  CHECK(w.at(c->x(), c->y()).cls == VegClass::Tree);
  CHECK(w.at(c->x(), c->y()).height == 3.0);
  CHECK(w.class_at(Vec2(0.05, 0.05)) == VegClass::Free);
  CHECK(w.class_at(Vec2(-1.0, 0.5)) == VegClass::Free);
}

TEST_CASE("class counts equal the rasterized blob areas") {
  WorldSpec s;
  s.width = 60;
  s.height = 40;
  s.blobs.push_back(rect(VegClass::SparseGrass, 0.5, 0.5, 2.5, 3.5, 1.0));
  s.blobs.push_back(rect(VegClass::SparseGrass, 3.5, 0.5, 4.5, 1.5, 1.0));
  s.blobs.push_back(circle(VegClass::Tree, 5.0, 3.0, 0.3, 3.0));
  const WorldGrid w = build_world(s);
  std::size_t tree = 0;
  for (int iy = 0; iy < 40; ++iy) {
    for (int ix = 0; ix < 60; ++ix) {
      if ((w.cell_center(ix, iy) - Vec2(5.0, 3.0)).norm() <= 0.3) ++tree;
    }
  }
  CHECK(w.count(VegClass::SparseGrass) == 20u * 30u + 10u * 10u);
  CHECK(w.count(VegClass::Tree) == tree);
}

TEST_CASE("later blobs overwrite earlier ones") {
  WorldSpec s;
  s.width = s.height = 20;
  s.blobs.push_back(rect(VegClass::DenseGrass, 0, 0, 2, 2, 1.0, 0.01));
  s.blobs.push_back(rect(VegClass::Bush, 0.5, 0.5, 1.0, 1.0, 0.4));
  const WorldGrid w = build_world(s);
  CHECK(w.class_at(Vec2(0.75, 0.75)) == VegClass::Bush);
  CHECK(w.class_at(Vec2(1.5, 1.5)) == VegClass::DenseGrass);
}

TEST_CASE("blob validation rejects out-of-range classes") {
  CHECK_THROWS_AS(validate_blob(rect(VegClass::Bush, 0, 0, 1, 1, 1.0)), ConfigError);
  CHECK_THROWS_AS(validate_blob(rect(VegClass::Tree, 0, 0, 1, 1, 1.5)), ConfigError);
  CHECK_THROWS_AS(validate_blob(rect(VegClass::DenseGrass, 0, 0, 1, 1, 0.2)), ConfigError);
  CHECK_THROWS_AS(validate_blob(rect(VegClass::Bush, 0, 0, 1, 1, 0.3, 0.1)), ConfigError);
  CHECK_NOTHROW(validate_blob(rect(VegClass::Bush, 0, 0, 1, 1, 0.5)));
  WorldSpec s;
  s.width = s.height = 10;
  s.blobs.push_back(rect(VegClass::Bush, 0, 0, 1, 1, 1.0));
  CHECK_THROWS_AS(build_world(s), ConfigError);
}

TEST_CASE("partial density is seeded") {
  WorldSpec s;
  s.width = s.height = 40;
  s.seed = 3;
  auto b = rect(VegClass::SparseGrass, 0, 0, 4, 4, 0.8);
  b.density = 0.4;
  s.blobs.push_back(b);
  const WorldGrid a = build_world(s), c = build_world(s);
  CHECK(a.count(VegClass::SparseGrass) == c.count(VegClass::SparseGrass));
  const double frac = a.count(VegClass::SparseGrass) / 1600.0;
  CHECK(frac > 0.3);
  CHECK(frac < 0.5);
}

TEST_CASE("raycast in an empty world reports max range") {
  WorldSpec s;
  s.width = s.height = 100;
  const WorldGrid w = build_world(s);
  const ScanLayer scan = raycast_scan(w, Pose2D(5, 5, 0.3), 0.2, 360, 4.0);
  for (Eigen::Index k = 0; k < scan.ranges.size(); ++k) {
    CHECK(scan.ranges[k] == 4.0);
    CHECK_FALSE(scan.is_hit(k));
  }
}

TEST_CASE("tree two meters ahead is seen by all three layers") {
  WorldSpec s;
  s.width = s.height = 100;
  s.blobs.push_back(rect(VegClass::Tree, 7.0, 4.0, 7.4, 6.0, 3.0));
  const WorldGrid w = build_world(s);
  const Pose2D pose(5.05, 5.05, 0.0);
  for (double z : {0.2, 0.7, 1.2}) {
    const ScanLayer scan = raycast_scan(w, pose, z, 360, 4.0);
    CHECK(scan.bearings[0] == 0.0);
    CHECK(scan.ranges[0] == doctest::Approx(1.95).epsilon(1e-9));
    CHECK(std::abs(scan.ranges[0] - oracle::march(w, pose, 0.0, z, 4.0, 0.0, 1e-3)) < 1e-3 + 1e-9);
  }
}

TEST_CASE("grass lower than the beam is passed through") {
  WorldSpec s;
  s.width = s.height = 100;
  s.blobs.push_back(rect(VegClass::SparseGrass, 6.0, 4.0, 7.0, 6.0, 0.4));
  const WorldGrid w = build_world(s);
  const Pose2D pose(5.0, 5.0, 0.0);
  CHECK(raycast_scan(w, pose, 0.7, 360, 4.0).ranges[0] == 4.0);
  CHECK(raycast_scan(w, pose, 0.2, 360, 4.0).ranges[0] == doctest::Approx(1.0));
  CHECK(oracle::march(w, pose, 0.0, 0.7, 4.0, 0.0, 1e-3) == 4.0);
}

TEST_CASE("raycast agrees with a fine ray march on random worlds") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    WorldSpec s;
    s.width = s.height = 80;
    for (int i = 0; i < 8; ++i) {
      const double x = 0.5 + 7.0 * u(rng), y = 0.5 + 7.0 * u(rng);
      const bool tree = u(rng) < 0.5;
      s.blobs.push_back(tree ? circle(VegClass::Tree, x, y, 0.2 + 0.4 * u(rng), 3.0)
                             : rect(VegClass::DenseGrass, x, y, x + 0.8, y + 0.6, 0.5 + u(rng), 0.01));
    }
    const WorldGrid w = build_world(s);
    Pose2D pose(4.0 + u(rng) * 0.5, 4.0 + u(rng) * 0.5, u(rng) * 6.0);
    for (double z : {0.2, 0.7, 1.2}) {
      const ScanLayer scan = raycast_scan(w, pose, z, 72, 4.0, 0.5);
      for (Eigen::Index k = 0; k < scan.ranges.size(); ++k) {
        const double ref = oracle::march(w, pose, scan.bearings[k], z, 4.0, 0.5, 2e-4);
        // A march that skims a cell corner may land one step late or miss it.
        if (std::abs(ref - scan.ranges[k]) > 2e-4 + 1e-9) {
          const double a = pose.theta + scan.bearings[k];
          const Vec2 hit = pose.position() + scan.ranges[k] * Vec2(std::cos(a), std::sin(a));
          const double fx = hit.x() / 0.1 - std::round(hit.x() / 0.1);
          const double fy = hit.y() / 0.1 - std::round(hit.y() / 0.1);
          CHECK((std::abs(fx) < 1e-3 || std::abs(fy) < 1e-3));
        }
        ++checked;
      }
    }
  }
  CHECK(checked == 20 * 3 * 72);
}

TEST_CASE("min range skips returns close to the sensor") {
  WorldSpec s;
  s.width = s.height = 100;
  s.blobs.push_back(rect(VegClass::Tree, 5.2, 4.0, 5.3, 6.0, 3.0));
  s.blobs.push_back(rect(VegClass::Tree, 7.0, 4.0, 7.1, 6.0, 3.0));
  const WorldGrid w = build_world(s);
  const Pose2D pose(5.0, 5.0, 0.0);
  CHECK(raycast_scan(w, pose, 0.2, 360, 4.0).ranges[0] == doctest::Approx(0.2));
  CHECK(raycast_scan(w, pose, 0.2, 360, 4.0, 0.5).ranges[0] == doctest::Approx(2.0));
}

TEST_CASE("raycast rejects a pose outside the world") {
  WorldSpec s;
  s.width = s.height = 10;
  const WorldGrid w = build_world(s);
  CHECK_THROWS_AS(raycast_scan(w, Pose2D(-1, 0.5, 0), 0.2, 360, 4.0), std::out_of_range);
}

TEST_CASE("free space step advances exactly v dt") {
  WorldSpec s;
  s.width = s.height = 100;
  const WorldGrid w = build_world(s);
  RobotState st;
  st.pose = Pose2D(5, 5, 0.4);
  const auto r = step_dynamics(st, UnicycleCommand{1.0, 0.0}, w, 0.1, DynamicsParams{}, 1);
  CHECK((r.state.pose.position() - st.pose.position()).norm() == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(r.state.pose.theta == doctest::Approx(0.4));
  CHECK_FALSE(r.events.collision);
}

TEST_CASE("dense grass drag attenuates the step") {
  // One-meter cells keep the whole footprint in a single cell of drag 0.3.
  WorldSpec s;
  s.width = s.height = 10;
  s.resolution = 1.0;
  s.blobs.push_back(rect(VegClass::DenseGrass, 0, 0, 10, 10, 1.0, 0.3));
  const WorldGrid w = build_world(s);
  RobotState st;
  st.pose = Pose2D(4.45, 4.5, 0.0);
  CHECK(footprint_drag(w, st.pose.position(), st.radius) == doctest::Approx(0.3));
  const auto r = step_dynamics(st, UnicycleCommand{1.0, 0.0}, w, 0.1, DynamicsParams{}, 1);
  const double oracle_step = 1.0 * (1.0 - 0.3) * 0.1;
  CHECK(r.state.pose.x - st.pose.x == doctest::Approx(oracle_step).epsilon(1e-12));
}

TEST_CASE("a snagged robot does not move and escapes only by a sustained holonomic push") {
  WorldSpec s;
  s.width = s.height = 100;
  s.blobs.push_back(rect(VegClass::DenseGrass, 2, 2, 8, 8, 1.0, 0.005));
  const WorldGrid w = build_world(s);
  DynamicsParams dp;
  dp.escape_time = 1.0;
  RobotState st;
  st.pose = Pose2D(5, 5, 0);
  auto r = step_dynamics(st, UnicycleCommand{0.4, 0.0}, w, 0.2, dp, 1, true);
  CHECK(r.events.snag_onset);
  CHECK(r.state.snagged);
  CHECK(r.state.pose.x == st.pose.x);
  CHECK(r.state.pose.y == st.pose.y);
  for (int i = 0; i < 10; ++i) {
    r = step_dynamics(r.state, UnicycleCommand{0.4, 0.0}, w, 0.2, dp, 2 + i);
    CHECK(r.state.snagged);
    CHECK(r.state.pose.x == st.pose.x);
  }
  int steps = 0;
  while (r.state.snagged && steps < 20) {
    r = step_dynamics(r.state, HolonomicCommand{-0.3, 0.0}, w, 0.2, dp, 100 + steps);
    ++steps;
  }
  CHECK(steps == 5);
  CHECK(r.events.escaped);
}

TEST_CASE("snag rate is zero outside dense grass") {
  WorldSpec s;
  s.width = s.height = 100;
  s.blobs.push_back(rect(VegClass::SparseGrass, 2, 2, 8, 8, 1.0, 0.002));
  const WorldGrid w = build_world(s);
  DynamicsParams dp;
  dp.p_snag = 1e6;
  RobotState st;
  st.pose = Pose2D(5, 5, 0);
  CHECK_FALSE(step_dynamics(st, UnicycleCommand{0.4, 0.0}, w, 0.2, dp, 1, true).state.snagged);
}

TEST_CASE("collision check treats only non-pliable cells as obstacles") {
  WorldSpec s;
  s.width = s.height = 100;
  s.blobs.push_back(rect(VegClass::Tree, 2.0, 2.0, 2.1, 2.1, 3.0));
  s.blobs.push_back(rect(VegClass::DenseGrass, 5, 5, 8, 8, 1.0, 0.01));
  s.blobs.push_back(rect(VegClass::Bush, 9.0, 5.0, 9.1, 5.1, 0.3));
  const WorldGrid w = build_world(s);
  CHECK(collision_check(w, Pose2D(2.05, 2.05, 0), 0.3));
  CHECK_FALSE(collision_check(w, Pose2D(6.5, 6.5, 0), 0.3));
  // Disc edge exactly on the bush cell's left side: closed set, so a hit.
  CHECK(collision_check(w, Pose2D(8.5, 5.05, 0), 0.5));
  CHECK_FALSE(collision_check(w, Pose2D(8.5, 5.05, 0), 0.49));
}

TEST_CASE("leaving the map counts as a collision") {
  WorldSpec s;
  s.width = s.height = 20;
  const WorldGrid w = build_world(s);
  RobotState st;
  st.pose = Pose2D(1.95, 1.0, 0);
  CHECK(step_dynamics(st, UnicycleCommand{1.0, 0.0}, w, 0.2, DynamicsParams{}, 1).events.collision);
}
