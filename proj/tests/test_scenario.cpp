#include <doctest.h>

#include <filesystem>

#include "vern/error.hpp"
#include "vern/geometry.hpp"
#include "vern/invariants.hpp"
#include "vern/random.hpp"
#include "vern/scenario.hpp"

using namespace vern;

TEST_CASE("bundled scenarios parse, validate and round trip") {
  int n = 0;
  for (const auto& e : std::filesystem::directory_iterator(bundled_scenario_dir())) {
    if (e.path().extension() != ".scn") continue;
    ++n;
    const ScenarioSpec s = load_scenario(e.path().string());
    CHECK_NOTHROW(s.validate());
    CHECK_NOTHROW(build_world(s.world));
    const std::string text = serialize_scenario(s);
    CHECK(serialize_scenario(parse_scenario(text)) == text);
    CHECK(scenario_hash(parse_scenario(text)) == scenario_hash(s));
  }
  CHECK(n == 5);
}

TEST_CASE("scenario text") {
  const auto s = parse_scenario(
      "# comment\n"
      "name = tiny\n"
      "world.width = 30\n"
      "world.height = 20\n"
      "start.x = 0.5\n"
      "start.y = 1\n"
      "goal.x = 2.5\n"
      "goal.y = 1  # trailing comment\n"
      "noise.p_mis = 0.2\n"
      "blob = Bush circle 1.5 1.5 0.2 height=0.4\n"
      "blob = SparseGrass polygon 0,0 1,0 1,1 height=0.8 density=0.5\n");
  CHECK(s.name == "tiny");
  CHECK(s.goal == Vec2(2.5, 1.0));
  CHECK(s.noise.p_mis == 0.2);
  REQUIRE(s.world.blobs.size() == 2u);
  CHECK(s.world.blobs[0].shape == BlobShape::Circle);
  CHECK(s.world.blobs[1].points.size() == 3u);
  CHECK(s.world.blobs[1].density == 0.5);
}

TEST_CASE("malformed scenario text names the line") {
  CHECK_THROWS_AS(parse_scenario("bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("duration = fast\n"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("blob = Bush rect 0 0 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_scenario("blob = Hedge rect 0 0 1 1 height=0.2\n"), ConfigError);
  try {
    parse_scenario("name = x\nbogus = 1\n");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
}

TEST_CASE("validation catches bad bush heights through the world") {
  ScenarioSpec s;
  s.world.width = s.world.height = 20;
  BlobSpec b;
  b.cls = VegClass::Bush;
  b.points = {Vec2(0, 0), Vec2(1, 1)};
  b.height = 1.0;
  s.world.blobs.push_back(b);
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("frame transforms") {
  const FrameTransform a(Vec2(1, 2), 0.5), b(Vec2(-3, 0.5), -1.2);
  const Vec2 p(0.3, -0.7);
  CHECK((a.inverse().apply(a.apply(p)) - p).norm() < 1e-12);
  CHECK(((a * b).apply(p) - a.apply(b.apply(p))).norm() < 1e-12);
  CHECK(normalize_angle(3 * std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(normalize_angle(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
  const Pose2D pose(1, 1, std::numbers::pi / 2);
  CHECK((FrameTransform::from_pose(pose).apply(Vec2(1, 0)) - Vec2(1, 2)).norm() < 1e-12);
}

TEST_CASE("seed mixing is order sensitive") {
  CHECK(mix_seed({1, 2}) != mix_seed({2, 1}));
  CHECK(unit_from_bits(~0ULL) < 1.0);
}

TEST_CASE("property suites pass") {
  for (const auto& r : invariants::run_all(1)) {
    INFO(r.name << ": " << r.detail);
    CHECK(r.passed);
  }
}
