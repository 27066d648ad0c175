#include "vern/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <type_traits>
#include <variant>
#include <vector>

#include "vern/error.hpp"
#include "vern/random.hpp"

namespace vern {

namespace {

static_assert(std::is_same_v<std::size_t, std::uint64_t>, "size_t fields share the uint64 slot");
using FieldRef = std::variant<double*, int*, std::uint64_t*, std::string*>;

struct Field {
  const char* key;
  FieldRef ref;
};

// One table drives both parsing and serialization so the two stay in step.
std::vector<Field> fields(ScenarioSpec& s) {
  auto& pl = s.planner;
  return {
      {"name", &s.name},
      {"seed", &s.seed},
      {"duration", &s.duration},
      {"world.width", &s.world.width},
      {"world.height", &s.world.height},
      {"world.resolution", &s.world.resolution},
      {"world.seed", &s.world.seed},
      {"start.x", &s.start.x},
      {"start.y", &s.start.y},
      {"start.theta", &s.start.theta},
      {"goal.x", &s.goal.x()},
      {"goal.y", &s.goal.y()},
      {"robot.radius", &s.robot_radius},
      {"goal.tolerance", &s.goal_tolerance},
      {"start.jitter_xy", &s.start_jitter_xy},
      {"start.jitter_theta", &s.start_jitter_theta},
      {"sim.force_snag_time", &s.force_snag_time},
      {"sim.max_recoveries", &s.max_recoveries},
      {"sim.recovery_timeout", &s.recovery_timeout},
      {"costmap.cells", &s.costmap_cells},
      {"costmap.resolution", &s.costmap_resolution},
      {"sensor.beams", &s.sensors.n_beams},
      {"sensor.max_range", &s.sensors.max_range},
      {"sensor.min_range", &s.sensors.min_range},
      {"sensor.z_low", &s.sensors.z_low},
      {"sensor.z_mid", &s.sensors.z_mid},
      {"sensor.z_high", &s.sensors.z_high},
      {"dynamics.p_snag", &s.dynamics.p_snag},
      {"dynamics.escape_time", &s.dynamics.escape_time},
      {"dynamics.max_substep", &s.dynamics.max_substep},
      {"camera.fov_deg", &s.camera.fov_deg},
      {"camera.r1", &s.camera.r1},
      {"camera.r2", &s.camera.r2},
      {"noise.d_true", &s.noise.d_true},
      {"noise.d_false", &s.noise.d_false},
      {"noise.sigma", &s.noise.sigma},
      {"noise.p_mis", &s.noise.p_mis},
      {"perception.alpha", &s.alpha},
      {"clearing.w_s", &s.weights.w_s},
      {"clearing.w_d", &s.weights.w_d},
      {"clearing.w_npv", &s.weights.w_npv},
      {"clearing.b_npv", &s.weights.b_npv},
      {"planner.gamma_head", &pl.gamma_head},
      {"planner.gamma_obs", &pl.gamma_obs},
      {"planner.gamma_vel", &pl.gamma_vel},
      {"planner.v_max", &pl.v_max},
      {"planner.omega_max", &pl.omega_max},
      {"planner.acc_v", &pl.acc_v},
      {"planner.acc_omega", &pl.acc_omega},
      {"planner.dt", &pl.dt},
      {"planner.horizon", &pl.horizon},
      {"planner.rollout_step", &pl.rollout_step},
      {"planner.n_v", &pl.n_v},
      {"planner.n_omega", &pl.n_omega},
      {"planner.k_p", &pl.k_p},
      {"planner.freeze_window", &pl.freeze_window},
      {"planner.freeze_epsilon", &pl.freeze_epsilon},
      {"planner.freeze_confirm", &pl.freeze_confirm},
      {"planner.safe_period", &pl.safe_period},
      {"planner.safe_capacity", &pl.safe_capacity},
      {"planner.arrival_tolerance", &pl.arrival_tolerance},
      {"planner.unsafe_inflation", &pl.unsafe_inflation},
      {"planner.unsafe_halo", &pl.unsafe_halo},
      {"planner.recovery_standoff", &pl.recovery_standoff},
  };
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <typename T>
T parse_number(const std::string& text, const std::string& where) {
  T value{};
  const char* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, value);
  if (r.ec != std::errc() || r.ptr != end) {
    throw ConfigError(where + ": cannot parse '" + text + "' as a number");
  }
  return value;
}

BlobSpec parse_blob(const std::string& value, const std::string& where) {
  std::istringstream is(value);
  std::string cls, shape;
  is >> cls >> shape;
  BlobSpec b;
  try {
    b.cls = veg_class_from_string(cls);
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  std::vector<std::string> tokens;
  for (std::string tok; is >> tok;) tokens.push_back(tok);

  std::vector<double> numbers;
  std::vector<Vec2> vertices;
  for (const auto& tok : tokens) {
    if (const auto eq = tok.find('='); eq != std::string::npos) {
      const std::string k = tok.substr(0, eq);
      const double v = parse_number<double>(tok.substr(eq + 1), where);
      if (k == "height") b.height = v;
      else if (k == "drag") b.drag = v;
      else if (k == "density") b.density = v;
      else throw ConfigError(where + ": unknown blob attribute '" + k + "'");
    } else if (const auto comma = tok.find(','); comma != std::string::npos) {
      vertices.emplace_back(parse_number<double>(tok.substr(0, comma), where),
                            parse_number<double>(tok.substr(comma + 1), where));
    } else {
      numbers.push_back(parse_number<double>(tok, where));
    }
  }
  if (shape == "rect") {
    if (numbers.size() != 4) throw ConfigError(where + ": rect takes x0 y0 x1 y1");
    b.shape = BlobShape::Rect;
    b.points = {Vec2(numbers[0], numbers[1]), Vec2(numbers[2], numbers[3])};
  } else if (shape == "circle") {
    if (numbers.size() != 3) throw ConfigError(where + ": circle takes cx cy r");
    b.shape = BlobShape::Circle;
    b.points = {Vec2(numbers[0], numbers[1])};
    b.radius = numbers[2];
  } else if (shape == "polygon") {
    if (!numbers.empty() || vertices.size() < 3) {
      throw ConfigError(where + ": polygon takes at least three x,y vertices");
    }
    b.shape = BlobShape::Polygon;
    b.points = vertices;
  } else {
    throw ConfigError(where + ": unknown blob shape '" + shape + "'");
  }
  try {
    validate_blob(b);
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return b;
}

std::string serialize_blob(const BlobSpec& b) {
  std::ostringstream os;
  os << to_string(b.cls) << ' ';
  switch (b.shape) {
    case BlobShape::Rect:
      os << "rect " << fmt(b.points[0].x()) << ' ' << fmt(b.points[0].y()) << ' '
         << fmt(b.points[1].x()) << ' ' << fmt(b.points[1].y());
      break;
    case BlobShape::Circle:
      os << "circle " << fmt(b.points[0].x()) << ' ' << fmt(b.points[0].y()) << ' ' << fmt(b.radius);
      break;
    case BlobShape::Polygon:
      os << "polygon";
      for (const auto& p : b.points) os << ' ' << fmt(p.x()) << ',' << fmt(p.y());
      break;
  }
  os << " height=" << fmt(b.height) << " drag=" << fmt(b.drag) << " density=" << fmt(b.density);
  return os.str();
}

}  // namespace

void ScenarioSpec::validate() const {
  if (world.width <= 0 || world.height <= 0 || !(world.resolution > 0.0)) {
    throw ConfigError("world dimensions and resolution must be positive");
  }
  const Vec2 extent(world.width * world.resolution, world.height * world.resolution);
  const auto inside = [&](const Vec2& p) {
    return p.x() >= 0 && p.y() >= 0 && p.x() < extent.x() && p.y() < extent.y();
  };
  if (!inside(goal)) throw ConfigError("goal lies outside the world");
  if (!inside(start.position())) throw ConfigError("start lies outside the world");
  if (!(duration > 0.0)) throw ConfigError("duration must be positive");
  if (!(robot_radius > 0.0) || !(goal_tolerance > 0.0)) throw ConfigError("radius and goal tolerance must be positive");
  if (costmap_cells < 3 || !(costmap_resolution > 0.0)) throw ConfigError("bad cost map size");
  if (sensors.n_beams < 8 || !(sensors.max_range > sensors.min_range) || sensors.min_range < 0.0) {
    throw ConfigError("bad sensor configuration");
  }
  if (!(sensors.z_low >= 0.0 && sensors.z_low < sensors.z_mid && sensors.z_mid < sensors.z_high)) {
    throw ConfigError("scan heights must satisfy 0 <= z_low < z_mid < z_high");
  }
  if (!(camera.fov_deg > 0.0 && camera.r1 > 0.0 && camera.r2 > camera.r1)) {
    throw ConfigError("camera needs fov > 0 and 0 < r1 < r2");
  }
  if (!(noise.p_mis >= 0.0 && noise.p_mis <= 1.0) || noise.sigma < 0.0) throw ConfigError("bad noise model");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  weights.validate();
  planner.validate();
  for (const auto& b : world.blobs) validate_blob(b);
}

ScenarioSpec parse_scenario(const std::string& text) {
  ScenarioSpec s;
  auto table = fields(s);
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string where = "line " + std::to_string(lineno);
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "blob") {
      s.world.blobs.push_back(parse_blob(value, where));
      continue;
    }
    auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return key == f.key; });
    if (it == table.end()) throw ConfigError(where + ": unknown key '" + key + "'");
    std::visit(
        [&](auto* dst) {
          using T = std::remove_pointer_t<decltype(dst)>;
          if constexpr (std::is_same_v<T, std::string>) {
            *dst = value;
          } else {
            *dst = parse_number<T>(value, where);
          }
        },
        it->ref);
  }
  s.start = Pose2D(s.start.x, s.start.y, s.start.theta);
  s.validate();
  return s;
}

std::string serialize_scenario(const ScenarioSpec& spec) {
  ScenarioSpec copy = spec;
  std::ostringstream os;
  for (const Field& f : fields(copy)) {
    os << f.key << " = ";
    std::visit(
        [&](auto* src) {
          using T = std::remove_pointer_t<decltype(src)>;
          if constexpr (std::is_same_v<T, std::string>) {
            os << *src;
          } else if constexpr (std::is_same_v<T, double>) {
            os << fmt(*src);
          } else {
            os << *src;
          }
        },
        f.ref);
    os << '\n';
  }
  for (const auto& b : spec.world.blobs) os << "blob = " << serialize_blob(b) << '\n';
  return os.str();
}

ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_scenario(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string scenario_hash(const ScenarioSpec& spec) {
  const std::string text = serialize_scenario(spec);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(text.c_str())));
  return buf;
}

std::string bundled_scenario_dir() { return VERN_SCENARIO_DIR; }

}  // namespace vern
