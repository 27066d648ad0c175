// JSON encoding of batch results.

#include <cmath>

#include <json.hpp>

#include "vern/error.hpp"
#include "vern/harness.hpp"

namespace vern::harness {

namespace {

using nlohmann::json;

constexpr std::string_view kFormat = "vern-archive";
constexpr int kVersion = 1;

std::string_view adverse_name(planner::Adverse a) {
  switch (a) {
    case planner::Adverse::Freezing: return "Freezing";
    case planner::Adverse::Entrapment: return "Entrapment";
    case planner::Adverse::None: break;
  }
  return "None";
}

planner::Adverse adverse_from(const std::string& s) {
  if (s == "Freezing") return planner::Adverse::Freezing;
  if (s == "Entrapment") return planner::Adverse::Entrapment;
  if (s == "None") return planner::Adverse::None;
  throw ConfigError("unknown adverse kind '" + s + "'");
}

json vec(const Vec2& v) { return json::array({v.x(), v.y()}); }
Vec2 vec_from(const json& j) { return Vec2(j.at(0).get<double>(), j.at(1).get<double>()); }

json nullable(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

json trial_to_json(const TrialResult& r) {
  json j;
  j["scenario"] = r.scenario;
  j["spec_hash"] = r.spec_hash;
  j["variant"] = to_string(r.variant);
  j["trial"] = r.trial;
  j["seed"] = r.seed;
  j["outcome"] = to_string(r.outcome);
  j["duration"] = r.duration;
  j["path_length"] = r.path_length;
  j["straight_distance"] = r.straight_distance;
  j["final_distance"] = r.final_distance;
  j["snag_times"] = r.snag_times;
  j["confusion"] = r.confusion;
  json rec = json::array();
  for (const auto& e : r.recoveries) {
    rec.push_back({{"t", e.t},
                   {"cause", adverse_name(e.cause)},
                   {"position", vec(e.position)},
                   {"target", e.target ? vec(*e.target) : json(nullptr)},
                   {"arrived_t", e.arrived_t}});
  }
  j["recoveries"] = rec;
  json unsafe = json::array();
  for (const auto& u : r.unsafe) unsafe.push_back(vec(u));
  j["unsafe"] = unsafe;
  json traj = json::array();
  for (const auto& p : r.trajectory) traj.push_back({p.x, p.y, p.theta});
  j["trajectory"] = traj;
  return j;
}

TrialResult trial_from_json(const json& j) {
  TrialResult r;
  r.scenario = j.at("scenario").get<std::string>();
  r.spec_hash = j.at("spec_hash").get<std::string>();
  r.variant = variant_from_string(j.at("variant").get<std::string>());
  r.trial = j.at("trial").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.outcome = outcome_from_string(j.at("outcome").get<std::string>());
  r.duration = j.at("duration").get<double>();
  r.path_length = j.at("path_length").get<double>();
  r.straight_distance = j.at("straight_distance").get<double>();
  r.final_distance = j.at("final_distance").get<double>();
  r.snag_times = j.at("snag_times").get<std::vector<double>>();
  r.confusion = j.at("confusion").get<Confusion>();
  for (const auto& e : j.at("recoveries")) {
    RecoveryEvent ev;
    ev.t = e.at("t").get<double>();
    ev.cause = adverse_from(e.at("cause").get<std::string>());
    ev.position = vec_from(e.at("position"));
    if (!e.at("target").is_null()) ev.target = vec_from(e.at("target"));
    ev.arrived_t = e.at("arrived_t").get<double>();
    r.recoveries.push_back(ev);
  }
  for (const auto& u : j.at("unsafe")) r.unsafe.push_back(vec_from(u));
  for (const auto& p : j.at("trajectory")) {
    // Stored theta is already normalized; bypass the constructor to keep bits.
    Pose2D pose;
    pose.x = p.at(0).get<double>();
    pose.y = p.at(1).get<double>();
    pose.theta = p.at(2).get<double>();
    r.trajectory.push_back(pose);
  }
  return r;
}

json report_to_json(const MetricsReport& m) {
  return {{"scenario", m.scenario},
          {"variant", to_string(m.variant)},
          {"trials", m.trials},
          {"success_rate", m.success_rate},
          {"freezing_rate", m.freezing_rate},
          {"collision_rate", m.collision_rate},
          {"timeout_rate", m.timeout_rate},
          {"norm_traj_len", nullable(m.norm_traj_len)},
          {"fpr", nullable(m.fpr)},
          {"progress", nullable(m.progress)}};
}

}  // namespace

std::string table_json(std::span<const MetricsReport> table) {
  json rows = json::array();
  for (const auto& m : table) rows.push_back(report_to_json(m));
  return rows.dump(2) + "\n";
}

std::string archive_to_json(const BatchResult& batch) {
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["base_seed"] = batch.base_seed;
  json runs = json::array();
  for (const auto& r : batch.results) runs.push_back(trial_to_json(r));
  j["runs"] = std::move(runs);
  json table = json::array();
  for (const auto& m : batch.table) table.push_back(report_to_json(m));
  j["table"] = std::move(table);
  return j.dump() + "\n";
}

BatchResult archive_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("archive is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormat || j.at("version").get<int>() != kVersion) {
      throw ConfigError("unsupported archive format or version");
    }
    BatchResult b;
    b.base_seed = j.at("base_seed").get<std::uint64_t>();
    for (const auto& r : j.at("runs")) b.results.push_back(trial_from_json(r));
    b.table = metrics_table(b.results);
    return b;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed archive: ") + e.what());
  }
}

}  // namespace vern::harness
