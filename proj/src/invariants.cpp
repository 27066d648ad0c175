#include "vern/invariants.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>

#include "vern/costmap.hpp"
#include "vern/fewshot.hpp"
#include "vern/geometry.hpp"
#include "vern/harness.hpp"
#include "vern/planner.hpp"
#include "vern/random.hpp"
#include "vern/scenario.hpp"

namespace vern::invariants {

namespace {

costmap::ClearingWeights random_weights(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 5.0);
  costmap::ClearingWeights w;
  w.w_s = u(rng);
  w.w_d = w.w_s + u(rng);
  w.w_npv = u(rng);
  w.b_npv = w.w_d + 1.0 + u(rng);
  return w;
}

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

}  // namespace

SeparationStats check_clearing_separation(int weight_draws, int samples_per_draw,
                                          std::uint64_t seed) {
  SeparationStats s;
  s.worst_margin = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr double half_pi = std::numbers::pi / 2.0;

  for (int d = 0; d < weight_draws; ++d) {
    const costmap::ClearingWeights w = random_weights(rng);
    double max_pv = -std::numeric_limits<double>::infinity();
    double min_npv = std::numeric_limits<double>::infinity();
    long long bad = 0;
    const auto visit = [&](double kappa, double h) {
      for (VegClass c : {VegClass::SparseGrass, VegClass::DenseGrass, VegClass::Bush,
                         VegClass::Tree}) {
        perception::QuadrantClassification q{c, 0.0, kappa, is_pliable(c)};
        const double v = costmap::clear_value(q, h, w);
        if (q.pliable) {
          max_pv = std::max(max_pv, v);
          if (v > w.w_d + 1.0) ++bad;
        } else {
          min_npv = std::min(min_npv, v);
          if (v < w.b_npv) ++bad;
        }
      }
      ++s.samples;
    };
    for (double kappa : {0.0, 1.0}) {
      for (double h : {0.0, half_pi}) visit(kappa, h);
    }
    for (int i = 0; i < samples_per_draw; ++i) visit(unit(rng), unit(rng) * half_pi);
    if (!(max_pv < min_npv)) ++bad;
    s.violations += bad;
    s.worst_margin = std::min(s.worst_margin, min_npv - max_pv);
  }
  return s;
}

GradientStats check_loss_gradient(int configs, double eps, std::uint64_t seed,
                                  double kink_guard) {
  using fewshot::EmbedderParams;
  GradientStats g;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> margin_dist(0.5, 3.0);
  std::uniform_int_distribution<int> dim(2, 8);

  while (g.configs < configs) {
    const int in = dim(rng), hid = dim(rng), emb = dim(rng);
    EmbedderParams p = EmbedderParams::random(in, hid, emb, rng());
    for (Eigen::Index i = 0; i < p.b1.size(); ++i) p.b1(i) = 0.3 * n01(rng);
    for (Eigen::Index i = 0; i < p.b2.size(); ++i) p.b2(i) = 0.3 * n01(rng);
    Eigen::VectorXd x1(in), x2(in);
    for (auto& v : x1) v = n01(rng);
    for (auto& v : x2) v = n01(rng);
    const int label = static_cast<int>(rng() & 1U);
    const double margin = margin_dist(rng);

    const double d = fewshot::pair_distance(p.embed(x1), p.embed(x2));
    if (std::abs(d - margin) < kink_guard || d < kink_guard) {
      ++g.skipped;
      continue;
    }
    ++g.configs;
    const auto analytic = fewshot::loss_gradient(p, x1, x2, label, margin).gradient.flatten();

    const Eigen::VectorXd theta = p.flatten();
    Eigen::VectorXd numeric(theta.size());
    EmbedderParams q = p;
    const auto loss_at = [&](const Eigen::VectorXd& t) {
      q.assign(t);
      return fewshot::contrastive_loss(fewshot::pair_distance(q.embed(x1), q.embed(x2)), label,
                                       margin);
    };
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      Eigen::VectorXd tp = theta, tm = theta;
      tp(i) += eps;
      tm(i) -= eps;
      numeric(i) = (loss_at(tp) - loss_at(tm)) / (2.0 * eps);
    }
    const double scale = std::max({analytic.norm(), numeric.norm(), 1e-12});
    const double rel = (analytic - numeric).norm() / scale;
    // Both zero (dissimilar pair past the margin) counts as exact agreement.
    if (analytic.norm() > 0.0 || numeric.norm() > 1e-9) g.max_rel_error = std::max(g.max_rel_error, rel);
  }
  return g;
}

std::vector<SuiteResult> run_all(std::uint64_t seed) {
  std::vector<SuiteResult> out;

  {
    const auto s = check_clearing_separation(100, 100000, mix_seed({seed, 1}));
    out.push_back({"clearing separation", s.violations == 0,
                   std::to_string(s.samples) + " samples, " + std::to_string(s.violations) +
                       " violations, " + fmt("worst NPV-PV gap %.6f", s.worst_margin)});
  }
  {
    const auto g = check_loss_gradient(100, 1e-5, mix_seed({seed, 2}));
    out.push_back({"contrastive gradient", g.max_rel_error < 1e-4,
                   fmt("max relative error %.3e", g.max_rel_error) + ", " +
                       std::to_string(g.skipped) + " configurations near the hinge skipped"});
  }
  {
    std::mt19937_64 rng(mix_seed({seed, 3}));
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const FrameTransform a(Vec2(u(rng), u(rng)), u(rng));
      const FrameTransform b(Vec2(u(rng), u(rng)), u(rng));
      const Vec2 p(u(rng), u(rng));
      worst = std::max(worst, (a.inverse().apply(a.apply(p)) - p).norm());
      worst = std::max(worst, ((a * b).apply(p) - a.apply(b.apply(p))).norm());
    }
    out.push_back({"frame transforms", worst < 1e-9, fmt("worst round-trip error %.3e", worst)});
  }
  {
    std::mt19937_64 rng(mix_seed({seed, 4}));
    planner::PlannerParams p;
    std::uniform_real_distribution<double> uv(-0.5, 1.5), uw(-1.5, 1.5), uk(0.0, 1.0);
    int bad = 0;
    for (int i = 0; i < 20000; ++i) {
      const double kappa = uk(rng);
      const auto w = planner::dynamic_window(uv(rng), uw(rng), p, kappa);
      const bool v_ok = w.v.lo >= -1e-12 && w.v.hi <= kappa * p.v_max + 1e-12 && !w.v.empty();
      const bool o_ok = w.omega.lo >= -kappa * p.omega_max - 1e-12 &&
                        w.omega.hi <= kappa * p.omega_max + 1e-12 && !w.omega.empty();
      if (!v_ok || !o_ok) ++bad;
    }
    out.push_back({"velocity window inside stunted limits", bad == 0,
                   std::to_string(bad) + " of 20000 windows escaped"});
  }
  {
    std::mt19937_64 rng(mix_seed({seed, 5}));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const costmap::ClearingWeights w;
    const double thr = w.admissibility_threshold();
    int bad = 0;
    for (int i = 0; i < 100000; ++i) {
      const VegClass c = static_cast<VegClass>(1 + static_cast<int>(rng() % 4));
      perception::QuadrantClassification q{c, 0.0, unit(rng), is_pliable(c)};
      const double cost =
          costmap::kOccupied * costmap::clear_value(q, unit(rng) * std::numbers::pi / 2, w) /
          w.normalizer();
      if (cost > costmap::kOccupied + 1e-9 || (q.pliable ? cost >= thr : cost < thr - 1e-9)) ++bad;
    }
    out.push_back({"cleared occupied cell vs admissibility threshold", bad == 0,
                   std::to_string(bad) + " of 100000 cells on the wrong side"});
  }
  {
    int bad = 0, files = 0;
    const std::filesystem::path dir = bundled_scenario_dir();
    if (std::filesystem::is_directory(dir)) {
      for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() != ".scn") continue;
        ++files;
        const ScenarioSpec s = load_scenario(entry.path().string());
        if (serialize_scenario(parse_scenario(serialize_scenario(s))) != serialize_scenario(s)) ++bad;
      }
    }
    out.push_back({"scenario text round trip", bad == 0 && files > 0,
                   std::to_string(files) + " bundled scenarios, " + std::to_string(bad) + " mismatches"});
  }
  {
    ScenarioSpec s;
    s.name = "open-field";
    s.world.width = 100;
    s.world.height = 60;
    s.start = Pose2D(1.0, 3.0, 0.0);
    s.goal = Vec2(6.0, 3.0);
    s.duration = 30.0;
    const auto a = harness::run_trial(s, harness::Variant::Vern, 99);
    const auto b = harness::run_trial(s, harness::Variant::Vern, 99);
    bool same = a.outcome == b.outcome && a.trajectory.size() == b.trajectory.size();
    for (std::size_t i = 0; same && i < a.trajectory.size(); ++i) {
      same = a.trajectory[i].x == b.trajectory[i].x && a.trajectory[i].y == b.trajectory[i].y &&
             a.trajectory[i].theta == b.trajectory[i].theta;
    }
    const bool success = a.outcome == harness::Outcome::Success;
    out.push_back({"repeatable open-field trial", same && success,
                   std::string(harness::to_string(a.outcome)) +
                       fmt(", path %.3f m for a %.3f m goal", a.path_length, a.straight_distance)});
  }
  return out;
}

}  // namespace vern::invariants
