#include "vern/perception.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace vern::perception {

int quadrant_of(double bearing_right, double range, const CameraModel& camera) {
  const double half_fov = camera.fov_deg * std::numbers::pi / 360.0;
  if (std::abs(bearing_right) > half_fov || range < 0.0 || range >= camera.r2) return 0;
  const bool left = bearing_right < 0.0;
  if (range < camera.r1) return left ? 3 : 4;
  return left ? 1 : 2;
}

Footprints extract_footprints(const Pose2D& pose, const CameraModel& camera,
                              const GridGeometry& grid) {
  if (!(camera.fov_deg > 0.0) || !(camera.r1 > 0.0) || !(camera.r2 > camera.r1)) {
    throw std::invalid_argument("camera needs fov > 0 and 0 < r1 < r2");
  }
  Footprints fp;
  for (int q = 0; q < kNumQuadrants; ++q) fp[q].id = q + 1;
  const double c = std::cos(pose.theta);
  const double s = std::sin(pose.theta);
  for (int row = 0; row < grid.rows; ++row) {
    for (int col = 0; col < grid.cols; ++col) {
      const Vec2 p = grid.center(row, col);
      const Vec2 d = p - pose.position();
      const double forward = c * d.x() + s * d.y();
      const double left = -s * d.x() + c * d.y();
      const int q = quadrant_of(std::atan2(-left, forward), d.norm(), camera);
      if (q == 0) continue;
      fp[q - 1].cells.emplace_back(row, col);
      fp[q - 1].points.push_back(p);
    }
  }
  return fp;
}

Eigen::MatrixXi quadrant_mask(const Footprints& fp, const GridGeometry& grid) {
  Eigen::MatrixXi mask = Eigen::MatrixXi::Zero(grid.rows, grid.cols);
  for (const auto& q : fp) {
    for (const auto& cell : q.cells) mask(cell.x(), cell.y()) = q.id;
  }
  return mask;
}

VegClass dominant_class(const WorldGrid& world, const QuadrantFootprint& fp) {
  std::array<int, kNumVegClasses> counts{};
  for (const Vec2& p : fp.points) ++counts[static_cast<int>(world.class_at(p))];
  int best = 0;
  for (int c = 1; c < kNumVegClasses; ++c) {
    if (counts[c] > 0 && (best == 0 || counts[c] > counts[best])) best = c;
  }
  return static_cast<VegClass>(best);
}

PredictionMatrix classify_oracle(const WorldGrid& world, const Footprints& fp,
                                 const NoiseModel& noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> other(0, 2);

  PredictionMatrix m;
  for (int q = 0; q < kNumQuadrants; ++q) {
    const VegClass truth = dominant_class(world, fp[q]);
    const int true_col = (is_pliable(truth) || truth == VegClass::Bush || truth == VegClass::Tree)
                             ? static_cast<int>(truth) - 1
                             : -1;
    for (int j = 0; j < 4; ++j) {
      const double base = j == true_col ? noise.d_true : noise.d_false;
      m(q, j) = std::clamp(base + noise.sigma * jitter(rng), 0.0, 1.0);
    }
    // Draws happen unconditionally so every quadrant consumes the same
    // amount of the stream.
    const bool swap = unit(rng) < noise.p_mis;
    int k = other(rng);
    if (true_col >= 0 && swap) {
      if (k >= true_col) ++k;
      std::swap(m(q, true_col), m(q, k));
    }
  }
  return m;
}

Eigen::RowVector4d classify_fewshot(const fewshot::EmbedderParams& params,
                                    const Eigen::VectorXd& descriptor,
                                    const fewshot::EmbeddedReferences& refs) {
  return fewshot::min_class_distance(params, descriptor, refs, /*squash=*/true).transpose();
}

FewShotBackend::FewShotBackend(fewshot::EmbedderParams params, const fewshot::ReferenceSet& refs,
                               fewshot::DescriptorGenerator generator)
    : params_(std::move(params)),
      refs_(fewshot::embed_references(params_, refs)),
      generator_(std::move(generator)) {}

PredictionMatrix FewShotBackend::classify(const WorldGrid& world, const Footprints& fp,
                                          std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  PredictionMatrix m;
  for (int q = 0; q < kNumQuadrants; ++q) {
    const VegClass truth = dominant_class(world, fp[q]);
    const bool known = is_pliable(truth) || truth == VegClass::Bush || truth == VegClass::Tree;
    const Eigen::VectorXd x = known ? generator_.sample(static_cast<int>(truth) - 1, rng)
                                    : generator_.sample_unseen(rng);
    m.row(q) = classify_fewshot(params_, x, refs_);
  }
  return m;
}

Classifications summarize(const PredictionMatrix& m, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  Classifications out;
  for (int q = 0; q < kNumQuadrants; ++q) {
    int arg = 0;
    for (int j = 1; j < 4; ++j) {
      if (m(q, j) < m(q, arg)) arg = j;
    }
    auto& c = out[q];
    c.cls = class_of_column(arg);
    c.distance = m(q, arg);
    c.confidence = std::exp(-alpha * c.distance);
    c.pliable = is_pliable(c.cls);
  }
  return out;
}

}  // namespace vern::perception
