#include "vern/geometry.hpp"

#include <cmath>
#include <numbers>

namespace vern {

double normalize_angle(double theta) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double t = std::fmod(theta, kTwoPi);
  if (t <= -std::numbers::pi) t += kTwoPi;
  if (t > std::numbers::pi) t -= kTwoPi;
  return t;
}

FrameTransform FrameTransform::inverse() const {
  const Eigen::Rotation2Dd r_inv(-rotation_);
  return {-(r_inv * translation_), -rotation_};
}

FrameTransform FrameTransform::operator*(const FrameTransform& other) const {
  return {apply(other.translation_), rotation_ + other.rotation_};
}

bool FrameTransform::is_approx(const FrameTransform& other, double tol) const {
  return (translation_ - other.translation_).cwiseAbs().maxCoeff() <= tol &&
         std::abs(normalize_angle(rotation_ - other.rotation_)) <= tol;
}

}  // namespace vern
