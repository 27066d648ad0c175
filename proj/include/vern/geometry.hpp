#ifndef VERN_GEOMETRY_HPP_
#define VERN_GEOMETRY_HPP_

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace vern {

using Vec2 = Eigen::Vector2d;

/// Wraps an angle into (-pi, pi].
double normalize_angle(double theta);

/// Planar pose in the odom frame.
struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Pose2D() = default;
  Pose2D(double x_, double y_, double theta_)
      : x(x_), y(y_), theta(normalize_angle(theta_)) {}

  Vec2 position() const { return {x, y}; }
};

/// Rigid 2D transform p' = R(rotation) p + translation.
class FrameTransform {
 public:
  FrameTransform() = default;
  FrameTransform(const Vec2& translation, double rotation)
      : translation_(translation), rotation_(normalize_angle(rotation)) {}

  static FrameTransform identity() { return {}; }
  /// Transform taking points expressed in `pose`'s local frame to the parent.
  static FrameTransform from_pose(const Pose2D& pose) {
    return {pose.position(), pose.theta};
  }

  const Vec2& translation() const { return translation_; }
  double rotation() const { return rotation_; }

  Vec2 apply(const Vec2& p) const {
    return Eigen::Rotation2Dd(rotation_) * p + translation_;
  }
  Pose2D apply(const Pose2D& p) const {
    const Vec2 q = apply(p.position());
    return {q.x(), q.y(), p.theta + rotation_};
  }

  FrameTransform inverse() const;
  /// (a * b).apply(p) == a.apply(b.apply(p))
  FrameTransform operator*(const FrameTransform& other) const;

  bool is_approx(const FrameTransform& other, double tol) const;

 private:
  Vec2 translation_ = Vec2::Zero();
  double rotation_ = 0.0;
};

/// Closest distance between a point and an axis-aligned square cell.
inline double point_to_box_distance(const Vec2& p, const Vec2& lo, const Vec2& hi) {
  const Vec2 clamped = p.cwiseMax(lo).cwiseMin(hi);
  return (p - clamped).norm();
}

}  // namespace vern

#endif  // VERN_GEOMETRY_HPP_
