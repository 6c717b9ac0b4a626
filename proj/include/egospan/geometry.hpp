#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

namespace egospan {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

inline Mat3 rot_x(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat3 r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

inline Mat3 rot_y(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat3 r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

inline Mat3 rot_z(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Mat3 r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

// Heading of a direction about world +y, measured from +z toward +x.
// rot_y(yaw_of(v)) * (0,0,1) points along the horizontal projection of v.
inline double yaw_of(const Vec3& dir) { return std::atan2(dir.x(), dir.z()); }

inline double horizontal_norm(const Vec3& v) { return std::hypot(v.x(), v.z()); }

// Wraps an angle into (-pi, pi].
inline double wrap_angle(double rad) {
  rad = std::remainder(rad, 2.0 * kPi);
  return rad <= -kPi ? rad + 2.0 * kPi : rad;
}

}  // namespace egospan
