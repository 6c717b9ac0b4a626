#pragma once

// Equidistant fisheye camera, head-mounted rig and stand/squat calibration.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "egospan/error.hpp"
#include "egospan/geometry.hpp"

namespace egospan {

// Pixel (col, row) = (x, y); pixel centers sit on integer coordinates, so the
// default optical center of a 256 x 256 image is (127.5, 127.5). Image x runs
// along camera +x, image y along camera -y. The camera looks down its -z axis.
struct FisheyeIntrinsics {
  int width = 256;
  int height = 256;
  double fov = kPi;
  Vec2 center{127.5, 127.5};
  double focal = 128.0 / (kPi / 2.0);  // pixels per radian

  // Image circle of radius min(width, height)/2 spans the full field of view.
  static FisheyeIntrinsics make(int width, int height, double fov = kPi) {
    FisheyeIntrinsics k;
    k.width = width;
    k.height = height;
    k.fov = fov;
    k.center = Vec2((width - 1) / 2.0, (height - 1) / 2.0);
    k.focal = (std::min(width, height) / 2.0) / (fov / 2.0);
    return k;
  }

  double image_radius() const { return focal * fov / 2.0; }
};

// World-from-camera rotation and camera center.
struct CameraPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 position = Vec3::Zero();
  double timestamp = 0.0;

  Vec3 forward() const { return -rotation.col(2); }
  Vec3 to_camera(const Vec3& world) const { return rotation.transpose() * (world - position); }
};

// Facing direction f and head-up direction u.
struct HeadPose {
  Vec3 f = Vec3(0, 0, 1);
  Vec3 u = Vec3(0, 1, 0);

  Eigen::Matrix<double, 6, 1> flat() const {
    Eigen::Matrix<double, 6, 1> h;
    h << f, u;
    return h;
  }
  static HeadPose from_flat(const Eigen::Ref<const Eigen::VectorXd>& h) {
    if (h.size() != 6) throw ShapeError("head vector must have 6 entries");
    return {h.head<3>(), h.tail<3>()};
  }
};

// Generic form shared with the loss code (T may be a dual number). Returns the
// pixel and the angle from the optical axis; callers check the angle.
template <typename T>
struct FisheyeProjection {
  T x, y, theta;
};

template <typename T>
FisheyeProjection<T> fisheye_project(const T& px, const T& py, const T& pz, const FisheyeIntrinsics& k) {
  using std::atan2;
  using std::sqrt;
  const T rxy = sqrt(px * px + py * py);
  const T theta = atan2(rxy, -pz);
  if (rxy == T(0.0)) return {T(k.center.x()), T(k.center.y()), theta};
  const T scale = k.focal * theta / rxy;
  return {k.center.x() + scale * px, k.center.y() - scale * py, theta};
}

// Returns nullopt when the point lies beyond half the field of view.
inline std::optional<Vec2> project(const Vec3& p_cam, const FisheyeIntrinsics& k) {
  if (p_cam.norm() == 0.0) throw GeometryError("cannot project the camera center");
  const auto q = fisheye_project(p_cam.x(), p_cam.y(), p_cam.z(), k);
  if (q.theta > k.fov / 2.0) return std::nullopt;
  return Vec2(q.x, q.y);
}

// Unit ray through a pixel inside the image circle.
inline Vec3 backproject(const Vec2& pixel, const FisheyeIntrinsics& k) {
  const Vec2 d = pixel - k.center;
  const double r = d.norm();
  const double theta = r / k.focal;
  if (theta > k.fov / 2.0 * (1.0 + 1e-12))
    throw GeometryError("pixel lies outside the image circle");
  if (r == 0.0) return Vec3(0, 0, -1);
  const double s = std::sin(theta) / r;
  return Vec3(s * d.x(), -s * d.y(), -std::cos(theta));
}

// Camera axes from a (possibly non-orthonormal) head pose: -z along f, y along
// the part of u orthogonal to f, x completing a right-handed frame (x = f x u
// for orthonormal input). Returns nullopt when f and u are (near) parallel.
template <typename T>
std::optional<Eigen::Matrix<T, 3, 3>> camera_axes_from_head(const Eigen::Matrix<T, 3, 1>& f,
                                                            const Eigen::Matrix<T, 3, 1>& u) {
  using std::sqrt;
  const T fn = sqrt(f.dot(f));
  if (!(fn > T(1e-12))) return std::nullopt;
  const Eigen::Matrix<T, 3, 1> fh = f / fn;
  const Eigen::Matrix<T, 3, 1> uo = u - u.dot(fh) * fh;
  const T un = sqrt(uo.dot(uo));
  if (!(un > T(1e-9))) return std::nullopt;
  const Eigen::Matrix<T, 3, 1> y = uo / un;
  const Eigen::Matrix<T, 3, 1> z = -fh;
  Eigen::Matrix<T, 3, 3> r;
  r.col(0) = y.cross(z);
  r.col(1) = y;
  r.col(2) = z;
  return r;
}

// f and u must be unit length up to re-orthonormalization; |f.u| > 0.1 is
// rejected as near-parallel.
inline Mat3 head_to_camera(const HeadPose& h) {
  const double fn = h.f.norm(), un = h.u.norm();
  if (fn < 1e-9 || un < 1e-9) throw GeometryError("zero-length head vector");
  if (std::abs(h.f.dot(h.u)) / (fn * un) > 0.1) throw GeometryError("head vectors f and u are near parallel");
  return *camera_axes_from_head<double>(h.f, h.u);
}

inline HeadPose camera_to_head(const Mat3& camera_rotation) {
  return {-camera_rotation.col(2), camera_rotation.col(1)};
}

struct RigOffset {
  double forward = 0.07;  // along f, meters
  double down = 0.03;     // against u, meters
};

// Camera between the eyes: head keypoint (top of head) + forward*f - down*u.
inline CameraPose attach_rig(const Vec3& head_keypoint, const HeadPose& h, const RigOffset& rig = {}) {
  CameraPose cam;
  cam.rotation = head_to_camera(h);
  const HeadPose unit = camera_to_head(cam.rotation);
  cam.position = head_keypoint + rig.forward * unit.f - rig.down * unit.u;
  return cam;
}

inline Vec3 rig_anchor_from_camera(const CameraPose& cam, const RigOffset& rig = {}) {
  const HeadPose unit = camera_to_head(cam.rotation);
  return cam.position - rig.forward * unit.f + rig.down * unit.u;
}

// Heading of a camera: horizontal projection of its viewing direction, or of
// its up axis when it looks straight up or down.
inline double camera_yaw(const Mat3& rotation) {
  const Vec3 fwd = -rotation.col(2);
  if (horizontal_norm(fwd) > 1e-6) return yaw_of(fwd);
  const Vec3 up = rotation.col(1);
  return yaw_of(fwd.y() < 0 ? up : Vec3(-up));
}

// ---------------------------------------------------------------------------
// Height calibration from a stand-then-squat camera track.

struct HeightCalibration {
  double standing_height = 1.0;  // camera height above ground when standing
  double ground_y = 0.0;
};

struct CalibrationOptions {
  // Camera height while squatting as a fraction of the standing camera height.
  double squat_ratio = 2.0 / 3.0;
  double decile = 0.1;
  double min_duration = 2.0;  // seconds
  double min_range = 0.3;     // meters of camera y
};

// Standing level = mean of the top decile of camera y, squat level = mean of
// the bottom decile; the ground is placed so that squat height equals
// squat_ratio times standing height.
inline HeightCalibration calibrate_height(std::span<const CameraPose> trajectory,
                                          const CalibrationOptions& opt = {}) {
  if (trajectory.size() < 2) throw DataError("calibration needs at least two camera poses");
  const double duration = trajectory.back().timestamp - trajectory.front().timestamp;
  if (duration < opt.min_duration - 1e-9)
    throw DataError("calibration track spans " + std::to_string(duration) + " s, need " +
                    std::to_string(opt.min_duration) + " s");
  std::vector<double> ys;
  ys.reserve(trajectory.size());
  for (const auto& c : trajectory) {
    if (!c.position.allFinite()) throw NumericalError("non-finite camera position in calibration track");
    ys.push_back(c.position.y());
  }
  std::sort(ys.begin(), ys.end());
  if (ys.back() - ys.front() < opt.min_range)
    throw DataError("calibration track has insufficient vertical range (" +
                    std::to_string(ys.back() - ys.front()) + " m)");
  const auto n = ys.size();
  const auto m = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(opt.decile * static_cast<double>(n))));
  double low = 0.0, high = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    low += ys[i];
    high += ys[n - 1 - i];
  }
  low /= static_cast<double>(m);
  high /= static_cast<double>(m);
  HeightCalibration cal;
  cal.ground_y = (low - opt.squat_ratio * high) / (1.0 - opt.squat_ratio);
  cal.standing_height = high - cal.ground_y;
  if (!std::isfinite(cal.ground_y) || !(cal.standing_height > 0.0))
    throw NumericalError("height calibration produced a non-finite result");
  return cal;
}

}  // namespace egospan
