#pragma once

// Camera trajectory -> per-frame motion columns -> motion history image.

#include <cstddef>
#include <span>
#include <vector>

#include "egospan/camera.hpp"
#include "egospan/error.hpp"
#include "egospan/geometry.hpp"

namespace egospan {

struct MotionScaling {
  double a = 15.0;  // translation scale
  double m = 0.5;   // height offset
  double c = 0.3;   // height scale
};

enum class TranslationFrame { kRawLocal, kYawLeveled };

struct MotionHistoryOptions {
  std::size_t window = 64;
  MotionScaling scaling;
  TranslationFrame translation_frame = TranslationFrame::kYawLeveled;
};

inline constexpr std::size_t kMotionColumnSize = 13;
inline constexpr std::size_t kHeightChannel = 12;

using MotionColumn = Eigen::Matrix<double, kMotionColumnSize, 1>;

struct IncrementalMotion {
  Mat3 rotation = Mat3::Identity();       // R_t, camera-local
  Vec3 translation = Vec3::Zero();        // d_t / standing height
  double height = 1.0;                    // g_t
};

inline IncrementalMotion incremental_motion(const CameraPose& prev, const CameraPose& curr,
                                            const HeightCalibration& cal,
                                            TranslationFrame frame = TranslationFrame::kYawLeveled) {
  if (!(cal.standing_height > 0.0)) throw DataError("standing height must be positive");
  if (!prev.rotation.allFinite() || !prev.position.allFinite() || !curr.rotation.allFinite() ||
      !curr.position.allFinite())
    throw NumericalError("non-finite camera pose");
  IncrementalMotion out;
  out.rotation = curr.rotation.transpose() * prev.rotation;
  const Vec3 d_world = curr.position - prev.position;
  // The leveled frame is the camera frame with pitch and roll removed, so
  // both conventions agree (forward = -z) for a level camera.
  const Vec3 d_local = frame == TranslationFrame::kRawLocal
                           ? Vec3(curr.rotation.transpose() * d_world)
                           : Vec3(rot_y(camera_yaw(curr.rotation) + kPi).transpose() * d_world);
  out.translation = d_local / cal.standing_height;
  out.height = (curr.position.y() - cal.ground_y) / cal.standing_height;
  return out;
}

// (flattened R - I, a * d, c * (g - m)).
inline MotionColumn motion_column(const IncrementalMotion& mo, const MotionScaling& s = {}) {
  MotionColumn col;
  const Mat3 residual = mo.rotation - Mat3::Identity();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) col[3 * r + c] = residual(r, c);
  col.segment<3>(9) = s.a * mo.translation;
  col[kHeightChannel] = s.c * (mo.height - s.m);
  return col;
}

// T x 13 grid; row j is the motion column of frame t - (T-1) + j, so the
// newest frame is the last row.
struct MotionHistoryImage {
  Eigen::Matrix<double, Eigen::Dynamic, static_cast<int>(kMotionColumnSize), Eigen::RowMajor> grid;

  std::size_t window() const { return static_cast<std::size_t>(grid.rows()); }
};

// Motion columns for every frame of a trajectory. Frame 0 has no predecessor
// and gets no column of its own (index 0 duplicates frame 1).
inline std::vector<MotionColumn> motion_columns(std::span<const CameraPose> trajectory,
                                                const HeightCalibration& cal,
                                                const MotionHistoryOptions& opt = {}) {
  if (trajectory.size() < 2) throw DataError("motion history needs at least two camera poses");
  std::vector<MotionColumn> cols(trajectory.size());
  for (std::size_t k = 1; k < trajectory.size(); ++k)
    cols[k] = motion_column(incremental_motion(trajectory[k - 1], trajectory[k], cal, opt.translation_frame),
                            opt.scaling);
  cols[0] = cols[1];
  return cols;
}

inline MotionHistoryImage window_from_columns(std::span<const MotionColumn> cols, std::size_t t,
                                              std::size_t window) {
  MotionHistoryImage mhi;
  mhi.grid.resize(static_cast<Eigen::Index>(window), kMotionColumnSize);
  for (std::size_t j = 0; j < window; ++j) {
    const auto back = window - 1 - j;
    const std::size_t k = t >= back + 1 ? t - back : 1;  // pad with the earliest column
    mhi.grid.row(static_cast<Eigen::Index>(j)) = cols[k].transpose();
  }
  return mhi;
}

inline MotionHistoryImage build_mhi(std::span<const CameraPose> trajectory, std::size_t t,
                                    const HeightCalibration& cal, const MotionHistoryOptions& opt = {}) {
  if (trajectory.empty()) throw DataError("empty trajectory");
  if (t < 1 || t >= trajectory.size())
    throw DataError("motion history frame " + std::to_string(t) + " outside [1, " +
                    std::to_string(trajectory.size() - 1) + "]");
  if (opt.window == 0) throw ConfigError("motion history window must be positive");
  const std::size_t first = t + 1 > opt.window ? t + 1 - opt.window : 1;
  const auto cols = motion_columns(trajectory.subspan(first - 1, t - first + 2), cal, opt);
  // cols[i] is frame first - 1 + i.
  MotionHistoryImage mhi;
  mhi.grid.resize(static_cast<Eigen::Index>(opt.window), kMotionColumnSize);
  for (std::size_t j = 0; j < opt.window; ++j) {
    const auto back = opt.window - 1 - j;
    const std::size_t k = t >= back + 1 ? t - back : 1;
    mhi.grid.row(static_cast<Eigen::Index>(j)) = cols[k - (first - 1)].transpose();
  }
  return mhi;
}

}  // namespace egospan
