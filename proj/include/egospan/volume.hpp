#pragma once

// Pose volume: foreground pixels back-projected into a voxel cube hanging
// below the camera.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "egospan/camera.hpp"
#include "egospan/error.hpp"
#include "egospan/image.hpp"

namespace egospan {

struct VolumeOptions {
  int resolution = 41;
  double side = std::cbrt(2.0);  // meters; a 2 m^3 cube

  double voxel_size() const { return side / resolution; }
  void validate() const {
    if (resolution < 1) throw ConfigError("volume resolution must be positive");
    if (!(side > 0.0)) throw ConfigError("volume side must be positive");
  }
};

// Yaw-leveled camera frame: origin at the camera, y up, -z along the
// horizontal facing direction. The cube's top face contains the camera and
// the cube is centered on it horizontally.
struct PoseVolume {
  int n = 41;
  double voxel_size = std::cbrt(2.0) / 41;
  Vec3 origin = Vec3::Zero();  // min corner in the leveled frame
  std::vector<std::uint8_t> grid;

  static PoseVolume empty(const VolumeOptions& opt = {}) {
    opt.validate();
    PoseVolume v;
    v.n = opt.resolution;
    v.voxel_size = opt.voxel_size();
    v.origin = Vec3(-opt.side / 2.0, -opt.side, -opt.side / 2.0);
    v.grid.assign(static_cast<std::size_t>(v.n) * v.n * v.n, 0);
    return v;
  }

  // Storage order x-major: index = (ix * n + iy) * n + iz.
  std::size_t index(int ix, int iy, int iz) const {
    return (static_cast<std::size_t>(ix) * n + iy) * n + iz;
  }
  std::uint8_t at(int ix, int iy, int iz) const { return grid[index(ix, iy, iz)]; }
  Vec3 center(int ix, int iy, int iz) const {
    return origin + voxel_size * Vec3(ix + 0.5, iy + 0.5, iz + 0.5);
  }
  std::optional<std::array<int, 3>> locate(const Vec3& p) const {
    std::array<int, 3> idx{};
    for (int a = 0; a < 3; ++a) {
      const double c = std::floor((p[a] - origin[a]) / voxel_size);
      if (c < 0 || c >= n) return std::nullopt;
      idx[a] = static_cast<int>(c);
    }
    return idx;
  }
  std::size_t count() const {
    std::size_t c = 0;
    for (auto v : grid) c += v;
    return c;
  }
  bool operator==(const PoseVolume&) const = default;
};

// Rotation from the leveled frame to the camera frame implied by a head pose.
inline Mat3 leveled_to_camera(const HeadPose& head) {
  const auto axes = camera_axes_from_head<double>(head.f, head.u);
  if (!axes) throw GeometryError("head pose does not define a camera frame");
  const Mat3 leveled = rot_y(camera_yaw(*axes) + kPi);
  return axes->transpose() * leveled;
}

// Point given relative to the camera in the body (or world) frame, expressed
// in the leveled frame.
inline Vec3 to_leveled(const Vec3& offset_from_camera, const HeadPose& head) {
  const auto axes = camera_axes_from_head<double>(head.f, head.u);
  if (!axes) throw GeometryError("head pose does not define a camera frame");
  return rot_y(camera_yaw(*axes) + kPi).transpose() * offset_from_camera;
}

// Nearest pixel of a camera-frame point, clamped into the image; nullopt when
// it is outside the field of view. Points within 1e-9 rad of the field-of-view
// boundary count as outside, so the result does not hinge on rounding.
inline constexpr double kFovGuard = 1e-9;

inline std::optional<std::array<int, 2>> nearest_pixel(const Vec3& p_cam, const FisheyeIntrinsics& k) {
  if (p_cam.squaredNorm() == 0.0) return std::nullopt;
  const auto q = fisheye_project(p_cam.x(), p_cam.y(), p_cam.z(), k);
  if (!(q.theta < k.fov / 2.0 - kFovGuard)) return std::nullopt;
  const int x = std::clamp(static_cast<int>(std::lround(q.x)), 0, k.width - 1);
  const int y = std::clamp(static_cast<int>(std::lround(q.y)), 0, k.height - 1);
  return std::array<int, 2>{x, y};
}

inline PoseVolume build_pose_volume(const ForegroundMask& mask, const HeadPose& head, const FisheyeIntrinsics& k,
                                    const VolumeOptions& opt = {}) {
  if (mask.width != k.width || mask.height != k.height) throw ShapeError("mask size does not match intrinsics");
  PoseVolume vol = PoseVolume::empty(opt);
  if (mask.count() == 0) return vol;
  const Mat3 r = leveled_to_camera(head);
  for (int ix = 0; ix < vol.n; ++ix)
    for (int iy = 0; iy < vol.n; ++iy)
      for (int iz = 0; iz < vol.n; ++iz) {
        const auto px = nearest_pixel(r * vol.center(ix, iy, iz), k);
        if (px && mask.at((*px)[0], (*px)[1])) vol.grid[vol.index(ix, iy, iz)] = 1;
      }
  return vol;
}

// Text header line, then the occupancy bits packed LSB-first in storage order.
inline void write_volume(std::ostream& out, const PoseVolume& v) {
  out << "egospan-volume 1 n=" << v.n << " voxel=" << std::hexfloat << v.voxel_size << " origin=" << v.origin.x()
      << "," << v.origin.y() << "," << v.origin.z() << std::defaultfloat << "\n";
  std::vector<char> bits((v.grid.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < v.grid.size(); ++i)
    if (v.grid[i]) bits[i / 8] = static_cast<char>(bits[i / 8] | (1 << (i % 8)));
  out.write(bits.data(), static_cast<std::streamsize>(bits.size()));
  if (!out) throw DataError("failed writing volume");
}

inline PoseVolume read_volume(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw DataError("missing volume header");
  PoseVolume v;
  char ox[64], oy[64], oz[64], vs[64];
  if (std::sscanf(header.c_str(), "egospan-volume 1 n=%d voxel=%63s origin=%63[^,],%63[^,],%63s", &v.n, vs, ox, oy,
                  oz) != 5 ||
      v.n < 1 || v.n > 1024)
    throw DataError("bad volume header");
  v.voxel_size = std::strtod(vs, nullptr);
  v.origin = Vec3(std::strtod(ox, nullptr), std::strtod(oy, nullptr), std::strtod(oz, nullptr));
  v.grid.assign(static_cast<std::size_t>(v.n) * v.n * v.n, 0);
  std::vector<char> bits((v.grid.size() + 7) / 8);
  in.read(bits.data(), static_cast<std::streamsize>(bits.size()));
  if (in.gcount() != static_cast<std::streamsize>(bits.size())) throw DataError("truncated volume payload");
  for (std::size_t i = 0; i < v.grid.size(); ++i) v.grid[i] = (bits[i / 8] >> (i % 8)) & 1;
  return v;
}

}  // namespace egospan
