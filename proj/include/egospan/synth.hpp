#pragma once

// Synthetic egocentric data: a capsule body animated by procedural motions or
// BVH clips, a head-mounted fisheye rig, silhouette rendering and labels.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "egospan/camera.hpp"
#include "egospan/error.hpp"
#include "egospan/geometry.hpp"
#include "egospan/image.hpp"
#include "egospan/motionhist.hpp"
#include "egospan/parallel.hpp"
#include "egospan/skeleton.hpp"

namespace egospan {

// ---------------------------------------------------------------------------
// Subject and capsule body

// Segment lengths of the procedural skeleton, meters. The defaults give a
// standing keypoint extent (ankle to head top) of exactly 1.70 m.
struct SubjectParams {
  double ankle_height = 0.08;
  double shin = 0.42;
  double thigh = 0.44;
  double hip_drop = 0.05;
  double hip_half_width = 0.09;
  double torso = 0.52;  // pelvis to neck
  double shoulder_half_width = 0.18;
  double shoulder_drop = 0.03;
  double upper_arm = 0.29;
  double forearm = 0.26;
  double head_length = 0.27;  // neck to head top

  double stature() const { return shin + thigh + hip_drop + torso + head_length; }

  static SubjectParams random(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SubjectParams s;
    const double leg = 1.0 + 0.05 * u(rng);
    s.shin *= leg;
    s.thigh *= leg;
    s.torso *= 1.0 + 0.04 * u(rng);
    s.head_length *= 1.0 + 0.03 * u(rng);
    const double arm = 1.0 + 0.06 * u(rng);
    s.upper_arm *= arm;
    s.forearm *= arm;
    s.shoulder_half_width *= 1.0 + 0.08 * u(rng);
    s.hip_half_width *= 1.0 + 0.08 * u(rng);
    return s;
  }
};

struct Capsule {
  Keypoint from, to;
  double radius;
  bool rendered = true;  // the head capsule hosts the camera and is never drawn
};

struct CapsuleBody {
  std::vector<Capsule> capsules;

  // Radii: torso 0.13, upper arm 0.045, forearm 0.04, thigh 0.07, shin 0.05, head 0.10.
  static CapsuleBody standard(double girth = 1.0) {
    CapsuleBody b;
    b.capsules = {
        {kPelvis, kNeck, 0.13 * girth},
        {kNeck, kHead, 0.10, false},
        {kLShoulder, kLElbow, 0.045 * girth}, {kRShoulder, kRElbow, 0.045 * girth},
        {kLElbow, kLWrist, 0.04 * girth},     {kRElbow, kRWrist, 0.04 * girth},
        {kLHip, kLKnee, 0.07 * girth},        {kRHip, kRKnee, 0.07 * girth},
        {kLKnee, kLAnkle, 0.05 * girth},      {kRKnee, kRAnkle, 0.05 * girth},
    };
    return b;
  }

  void validate() const {
    for (const auto& c : capsules) {
      if (c.from >= kNumKeypoints || c.to >= kNumKeypoints) throw DataError("capsule references invalid keypoint");
      if (!(c.radius > 0.0)) throw DataError("capsule radius must be positive");
    }
  }
};

// ---------------------------------------------------------------------------
// Procedural skeleton and motions

enum class ProceduralMotion { kStand, kSit, kSquatCycle, kWalkCycle, kArmWave, kLean };

inline constexpr std::array<std::pair<ProceduralMotion, std::string_view>, 6> kMotionNames = {{
    {ProceduralMotion::kStand, "stand"},
    {ProceduralMotion::kSit, "sit"},
    {ProceduralMotion::kSquatCycle, "squat_cycle"},
    {ProceduralMotion::kWalkCycle, "walk_cycle"},
    {ProceduralMotion::kArmWave, "arm_wave"},
    {ProceduralMotion::kLean, "lean"},
}};

inline std::vector<ProceduralMotion> procedural_motions() {
  std::vector<ProceduralMotion> out;
  for (const auto& [m, name] : kMotionNames) out.push_back(m);
  return out;
}

inline std::string_view motion_name(ProceduralMotion m) {
  for (const auto& [id, name] : kMotionNames)
    if (id == m) return name;
  return "unknown";
}

inline std::string motion_id_list() {
  std::string s;
  for (const auto& [id, name] : kMotionNames) {
    if (!s.empty()) s += ", ";
    s += name;
  }
  return s;
}

inline ProceduralMotion parse_motion(std::string_view name) {
  for (const auto& [id, n] : kMotionNames)
    if (n == name) return id;
  throw ConfigError("unknown motion '" + std::string(name) + "' (valid: " + motion_id_list() + ")");
}

struct MotionParams {
  double period = 1.0;      // seconds; walk cycle default, squat/wave/lean use their own multiples
  double amplitude = 1.0;   // scales joint excursions
  double phase = 0.0;       // radians
  double heading = 0.0;     // radians about +y
  Vec2 start{0.0, 0.0};     // world (x, z) of the pelvis at t = 0
  double head_pitch = 0.0;  // degrees, positive looks down
  double head_pitch_amp = 0.0;
  double head_roll_amp = 0.0;
  double head_period = 3.0;
  double head_phase = 0.0;

  static MotionParams random(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    MotionParams p;
    p.period = 0.85 + 0.3 * u(rng);
    p.amplitude = 0.8 + 0.4 * u(rng);
    p.phase = 2.0 * kPi * u(rng);
    p.heading = 2.0 * kPi * u(rng) - kPi;
    p.start = Vec2(4.0 * u(rng) - 2.0, 4.0 * u(rng) - 2.0);
    p.head_pitch = 40.0 * u(rng);
    p.head_pitch_amp = 15.0 * u(rng);
    p.head_roll_amp = 6.0 * u(rng);
    p.head_period = 2.0 + 3.0 * u(rng);
    p.head_phase = 2.0 * kPi * u(rng);
    return p;
  }
};

// Joint angles in degrees. Flexion is positive forward for hips, shoulders
// and elbows, backward for knees; abduction is positive away from the body.
struct JointAngles {
  double heading = 0.0;  // radians
  double root_x = 0.0, root_z = 0.0;
  double spine_twist = 0.0, spine_lean = 0.0, spine_side = 0.0;  // side > 0 leans left
  double neck_pitch = 0.0, neck_roll = 0.0;
  double l_sh_abd = 0.0, l_sh_flex = 0.0, l_elbow = 0.0;
  double r_sh_abd = 0.0, r_sh_flex = 0.0, r_elbow = 0.0;
  double l_hip_abd = 0.0, l_hip_flex = 0.0, l_knee = 0.0;
  double r_hip_abd = 0.0, r_hip_flex = 0.0, r_knee = 0.0;
};

namespace detail {

inline std::size_t add_joint(MocapClip& clip, std::string name, std::optional<std::size_t> parent, Vec3 offset,
                             std::vector<Channel> channels, std::size_t& cursor) {
  Joint j;
  j.name = std::move(name);
  j.parent = parent;
  j.offset = offset;
  j.channels = std::move(channels);
  j.channel_start = cursor;
  cursor += j.channels.size();
  clip.joints.push_back(std::move(j));
  const std::size_t idx = clip.joints.size() - 1;
  if (parent) clip.joints[*parent].children.push_back(idx);
  return idx;
}

}  // namespace detail

// Hierarchy: pelvis -> spine -> {neck -> head, shoulders -> elbows -> wrists};
// pelvis -> hips -> knees -> ankles. Joints carry canonical names; "spine" is
// an extra joint at the pelvis so torso lean does not move the legs.
inline MocapClip procedural_skeleton(const SubjectParams& s) {
  using C = Channel;
  MocapClip clip;
  std::size_t cur = 0;
  const auto pelvis = detail::add_joint(clip, "pelvis", std::nullopt, Vec3::Zero(),
                                        {C::kXpos, C::kYpos, C::kZpos, C::kYrot, C::kXrot, C::kZrot}, cur);
  const auto spine = detail::add_joint(clip, "spine", pelvis, Vec3::Zero(), {C::kYrot, C::kXrot, C::kZrot}, cur);
  const auto neck = detail::add_joint(clip, "neck", spine, Vec3(0, s.torso, 0), {C::kXrot, C::kZrot}, cur);
  detail::add_joint(clip, "head", neck, Vec3(0, s.head_length, 0), {}, cur);
  for (const double side : {1.0, -1.0}) {
    const std::string p = side > 0 ? "l_" : "r_";
    const auto sh = detail::add_joint(clip, p + "shoulder", spine,
                                      Vec3(side * s.shoulder_half_width, s.torso - s.shoulder_drop, 0),
                                      {C::kZrot, C::kXrot}, cur);
    const auto el = detail::add_joint(clip, p + "elbow", sh, Vec3(0, -s.upper_arm, 0), {C::kXrot}, cur);
    detail::add_joint(clip, p + "wrist", el, Vec3(0, -s.forearm, 0), {}, cur);
  }
  for (const double side : {1.0, -1.0}) {
    const std::string p = side > 0 ? "l_" : "r_";
    const auto hip = detail::add_joint(clip, p + "hip", pelvis, Vec3(side * s.hip_half_width, -s.hip_drop, 0),
                                       {C::kZrot, C::kXrot}, cur);
    const auto knee = detail::add_joint(clip, p + "knee", hip, Vec3(0, -s.thigh, 0), {C::kXrot}, cur);
    detail::add_joint(clip, p + "ankle", knee, Vec3(0, -s.shin, 0), {}, cur);
  }
  clip.frames.resize(0, static_cast<Eigen::Index>(cur));
  return clip;
}

// Writes one frame of joint angles, then lifts the root so the lower ankle
// sits at the subject's ankle height.
inline void set_frame_angles(MocapClip& clip, std::size_t frame, const JointAngles& a, const SubjectParams& s) {
  const auto row = static_cast<Eigen::Index>(frame);
  const auto put = [&](std::string_view joint, std::initializer_list<double> values) {
    const auto j = clip.find(joint);
    std::size_t c = clip.joints[*j].channel_start;
    for (double v : values) clip.frames(row, static_cast<Eigen::Index>(c++)) = v;
  };
  put("pelvis", {a.root_x, 0.0, a.root_z, rad_to_deg(a.heading), 0.0, 0.0});
  put("spine", {a.spine_twist, a.spine_lean, -a.spine_side});
  put("neck", {a.neck_pitch, a.neck_roll});
  put("l_shoulder", {a.l_sh_abd, -a.l_sh_flex});
  put("r_shoulder", {-a.r_sh_abd, -a.r_sh_flex});
  put("l_elbow", {-a.l_elbow});
  put("r_elbow", {-a.r_elbow});
  put("l_hip", {a.l_hip_abd, -a.l_hip_flex});
  put("r_hip", {-a.r_hip_abd, -a.r_hip_flex});
  put("l_knee", {a.l_knee});
  put("r_knee", {a.r_knee});
  const auto pos = forward_kinematics_indexed(clip, frame);
  const double low = std::min(pos[*clip.find("l_ankle")].y(), pos[*clip.find("r_ankle")].y());
  clip.frames(row, 1) = s.ankle_height - low;
}

inline JointAngles procedural_angles(ProceduralMotion motion, double t, const MotionParams& p) {
  JointAngles a;
  a.heading = p.heading;
  a.root_x = p.start.x();
  a.root_z = p.start.y();
  const double head_w = 2.0 * kPi * t / p.head_period + p.head_phase;
  a.neck_pitch = p.head_pitch + p.head_pitch_amp * std::sin(head_w);
  a.neck_roll = p.head_roll_amp * std::sin(0.7 * head_w + 1.0);
  a.l_sh_abd = a.r_sh_abd = 6.0;
  a.l_elbow = a.r_elbow = 5.0;
  const double amp = p.amplitude;
  switch (motion) {
    case ProceduralMotion::kStand:
      break;
    case ProceduralMotion::kSit:
      a.l_hip_flex = a.r_hip_flex = 90.0;
      a.l_knee = a.r_knee = 90.0;
      a.l_hip_abd = a.r_hip_abd = 6.0;
      a.spine_lean = -6.0;
      a.l_sh_flex = a.r_sh_flex = 28.0;
      a.l_sh_abd = a.r_sh_abd = 10.0;
      a.l_elbow = a.r_elbow = 45.0;
      break;
    case ProceduralMotion::kSquatCycle: {
      const double w = 2.0 * kPi * t / (3.0 * p.period) + p.phase;
      const double phi = 75.0 * std::min(amp, 1.2) * 0.5 * (1.0 - std::cos(w));
      a.l_hip_flex = a.r_hip_flex = phi;
      a.l_knee = a.r_knee = 2.0 * phi;
      a.spine_lean = 0.45 * phi;
      a.l_sh_flex = a.r_sh_flex = 0.9 * phi;
      a.l_elbow = a.r_elbow = 10.0;
      break;
    }
    case ProceduralMotion::kWalkCycle: {
      const double w = 2.0 * kPi * t / p.period + p.phase;
      const double hip = 22.0 * amp;
      a.l_hip_flex = hip * std::sin(w);
      a.r_hip_flex = -hip * std::sin(w);
      a.l_knee = 5.0 + 35.0 * amp * std::max(0.0, std::cos(w));
      a.r_knee = 5.0 + 35.0 * amp * std::max(0.0, -std::cos(w));
      a.l_sh_flex = -20.0 * amp * std::sin(w);
      a.r_sh_flex = 20.0 * amp * std::sin(w);
      a.l_elbow = a.r_elbow = 15.0;
      a.spine_twist = 4.0 * amp * std::sin(w);
      // Two steps per cycle; step length from the hip swing of a 0.86 m leg.
      const double stride = 4.0 * 0.86 * std::sin(deg_to_rad(hip));
      const double dist = stride * t / p.period;
      a.root_x += std::sin(p.heading) * dist;
      a.root_z += std::cos(p.heading) * dist;
      break;
    }
    case ProceduralMotion::kArmWave: {
      const double w = 2.0 * kPi * t / (1.5 * p.period) + p.phase;
      a.r_sh_flex = 100.0 + 25.0 * amp * std::sin(w);
      a.r_sh_abd = 25.0;
      a.r_elbow = 20.0 + 30.0 * amp * (0.5 + 0.5 * std::sin(2.0 * w));
      a.l_sh_flex = 55.0 + 25.0 * amp * std::sin(w + 1.3);
      a.l_sh_abd = 12.0;
      a.l_elbow = 40.0 + 20.0 * amp * std::sin(w);
      break;
    }
    case ProceduralMotion::kLean: {
      const double w = 2.0 * kPi * t / (4.0 * p.period) + p.phase;
      a.spine_lean = 32.0 * amp * 0.5 * (1.0 - std::cos(w));
      a.spine_side = 12.0 * amp * std::sin(w);
      break;
    }
  }
  return a;
}

// A clip of `frames` rows sampled at t = k * frame_time.
inline MocapClip procedural_clip(ProceduralMotion motion, const SubjectParams& subject, const MotionParams& params,
                                 std::size_t frames, double frame_time = 1.0 / 30.0) {
  MocapClip clip = procedural_skeleton(subject);
  clip.frame_time = frame_time;
  clip.frames.setZero(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(clip.channel_count()));
  for (std::size_t k = 0; k < frames; ++k)
    set_frame_angles(clip, k, procedural_angles(motion, static_cast<double>(k) * frame_time, params), subject);
  return clip;
}

inline BodyPose standing_pose(const SubjectParams& subject = {}) {
  const MocapClip clip = procedural_clip(ProceduralMotion::kStand, subject, MotionParams{}, 1);
  return to_canonical(forward_kinematics(clip, 0), JointNameTable::identity());
}

// f: horizontal normal of the shoulder line, pitched with the neck->head axis;
// u: the neck->head axis.
inline HeadPose head_pose_from_skeleton(const BodyPose& pose) {
  const Vec3 shoulders = pose.at(kLShoulder) - pose.at(kRShoulder);
  Vec3 fh = shoulders.cross(Vec3::UnitY());
  fh.y() = 0.0;
  if (fh.norm() < 1e-9) throw GeometryError("shoulder line is vertical");
  fh.normalize();
  const Vec3 axis = (pose.at(kHead) - pose.at(kNeck)).normalized();
  const Vec3 f = fh - fh.dot(axis) * axis;
  if (f.norm() < 1e-6) throw GeometryError("head axis is parallel to the facing direction");
  return {f.normalized(), axis};
}

// ---------------------------------------------------------------------------
// Silhouette rendering

struct Interval {
  double lo, hi;
};

namespace detail {

inline std::optional<Interval> ray_sphere(const Vec3& o, const Vec3& d, const Vec3& c, double r) {
  const Vec3 oc = o - c;
  const double b = oc.dot(d);
  const double disc = b * b - (oc.squaredNorm() - r * r);
  if (disc < 0.0) return std::nullopt;
  const double s = std::sqrt(disc);
  return Interval{-b - s, -b + s};
}

}  // namespace detail

// Parameter interval [lo, hi] along o + t d (d unit) inside the capsule of
// radius r around segment a-b. The capsule is convex, so the hull of the
// cylinder-body and end-sphere intervals is the exact intersection.
inline std::optional<Interval> ray_capsule(const Vec3& o, const Vec3& d, const Vec3& a, const Vec3& b, double r) {
  std::optional<Interval> acc;
  const auto merge = [&](std::optional<Interval> iv) {
    if (!iv || iv->lo > iv->hi) return;
    if (!acc) acc = iv;
    else acc = Interval{std::min(acc->lo, iv->lo), std::max(acc->hi, iv->hi)};
  };
  merge(detail::ray_sphere(o, d, a, r));
  merge(detail::ray_sphere(o, d, b, r));
  const Vec3 ba = b - a;
  const double len = ba.norm();
  if (len > 1e-12) {
    const Vec3 n = ba / len;
    const Vec3 oa = o - a;
    const double dn = d.dot(n), on = oa.dot(n);
    const Vec3 dp = d - dn * n, op = oa - on * n;
    const double qa = dp.squaredNorm(), qb = op.dot(dp), qc = op.squaredNorm() - r * r;
    std::optional<Interval> cyl;
    if (qa < 1e-14) {
      if (qc <= 0.0) cyl = Interval{-1e300, 1e300};
    } else {
      const double disc = qb * qb - qa * qc;
      if (disc >= 0.0) {
        const double s = std::sqrt(disc);
        cyl = Interval{(-qb - s) / qa, (-qb + s) / qa};
      }
    }
    if (cyl) {
      if (std::abs(dn) < 1e-14) {
        if (on < 0.0 || on > len) cyl.reset();
      } else {
        double t0 = -on / dn, t1 = (len - on) / dn;
        if (t0 > t1) std::swap(t0, t1);
        cyl = Interval{std::max(cyl->lo, t0), std::min(cyl->hi, t1)};
      }
      merge(cyl);
    }
  }
  return acc;
}

inline double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ba = b - a;
  const double l2 = ba.squaredNorm();
  const double t = l2 > 0.0 ? std::clamp((p - a).dot(ba) / l2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ba)).norm();
}

inline bool inside_capsule(const Vec3& p, const Vec3& a, const Vec3& b, double r) {
  return point_segment_distance(p, a, b) <= r;
}

inline bool inside_rendered_capsule(const Vec3& p, const BodyPose& pose, const CapsuleBody& body) {
  for (const auto& c : body.capsules)
    if (c.rendered && inside_capsule(p, pose.at(c.from), pose.at(c.to), c.radius)) return true;
  return false;
}

inline constexpr double kNearClip = 0.05;

struct RenderedView {
  ForegroundMask mask;
  std::vector<float> shade;  // Lambert term at the first visible hit, 0 on background
};

inline bool inside_image_circle(double x, double y, const FisheyeIntrinsics& k) {
  return (Vec2(x, y) - k.center).norm() <= k.image_radius();
}

inline RenderedView render_view(const BodyPose& pose, const CapsuleBody& body, const CameraPose& cam,
                                const FisheyeIntrinsics& k) {
  struct Prepared {
    Vec3 a, b, mid;
    double r, bound;
  };
  std::vector<Prepared> caps;
  for (const auto& c : body.capsules) {
    if (!c.rendered) continue;
    const Vec3 a = pose.at(c.from), b = pose.at(c.to);
    caps.push_back({a, b, 0.5 * (a + b), c.radius, 0.5 * (b - a).norm() + c.radius});
  }
  RenderedView view{ForegroundMask(k.width, k.height),
                    std::vector<float>(static_cast<std::size_t>(k.width) * k.height, 0.0f)};
  const Vec3 o = cam.position;
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      if (!inside_image_circle(x, y, k)) continue;
      const Vec3 d = cam.rotation * backproject(Vec2(x, y), k);
      double best = std::numeric_limits<double>::infinity();
      const Prepared* hit = nullptr;
      for (const auto& c : caps) {
        const Vec3 oc = o - c.mid;
        const double bq = oc.dot(d);
        const double disc = bq * bq - (oc.squaredNorm() - c.bound * c.bound);
        if (disc < 0.0 || -bq + std::sqrt(disc) <= kNearClip) continue;
        const auto iv = ray_capsule(o, d, c.a, c.b, c.r);
        if (!iv || iv->hi <= kNearClip) continue;
        const double t = std::max(iv->lo, kNearClip);
        if (t < best) {
          best = t;
          hit = &c;
        }
      }
      if (!hit) continue;
      const std::size_t idx = static_cast<std::size_t>(y) * k.width + x;
      view.mask.data[idx] = 1;
      const Vec3 p = o + best * d;
      const Vec3 ba = hit->b - hit->a;
      const double l2 = ba.squaredNorm();
      const double s = l2 > 0.0 ? std::clamp((p - hit->a).dot(ba) / l2, 0.0, 1.0) : 0.0;
      Vec3 n = p - (hit->a + s * ba);
      const double nn = n.norm();
      const double lambert = nn > 1e-12 ? std::max(0.0, n.dot(-d) / nn) : 1.0;
      view.shade[idx] = static_cast<float>(0.25 + 0.75 * lambert);
    }
  }
  return view;
}

// Pixel = 1 iff its ray (beyond the near clip) intersects a rendered capsule.
inline ForegroundMask render_silhouette(const BodyPose& pose, const CapsuleBody& body, const CameraPose& cam,
                                        const FisheyeIntrinsics& k) {
  return render_view(pose, body, cam, k).mask;
}

// ---------------------------------------------------------------------------
// Input image compositing

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline double lattice_value(std::uint64_t seed, std::int64_t ix, std::int64_t iy, std::uint64_t salt) {
  std::uint64_t h = splitmix64(seed ^ splitmix64(salt));
  h = splitmix64(h ^ static_cast<std::uint64_t>(ix) * 0x9E3779B97F4A7C15ULL);
  h = splitmix64(h ^ static_cast<std::uint64_t>(iy) * 0xC2B2AE3D27D4EB4FULL);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline double value_noise(std::uint64_t seed, double x, double y, double cell, std::uint64_t salt) {
  const double fx = x / cell, fy = y / cell;
  const auto ix = static_cast<std::int64_t>(std::floor(fx)), iy = static_cast<std::int64_t>(std::floor(fy));
  const double tx = fx - static_cast<double>(ix), ty = fy - static_cast<double>(iy);
  const double sx = tx * tx * (3 - 2 * tx), sy = ty * ty * (3 - 2 * ty);
  const double v00 = lattice_value(seed, ix, iy, salt), v10 = lattice_value(seed, ix + 1, iy, salt);
  const double v01 = lattice_value(seed, ix, iy + 1, salt), v11 = lattice_value(seed, ix + 1, iy + 1, salt);
  return (v00 * (1 - sx) + v10 * sx) * (1 - sy) + (v01 * (1 - sx) + v11 * sx) * sy;
}

}  // namespace detail

// Procedural background (multi-octave value noise over a random gradient)
// with the silhouette pasted on top, shaded by `shade` when provided.
inline RgbImage composite_input(const ForegroundMask& mask, std::uint64_t seed,
                                const std::vector<float>* shade = nullptr) {
  RgbImage img(mask.width, mask.height);
  std::mt19937_64 rng(detail::splitmix64(seed));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::array<double, 3> base{}, gx{}, gy{}, tint{};
  for (int c = 0; c < 3; ++c) {
    base[c] = 0.3 + 0.4 * u(rng);
    gx[c] = 0.3 * (2.0 * u(rng) - 1.0);
    gy[c] = 0.3 * (2.0 * u(rng) - 1.0);
  }
  tint[0] = 0.65 + 0.25 * u(rng);
  tint[1] = 0.40 + 0.20 * u(rng);
  tint[2] = 0.30 + 0.20 * u(rng);
  const double w = mask.width, h = mask.height;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * mask.width + x;
      for (int c = 0; c < 3; ++c) {
        double v;
        if (mask.data[idx]) {
          const double s = shade ? (*shade)[idx] : 0.8;
          v = tint[c] * s;
        } else {
          v = base[c] + gx[c] * (x / w - 0.5) + gy[c] * (y / h - 0.5);
          double amp = 0.25;
          for (int o = 0; o < 4; ++o) {
            const double cell = 64.0 / (1 << o) * (w / 256.0);
            v += amp * (detail::value_noise(seed, x, y, std::max(cell, 1.0), 1000u * c + o) - 0.5);
            amp *= 0.5;
          }
        }
        img.at(x, y, c) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      }
    }
  }
  return img;
}

// ---------------------------------------------------------------------------
// SLAM noise

struct SlamNoise {
  bool enabled = false;
  double rotation_sigma_deg = 0.2;
  double position_sigma = 0.002;
  double rotation_drift_deg = 0.02;  // random-walk step per frame
  double position_drift = 0.0005;
};

inline std::vector<CameraPose> perturb_track(std::span<const CameraPose> track, const SlamNoise& noise,
                                             std::uint64_t seed) {
  std::vector<CameraPose> out(track.begin(), track.end());
  if (!noise.enabled) return out;
  std::mt19937_64 rng(detail::splitmix64(seed ^ 0x51a3ULL));
  std::normal_distribution<double> n01(0.0, 1.0);
  const auto gauss3 = [&](double s) { return Vec3(s * n01(rng), s * n01(rng), s * n01(rng)); };
  Vec3 drift_p = Vec3::Zero(), drift_r = Vec3::Zero();
  for (auto& c : out) {
    drift_p += gauss3(noise.position_drift);
    drift_r += gauss3(deg_to_rad(noise.rotation_drift_deg));
    const Vec3 w = drift_r + gauss3(deg_to_rad(noise.rotation_sigma_deg));
    const double angle = w.norm();
    const Mat3 dr = angle > 0.0 ? Mat3(Eigen::AngleAxisd(angle, w / angle)) : Mat3::Identity();
    c.rotation = c.rotation * dr;
    c.position += drift_p + gauss3(noise.position_sigma);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Motion tracks and labeled sequences

// World-frame keypoints for each trajectory frame plus what the generator
// needs to normalize and calibrate. Frame 0 is a warm-up frame that only
// seeds the first motion column.
struct MotionTrack {
  std::string name;
  std::vector<BodyPose> world_poses;
  double frame_time = 1.0 / 30.0;
  double reference_height = kNormalizedHeight;
  std::vector<CameraPose> calibration_track;
};

inline std::vector<CameraPose> rig_track(std::span<const BodyPose> poses, double frame_time,
                                         const RigOffset& rig = {}) {
  std::vector<CameraPose> cams;
  cams.reserve(poses.size());
  for (std::size_t k = 0; k < poses.size(); ++k) {
    CameraPose c = attach_rig(poses[k].at(kHead), head_pose_from_skeleton(poses[k]), rig);
    c.timestamp = static_cast<double>(k) * frame_time;
    cams.push_back(c);
  }
  return cams;
}

inline std::vector<BodyPose> clip_keypoints(const MocapClip& clip, const JointNameTable& table) {
  std::vector<BodyPose> out;
  out.reserve(clip.frame_count());
  for (std::size_t k = 0; k < clip.frame_count(); ++k) out.push_back(to_canonical(forward_kinematics(clip, k), table));
  return out;
}

// Stand for 1.5 s, squat over 0.5 s, hold for 1.5 s. The hold depth puts
// the camera at about two thirds of its standing height.
inline std::vector<CameraPose> calibration_track(const SubjectParams& subject, double frame_time = 1.0 / 30.0,
                                                 double squat_hip_flexion = 62.5) {
  const auto frames = static_cast<std::size_t>(std::lround(3.5 / frame_time)) + 1;
  MocapClip clip = procedural_skeleton(subject);
  clip.frame_time = frame_time;
  clip.frames.setZero(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(clip.channel_count()));
  for (std::size_t k = 0; k < frames; ++k) {
    const double t = static_cast<double>(k) * frame_time;
    const double d = std::clamp((t - 1.5) / 0.5, 0.0, 1.0);
    const double phi = squat_hip_flexion * 0.5 * (1.0 - std::cos(kPi * d));
    JointAngles a;
    a.l_sh_abd = a.r_sh_abd = 6.0;
    a.l_hip_flex = a.r_hip_flex = phi;
    a.l_knee = a.r_knee = 2.0 * phi;
    a.spine_lean = 0.45 * phi;
    a.l_sh_flex = a.r_sh_flex = 0.9 * phi;
    set_frame_angles(clip, k, a, subject);
  }
  const auto poses = clip_keypoints(clip, JointNameTable::identity());
  return rig_track(poses, frame_time);
}

inline MotionTrack procedural_track(ProceduralMotion motion, const SubjectParams& subject, const MotionParams& params,
                                    std::size_t labeled_frames, double frame_time = 1.0 / 30.0) {
  MotionTrack track;
  track.name = std::string(motion_name(motion));
  track.frame_time = frame_time;
  const MocapClip clip = procedural_clip(motion, subject, params, labeled_frames + 1, frame_time);
  track.world_poses = clip_keypoints(clip, JointNameTable::identity());
  track.reference_height = vertical_extent(standing_pose(subject));
  track.calibration_track = calibration_track(subject, frame_time);
  return track;
}

// Segment lengths measured from one pose of an arbitrary skeleton.
inline SubjectParams fit_subject(const BodyPose& p) {
  SubjectParams s;
  const auto len = [&](Keypoint a, Keypoint b) { return (p.at(a) - p.at(b)).norm(); };
  s.shin = 0.5 * (len(kLKnee, kLAnkle) + len(kRKnee, kRAnkle));
  s.thigh = 0.5 * (len(kLHip, kLKnee) + len(kRHip, kRKnee));
  s.hip_half_width = 0.5 * len(kLHip, kRHip);
  s.upper_arm = 0.5 * (len(kLShoulder, kLElbow) + len(kRShoulder, kRElbow));
  s.forearm = 0.5 * (len(kLElbow, kLWrist) + len(kRElbow, kRWrist));
  s.shoulder_half_width = 0.5 * len(kLShoulder, kRShoulder);
  const Vec3 hip_mid = 0.5 * (p.at(kLHip) + p.at(kRHip));
  s.hip_drop = std::max(0.0, p.at(kPelvis).y() - hip_mid.y());
  s.torso = len(kPelvis, kNeck);
  s.head_length = len(kNeck, kHead);
  s.shoulder_drop = std::max(0.0, p.at(kNeck).y() - 0.5 * (p.at(kLShoulder).y() + p.at(kRShoulder).y()));
  return s;
}

// A mocap clip as a track: the first clip frame is the warm-up frame. The
// calibration squat is synthesized for a subject with the clip's segment
// lengths, raised to the clip's ground level.
inline MotionTrack bvh_track(const MocapClip& clip, const JointNameTable& table, std::string name = "bvh") {
  if (clip.frame_count() < 2) throw DataError("clip needs at least two frames");
  MotionTrack track;
  track.name = std::move(name);
  track.frame_time = clip.frame_time;
  track.world_poses = clip_keypoints(clip, table);
  double ref = 0.0, ground = std::numeric_limits<double>::infinity();
  for (const auto& p : track.world_poses) {
    ref = std::max(ref, vertical_extent(p));
    ground = std::min({ground, p.at(kLAnkle).y(), p.at(kRAnkle).y()});
  }
  track.reference_height = ref;
  const SubjectParams subject = fit_subject(track.world_poses.front());
  track.calibration_track = calibration_track(subject, clip.frame_time);
  const double shift = ground - subject.ankle_height;
  for (auto& c : track.calibration_track) c.position.y() += shift;
  return track;
}

struct LabeledFrame {
  std::size_t index = 0;  // trajectory frame (>= 1)
  double timestamp = 0.0;
  ForegroundMask mask;
  std::optional<RgbImage> image;
  BodyPose body;            // normalized local frame
  HeadPose head;            // local frame
  CameraPose camera;        // ground-truth rig pose, world
  CameraPose tracked_camera;  // what the motion history saw (noisy when enabled)
  MotionHistoryImage mhi;
  BodyPose world_body;
  PoseTransform to_local;
};

struct SequenceConfig {
  SlamNoise noise;
  MotionHistoryOptions mhi;
  RigOffset rig;
  CalibrationOptions calibration;
  bool render_images = false;
  std::uint64_t seed = 0;
};

struct Sequence {
  std::string name;
  HeightCalibration calibration;
  std::vector<LabeledFrame> frames;
};

inline Sequence generate_sequence(const MotionTrack& track, const CapsuleBody& body, const FisheyeIntrinsics& k,
                                  const SequenceConfig& cfg = {}) {
  body.validate();
  if (track.world_poses.size() < 2) throw DataError("track needs a warm-up frame and at least one labeled frame");
  const auto truth = rig_track(track.world_poses, track.frame_time, cfg.rig);
  const auto tracked = perturb_track(truth, cfg.noise, cfg.seed);
  const auto cal_track = perturb_track(track.calibration_track, cfg.noise, cfg.seed ^ 0xca1ULL);
  Sequence seq;
  seq.name = track.name;
  seq.calibration = calibrate_height(cal_track, cfg.calibration);
  const auto columns = motion_columns(tracked, seq.calibration, cfg.mhi);

  const std::size_t n = track.world_poses.size() - 1;
  seq.frames.resize(n);
  parallel_for(n, [&](std::size_t i) {
    const std::size_t t = i + 1;
    LabeledFrame& f = seq.frames[i];
    f.index = t;
    f.timestamp = truth[t].timestamp;
    f.world_body = track.world_poses[t];
    f.camera = truth[t];
    f.tracked_camera = tracked[t];
    auto view = render_view(f.world_body, body, f.camera, k);
    f.mask = std::move(view.mask);
    if (cfg.render_images)
      f.image = composite_input(f.mask, detail::splitmix64(cfg.seed * 1000003ULL + t), &view.shade);
    const auto norm = normalize_pose(f.world_body, track.reference_height);
    f.body = norm.pose;
    f.to_local = norm.transform;
    const HeadPose hw = camera_to_head(f.camera.rotation);
    f.head = {norm.transform.apply_direction(hw.f), norm.transform.apply_direction(hw.u)};
    f.mhi = window_from_columns(columns, t, cfg.mhi.window);
  });
  return seq;
}

// A randomized sequence recipe: subject, motion parameters and body girth all
// derive from the seed.
struct SequenceRecipe {
  ProceduralMotion motion = ProceduralMotion::kStand;
  std::uint64_t seed = 0;
  std::size_t frames = 120;
  bool randomize = true;
};

struct RecipeDraw {
  SubjectParams subject;
  MotionParams params;
  CapsuleBody body;
};

inline RecipeDraw draw_recipe(const SequenceRecipe& r) {
  RecipeDraw d;
  d.body = CapsuleBody::standard();
  if (!r.randomize) return d;
  std::mt19937_64 rng(detail::splitmix64(r.seed ^ (0x1000ULL + static_cast<std::uint64_t>(r.motion))));
  d.subject = SubjectParams::random(rng);
  d.params = MotionParams::random(rng);
  std::uniform_real_distribution<double> u(0.85, 1.15);
  d.body = CapsuleBody::standard(u(rng));
  return d;
}

inline Sequence generate_recipe(const SequenceRecipe& r, const FisheyeIntrinsics& k, SequenceConfig cfg) {
  const RecipeDraw d = draw_recipe(r);
  cfg.seed = detail::splitmix64(cfg.seed ^ r.seed ^ (static_cast<std::uint64_t>(r.motion) << 32));
  Sequence s = generate_sequence(procedural_track(r.motion, d.subject, d.params, r.frames), d.body, k, cfg);
  return s;
}

}  // namespace egospan
