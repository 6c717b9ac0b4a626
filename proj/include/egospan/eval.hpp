#pragma once

// Keypoint and head-angle metrics, constant-pose baselines, global
// repositioning and report output.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "egospan/baselines_data.hpp"
#include "egospan/camera.hpp"
#include "egospan/skeleton.hpp"

namespace egospan {

// Mean per-keypoint Euclidean distance, centimeters.
inline double keypoint_error(const BodyPose& est, const BodyPose& gt) {
  double s = 0.0;
  for (std::size_t k = 0; k < kNumKeypoints; ++k) s += (est.at(k) - gt.at(k)).norm();
  return 100.0 * s / static_cast<double>(kNumKeypoints);
}

inline double angle_between_deg(const Vec3& a, const Vec3& b) {
  const double na = a.norm(), nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw GeometryError("angle with a zero-length direction");
  return rad_to_deg(std::acos(std::clamp(a.dot(b) / (na * nb), -1.0, 1.0)));
}

struct HeadAngleError {
  double f_deg = 0.0, u_deg = 0.0;
};

inline HeadAngleError head_angle_error(const HeadPose& est, const HeadPose& gt) {
  return {angle_between_deg(est.f, gt.f), angle_between_deg(est.u, gt.u)};
}

// ---------------------------------------------------------------------------
// Baselines

enum class Baseline { kAllStand, kAllSit };

struct PosePrediction {
  BodyPose body;
  HeadPose head;
};

inline PosePrediction baseline_pose(Baseline kind) {
  const auto& body = kind == Baseline::kAllStand ? baseline_data::kStandBody : baseline_data::kSitBody;
  const auto& head = kind == Baseline::kAllStand ? baseline_data::kStandHead : baseline_data::kSitHead;
  PosePrediction p;
  for (std::size_t k = 0; k < kNumKeypoints; ++k) p.body.set(k, Vec3(body[k][0], body[k][1], body[k][2]));
  p.head.f = Vec3(head[0], head[1], head[2]);
  p.head.u = Vec3(head[3], head[4], head[5]);
  return p;
}

inline std::string baseline_name(Baseline b) { return b == Baseline::kAllStand ? "AllStand" : "AllSit"; }

// ---------------------------------------------------------------------------
// Global repositioning

struct RepositionOptions {
  RigOffset rig;
  double body_scale = 1.0;            // world meters per normalized meter
  double vertical_limit_deg = 5.0;    // facing closer than this to vertical holds the last yaw
};

// Carries the last usable yaw offset between frames.
struct RepositionState {
  std::optional<double> last_yaw;
};

// The local pose is turned about the vertical by the yaw that takes the
// local facing direction onto the camera's horizontal facing direction, then
// translated so that its rig-attached camera lands on cam.position.
inline BodyPose reposition_global(const BodyPose& local, const HeadPose& head, const CameraPose& cam,
                                  const RepositionOptions& opt = {}, RepositionState* state = nullptr) {
  if (!(opt.body_scale > 0.0)) throw ConfigError("body scale must be positive");
  const Vec3 fw = cam.forward();
  const double limit = std::sin(deg_to_rad(opt.vertical_limit_deg));
  const auto horizontal_ok = [&](const Vec3& v) { return horizontal_norm(v) > limit * v.norm(); };
  double yaw = 0.0;
  if (horizontal_ok(fw) && horizontal_ok(head.f)) {
    yaw = wrap_angle(yaw_of(fw) - yaw_of(head.f));
    if (state) state->last_yaw = yaw;
  } else if (state && state->last_yaw) {
    yaw = *state->last_yaw;
  } else {
    yaw = wrap_angle(camera_yaw(cam.rotation) - yaw_of(head.f));
  }
  const Mat3 r = rot_y(yaw);
  const Vec3 f = head.f.normalized(), u = head.u.normalized();
  const Vec3 cam_local = local.at(kHead) + (opt.rig.forward * f - opt.rig.down * u) / opt.body_scale;
  BodyPose out;
  for (std::size_t k = 0; k < kNumKeypoints; ++k)
    out.set(k, cam.position + opt.body_scale * (r * (local.at(k) - cam_local)));
  return out;
}

// ---------------------------------------------------------------------------
// Reports

struct FrameError {
  std::string sequence;
  std::size_t frame = 0;
  double keypoint_cm = 0.0;
  double f_deg = 0.0;
  double u_deg = 0.0;
};

struct Stat {
  double mean = 0.0, std = 0.0;
  std::size_t count = 0;
};

// Population standard deviation.
inline Stat summarize(const std::vector<double>& v) {
  Stat s;
  s.count = v.size();
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  for (double x : v) s.std += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(s.std / static_cast<double>(v.size()));
  return s;
}

struct EvalReport {
  std::string method;
  std::vector<FrameError> frames;

  void add(const std::string& sequence, std::size_t frame, const PosePrediction& est, const BodyPose& gt_body,
           const HeadPose& gt_head) {
    const auto h = head_angle_error(est.head, gt_head);
    frames.push_back({sequence, frame, keypoint_error(est.body, gt_body), h.f_deg, h.u_deg});
  }

  Stat keypoints() const { return column([](const FrameError& e) { return e.keypoint_cm; }); }
  Stat head_f() const { return column([](const FrameError& e) { return e.f_deg; }); }
  Stat head_u() const { return column([](const FrameError& e) { return e.u_deg; }); }

  std::map<std::string, EvalReport> by_sequence() const {
    std::map<std::string, EvalReport> out;
    for (const auto& f : frames) {
      auto& r = out[f.sequence];
      r.method = method;
      r.frames.push_back(f);
    }
    return out;
  }

 private:
  template <typename Fn>
  Stat column(Fn&& fn) const {
    std::vector<double> v;
    v.reserve(frames.size());
    for (const auto& f : frames) v.push_back(fn(f));
    return summarize(v);
  }
};

inline void write_frame_csv(std::ostream& out, const std::vector<EvalReport>& reports) {
  out << "method,sequence,frame,keypoint_cm,head_f_deg,head_u_deg\n" << std::setprecision(17);
  for (const auto& r : reports)
    for (const auto& f : r.frames)
      out << r.method << "," << f.sequence << "," << f.frame << "," << f.keypoint_cm << "," << f.f_deg << ","
          << f.u_deg << "\n";
}

inline void write_summary_csv(std::ostream& out, const std::vector<EvalReport>& reports) {
  out << "method,sequence,frames,keypoint_avg_cm,keypoint_std_cm,head_f_avg_deg,head_f_std_deg,head_u_avg_deg,"
         "head_u_std_deg\n"
      << std::setprecision(17);
  const auto row = [&](const std::string& method, const std::string& seq, const EvalReport& r) {
    const Stat k = r.keypoints(), f = r.head_f(), u = r.head_u();
    out << method << "," << seq << "," << k.count << "," << k.mean << "," << k.std << "," << f.mean << "," << f.std
        << "," << u.mean << "," << u.std << "\n";
  };
  for (const auto& r : reports) {
    row(r.method, "all", r);
    for (const auto& [seq, sub] : r.by_sequence()) row(r.method, seq, sub);
  }
}

// Metrics down, methods across; each metric has an average row and a
// parenthesized standard deviation row.
inline void write_table(std::ostream& out, const std::vector<EvalReport>& reports) {
  const auto width = [&] {
    std::size_t w = 10;
    for (const auto& r : reports) w = std::max(w, r.method.size() + 2);
    return static_cast<int>(w);
  }();
  out << std::left << std::setw(16) << "" << std::right;
  for (const auto& r : reports) out << std::setw(width) << r.method;
  out << "\n";
  const auto metric = [&](const char* name, Stat (EvalReport::*get)() const) {
    out << std::left << std::setw(16) << (std::string(name) + " (Avg)") << std::right << std::fixed
        << std::setprecision(2);
    for (const auto& r : reports) out << std::setw(width) << (r.*get)().mean;
    out << "\n" << std::left << std::setw(16) << "  (Std)" << std::right;
    for (const auto& r : reports) {
      std::ostringstream s;
      s << std::fixed << std::setprecision(2) << "(" << (r.*get)().std << ")";
      out << std::setw(width) << s.str();
    }
    out << "\n";
  };
  metric("Keypoints", &EvalReport::keypoints);
  metric("Head V1", &EvalReport::head_f);
  metric("Head V2", &EvalReport::head_u);
  out << std::defaultfloat;
}

}  // namespace egospan
