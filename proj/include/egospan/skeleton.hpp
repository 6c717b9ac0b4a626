#pragma once

// BVH parsing, forward kinematics, canonical keypoints and the hip-line
// local body frame.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "egospan/error.hpp"
#include "egospan/geometry.hpp"

namespace egospan {

enum class Channel { kXpos, kYpos, kZpos, kXrot, kYrot, kZrot };

inline bool is_rotation(Channel c) {
  return c == Channel::kXrot || c == Channel::kYrot || c == Channel::kZrot;
}

struct Joint {
  std::string name;
  Vec3 offset = Vec3::Zero();
  std::vector<Channel> channels;
  std::vector<std::size_t> children;
  std::optional<std::size_t> parent;
  std::size_t channel_start = 0;  // first column of this joint in MocapClip::frames
};

// Joints are stored parent-before-child (depth-first declaration order), so a
// single forward sweep resolves every transform.
struct MocapClip {
  std::vector<Joint> joints;
  double frame_time = 1.0 / 30.0;
  Eigen::MatrixXd frames;  // F x C, rotations in degrees, positions in meters

  std::size_t frame_count() const { return static_cast<std::size_t>(frames.rows()); }
  std::size_t channel_count() const {
    std::size_t n = 0;
    for (const auto& j : joints) n += j.channels.size();
    return n;
  }
  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t i = 0; i < joints.size(); ++i)
      if (joints[i].name == name) return i;
    return std::nullopt;
  }
};

struct BvhOptions {
  // BVH carries no units. CMU files use 0.056444 m per unit.
  double unit_scale = 0.056444;
};

namespace detail {

struct BvhLexer {
  explicit BvhLexer(std::istream& in) : in_(in) {}

  // Returns the next whitespace separated token, or nullopt at end of input.
  std::optional<std::string> next() {
    while (true) {
      while (pos_ < line_.size() && std::isspace(static_cast<unsigned char>(line_[pos_]))) ++pos_;
      if (pos_ < line_.size()) break;
      if (!std::getline(in_, line_)) return std::nullopt;
      ++line_no_;
      pos_ = 0;
    }
    const std::size_t start = pos_;
    while (pos_ < line_.size() && !std::isspace(static_cast<unsigned char>(line_[pos_]))) ++pos_;
    token_line_ = line_no_;
    return line_.substr(start, pos_ - start);
  }

  std::string expect_any(const char* what) {
    auto t = next();
    if (!t) throw ParseError(line_no_, std::string("unexpected end of file, expected ") + what);
    return *t;
  }

  void expect(std::string_view keyword) {
    const auto t = expect_any(std::string(keyword).c_str());
    if (t != keyword)
      throw ParseError(token_line_, "expected '" + std::string(keyword) + "', found '" + t + "'");
  }

  double number() {
    const auto t = expect_any("number");
    return to_double(t);
  }

  double to_double(const std::string& t) const {
    double v = 0.0;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v))
      throw ParseError(token_line_, "non-numeric value '" + t + "'");
    return v;
  }

  // Remaining tokens on the current line (used for frame rows).
  std::vector<std::string> rest_of_line() {
    std::vector<std::string> out;
    while (true) {
      while (pos_ < line_.size() && std::isspace(static_cast<unsigned char>(line_[pos_]))) ++pos_;
      if (pos_ >= line_.size()) break;
      const std::size_t start = pos_;
      while (pos_ < line_.size() && !std::isspace(static_cast<unsigned char>(line_[pos_]))) ++pos_;
      out.push_back(line_.substr(start, pos_ - start));
    }
    return out;
  }

  bool next_line() {
    if (!std::getline(in_, line_)) return false;
    ++line_no_;
    token_line_ = line_no_;
    pos_ = 0;
    return true;
  }

  std::size_t line() const { return token_line_; }

 private:
  std::istream& in_;
  std::string line_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
  std::size_t token_line_ = 0;
};

inline Channel parse_channel(const std::string& s, std::size_t line) {
  if (s == "Xposition") return Channel::kXpos;
  if (s == "Yposition") return Channel::kYpos;
  if (s == "Zposition") return Channel::kZpos;
  if (s == "Xrotation") return Channel::kXrot;
  if (s == "Yrotation") return Channel::kYrot;
  if (s == "Zrotation") return Channel::kZrot;
  throw ParseError(line, "unknown channel '" + s + "'");
}

inline void parse_joint_body(BvhLexer& lex, MocapClip& clip, std::size_t index,
                             const BvhOptions& opt, std::size_t& channel_cursor) {
  lex.expect("{");
  lex.expect("OFFSET");
  Vec3 off;
  for (int i = 0; i < 3; ++i) off[i] = lex.number() * opt.unit_scale;
  clip.joints[index].offset = off;

  auto tok = lex.expect_any("CHANNELS, JOINT, End or }");
  if (tok == "CHANNELS") {
    const double n = lex.number();
    if (n < 0 || n > 6 || n != std::floor(n)) throw ParseError(lex.line(), "bad channel count");
    clip.joints[index].channel_start = channel_cursor;
    for (int i = 0; i < static_cast<int>(n); ++i)
      clip.joints[index].channels.push_back(parse_channel(lex.expect_any("channel"), lex.line()));
    channel_cursor += static_cast<std::size_t>(n);
    tok = lex.expect_any("JOINT, End or }");
  } else {
    clip.joints[index].channel_start = channel_cursor;
  }

  while (tok != "}") {
    if (tok == "JOINT") {
      Joint child;
      child.name = lex.expect_any("joint name");
      child.parent = index;
      clip.joints.push_back(std::move(child));
      const std::size_t ci = clip.joints.size() - 1;
      clip.joints[index].children.push_back(ci);
      parse_joint_body(lex, clip, ci, opt, channel_cursor);
    } else if (tok == "End") {
      lex.expect("Site");
      lex.expect("{");
      lex.expect("OFFSET");
      Joint end;
      end.name = clip.joints[index].name + "_End";
      end.parent = index;
      end.channel_start = channel_cursor;
      for (int i = 0; i < 3; ++i) end.offset[i] = lex.number() * opt.unit_scale;
      lex.expect("}");
      clip.joints.push_back(std::move(end));
      clip.joints[index].children.push_back(clip.joints.size() - 1);
    } else {
      throw ParseError(lex.line(), "unexpected token '" + tok + "' in joint block");
    }
    tok = lex.expect_any("JOINT, End or }");
  }
}

}  // namespace detail

// Parses BVH text. Offsets and position channels are multiplied by
// opt.unit_scale; rotation channels stay in degrees.
inline MocapClip parse_bvh(std::istream& in, const BvhOptions& opt = {}) {
  detail::BvhLexer lex(in);
  MocapClip clip;
  lex.expect("HIERARCHY");
  lex.expect("ROOT");
  Joint root;
  root.name = lex.expect_any("root name");
  clip.joints.push_back(std::move(root));
  std::size_t channels = 0;
  detail::parse_joint_body(lex, clip, 0, opt, channels);

  auto tok = lex.next();
  if (!tok) throw ParseError(lex.line(), "missing MOTION section");
  if (*tok == "ROOT") throw ParseError(lex.line(), "multiple ROOT joints");
  if (*tok != "MOTION") throw ParseError(lex.line(), "expected 'MOTION', found '" + *tok + "'");
  lex.expect("Frames:");
  const double frames_d = lex.number();
  if (frames_d < 1 || frames_d != std::floor(frames_d))
    throw ParseError(lex.line(), "frame count must be a positive integer");
  const auto frames = static_cast<std::size_t>(frames_d);
  lex.expect("Frame");
  lex.expect("Time:");
  clip.frame_time = lex.number();
  if (!(clip.frame_time > 0.0)) throw ParseError(lex.line(), "frame time must be positive");

  std::vector<bool> is_pos(channels, false);
  for (const auto& j : clip.joints)
    for (std::size_t c = 0; c < j.channels.size(); ++c)
      is_pos[j.channel_start + c] = !is_rotation(j.channels[c]);

  clip.frames.resize(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(channels));
  std::size_t row = 0;
  // Anything left on the "Frame Time:" line is an error.
  if (!lex.rest_of_line().empty()) throw ParseError(lex.line(), "trailing tokens after frame time");
  while (lex.next_line()) {
    const auto toks = lex.rest_of_line();
    if (toks.empty()) continue;
    if (row >= frames)
      throw ParseError(lex.line(), "more frame rows than declared (" + std::to_string(frames) + ")");
    if (toks.size() != channels)
      throw ParseError(lex.line(), "channel-count mismatch: expected " + std::to_string(channels) +
                                       " values, found " + std::to_string(toks.size()));
    for (std::size_t c = 0; c < channels; ++c) {
      double v = lex.to_double(toks[c]);
      if (is_pos[c]) v *= opt.unit_scale;
      clip.frames(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(c)) = v;
    }
    ++row;
  }
  if (row != frames)
    throw ParseError(lex.line(), "declared " + std::to_string(frames) + " frames, found " +
                                     std::to_string(row));
  return clip;
}

inline MocapClip parse_bvh_text(std::string_view text, const BvhOptions& opt = {}) {
  std::istringstream in{std::string(text)};
  return parse_bvh(in, opt);
}

inline MocapClip load_bvh(const std::string& path, const BvhOptions& opt = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open BVH file '" + path + "'");
  return parse_bvh(in, opt);
}

// Local rotation of a joint for one frame, channels composed in declared order.
inline Mat3 joint_rotation(const MocapClip& clip, std::size_t joint, std::size_t frame) {
  const Joint& j = clip.joints[joint];
  Mat3 r = Mat3::Identity();
  for (std::size_t c = 0; c < j.channels.size(); ++c) {
    const double deg = clip.frames(static_cast<Eigen::Index>(frame),
                                   static_cast<Eigen::Index>(j.channel_start + c));
    switch (j.channels[c]) {
      case Channel::kXrot: r = r * rot_x(deg_to_rad(deg)); break;
      case Channel::kYrot: r = r * rot_y(deg_to_rad(deg)); break;
      case Channel::kZrot: r = r * rot_z(deg_to_rad(deg)); break;
      default: break;
    }
  }
  return r;
}

inline Vec3 joint_translation(const MocapClip& clip, std::size_t joint, std::size_t frame) {
  const Joint& j = clip.joints[joint];
  Vec3 t = j.offset;
  for (std::size_t c = 0; c < j.channels.size(); ++c) {
    const double v = clip.frames(static_cast<Eigen::Index>(frame),
                                 static_cast<Eigen::Index>(j.channel_start + c));
    switch (j.channels[c]) {
      case Channel::kXpos: t.x() += v; break;
      case Channel::kYpos: t.y() += v; break;
      case Channel::kZpos: t.z() += v; break;
      default: break;
    }
  }
  return t;
}

// World position of every joint (indexed like clip.joints).
inline std::vector<Vec3> forward_kinematics_indexed(const MocapClip& clip, std::size_t frame) {
  if (frame >= clip.frame_count())
    throw DataError("frame " + std::to_string(frame) + " out of range (clip has " +
                    std::to_string(clip.frame_count()) + ")");
  std::vector<Vec3> pos(clip.joints.size());
  std::vector<Mat3> rot(clip.joints.size());
  for (std::size_t i = 0; i < clip.joints.size(); ++i) {
    const Vec3 t = joint_translation(clip, i, frame);
    const Mat3 r = joint_rotation(clip, i, frame);
    if (const auto p = clip.joints[i].parent) {
      pos[i] = pos[*p] + rot[*p] * t;
      rot[i] = rot[*p] * r;
    } else {
      pos[i] = t;
      rot[i] = r;
    }
  }
  return pos;
}

inline std::map<std::string, Vec3> forward_kinematics(const MocapClip& clip, std::size_t frame) {
  const auto pos = forward_kinematics_indexed(clip, frame);
  std::map<std::string, Vec3> out;
  for (std::size_t i = 0; i < pos.size(); ++i) out.emplace(clip.joints[i].name, pos[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Canonical keypoints

inline constexpr std::size_t kNumKeypoints = 15;

enum Keypoint : std::size_t {
  kPelvis, kNeck, kHead,
  kLShoulder, kLElbow, kLWrist,
  kRShoulder, kRElbow, kRWrist,
  kLHip, kLKnee, kLAnkle,
  kRHip, kRKnee, kRAnkle,
};

inline constexpr std::array<std::string_view, kNumKeypoints> kKeypointNames = {
    "pelvis", "neck", "head",
    "l_shoulder", "l_elbow", "l_wrist",
    "r_shoulder", "r_elbow", "r_wrist",
    "l_hip", "l_knee", "l_ankle",
    "r_hip", "r_knee", "r_ankle",
};

using KeypointMatrix = Eigen::Matrix<double, kNumKeypoints, 3, Eigen::RowMajor>;
using PoseVector = Eigen::Matrix<double, 3 * kNumKeypoints, 1>;

// N x 3 keypoints in meters. Row i is keypoint i; flattening is row-major.
struct BodyPose {
  KeypointMatrix keypoints = KeypointMatrix::Zero();

  Vec3 at(std::size_t k) const { return keypoints.row(static_cast<Eigen::Index>(k)).transpose(); }
  void set(std::size_t k, const Vec3& v) { keypoints.row(static_cast<Eigen::Index>(k)) = v.transpose(); }

  PoseVector flat() const {
    PoseVector v;
    for (std::size_t k = 0; k < kNumKeypoints; ++k)
      for (int d = 0; d < 3; ++d) v[static_cast<Eigen::Index>(3 * k + d)] = keypoints(static_cast<Eigen::Index>(k), d);
    return v;
  }
  static BodyPose from_flat(const Eigen::Ref<const Eigen::VectorXd>& v) {
    if (v.size() != static_cast<Eigen::Index>(3 * kNumKeypoints))
      throw ShapeError("body vector must have 45 entries, got " + std::to_string(v.size()));
    BodyPose p;
    for (std::size_t k = 0; k < kNumKeypoints; ++k)
      for (int d = 0; d < 3; ++d) p.keypoints(static_cast<Eigen::Index>(k), d) = v[static_cast<Eigen::Index>(3 * k + d)];
    return p;
  }
};

// Maps each canonical keypoint to a joint name of some skeleton.
struct JointNameTable {
  std::array<std::string, kNumKeypoints> names;

  static JointNameTable identity() {
    JointNameTable t;
    for (std::size_t k = 0; k < kNumKeypoints; ++k) t.names[k] = std::string(kKeypointNames[k]);
    return t;
  }

  // CMU mocap skeleton. The head keypoint is the top of the head (end site).
  static JointNameTable cmu() {
    JointNameTable t;
    t.names = {"Hips", "Neck1", "Head_End",
               "LeftArm", "LeftForeArm", "LeftHand",
               "RightArm", "RightForeArm", "RightHand",
               "LeftUpLeg", "LeftLeg", "LeftFoot",
               "RightUpLeg", "RightLeg", "RightFoot"};
    return t;
  }

  // key=value lines, '#' comments. Every canonical keypoint must be assigned.
  static JointNameTable parse(std::istream& in) {
    JointNameTable t;
    std::array<bool, kNumKeypoints> seen{};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ParseError(line_no, "expected key=value");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      const auto it = std::find(kKeypointNames.begin(), kKeypointNames.end(), key);
      if (it == kKeypointNames.end()) throw ParseError(line_no, "unknown keypoint '" + key + "'");
      const auto k = static_cast<std::size_t>(it - kKeypointNames.begin());
      t.names[k] = value;
      seen[k] = true;
    }
    for (std::size_t k = 0; k < kNumKeypoints; ++k)
      if (!seen[k]) throw DataError("joint table does not assign keypoint '" + std::string(kKeypointNames[k]) + "'");
    return t;
  }
};

inline BodyPose to_canonical(const std::map<std::string, Vec3>& positions, const JointNameTable& table) {
  BodyPose pose;
  for (std::size_t k = 0; k < kNumKeypoints; ++k) {
    const auto it = positions.find(table.names[k]);
    if (it == positions.end())
      throw DataError("joint '" + table.names[k] + "' for keypoint '" + std::string(kKeypointNames[k]) +
                      "' not found in skeleton");
    pose.set(k, it->second);
  }
  return pose;
}

// ---------------------------------------------------------------------------
// Local body frame

inline constexpr double kNormalizedHeight = 1.70;

// x' = scale * rotation * (x - origin)
struct PoseTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 origin = Vec3::Zero();
  double scale = 1.0;

  Vec3 apply(const Vec3& x) const { return scale * (rotation * (x - origin)); }
  Vec3 apply_direction(const Vec3& d) const { return rotation * d; }
  Vec3 inverse(const Vec3& y) const { return rotation.transpose() * (y / scale) + origin; }

  BodyPose apply(const BodyPose& p) const {
    BodyPose out;
    for (std::size_t k = 0; k < kNumKeypoints; ++k) out.set(k, apply(p.at(k)));
    return out;
  }
  BodyPose inverse(const BodyPose& p) const {
    BodyPose out;
    for (std::size_t k = 0; k < kNumKeypoints; ++k) out.set(k, inverse(p.at(k)));
    return out;
  }
};

struct NormalizedPose {
  BodyPose pose;
  PoseTransform transform;
};

inline double vertical_extent(const BodyPose& p) {
  return p.keypoints.col(1).maxCoeff() - p.keypoints.col(1).minCoeff();
}

// Moves the hip midpoint to the origin, turns the hip line (right -> left hip)
// onto +x by a yaw followed by a roll about z, and scales the body to 1.70 m.
// The height used for scaling is reference_height when given (the subject's
// standing extent), otherwise the vertical extent of the leveled pose.
inline NormalizedPose normalize_pose(const BodyPose& pose,
                                     std::optional<double> reference_height = std::nullopt) {
  const Vec3 lhip = pose.at(kLHip), rhip = pose.at(kRHip);
  const Vec3 hip_line = lhip - rhip;
  if (hip_line.norm() < 1e-6) throw GeometryError("degenerate hip line (hips coincide)");

  PoseTransform tf;
  tf.origin = 0.5 * (lhip + rhip);
  // Yaw that carries the horizontal hip direction onto +x, i.e. heading +z
  // (the body's forward) after the turn. A vertical hip line keeps yaw 0.
  const Vec3 forward_guess = hip_line.cross(Vec3::UnitY());
  const double yaw = horizontal_norm(forward_guess) > 1e-12 ? yaw_of(forward_guess) : 0.0;
  const Mat3 unyaw = rot_y(-yaw);
  const Vec3 h = unyaw * hip_line;
  const Mat3 level = rot_z(-std::atan2(h.y(), h.x()));
  tf.rotation = level * unyaw;

  if (reference_height) {
    if (!(*reference_height > 0.0)) throw GeometryError("reference height must be positive");
    tf.scale = kNormalizedHeight / *reference_height;
  } else {
    BodyPose leveled;
    for (std::size_t k = 0; k < kNumKeypoints; ++k) leveled.set(k, tf.rotation * (pose.at(k) - tf.origin));
    const double extent = vertical_extent(leveled);
    if (extent < 1e-9) throw GeometryError("pose has no vertical extent");
    tf.scale = kNormalizedHeight / extent;
  }
  return {tf.apply(pose), tf};
}

// ---------------------------------------------------------------------------
// Symmetric bones

struct Bone {
  Keypoint from, to;
};

inline constexpr std::array<Bone, 12> kBones = {{
    {kLShoulder, kLElbow}, {kRShoulder, kRElbow},
    {kLElbow, kLWrist},    {kRElbow, kRWrist},
    {kLHip, kLKnee},       {kRHip, kRKnee},
    {kLKnee, kLAnkle},     {kRKnee, kRAnkle},
    {kNeck, kLShoulder},   {kNeck, kRShoulder},
    {kPelvis, kLHip},      {kPelvis, kRHip},
}};

// Indices into a bone table, (left, right).
struct BonePairs {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;

  static BonePairs standard() {
    BonePairs p;
    for (std::size_t i = 0; i < kBones.size(); i += 2) p.pairs.emplace_back(i, i + 1);
    return p;
  }
};

inline double bone_length(const BodyPose& pose, const Bone& b) {
  return (pose.at(b.from) - pose.at(b.to)).norm();
}

inline std::vector<std::pair<double, double>> symmetric_bone_lengths(const BodyPose& pose,
                                                                     const BonePairs& pairs) {
  std::vector<std::pair<double, double>> out;
  out.reserve(pairs.pairs.size());
  for (const auto& [i, j] : pairs.pairs) {
    if (i >= kBones.size() || j >= kBones.size()) throw DataError("bone index out of range");
    out.emplace_back(bone_length(pose, kBones[i]), bone_length(pose, kBones[j]));
  }
  return out;
}

}  // namespace egospan
