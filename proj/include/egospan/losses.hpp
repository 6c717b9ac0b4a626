#pragma once

// Training losses: keypoint/head L1, head orthonormality, bone symmetry and
// the silhouette consistency term built on a truncated distance transform.
// Every loss has an analytic gradient.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "egospan/camera.hpp"
#include "egospan/dual.hpp"
#include "egospan/error.hpp"
#include "egospan/image.hpp"
#include "egospan/skeleton.hpp"

namespace egospan {

using HeadVector = Eigen::Matrix<double, 6, 1>;

struct LossWeights {
  double alpha = 0.01;   // orthonormality
  double beta = 0.01;    // symmetry
  double gamma = 0.001;  // silhouette consistency
  double q = 20.0;       // truncation, pixels

  void validate() const {
    if (alpha < 0 || beta < 0 || gamma < 0 || q < 0) throw ConfigError("loss weights must be nonnegative");
  }
};

namespace detail {
inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }
}  // namespace detail

// ---------------------------------------------------------------------------
// L1 data term

inline double loss_d(const Eigen::Ref<const Eigen::VectorXd>& b, const Eigen::Ref<const Eigen::VectorXd>& b_g,
                     const Eigen::Ref<const Eigen::VectorXd>& h, const Eigen::Ref<const Eigen::VectorXd>& h_g,
                     Eigen::VectorXd* grad_b = nullptr, Eigen::VectorXd* grad_h = nullptr) {
  if (b.size() != b_g.size() || h.size() != h_g.size()) throw ShapeError("loss_d operand sizes differ");
  if (grad_b) *grad_b = (b - b_g).unaryExpr(&detail::sign);
  if (grad_h) *grad_h = (h - h_g).unaryExpr(&detail::sign);
  return (b - b_g).cwiseAbs().sum() + (h - h_g).cwiseAbs().sum();
}

// ---------------------------------------------------------------------------
// Orthonormality of (f, u)

inline double loss_o(const Vec3& f, const Vec3& u, Vec3* grad_f = nullptr, Vec3* grad_u = nullptr) {
  const double fu = f.dot(u), ff = f.squaredNorm() - 1.0, uu = u.squaredNorm() - 1.0;
  if (grad_f) *grad_f = detail::sign(fu) * u + 2.0 * detail::sign(ff) * f;
  if (grad_u) *grad_u = detail::sign(fu) * f + 2.0 * detail::sign(uu) * u;
  return std::abs(fu) + std::abs(ff) + std::abs(uu);
}

// ---------------------------------------------------------------------------
// Bone-length symmetry

inline double loss_s(const BodyPose& pose, const BonePairs& pairs = BonePairs::standard(),
                     KeypointMatrix* grad = nullptr) {
  if (grad) grad->setZero();
  double total = 0.0;
  for (const auto& [i, j] : pairs.pairs) {
    if (i >= kBones.size() || j >= kBones.size()) throw DataError("bone index out of range");
    const Vec3 di = pose.at(kBones[i].to) - pose.at(kBones[i].from);
    const Vec3 dj = pose.at(kBones[j].to) - pose.at(kBones[j].from);
    const double li = di.norm(), lj = dj.norm();
    total += std::abs(li - lj);
    if (!grad) continue;
    const double s = detail::sign(li - lj);
    if (li > 0.0) {
      grad->row(kBones[i].to) += (s / li) * di.transpose();
      grad->row(kBones[i].from) -= (s / li) * di.transpose();
    }
    if (lj > 0.0) {
      grad->row(kBones[j].to) -= (s / lj) * dj.transpose();
      grad->row(kBones[j].from) += (s / lj) * dj.transpose();
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Distance transform

// Euclidean distance (pixels) to the nearest foreground pixel, capped at the
// image diagonal so an empty mask gives a finite, saturating field.
struct DistanceField {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  double cap() const { return std::hypot(static_cast<double>(width), static_cast<double>(height)); }

  // Bilinear sample with coordinates clamped to the pixel grid.
  template <typename T>
  T sample(const T& x, const T& y) const {
    const auto clamp = [](const T& v, double hi) {
      if (value_of(v) < 0.0) return T(0.0);
      if (value_of(v) > hi) return T(hi);
      return v;
    };
    const T cx = clamp(x, width - 1.0), cy = clamp(y, height - 1.0);
    const int x0 = std::min(static_cast<int>(std::floor(value_of(cx))), width - 1);
    const int y0 = std::min(static_cast<int>(std::floor(value_of(cy))), height - 1);
    const int x1 = std::min(x0 + 1, width - 1), y1 = std::min(y0 + 1, height - 1);
    const T tx = cx - static_cast<double>(x0), ty = cy - static_cast<double>(y0);
    const T top = (1.0 - tx) * at(x0, y0) + tx * at(x1, y0);
    const T bottom = (1.0 - tx) * at(x0, y1) + tx * at(x1, y1);
    return (1.0 - ty) * top + ty * bottom;
  }
};

namespace detail {

// Lower envelope of parabolas (Felzenszwalb and Huttenlocher). Background
// samples carry a large finite cost so the envelope arithmetic stays finite.
inline constexpr double kFarSquared = 1e20;

inline void squared_edt_1d(const std::vector<double>& f, std::vector<double>& out, std::vector<int>& v,
                           std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  constexpr double inf = std::numeric_limits<double>::infinity();
  int k = 0;
  v[0] = 0;
  z[0] = -inf;
  z[1] = inf;
  for (int q = 1; q < n; ++q) {
    double s;
    while (true) {
      const int p = v[k];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s > z[k]) break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double d = q - v[k];
    out[q] = d * d + f[v[k]];
  }
}

}  // namespace detail

inline DistanceField distance_transform(const ForegroundMask& mask) {
  const int w = mask.width, h = mask.height;
  DistanceField df{w, h, std::vector<double>(static_cast<std::size_t>(w) * h)};
  std::vector<double> sq(df.data.size());
  const int n = std::max(w, h);
  std::vector<double> f, out;
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  f.resize(h);
  out.resize(h);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = mask.at(x, y) ? 0.0 : detail::kFarSquared;
    detail::squared_edt_1d(f, out, v, z);
    for (int y = 0; y < h; ++y) sq[static_cast<std::size_t>(y) * w + x] = out[y];
  }
  f.resize(w);
  out.resize(w);
  const double cap = df.cap();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f[x] = sq[static_cast<std::size_t>(y) * w + x];
    detail::squared_edt_1d(f, out, v, z);
    for (int x = 0; x < w; ++x) df.data[static_cast<std::size_t>(y) * w + x] = std::min(std::sqrt(out[x]), cap);
  }
  return df;
}

// ---------------------------------------------------------------------------
// Silhouette consistency

struct ConsistencyTerm {
  double value = 0.0;
  bool projectable = false;
  Vec2 pixel = Vec2::Zero();
};

// Keypoints (local frame) are viewed from the camera implied by the head
// pose: axes from (f, u), center at the head keypoint plus the rig offset.
// The head keypoint is the rig anchor and sits behind the camera, so it is
// skipped. Each remaining keypoint contributes min(D, q); keypoints outside
// the field of view contribute q. Gradients are taken through the camera
// construction as well as the projection.
inline double loss_c(const BodyPose& pose, const HeadPose& head, const DistanceField& dist, const FisheyeIntrinsics& k,
                     double q = 20.0, const RigOffset& rig = {}, KeypointMatrix* grad_body = nullptr,
                     HeadVector* grad_head = nullptr, std::vector<ConsistencyTerm>* terms = nullptr) {
  if (dist.width != k.width || dist.height != k.height) throw ShapeError("distance field does not match intrinsics");
  using D = Dual<12>;  // keypoint xyz, head keypoint xyz, f, u
  using V3 = Eigen::Matrix<D, 3, 1>;
  if (grad_body) grad_body->setZero();
  if (grad_head) grad_head->setZero();
  if (terms) terms->assign(kNumKeypoints, ConsistencyTerm{});

  V3 f, u, anchor;
  for (int i = 0; i < 3; ++i) {
    anchor[i] = D::variable(pose.at(kHead)[i], 3 + i);
    f[i] = D::variable(head.f[i], 6 + i);
    u[i] = D::variable(head.u[i], 9 + i);
  }
  const auto axes = camera_axes_from_head<D>(f, u);
  double total = 0.0;
  for (std::size_t j = 0; j < kNumKeypoints; ++j) {
    if (j == kHead) continue;
    if (!axes) {
      total += q;
      continue;
    }
    const Eigen::Matrix<D, 3, 3>& r = *axes;
    const V3 center = anchor - rig.forward * V3(r.col(2)) - rig.down * V3(r.col(1));
    V3 p;
    for (int i = 0; i < 3; ++i) p[i] = D::variable(pose.at(j)[i], i);
    const V3 pc = r.transpose() * (p - center);
    const double norm = std::sqrt(pc[0].v * pc[0].v + pc[1].v * pc[1].v + pc[2].v * pc[2].v);
    if (norm == 0.0) {
      total += q;
      continue;
    }
    const auto proj = fisheye_project<D>(pc[0], pc[1], pc[2], k);
    if (proj.theta.v > k.fov / 2.0) {
      total += q;
      continue;
    }
    const D sampled = dist.sample(proj.x, proj.y);
    if (terms) (*terms)[j] = {std::min(sampled.v, q), true, Vec2(proj.x.v, proj.y.v)};
    if (sampled.v >= q) {
      total += q;
      continue;
    }
    total += sampled.v;
    if (grad_body) {
      grad_body->row(static_cast<Eigen::Index>(j)) += sampled.d.segment<3>(0).transpose();
      grad_body->row(kHead) += sampled.d.segment<3>(3).transpose();
    }
    if (grad_head) *grad_head += sampled.d.segment<6>(6);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Total

enum class Stage { kOne, kTwo };

struct LossBreakdown {
  double d = 0.0, o = 0.0, s = 0.0, c = 0.0, total = 0.0;
};

struct LossGradient {
  PoseVector body = PoseVector::Zero();
  HeadVector head = HeadVector::Zero();
};

struct LossTarget {
  PoseVector body;
  HeadVector head;
  const DistanceField* distance = nullptr;  // L_c is skipped when absent
};

// Stage 1: L_d + alpha L_o + beta L_s + gamma L_c. Stage 2 predicts the body
// only: the head part of L_d and the whole of L_o drop out, and L_c uses the
// given head pose as a fixed input.
inline LossBreakdown total_loss(const PoseVector& body, const HeadVector& head, const LossTarget& target,
                                const FisheyeIntrinsics& k, const LossWeights& w, Stage stage,
                                LossGradient* grad = nullptr, const BonePairs& pairs = BonePairs::standard()) {
  w.validate();
  LossBreakdown out;
  Eigen::VectorXd gb, gh;
  if (stage == Stage::kOne) {
    out.d = loss_d(body, target.body, head, target.head, grad ? &gb : nullptr, grad ? &gh : nullptr);
  } else {
    const Eigen::VectorXd none(0);
    out.d = loss_d(body, target.body, none, none, grad ? &gb : nullptr, nullptr);
  }
  if (grad) {
    grad->body = gb;
    grad->head.setZero();
    if (stage == Stage::kOne) grad->head = gh;
  }
  const HeadPose hp = HeadPose::from_flat(head);
  if (stage == Stage::kOne) {
    Vec3 gf, gu;
    out.o = loss_o(hp.f, hp.u, grad ? &gf : nullptr, grad ? &gu : nullptr);
    if (grad) {
      grad->head.head<3>() += w.alpha * gf;
      grad->head.tail<3>() += w.alpha * gu;
    }
  }
  const BodyPose bp = BodyPose::from_flat(body);
  KeypointMatrix gs;
  out.s = loss_s(bp, pairs, grad ? &gs : nullptr);
  if (grad) grad->body += w.beta * BodyPose{gs}.flat();
  if (target.distance) {
    KeypointMatrix gc;
    HeadVector ghc;
    out.c = loss_c(bp, hp, *target.distance, k, w.q, RigOffset{}, grad ? &gc : nullptr, grad ? &ghc : nullptr);
    if (grad) {
      grad->body += w.gamma * BodyPose{gc}.flat();
      if (stage == Stage::kOne) grad->head += w.gamma * ghc;
    }
  }
  out.total = out.d + w.alpha * out.o + w.beta * out.s + w.gamma * out.c;
  return out;
}

}  // namespace egospan
