#include <gtest/gtest.h>

#include <random>

#include "egospan/camera.hpp"
#include "oracles.hpp"

using namespace egospan;
using namespace egospan::oracle;

TEST(Intrinsics, DefaultsMapHalfFovToInscribedCircle) {
  const FisheyeIntrinsics k;
  EXPECT_DOUBLE_EQ(k.focal * k.fov / 2.0, 128.0);
  const FisheyeIntrinsics m = FisheyeIntrinsics::make(320, 200, deg_to_rad(170));
  EXPECT_NEAR(m.image_radius(), 100.0, 1e-12);
  EXPECT_EQ(m.center, Vec2(159.5, 99.5));
}

TEST(Project, OpticalAxisHitsCenter) {
  const FisheyeIntrinsics k;
  const auto q = project(Vec3(0, 0, -1), k);
  ASSERT_TRUE(q);
  EXPECT_EQ(*q, k.center);
}

TEST(Project, NinetyDegreesReachesCircleEdge) {
  const FisheyeIntrinsics k;
  const auto q = project(Vec3(1, 0, 0), k);
  ASSERT_TRUE(q);
  EXPECT_NEAR(q->x(), k.center.x() + 128.0, 1e-12);
  EXPECT_NEAR(q->y(), k.center.y(), 1e-12);
  // Camera +y is image up.
  const auto up = project(Vec3(0, 1, -1), k);
  EXPECT_LT(up->y(), k.center.y());
}

TEST(Project, BehindIsUnprojectable) {
  const FisheyeIntrinsics k;
  EXPECT_FALSE(project(Vec3(0, 0, 1), k));
  EXPECT_FALSE(project(Vec3(1, 0, 1e-6), k));
  EXPECT_THROW(project(Vec3::Zero(), k), GeometryError);
}

TEST(Project, RadiallyMonotone) {
  const FisheyeIntrinsics k;
  double last = -1.0;
  for (int i = 0; i <= 90; ++i) {
    const double t = deg_to_rad(i);
    const auto q = project(Vec3(std::sin(t), 0, -std::cos(t)), k);
    const double r = (*q - k.center).norm();
    EXPECT_GT(r, last);
    last = r;
  }
}

TEST(Backproject, CenterAndCorner) {
  const FisheyeIntrinsics k;
  EXPECT_EQ(backproject(k.center, k), Vec3(0, 0, -1));
  EXPECT_THROW(backproject(Vec2(0, 0), k), GeometryError);
}

TEST(Backproject, RoundTrips) {
  std::mt19937_64 rng(1);
  for (const double fov : {kPi, deg_to_rad(120)}) {
    const FisheyeIntrinsics k = FisheyeIntrinsics::make(256, 256, fov);
    for (int i = 0; i < 1000; ++i) {
      const Vec3 p = random_in_fov(rng, fov);
      const Vec2 q = *project(p, k);
      EXPECT_LT((project(backproject(q, k), k).value() - q).norm(), 1e-9);
      EXPECT_LT((backproject(q, k) - p.normalized()).norm(), 1e-9);
    }
  }
}

TEST(HeadCamera, IdentityAndAxes) {
  EXPECT_LT((head_to_camera({Vec3(0, 0, -1), Vec3(0, 1, 0)}) - Mat3::Identity()).norm(), 1e-15);
  const Mat3 r = head_to_camera({Vec3(1, 0, 0), Vec3(0, 1, 0)});
  EXPECT_LT((-r.col(2) - Vec3(1, 0, 0)).norm(), 1e-15);
  EXPECT_LT((r.col(0) - Vec3(1, 0, 0).cross(Vec3(0, 1, 0))).norm(), 1e-15);
}

TEST(HeadCamera, OrthonormalRightHandedAndInvertible) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    const Mat3 r = random_rotation(rng);
    const HeadPose h = camera_to_head(r);
    const Mat3 back = head_to_camera(h);
    EXPECT_LT((back - r).norm(), 1e-12);
    EXPECT_LT((back.transpose() * back - Mat3::Identity()).norm(), 1e-12);
    EXPECT_NEAR(back.determinant(), 1.0, 1e-12);
    const HeadPose h2 = camera_to_head(back);
    EXPECT_LT((h2.f - h.f).norm() + (h2.u - h.u).norm(), 1e-12);
  }
}

TEST(HeadCamera, ReorthonormalizesSlightlySkewedInput) {
  const Mat3 r = head_to_camera({Vec3(0, 0, 2), Vec3(0, 1, 0.05)});
  EXPECT_LT((r.transpose() * r - Mat3::Identity()).norm(), 1e-12);
  EXPECT_LT((-r.col(2) - Vec3(0, 0, 1)).norm(), 1e-12);
}

TEST(HeadCamera, NearParallelRejected) {
  EXPECT_THROW(head_to_camera({Vec3(0, 0, 1), Vec3(0, 0.5, 1)}), GeometryError);
  EXPECT_THROW(head_to_camera({Vec3::Zero(), Vec3(0, 1, 0)}), GeometryError);
}

TEST(Rig, EyeLevelOffset) {
  const CameraPose c = attach_rig(Vec3(0, 1.7, 0), {Vec3(0, 0, -1), Vec3(0, 1, 0)});
  EXPECT_LT((c.position - Vec3(0, 1.67, -0.07)).norm(), 1e-12);
  const CameraPose flipped = attach_rig(Vec3(0, 1.7, 0), {Vec3(0, 0, -1), Vec3(0, -1, 0)});
  EXPECT_GT(flipped.position.y(), 1.7);
  EXPECT_LT((rig_anchor_from_camera(c) - Vec3(0, 1.7, 0)).norm(), 1e-12);
}

TEST(Rig, EquivariantUnderRigidMotion) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 50; ++i) {
    const Mat3 r = random_rotation(rng), g = random_rotation(rng);
    const Vec3 head(u(rng), u(rng), u(rng)), shift(u(rng), u(rng), u(rng));
    const HeadPose h = camera_to_head(r);
    const CameraPose a = attach_rig(head, h);
    const CameraPose b = attach_rig(g * head + shift, {g * h.f, g * h.u});
    EXPECT_LT((b.rotation - g * a.rotation).norm(), 1e-12);
    EXPECT_LT((b.position - (g * a.position + shift)).norm(), 1e-12);
  }
}

TEST(Calibration, TwoLevelTrajectory) {
  std::vector<CameraPose> track(90);
  for (std::size_t i = 0; i < track.size(); ++i) {
    track[i].timestamp = i / 30.0;
    track[i].position = Vec3(0, i < 45 ? 1.60 : 1.05, 0);
  }
  const HeightCalibration cal = calibrate_height(track);
  // ground = (1.05 - (2/3) 1.60) / (1/3), standing = 1.60 - ground.
  const double ground = (1.05 - 2.0 / 3.0 * 1.60) / (1.0 / 3.0);
  EXPECT_NEAR(cal.ground_y, ground, 1e-12);
  EXPECT_NEAR(cal.ground_y, -0.05, 1e-9);
  EXPECT_NEAR(cal.standing_height, 1.65, 1e-9);
  EXPECT_NEAR(cal.standing_height, 1.60, 0.05 + 1e-9);
}

TEST(Calibration, RejectsFlatOrShortTracks) {
  std::vector<CameraPose> flat(90);
  for (std::size_t i = 0; i < flat.size(); ++i) {
    flat[i].timestamp = i / 30.0;
    flat[i].position = Vec3(0, 1.6, 0);
  }
  EXPECT_THROW(calibrate_height(flat), DataError);
  std::vector<CameraPose> brief(30);
  for (std::size_t i = 0; i < brief.size(); ++i) {
    brief[i].timestamp = i / 30.0;
    brief[i].position = Vec3(0, i < 15 ? 1.6 : 1.0, 0);
  }
  EXPECT_THROW(calibrate_height(brief), DataError);
}
