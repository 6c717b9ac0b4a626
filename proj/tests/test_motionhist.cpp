#include <gtest/gtest.h>

#include <random>

#include "egospan/motionhist.hpp"
#include "egospan/synth.hpp"
#include "oracles.hpp"

using namespace egospan;
using namespace egospan::oracle;

TEST(Incremental, IdenticalPoses) {
  CameraPose c;
  c.rotation = rot_y(0.3) * rot_x(-0.5);
  c.position = Vec3(1, 1.7, 2);
  const auto mo = incremental_motion(c, c, {1.7, 0.0});
  EXPECT_LT((mo.rotation - Mat3::Identity()).norm(), 1e-15);
  EXPECT_EQ(mo.translation, Vec3::Zero());
  EXPECT_DOUBLE_EQ(mo.height, 1.0);
}

TEST(Incremental, ForwardStep) {
  CameraPose a, b;
  a.rotation = b.rotation = head_to_camera({Vec3(0, 0, 1), Vec3(0, 1, 0)});
  a.position = Vec3(0, 1.7, 0);
  b.position = Vec3(0, 1.7, 0.02);
  const auto mo = incremental_motion(a, b, {1.7, 0.0});
  EXPECT_NEAR(mo.translation.norm(), 0.011765, 5e-7);
  const MotionColumn col = motion_column(mo);
  EXPECT_NEAR(col.segment<3>(9).norm(), 0.17647, 5e-6);
  // Forward is camera -z.
  EXPECT_NEAR(col[11], -15.0 * 0.02 / 1.7, 1e-12);
}

TEST(Incremental, LookingDownKeepsWalkingHorizontal) {
  CameraPose a, b;
  a.rotation = b.rotation = head_to_camera({Vec3(0, -1, 1).normalized(), Vec3(0, 1, 1).normalized()});
  a.position = Vec3(0, 1.7, 0);
  b.position = Vec3(0, 1.7, 0.02);
  const auto leveled = incremental_motion(a, b, {1.7, 0.0});
  EXPECT_NEAR(leveled.translation.y(), 0.0, 1e-15);
  const auto raw = incremental_motion(a, b, {1.7, 0.0}, TranslationFrame::kRawLocal);
  EXPECT_GT(std::abs(raw.translation.y()), 0.005);
}

TEST(Incremental, RejectsBadInput) {
  CameraPose a, b;
  EXPECT_THROW(incremental_motion(a, b, {0.0, 0.0}), DataError);
  b.position.x() = std::nan("");
  EXPECT_THROW(incremental_motion(a, b, {1.0, 0.0}), NumericalError);
}

TEST(Column, StandingIdentity) {
  const MotionColumn col = motion_column(IncrementalMotion{});
  MotionColumn expected = MotionColumn::Zero();
  expected[12] = 0.15;
  EXPECT_LT((col - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Mhi, GlobalYawInvariance) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> yaw(-kPi, kPi);
  const auto track = wandering_track(1, 100);
  const HeightCalibration cal{1.62, 0.0};
  const auto ref = build_mhi(track, 80, cal);
  for (int i = 0; i < 20; ++i) {
    const auto turned = transformed(track, rot_y(yaw(rng)), 1.0);
    EXPECT_LT((build_mhi(turned, 80, cal).grid - ref.grid).cwiseAbs().maxCoeff(), 1e-9);
  }
  // A tilt of the world is not a symmetry.
  const auto tilted = transformed(track, rot_x(0.2), 1.0);
  EXPECT_GT((build_mhi(tilted, 80, cal).grid - ref.grid).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(Mhi, ScaleRelation) {
  const auto track = wandering_track(2, 90);
  const auto ref = build_mhi(track, 89, {1.6, 0.1});
  const auto scaled = transformed(track, Mat3::Identity(), 2.0);
  EXPECT_LT((build_mhi(scaled, 89, {3.2, 0.2}).grid - ref.grid).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Mhi, WindowShiftAndPadding) {
  const auto track = wandering_track(3, 120);
  const HeightCalibration cal{1.6, 0.0};
  const auto a = build_mhi(track, 100, cal), b = build_mhi(track, 101, cal);
  ASSERT_EQ(a.window(), 64u);
  EXPECT_EQ(a.grid.bottomRows(63), b.grid.topRows(63));
  const auto early = build_mhi(track, 5, cal);
  for (int j = 0; j < 60; ++j) EXPECT_EQ(early.grid.row(j), early.grid.row(59));
  EXPECT_NE(early.grid.row(60), early.grid.row(61));
  const auto cols = motion_columns(track, cal);
  for (std::size_t t : {1u, 5u, 63u, 64u, 119u}) EXPECT_EQ(window_from_columns(cols, t, 64).grid, build_mhi(track, t, cal).grid);
  EXPECT_THROW(build_mhi(track, 0, cal), DataError);
  EXPECT_THROW(build_mhi({}, 1, cal), DataError);
}

TEST(Mhi, StationaryStandingClipIsConstant) {
  const auto track = procedural_track(ProceduralMotion::kStand, SubjectParams{}, MotionParams{}, 80);
  const auto cams = rig_track(track.world_poses, track.frame_time);
  const HeightCalibration cal{cams[0].position.y(), 0.0};
  const auto mhi = build_mhi(cams, 80, cal);
  MotionColumn expected = MotionColumn::Zero();
  expected[12] = 0.15;
  for (Eigen::Index j = 0; j < mhi.grid.rows(); ++j)
    EXPECT_LT((mhi.grid.row(j).transpose() - expected).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Mhi, SquatHeightChannelDescends) {
  const auto track = procedural_track(ProceduralMotion::kSquatCycle, SubjectParams{}, MotionParams{}, 90);
  const auto cams = rig_track(track.world_poses, track.frame_time);
  const HeightCalibration cal = calibrate_height(track.calibration_track);
  // Default squat: one cycle spans 3 s; the descent is the first 1.5 s.
  const auto mhi = build_mhi(cams, 45, cal);
  for (Eigen::Index j = 20; j < 63; ++j) EXPECT_LT(mhi.grid(j + 1, 12), mhi.grid(j, 12)) << j;
}

TEST(Mhi, HeightSeparatesStandFromSit) {
  const SubjectParams s;
  const auto cal = calibrate_height(calibration_track(s));
  const auto mean_height = [&](ProceduralMotion m) {
    const auto track = procedural_track(m, s, MotionParams{}, 70);
    return build_mhi(rig_track(track.world_poses, track.frame_time), 70, cal).grid.col(12).mean();
  };
  EXPECT_GT(mean_height(ProceduralMotion::kStand) - mean_height(ProceduralMotion::kSit), 0.05);
}
