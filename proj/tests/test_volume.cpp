#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "egospan/synth.hpp"
#include "egospan/volume.hpp"
#include "oracles.hpp"

using namespace egospan;
using namespace egospan::oracle;

TEST(Volume, Geometry) {
  const PoseVolume v = PoseVolume::empty();
  EXPECT_EQ(v.n, 41);
  EXPECT_EQ(v.grid.size(), 41u * 41u * 41u);
  EXPECT_NEAR(v.voxel_size * 41, std::cbrt(2.0), 1e-15);
  const Vec3 mid = v.center(20, 20, 20);
  EXPECT_NEAR(mid.y(), -std::cbrt(2.0) / 2, 1e-12);  // 0.63 m below the camera
  EXPECT_NEAR(mid.x(), 0.0, 1e-12);
  EXPECT_NEAR(mid.z(), 0.0, 1e-12);
}

TEST(Volume, EmptyMaskEmptyVolume) {
  EXPECT_EQ(build_pose_volume(ForegroundMask(256, 256), pitched(0.3, 0.5), FisheyeIntrinsics{}).count(), 0u);
}

TEST(Volume, FullMaskFillsForwardHemisphere) {
  const FisheyeIntrinsics k;
  for (const HeadPose& h : {pitched(0, 0), pitched(1, 0.7), pitched(-2, -0.4, 0.2)}) {
    const PoseVolume v = build_pose_volume(full_mask(256, 256), h, k);
    const PoseVolume ref = brute_volume(full_mask(256, 256), h, k);
    EXPECT_EQ(v.count(), ref.count());
    EXPECT_EQ(v, ref);
    EXPECT_GT(v.count(), 0u);
    EXPECT_LT(v.count(), v.grid.size());
  }
}

TEST(Volume, EqualsBruteForceOnSilhouettes) {
  const FisheyeIntrinsics k;
  const CapsuleBody body = CapsuleBody::standard();
  std::mt19937_64 rng(5);
  for (auto m : {ProceduralMotion::kStand, ProceduralMotion::kSit, ProceduralMotion::kWalkCycle,
                 ProceduralMotion::kSquatCycle, ProceduralMotion::kArmWave}) {
    MotionParams params = MotionParams::random(rng);
    params.head_pitch = 45;
    const auto track = procedural_track(m, SubjectParams{}, params, 3);
    const BodyPose& pose = track.world_poses[2];
    const HeadPose h = head_pose_from_skeleton(pose);
    const ForegroundMask mask = render_silhouette(pose, body, attach_rig(pose.at(kHead), h), k);
    ASSERT_GT(mask.count(), 0u);
    EXPECT_EQ(build_pose_volume(mask, h, k), brute_volume(mask, h, k)) << motion_name(m);
  }
}

TEST(Volume, MonotoneInMask) {
  std::mt19937_64 rng(9);
  std::bernoulli_distribution b(0.1);
  const FisheyeIntrinsics k = FisheyeIntrinsics::make(64, 64);
  ForegroundMask m(64, 64);
  const HeadPose h = pitched(0.2, 0.6);
  PoseVolume prev = build_pose_volume(m, h, k);
  for (int round = 0; round < 5; ++round) {
    for (auto& v : m.data) v = v || b(rng);
    const PoseVolume next = build_pose_volume(m, h, k);
    for (std::size_t i = 0; i < next.grid.size(); ++i) EXPECT_GE(next.grid[i], prev.grid[i]);
    prev = next;
  }
}

TEST(Volume, YawDoesNotTumbleTheGrid) {
  const FisheyeIntrinsics k;
  std::mt19937_64 rng(3);
  const ForegroundMask mask = [&] {
    ForegroundMask m(256, 256);
    for (int y = 150; y < 240; ++y)
      for (int x = 90; x < 170; ++x) m.at(x, y) = 1;
    return m;
  }();
  const PoseVolume a = build_pose_volume(mask, pitched(0.0, 0.6, 0.1), k);
  EXPECT_EQ(a, build_pose_volume(mask, pitched(2.1, 0.6, 0.1), k));
}

TEST(Volume, SerializationRoundTrip) {
  const PoseVolume v = build_pose_volume(full_mask(64, 64), pitched(0.1, 0.5), FisheyeIntrinsics::make(64, 64));
  std::stringstream s;
  write_volume(s, v);
  const PoseVolume back = read_volume(s);
  EXPECT_EQ(back, v);
  std::stringstream bad("egospan-volume 2 n=41\n");
  EXPECT_THROW(read_volume(bad), DataError);
  std::stringstream truncated;
  write_volume(truncated, v);
  std::string text = truncated.str();
  text.resize(text.size() - 10);
  std::stringstream cut(text);
  EXPECT_THROW(read_volume(cut), DataError);
}

TEST(Volume, KeypointsOfSynthesizedFramesAreOccupied) {
  const FisheyeIntrinsics k;
  const CapsuleBody body = CapsuleBody::standard();
  VolumeOptions two_meter;
  two_meter.side = 2.0;
  std::mt19937_64 rng(17);
  std::size_t inside_default = 0, hit_default = 0, total = 0, hit_wide = 0;
  for (int trial = 0; trial < 8; ++trial) {
    MotionParams params = MotionParams::random(rng);
    const auto track = procedural_track(ProceduralMotion::kStand, SubjectParams{}, params, 2);
    const BodyPose& pose = track.world_poses[1];
    const HeadPose h = head_pose_from_skeleton(pose);
    const CameraPose cam = attach_rig(pose.at(kHead), h);
    const ForegroundMask mask = render_silhouette(pose, body, cam, k);
    const PoseVolume v = build_pose_volume(mask, h, k);
    const PoseVolume wide = build_pose_volume(mask, h, k, two_meter);
    for (std::size_t j = 0; j < kNumKeypoints; ++j) {
      const Vec3 p = pose.at(j);
      if (!inside_rendered_capsule(p, pose, body) || !project(cam.to_camera(p), k)) continue;
      ++total;
      const Vec3 lev = to_leveled(p - cam.position, h);
      if (const auto idx = v.locate(lev)) {
        ++inside_default;
        hit_default += v.at((*idx)[0], (*idx)[1], (*idx)[2]);
      }
      // Wide voxels are coarser than the arm capsules: accept the 26-neighborhood.
      if (const auto idx = wide.locate(lev)) hit_wide += occupied_near(wide, *idx);
    }
  }
  ASSERT_GT(inside_default, 20u);
  EXPECT_GE(hit_default, 0.95 * inside_default);
  EXPECT_GE(hit_wide, 0.95 * total);
}
