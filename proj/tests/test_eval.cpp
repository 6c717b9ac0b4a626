#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "egospan/eval.hpp"
#include "egospan/synth.hpp"

using namespace egospan;

namespace {

BodyPose random_pose(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 0.5);
  BodyPose p;
  for (std::size_t k = 0; k < kNumKeypoints; ++k) p.set(k, Vec3(n(rng), n(rng), n(rng)));
  return p;
}

HeadPose yawed_head(double yaw, double pitch_down) {
  const Mat3 r = rot_y(yaw) * rot_x(pitch_down);
  return {r * Vec3(0, 0, 1), r * Vec3(0, 1, 0)};
}

}  // namespace

TEST(KeypointError, Examples) {
  const BodyPose stand = baseline_pose(Baseline::kAllStand).body;
  EXPECT_EQ(keypoint_error(stand, stand), 0.0);
  BodyPose moved = stand;
  moved.set(kLWrist, stand.at(kLWrist) + Vec3(0.15, 0, 0));
  EXPECT_NEAR(keypoint_error(moved, stand), 1.0, 1e-12);
}

TEST(KeypointError, SymmetricAndTriangle) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const BodyPose a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
    EXPECT_EQ(keypoint_error(a, b), keypoint_error(b, a));
    EXPECT_LE(keypoint_error(a, c), keypoint_error(a, b) + keypoint_error(b, c) + 1e-12);
  }
}

TEST(KeypointError, StandVersusSitByHand) {
  const BodyPose stand = baseline_pose(Baseline::kAllStand).body, sit = baseline_pose(Baseline::kAllSit).body;
  // Hips and pelvis coincide; everything else sums per-keypoint distances.
  double sum = 0.0;
  for (std::size_t k = 0; k < kNumKeypoints; ++k) {
    const Vec3 d = stand.at(k) - sit.at(k);
    sum += std::sqrt(d.x() * d.x() + d.y() * d.y() + d.z() * d.z());
  }
  EXPECT_NEAR(keypoint_error(stand, sit), sum * 100.0 / 15.0, 1e-12);
  EXPECT_GT(keypoint_error(stand, sit), 10.0);
}

TEST(Baselines, NormalizedAndDeterministic) {
  for (auto b : {Baseline::kAllStand, Baseline::kAllSit}) {
    const PosePrediction p = baseline_pose(b);
    const Vec3 mid = 0.5 * (p.body.at(kLHip) + p.body.at(kRHip));
    EXPECT_LT(mid.norm(), 1e-9);
    EXPECT_LT(std::abs(p.body.at(kLHip).y() - p.body.at(kRHip).y()), 1e-9);
    EXPECT_NEAR(p.head.f.norm(), 1.0, 1e-6);
    EXPECT_NEAR(p.head.u.norm(), 1.0, 1e-6);
    EXPECT_EQ(keypoint_error(p.body, baseline_pose(b).body), 0.0);
  }
  EXPECT_NEAR(vertical_extent(baseline_pose(Baseline::kAllStand).body), kNormalizedHeight, 1e-6);
}

TEST(HeadAngleError, Examples) {
  const HeadPose h = yawed_head(0, 0);
  EXPECT_EQ(head_angle_error(h, h).f_deg, 0.0);
  EXPECT_EQ(head_angle_error(h, h).u_deg, 0.0);
  const HeadPose side{Vec3(1, 0, 0), Vec3(0, 1, 0)};
  EXPECT_NEAR(head_angle_error(side, h).f_deg, 90.0, 1e-12);
  const auto e = head_angle_error(yawed_head(kPi / 4, 0), h);
  EXPECT_NEAR(e.f_deg, 45.0, 1e-9);
  EXPECT_NEAR(e.u_deg, 0.0, 1e-9);
  // Unnormalized estimates are compared by direction.
  EXPECT_NEAR(head_angle_error({Vec3(0, 0, 3), Vec3(0, 0.5, 0)}, h).f_deg, 0.0, 1e-12);
}

TEST(Reposition, SynthesizedFramesRoundTrip) {
  const FisheyeIntrinsics k;
  double worst = 0.0;
  int checked = 0;
  for (auto m : procedural_motions()) {
    SequenceRecipe r{m, 40u + static_cast<std::uint64_t>(m), 40, true};
    const Sequence s = generate_recipe(r, k, SequenceConfig{});
    for (std::size_t i = 0; i < s.frames.size(); i += 7) {
      const auto& f = s.frames[i];
      RepositionOptions opt;
      opt.body_scale = 1.0 / f.to_local.scale;
      const BodyPose world = reposition_global(f.body, f.head, f.camera, opt);
      for (std::size_t j = 0; j < kNumKeypoints; ++j) worst = std::max(worst, (world.at(j) - f.world_body.at(j)).norm());
      ++checked;
    }
  }
  EXPECT_GT(checked, 30);
  EXPECT_LT(worst, 0.02);
}

TEST(Reposition, CameraTranslationTranslatesOutput) {
  std::mt19937_64 rng(3);
  const BodyPose local = baseline_pose(Baseline::kAllStand).body;
  const HeadPose h = yawed_head(0.2, 0.3);
  CameraPose cam = attach_rig(Vec3(1, 1.7, 2), yawed_head(1.1, 0.3));
  const BodyPose a = reposition_global(local, h, cam);
  const Vec3 shift(0.4, -0.2, 3.0);
  cam.position += shift;
  const BodyPose b = reposition_global(local, h, cam);
  for (std::size_t k = 0; k < kNumKeypoints; ++k) EXPECT_LT((b.at(k) - a.at(k) - shift).norm(), 1e-12);
}

TEST(Reposition, PitchDoesNotChangeYaw) {
  const BodyPose local = baseline_pose(Baseline::kAllStand).body;
  const HeadPose h = yawed_head(0.0, 0.0);
  const BodyPose a = reposition_global(local, h, attach_rig(Vec3(0, 1.7, 0), yawed_head(0.7, 0.1)));
  const BodyPose b = reposition_global(local, h, attach_rig(Vec3(0, 1.7, 0), yawed_head(0.7, 0.6)));
  const Vec3 da = a.at(kLHip) - a.at(kRHip), db = b.at(kLHip) - b.at(kRHip);
  EXPECT_NEAR(yaw_of(da), yaw_of(db), 1e-12);
}

TEST(Reposition, VerticalFacingHoldsLastYaw) {
  const BodyPose local = baseline_pose(Baseline::kAllStand).body;
  const HeadPose h = yawed_head(0.0, 0.0);
  RepositionState state;
  const BodyPose a = reposition_global(local, h, attach_rig(Vec3(0, 1.7, 0), yawed_head(0.9, 0.2)), {}, &state);
  ASSERT_TRUE(state.last_yaw.has_value());
  const BodyPose b = reposition_global(local, h, attach_rig(Vec3(0, 1.7, 0), yawed_head(-2.0, kPi / 2 - 0.01)), {}, &state);
  EXPECT_NEAR(yaw_of(a.at(kLHip) - a.at(kRHip)), yaw_of(b.at(kLHip) - b.at(kRHip)), 1e-12);
}

TEST(EvalReport, AggregatesMatchRecomputation) {
  std::mt19937_64 rng(4);
  EvalReport r;
  r.method = "test";
  for (int i = 0; i < 30; ++i) {
    PosePrediction est{random_pose(rng), yawed_head(0.1 * i, 0.2)};
    r.add(i < 10 ? "a" : "b", static_cast<std::size_t>(i), est, random_pose(rng), yawed_head(0, 0));
  }
  std::ostringstream csv;
  write_frame_csv(csv, {r});
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  double sum = 0.0, sq = 0.0;
  int n = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string cell;
    for (int c = 0; c < 4; ++c) std::getline(row, cell, ',');
    values.push_back(std::stod(cell));
    sum += values.back();
    ++n;
  }
  ASSERT_EQ(n, 30);
  const double mean = sum / n;
  for (double v : values) sq += (v - mean) * (v - mean);
  EXPECT_NEAR(r.keypoints().mean, mean, 1e-12);
  EXPECT_NEAR(r.keypoints().std, std::sqrt(sq / n), 1e-12);
  EXPECT_EQ(r.by_sequence().at("a").frames.size(), 10u);
  std::ostringstream table;
  write_table(table, {r});
  EXPECT_NE(table.str().find("Keypoints (Avg)"), std::string::npos);
  EXPECT_NE(table.str().find("Head V2 (Avg)"), std::string::npos);
}
