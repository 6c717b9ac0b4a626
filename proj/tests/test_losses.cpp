#include <gtest/gtest.h>

#include <random>

#include "egospan/losses.hpp"
#include "egospan/synth.hpp"
#include "oracles.hpp"

using namespace egospan;
using namespace egospan::oracle;

TEST(LossD, Examples) {
  const PoseVector b = PoseVector::LinSpaced(45, -1, 1);
  const HeadVector h = HeadVector::LinSpaced(6, 0, 1);
  EXPECT_EQ(loss_d(b, b, h, h), 0.0);
  PoseVector b2 = b;
  b2[7] += 0.1;
  EXPECT_NEAR(loss_d(b2, b, h, h), 0.1, 1e-15);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  Eigen::VectorXd x(45), y(45), hx(6), hy(6);
  for (auto* v : {&x, &y, &hx, &hy})
    for (Eigen::Index i = 0; i < v->size(); ++i) (*v)[i] = n(rng);
  double sum = 0;
  for (int i = 0; i < 45; ++i) sum += std::abs(x[i] - y[i]);
  for (int i = 0; i < 6; ++i) sum += std::abs(hx[i] - hy[i]);
  EXPECT_NEAR(loss_d(x, y, hx, hy), sum, 1e-12);
}

TEST(LossO, Examples) {
  EXPECT_EQ(loss_o(Vec3(0, 0, -1), Vec3(0, 1, 0)), 0.0);
  EXPECT_EQ(loss_o(Vec3(1, 0, 0), Vec3(1, 0, 0)), 1.0);
  EXPECT_EQ(loss_o(Vec3(2, 0, 0), Vec3(0, 1, 0)), 3.0);
}

TEST(LossS, Examples) {
  EXPECT_NEAR(loss_s(normalize_pose(standing_pose()).pose), 0.0, 1e-12);
  BodyPose p = standing_pose();
  p.set(kLWrist, p.at(kLElbow) + Vec3(0, -0.25, 0));
  p.set(kRWrist, p.at(kRElbow) + Vec3(0, -0.30, 0));
  // Everything else is mirror symmetric in the default subject.
  EXPECT_NEAR(loss_s(p), 0.05, 1e-12);
}

TEST(LossS, MatchesHandComputedLengths) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  BodyPose p;
  for (std::size_t j = 0; j < kNumKeypoints; ++j) p.set(j, Vec3(u(rng), u(rng), u(rng)));
  const auto len = [&](Keypoint a, Keypoint b) { return (p.at(a) - p.at(b)).norm(); };
  const double expected = std::abs(len(kLShoulder, kLElbow) - len(kRShoulder, kRElbow)) +
                          std::abs(len(kLElbow, kLWrist) - len(kRElbow, kRWrist)) +
                          std::abs(len(kLHip, kLKnee) - len(kRHip, kRKnee)) +
                          std::abs(len(kLKnee, kLAnkle) - len(kRKnee, kRAnkle)) +
                          std::abs(len(kNeck, kLShoulder) - len(kNeck, kRShoulder)) +
                          std::abs(len(kPelvis, kLHip) - len(kPelvis, kRHip));
  EXPECT_NEAR(loss_s(p), expected, 1e-12);
}

TEST(DistanceTransform, ThreeFourFive) {
  ForegroundMask m(33, 33);
  m.at(16, 16) = 1;
  const DistanceField d = distance_transform(m);
  EXPECT_EQ(d.at(16, 16), 0.0);
  EXPECT_EQ(d.at(19, 20), 5.0);
  EXPECT_EQ(d.at(16, 0), 16.0);
}

TEST(DistanceTransform, FullAndEmpty) {
  ForegroundMask full(20, 10);
  std::fill(full.data.begin(), full.data.end(), 1);
  for (double v : distance_transform(full).data) EXPECT_EQ(v, 0.0);
  const DistanceField empty = distance_transform(ForegroundMask(20, 10));
  for (double v : empty.data) EXPECT_GE(v, std::hypot(20.0, 10.0));
}

TEST(DistanceTransform, EqualsBruteForce) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    const double density = i < 10 ? 0.002 : (i < 30 ? 0.03 : 0.3);
    const ForegroundMask m = random_mask(rng, 32, i % 2 ? 32 : 27, density);
    const DistanceField d = distance_transform(m);
    for (int y = 0; y < m.height; ++y)
      for (int x = 0; x < m.width; ++x) ASSERT_EQ(d.at(x, y), brute_distance(m, x, y)) << i << " " << x << "," << y;
  }
}

TEST(DistanceTransform, OneLipschitz) {
  std::mt19937_64 rng(8);
  const DistanceField d = distance_transform(random_mask(rng, 64, 64, 0.01));
  for (int y = 0; y + 1 < 64; ++y)
    for (int x = 0; x + 1 < 64; ++x) {
      EXPECT_LE(std::abs(d.at(x, y) - d.at(x + 1, y)), 1.0 + 1e-12);
      EXPECT_LE(std::abs(d.at(x, y) - d.at(x, y + 1)), 1.0 + 1e-12);
      EXPECT_LE(std::abs(d.at(x, y) - d.at(x + 1, y + 1)), std::sqrt(2.0) + 1e-12);
    }
}

TEST(LossC, ZeroInsideForeground) {
  std::mt19937_64 rng(2);
  const ViewFixture f = frontal_fixture(rng);
  ForegroundMask full(256, 256);
  std::fill(full.data.begin(), full.data.end(), 1);
  EXPECT_EQ(loss_c(f.pose, f.head, distance_transform(full), FisheyeIntrinsics{}), 0.0);
}

TEST(LossC, SaturatesAtQPerKeypoint) {
  std::mt19937_64 rng(3);
  const ViewFixture f = frontal_fixture(rng);
  const FisheyeIntrinsics k;
  EXPECT_NEAR(loss_c(f.pose, f.head, distance_transform(ForegroundMask(256, 256)), k), 14 * 20.0, 1e-12);
  // Turned around: everything behind the camera.
  const HeadPose back{Vec3(0, 0, 1), Vec3(0, 1, 0)};
  ForegroundMask full(256, 256);
  std::fill(full.data.begin(), full.data.end(), 1);
  BodyPose p = f.pose;
  p.set(kHead, Vec3(0, 0.03, -0.07));
  EXPECT_NEAR(loss_c(p, back, distance_transform(full), k), 280.0, 1e-12);
}

TEST(LossC, SingleKeypointAtDistanceFive) {
  const FisheyeIntrinsics k = FisheyeIntrinsics::make(255, 255);  // integer center
  ForegroundMask m(255, 255);
  for (int y = 0; y < 255; ++y)
    for (int x = 0; x < 255; ++x) m.at(x, y) = (x - 127) * (x - 127) + (y - 127) * (y - 127) >= 25;
  ViewFixture f;
  f.pose.set(kHead, Vec3(0, 0.03, 0.07));
  for (std::size_t j = 0; j < kNumKeypoints; ++j)
    if (j != kHead) f.pose.set(j, Vec3(0.3 + 0.01 * j, 0.2, -1.0));
  f.pose.set(kLWrist, Vec3(0, 0, -1.3));  // on the optical axis
  EXPECT_NEAR(loss_c(f.pose, f.head, distance_transform(m), k), 5.0, 1e-12);
}

TEST(LossC, BoundedByNq) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  for (int i = 0; i < 50; ++i) {
    BodyPose p;
    for (std::size_t j = 0; j < kNumKeypoints; ++j) p.set(j, Vec3(n(rng), n(rng), n(rng)));
    const HeadPose h{Vec3(n(rng), n(rng), n(rng)), Vec3(n(rng), n(rng), n(rng))};
    const DistanceField d = distance_transform(random_mask(rng, 64, 64, 0.01 * (i % 5)));
    const double v = loss_c(p, h, d, FisheyeIntrinsics::make(64, 64), 20.0);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 15 * 20.0);
  }
}

TEST(LossGradients, MatchFiniteDifferences) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n;
  const FisheyeIntrinsics k;
  const DistanceField dist = distance_transform(disk_mask(256, 30));
  int checked_c = 0;
  for (int trial = 0; trial < 20; ++trial) {
    ViewFixture f = frontal_fixture(rng);
    HeadPose head{Vec3(0.1 * n(rng), 0.1 * n(rng), -1), Vec3(0.1 * n(rng), 1, 0.1 * n(rng))};
    PoseVector target_body = f.pose.flat();
    for (auto& v : target_body) v += 0.05 * n(rng);
    HeadVector target_head = head.flat();
    for (auto& v : target_head) v += 0.05 * n(rng);
    const LossTarget target{target_body, target_head, &dist};
    const LossWeights w;
    for (Stage stage : {Stage::kOne, Stage::kTwo}) {
      LossGradient g;
      total_loss(f.pose.flat(), head.flat(), target, k, w, stage, &g);
      Eigen::VectorXd x(51);
      x << f.pose.flat(), head.flat();
      const auto fn = [&](const Eigen::VectorXd& v) {
        return total_loss(v.head<45>(), v.tail<6>(), target, k, w, stage).total;
      };
      const Eigen::VectorXd fd = central_difference(fn, x);
      // Skip coordinates whose perturbation crosses a kink: compare the
      // one-sided slopes and only test where they agree.
      for (int i = 0; i < 51; ++i) {
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += 1e-5;
        xm[i] -= 1e-5;
        const double right = (fn(xp) - fn(x)) / 1e-5, left = (fn(x) - fn(xm)) / 1e-5;
        if (rel_err(right, left) > 1e-3) continue;
        const double analytic = i < 45 ? g.body[i] : g.head[i - 45];
        if (stage == Stage::kTwo && i >= 45) {
          EXPECT_EQ(analytic, 0.0);
          continue;
        }
        EXPECT_LE(rel_err(analytic, fd[i]), 1e-4) << "coord " << i;
      }
    }
    std::vector<ConsistencyTerm> terms;
    loss_c(f.pose, head, dist, k, 20.0, RigOffset{}, nullptr, nullptr, &terms);
    for (const auto& t : terms) checked_c += t.projectable && t.value > 0 && t.value < 20;
  }
  EXPECT_GT(checked_c, 20);  // the consistency term was live at many keypoints
}

TEST(LossC, GradientMatchesFiniteDifferenceAlone) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> n;
  const FisheyeIntrinsics k;
  const DistanceField dist = distance_transform(disk_mask(256, 40));
  for (int trial = 0; trial < 10; ++trial) {
    ViewFixture f = frontal_fixture(rng);
    const HeadPose head{Vec3(0.2 * n(rng), 0.2 * n(rng), -1), Vec3(0.2 * n(rng), 1, 0.1 * n(rng))};
    KeypointMatrix gb;
    HeadVector gh;
    loss_c(f.pose, head, dist, k, 20.0, RigOffset{}, &gb, &gh);
    Eigen::VectorXd x(51);
    x << f.pose.flat(), head.flat();
    const auto fn = [&](const Eigen::VectorXd& v) {
      return loss_c(BodyPose::from_flat(v.head<45>()), HeadPose::from_flat(v.tail<6>()), dist, k);
    };
    const Eigen::VectorXd fd = central_difference(fn, x, 1e-6);
    Eigen::VectorXd analytic(51);
    analytic << BodyPose{gb}.flat(), gh;
    for (int i = 0; i < 51; ++i) {
      Eigen::VectorXd xp = x, xm = x;
      xp[i] += 1e-6;
      xm[i] -= 1e-6;
      if (rel_err((fn(xp) - fn(x)) / 1e-6, (fn(x) - fn(xm)) / 1e-6) > 1e-3) continue;
      EXPECT_LE(rel_err(analytic[i], fd[i]), 1e-4) << "coord " << i;
    }
  }
}

TEST(TotalLoss, PerfectPredictionOnSynthesizedFrameIsZero) {
  // Looking down at the default subject so every keypoint is in view and the
  // silhouette covers them.
  const BodyPose world = standing_pose();
  const double p = deg_to_rad(70);
  const HeadPose hw{Vec3(0, -std::sin(p), std::cos(p)), Vec3(0, std::cos(p), std::sin(p))};
  const FisheyeIntrinsics k;
  const CameraPose cam = attach_rig(world.at(kHead), hw);
  const ForegroundMask mask = render_silhouette(world, CapsuleBody::standard(), cam, k);
  const auto norm = normalize_pose(world, 1.70);
  const HeadPose hl{norm.transform.apply_direction(hw.f), norm.transform.apply_direction(hw.u)};
  const DistanceField dist = distance_transform(mask);
  std::vector<ConsistencyTerm> terms;
  loss_c(norm.pose, hl, dist, k, 20.0, RigOffset{}, nullptr, nullptr, &terms);
  for (std::size_t j = 0; j < kNumKeypoints; ++j)
    if (j != kHead) EXPECT_TRUE(terms[j].projectable) << kKeypointNames[j];
  const LossTarget target{norm.pose.flat(), hl.flat(), &dist};
  const LossBreakdown b = total_loss(norm.pose.flat(), hl.flat(), target, k, LossWeights{}, Stage::kOne);
  EXPECT_EQ(b.d, 0.0);
  EXPECT_LT(b.o, 1e-12);
  EXPECT_LT(b.s, 1e-12);
  EXPECT_EQ(b.c, 0.0);
  EXPECT_LT(b.total, 1e-12);
}

TEST(TotalLoss, CombinesComponentsWithWeights) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n;
  const ViewFixture f = frontal_fixture(rng);
  const DistanceField dist = distance_transform(disk_mask(256, 30));
  PoseVector tb = f.pose.flat();
  for (auto& v : tb) v += 0.1 * n(rng);
  const HeadVector head = (HeadVector() << 0.1, 0.0, -1.2, 0.0, 0.9, 0.2).finished();
  const HeadVector th = (HeadVector() << 0.0, 0.0, -1.0, 0.0, 1.0, 0.0).finished();
  const LossTarget target{tb, th, &dist};
  const FisheyeIntrinsics k;
  const LossWeights w{0.3, 0.2, 0.1, 20.0};
  const LossBreakdown b = total_loss(f.pose.flat(), head, target, k, w, Stage::kOne);
  const double d = loss_d(f.pose.flat(), tb, head, th);
  const double o = loss_o(head.head<3>(), head.tail<3>());
  const double s = loss_s(f.pose);
  const double c = loss_c(f.pose, HeadPose::from_flat(head), dist, k);
  EXPECT_NEAR(b.total, d + 0.3 * o + 0.2 * s + 0.1 * c, 1e-12);
  EXPECT_GT(c, 0.0);
  const LossBreakdown only_d = total_loss(f.pose.flat(), head, target, k, LossWeights{0, 0, 0, 20}, Stage::kOne);
  EXPECT_NEAR(only_d.total, d, 1e-15);
  const LossBreakdown two = total_loss(f.pose.flat(), head, target, k, w, Stage::kTwo);
  EXPECT_NEAR(two.d, loss_d(f.pose.flat(), tb, Eigen::VectorXd(0), Eigen::VectorXd(0)), 1e-15);
  EXPECT_NEAR(two.total, two.d + 0.2 * s + 0.1 * c, 1e-12);
  EXPECT_THROW(total_loss(f.pose.flat(), head, target, k, LossWeights{-1, 0, 0, 20}, Stage::kOne), ConfigError);
}
