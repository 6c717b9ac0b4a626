#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "egospan/training.hpp"

using namespace egospan;

namespace {

std::vector<Sequence> small_set(std::initializer_list<ProceduralMotion> motions, std::size_t frames,
                                bool images = false) {
  const FisheyeIntrinsics k;
  std::vector<Sequence> out;
  SequenceConfig cfg;
  cfg.render_images = images;
  for (auto m : motions) out.push_back(generate_recipe({m, 7u + static_cast<std::uint64_t>(m), frames, true}, k, cfg));
  return out;
}

const std::vector<FrameSample>& fixture() {
  static const auto s = samples_from(small_set({ProceduralMotion::kStand, ProceduralMotion::kSquatCycle}, 6));
  return s;
}

}  // namespace

TEST(Models, VariantNamesRoundTrip) {
  for (const auto& [v, name] : kVariantNames) EXPECT_EQ(parse_variant(std::string(name)), v);
  EXPECT_THROW(parse_variant("both"), ConfigError);
}

TEST(Models, ShapeNetZeroOutputIsHalf) {
  NetConfig cfg;
  cfg.image_size = 64;
  ShapeNet net(cfg);
  std::mt19937_64 rng(3);
  net.init(rng);
  net.zero_output_layer();
  const nn::Tensor x = nn::random_normal({2, 5, 64, 64}, rng, 1.0);
  const nn::Tensor p = net.probabilities(x);
  EXPECT_EQ(p.shape, (nn::Shape{2, 1, 64, 64}));
  for (double v : p.data) ASSERT_EQ(v, 0.5);
}

TEST(Models, Stage1Shapes) {
  for (const auto& [v, name] : kVariantNames) {
    NetConfig cfg;
    cfg.variant = v;
    Stage1Model model(cfg);
    std::mt19937_64 rng(1);
    model.init(rng);
    const auto out = model.forward(stage1_batch(fixture(), {0, 1, 2}, cfg));
    EXPECT_EQ(out.body.shape, (nn::Shape{3, 45})) << name;
    EXPECT_EQ(out.f.shape, (nn::Shape{3, 3})) << name;
    EXPECT_EQ(out.u.shape, (nn::Shape{3, 3})) << name;
    EXPECT_EQ(out.motion_feature.data.empty(), v == Variant::kShapeOnly) << name;
  }
}

TEST(Models, ZeroBalancerIgnoresMask) {
  Stage1Model model;
  std::mt19937_64 rng(5);
  model.init(rng);
  model.zero_balancer_output();
  Stage1Batch b = stage1_batch(fixture(), {0}, model.config());
  const auto a = model.forward(b);
  for (auto& v : b.mask.data) v = 1.0 - v;
  const auto c = model.forward(b);
  EXPECT_EQ(a.body.data, c.body.data);
  EXPECT_EQ(a.f.data, c.f.data);
}

TEST(Models, NoHeightIgnoresHeightChannel) {
  NetConfig cfg;
  cfg.variant = Variant::kNoHeight;
  Stage1Model model(cfg);
  std::mt19937_64 rng(5);
  model.init(rng);
  auto data = fixture();
  const auto a = predict_stage1(model, {data[0]});
  for (int r = 0; r < data[0].mhi.dim(1); ++r) data[0].mhi[r * kMotionColumnSize + kHeightChannel] += 3.0;
  const auto b = predict_stage1(model, {data[0]});
  EXPECT_EQ(a[0].pose.body.flat(), b[0].pose.body.flat());
}

TEST(Models, Stage1RejectsWrongSizes) {
  Stage1Model model;
  auto data = fixture();
  data[0].mask = ForegroundMask(128, 128);
  EXPECT_THROW(stage1_batch(data, {0}, model.config()), ShapeError);
  data[1].mhi = nn::Tensor({1, 32, 13});
  EXPECT_THROW(stage1_batch(data, {1}, model.config()), ShapeError);
}

TEST(Models, Stage2StartsAtIdentity) {
  Stage2Model model;
  std::mt19937_64 rng(9);
  model.init(rng);
  Stage2Batch b{nn::random_normal({2, 1, 41, 41, 41}, rng, 1.0), nn::random_normal({2, 512}, rng, 1.0),
                nn::random_normal({2, 45}, rng, 1.0)};
  EXPECT_EQ(model.forward(b).data, b.initial_body.data);
}

TEST(Models, Stage1GradientMatchesFiniteDifferences) {
  Stage1Model model;
  std::mt19937_64 rng(11);
  model.init(rng);
  TrainConfig cfg;
  const FisheyeIntrinsics k;
  auto params = model.params();
  auto grads = nn::zeros_like(params);
  const std::vector<std::size_t> idx{0, 7};
  stage1_objective(model, fixture(), idx, k, cfg, &grads);
  nn::GradCheckOptions opt;
  opt.samples = 300;
  const auto r = nn::gradient_check(params, grads, [&] { return stage1_objective(model, fixture(), idx, k, cfg, nullptr).total; }, opt);
  EXPECT_GT(r.checked, 250u);
  EXPECT_LE(r.max_rel_error, 1e-4) << r.worst;
}

TEST(Models, Stage2GradientMatchesFiniteDifferences) {
  const FisheyeIntrinsics k;
  Stage1Model s1;
  std::mt19937_64 rng(13);
  s1.init(rng);
  const auto& data = fixture();
  auto s2data = make_stage2_samples(data, predict_stage1(s1, data), k);
  Stage2Model model;
  model.init(rng);
  // Away from the zero start, so every layer carries gradient.
  for (auto& p : model.params())
    for (auto& v : p.value->data) v += 0.01 * std::normal_distribution<double>()(rng);
  TrainConfig cfg;
  auto params = model.params();
  auto grads = nn::zeros_like(params);
  const std::vector<std::size_t> idx{1, 8};
  stage2_objective(model, s2data, idx, k, cfg, &grads);
  nn::GradCheckOptions opt;
  opt.samples = 300;
  const auto r = nn::gradient_check(params, grads, [&] { return stage2_objective(model, s2data, idx, k, cfg, nullptr).total; }, opt);
  EXPECT_GT(r.checked, 250u);
  EXPECT_LE(r.max_rel_error, 1e-4) << r.worst;
}

TEST(Models, ShapeNetGradientMatchesFiniteDifferences) {
  NetConfig nc;
  nc.image_size = 32;
  ShapeNet net(nc);
  std::mt19937_64 rng(17);
  net.init(rng);
  std::vector<FrameSample> data(2);
  for (auto& s : data) {
    RgbImage img(32, 32);
    for (auto& p : img.data) p = static_cast<std::uint8_t>(rng() % 256);
    s.image = img;
    s.mask = ForegroundMask(32, 32);
    for (auto& p : s.mask.data) p = static_cast<std::uint8_t>(rng() % 2);
  }
  auto params = net.params();
  auto grads = nn::zeros_like(params);
  shape_objective(net, data, {0, 1}, &grads);
  const auto r = nn::gradient_check(params, grads, [&] { return shape_objective(net, data, {0, 1}, nullptr); });
  EXPECT_LE(r.max_rel_error, 1e-4) << r.worst;
}

TEST(Training, OverfitsOneBatch) {
  const auto seqs = small_set({ProceduralMotion::kStand, ProceduralMotion::kSquatCycle, ProceduralMotion::kWalkCycle,
                               ProceduralMotion::kArmWave},
                              6);
  const auto batch = spread_batch(samples_from(seqs), 4);
  Stage1Model model;
  std::mt19937_64 rng(1);
  model.init(rng);
  const auto r = overfit_smoke(model, batch, FisheyeIntrinsics{}, TrainConfig{});
  EXPECT_EQ(r.run.epochs.back().step, 500u);
  EXPECT_TRUE(r.decreasing);
  EXPECT_LT(r.final_d, 0.02);
  EXPECT_TRUE(r.passed);
}

TEST(Training, SeededRunsAreIdentical) {
  const FisheyeIntrinsics k;
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch = 4;
  cfg.preflight = false;
  std::string logs[2];
  std::vector<double> first;
  for (int run = 0; run < 2; ++run) {
    Stage1Model model;
    std::mt19937_64 rng(cfg.seed);
    model.init(rng);
    std::ostringstream log;
    train_stage1(model, fixture(), k, cfg, &log);
    logs[run] = log.str().substr(0, log.str().rfind(','));
    std::vector<double> flat;
    for (const auto& p : model.params()) flat.insert(flat.end(), p.value->data.begin(), p.value->data.end());
    if (run == 0) first = flat;
    else {
      ASSERT_EQ(first.size(), flat.size());
      for (std::size_t i = 0; i < flat.size(); ++i)
        ASSERT_EQ(std::bit_cast<std::uint64_t>(first[i]), std::bit_cast<std::uint64_t>(flat[i])) << i;
    }
  }
  // The log header plus one row per epoch.
  EXPECT_EQ(std::count(logs[0].begin(), logs[0].end(), '\n'), 2);
}

TEST(Training, DivergenceAbortsWithDump) {
  const FisheyeIntrinsics k;
  Stage1Model model;
  std::mt19937_64 rng(1);
  model.init(rng);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.preflight = false;
  cfg.optimizer.kind = nn::OptimizerKind::kSgdMomentum;
  cfg.optimizer.lr = 1e300;
  cfg.dump_path = ::testing::TempDir() + "diverged.weights";
  auto data = fixture();
  data.resize(4);
  cfg.batch = 1;
  EXPECT_THROW(train_stage1(model, data, k, cfg), NumericalError);
  std::ifstream dumped(cfg.dump_path, std::ios::binary);
  EXPECT_TRUE(dumped.good());
}

TEST(Training, PreflightRunsAndPasses) {
  const FisheyeIntrinsics k;
  Stage2Model model;
  std::mt19937_64 rng(2);
  model.init(rng);
  Stage1Model s1;
  s1.init(rng);
  const auto s2 = make_stage2_samples(fixture(), predict_stage1(s1, fixture()), k);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.preflight_samples = 100;
  const auto r = train_stage2(model, s2, k, cfg);
  ASSERT_TRUE(r.preflight);
  EXPECT_LE(r.preflight->max_rel_error, 1e-4);
}

TEST(Training, RejectsBadConfig) {
  TrainConfig cfg;
  cfg.batch = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.optimizer.lr = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  Stage1Model model;
  EXPECT_THROW(train_stage1(model, {}, FisheyeIntrinsics{}, TrainConfig{}), DataError);
}
