#pragma once

// Training loops for the shape net, Stage 1 and Stage 2, plus batched
// inference helpers.

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "egospan/eval.hpp"
#include "egospan/models.hpp"
#include "egospan/nn/gradcheck.hpp"
#include "egospan/nn/optim.hpp"
#include "egospan/nn/serialize.hpp"
#include "egospan/synth.hpp"

namespace egospan {

// One labeled frame in the form the networks consume.
struct FrameSample {
  std::string sequence;
  std::size_t frame = 0;
  nn::Tensor mhi;                   // (1, T, 13)
  ForegroundMask mask;              // the silhouette Stage 1 sees
  std::vector<float> distance;      // distance field of mask; empty skips L_c
  std::optional<RgbImage> image;    // shape-net input
  PoseVector body = PoseVector::Zero();
  HeadVector head = HeadVector::Zero();

  HeadPose head_pose() const { return HeadPose::from_flat(head); }
  BodyPose body_pose() const { return BodyPose::from_flat(body); }
};

inline std::vector<float> compact_distance(const ForegroundMask& m) {
  const DistanceField d = distance_transform(m);
  return {d.data.begin(), d.data.end()};
}

inline DistanceField expand_distance(const std::vector<float>& compact, int width, int height) {
  DistanceField d;
  d.width = width;
  d.height = height;
  d.data.assign(compact.begin(), compact.end());
  return d;
}

inline FrameSample make_sample(const std::string& sequence, const LabeledFrame& f, bool with_distance = true) {
  FrameSample s;
  s.sequence = sequence;
  s.frame = f.index;
  s.mhi = mhi_tensor(f.mhi);
  s.mask = f.mask;
  if (with_distance) s.distance = compact_distance(f.mask);
  s.image = f.image;
  s.body = f.body.flat();
  s.head = f.head.flat();
  return s;
}

inline std::vector<FrameSample> samples_from(const std::vector<Sequence>& seqs, bool with_distance = true) {
  std::vector<FrameSample> out;
  for (const auto& s : seqs)
    for (const auto& f : s.frames) out.push_back(make_sample(s.name, f, with_distance));
  return out;
}

// ---------------------------------------------------------------------------

struct TrainConfig {
  int epochs = 10;
  int batch = 16;
  nn::OptimizerConfig optimizer;
  LossWeights loss;
  std::uint64_t seed = 1;
  bool cosine_decay = false;   // anneal the learning rate to zero over the run
  bool consistency = true;     // include L_c when distance fields are present
  bool preflight = true;       // sampled gradient check before the first step
  std::size_t preflight_samples = 1000;
  double preflight_tolerance = 1e-4;
  double time_limit_s = 0.0;   // stop after the epoch that crosses it; 0 disables
  std::string dump_path;       // weights written here when training diverges

  void validate() const {
    if (epochs < 1) throw ConfigError("epochs must be positive");
    if (batch < 1) throw ConfigError("batch must be positive");
    if (time_limit_s < 0.0) throw ConfigError("time limit must be non-negative");
    optimizer.validate();
    loss.validate();
  }
};

struct EpochLog {
  int epoch = 0;
  std::size_t step = 0;
  LossBreakdown mean;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> epochs;
  std::optional<nn::GradCheckResult> preflight;
  double seconds = 0.0;
};

inline void write_log_header(std::ostream& out) { out << "epoch,step,L_d,L_o,L_s,L_c,total\n"; }

inline void write_log_row(std::ostream& out, const EpochLog& e) {
  out << std::setprecision(17) << e.epoch << "," << e.step << "," << e.mean.d << "," << e.mean.o << "," << e.mean.s
      << "," << e.mean.c << "," << e.mean.total << "\n";
}

namespace detail {

inline void accumulate(LossBreakdown& a, const LossBreakdown& b) {
  a.d += b.d;
  a.o += b.o;
  a.s += b.s;
  a.c += b.c;
  a.total += b.total;
}

inline LossBreakdown scaled(LossBreakdown a, double s) {
  a.d *= s;
  a.o *= s;
  a.s *= s;
  a.c *= s;
  a.total *= s;
  return a;
}

inline bool finite(const std::vector<nn::Tensor>& ts) {
  return std::all_of(ts.begin(), ts.end(), [](const nn::Tensor& t) { return t.all_finite(); });
}

inline std::vector<std::size_t> shuffled(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

// Shared loop: objective(batch indices, grads or null) returns the mean loss
// and, with grads, fills them.
template <typename Objective, typename Dump>
TrainResult run_training(const nn::ParamList& params, std::size_t n, const TrainConfig& cfg, Objective&& objective,
                         Dump&& dump, std::ostream* log) {
  cfg.validate();
  if (n == 0) throw DataError("training set is empty");
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  TrainResult result;
  if (cfg.preflight) {
    std::vector<std::size_t> probe;
    for (std::size_t i = 0; i < std::min<std::size_t>(2, n); ++i) probe.push_back(i);
    auto grads = nn::zeros_like(params);
    objective(probe, &grads);
    nn::GradCheckOptions opt;
    opt.samples = cfg.preflight_samples;
    opt.seed = cfg.seed;
    opt.exhaustive_limit = 0;
    result.preflight = nn::gradient_check(params, grads, [&] { return objective(probe, nullptr).total; }, opt);
    if (!(result.preflight->max_rel_error <= cfg.preflight_tolerance))
      throw NumericalError("preflight gradient check failed: relative error " +
                           std::to_string(result.preflight->max_rel_error) + " at " + result.preflight->worst);
  }
  std::mt19937_64 rng(cfg.seed ^ 0x7ea1ULL);
  nn::Optimizer opt(cfg.optimizer);
  std::size_t step = 0;
  const std::size_t per_epoch = (n + cfg.batch - 1) / static_cast<std::size_t>(cfg.batch);
  const double total_steps = static_cast<double>(per_epoch * static_cast<std::size_t>(cfg.epochs));
  if (log) write_log_header(*log);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto order = shuffled(n, rng);
    LossBreakdown sum;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < n; b += static_cast<std::size_t>(cfg.batch)) {
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(b),
                                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n, b + cfg.batch)));
      auto grads = nn::zeros_like(params);
      const LossBreakdown l = objective(idx, &grads);
      if (!std::isfinite(l.total) || !finite(grads)) {
        if (!cfg.dump_path.empty()) dump(cfg.dump_path);
        throw NumericalError("training diverged at epoch " + std::to_string(epoch) + ", step " + std::to_string(step) +
                             (cfg.dump_path.empty() ? "" : "; state written to " + cfg.dump_path));
      }
      if (cfg.cosine_decay)
        opt.set_lr(cfg.optimizer.lr * 0.5 * (1.0 + std::cos(kPi * static_cast<double>(step) / total_steps)));
      opt.step(params, grads);
      accumulate(sum, l);
      ++batches;
      ++step;
    }
    EpochLog e{epoch, step, scaled(sum, 1.0 / static_cast<double>(batches)),
               std::chrono::duration<double>(clock::now() - start).count()};
    result.epochs.push_back(e);
    if (log) write_log_row(*log, e);
    if (cfg.time_limit_s > 0.0 && e.seconds > cfg.time_limit_s) break;
  }
  result.seconds = std::chrono::duration<double>(clock::now() - start).count();
  return result;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Shape net

inline nn::Tensor shape_batch_input(const std::vector<FrameSample>& data, const std::vector<std::size_t>& idx,
                                    bool coord_maps) {
  std::vector<nn::Tensor> items;
  items.reserve(idx.size());
  for (auto i : idx) {
    if (!data[i].image) throw DataError("shape net sample " + std::to_string(i) + " has no input image");
    items.push_back(shape_net_input(*data[i].image, coord_maps));
  }
  std::vector<const nn::Tensor*> ptrs;
  for (const auto& t : items) ptrs.push_back(&t);
  return nn::stack(ptrs);
}

// Mean binary cross-entropy of the shape net against the ground-truth masks.
inline double shape_objective(const ShapeNet& net, const std::vector<FrameSample>& data,
                              const std::vector<std::size_t>& idx, std::vector<nn::Tensor>* grads) {
  const nn::Tensor x = shape_batch_input(data, idx, net.config().coord_maps);
  std::vector<const nn::Tensor*> masks;
  std::vector<nn::Tensor> mt;
  for (auto i : idx) mt.push_back(mask_tensor(data[i].mask));
  for (const auto& t : mt) masks.push_back(&t);
  const nn::Tensor target = nn::stack(masks);
  ShapeNet::Pass pass;
  const nn::Tensor logits = net.logits(x, grads ? &pass : nullptr);
  nn::Tensor dlogits;
  const double loss = nn::bce_with_logits(logits, target, grads ? &dlogits : nullptr);
  if (grads) net.backward(pass, dlogits, *grads);
  return loss;
}

inline TrainResult train_shape(ShapeNet& net, const std::vector<FrameSample>& data, const TrainConfig& cfg,
                               std::ostream* log = nullptr) {
  auto params = net.params();
  const auto objective = [&](const std::vector<std::size_t>& idx, std::vector<nn::Tensor>* grads) {
    LossBreakdown l;
    l.d = l.total = shape_objective(net, data, idx, grads);
    return l;
  };
  const auto dump = [&](const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    nn::save_weights(out, net.describe(), params);
  };
  return detail::run_training(params, data.size(), cfg, objective, dump, log);
}

inline std::vector<ForegroundMask> predict_masks(const ShapeNet& net, const std::vector<FrameSample>& data,
                                                 int batch = 4) {
  std::vector<ForegroundMask> out;
  for (std::size_t b = 0; b < data.size(); b += static_cast<std::size_t>(batch)) {
    std::vector<std::size_t> idx;
    for (std::size_t i = b; i < std::min(data.size(), b + batch); ++i) idx.push_back(i);
    const nn::Tensor probs = net.probabilities(shape_batch_input(data, idx, net.config().coord_maps));
    for (std::size_t j = 0; j < idx.size(); ++j) out.push_back(tensor_mask(probs, j));
  }
  return out;
}

inline double mean_iou(const std::vector<ForegroundMask>& pred, const std::vector<FrameSample>& data) {
  if (pred.size() != data.size() || pred.empty()) throw DataError("mask count mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += mask_iou(pred[i], data[i].mask);
  return s / static_cast<double>(pred.size());
}

// ---------------------------------------------------------------------------
// Stage 1

inline Stage1Batch stage1_batch(const std::vector<FrameSample>& data, const std::vector<std::size_t>& idx,
                                const NetConfig& cfg) {
  Stage1Batch b;
  std::vector<nn::Tensor> mhis, masks;
  for (auto i : idx) {
    nn::Tensor m = data[i].mhi;
    if (m.dim(1) != cfg.window)
      throw ShapeError("motion history has " + std::to_string(m.dim(1)) + " rows, model expects " +
                       std::to_string(cfg.window));
    if (cfg.variant == Variant::kNoHeight)
      for (int r = 0; r < m.dim(1); ++r) m[static_cast<std::size_t>(r) * kMotionColumnSize + kHeightChannel] = 0.0;
    mhis.push_back(std::move(m));
    if (cfg.uses_shape()) {
      if (data[i].mask.width != cfg.image_size || data[i].mask.height != cfg.image_size)
        throw ShapeError("mask is " + std::to_string(data[i].mask.width) + "x" + std::to_string(data[i].mask.height) +
                         ", model expects " + std::to_string(cfg.image_size));
      masks.push_back(mask_tensor(data[i].mask));
    }
  }
  std::vector<const nn::Tensor*> p;
  for (const auto& t : mhis) p.push_back(&t);
  b.mhi = nn::stack(p).reshaped({static_cast<int>(idx.size()), 1, cfg.window, static_cast<int>(kMotionColumnSize)});
  if (cfg.uses_shape()) {
    p.clear();
    for (const auto& t : masks) p.push_back(&t);
    b.mask = nn::stack(p);
  }
  return b;
}

inline PoseVector row45(const nn::Tensor& t, std::size_t i) {
  return Eigen::Map<const PoseVector>(t.ptr(i));
}

inline HeadVector head_row(const Stage1Output& out, std::size_t i) {
  HeadVector h;
  h << Eigen::Map<const Vec3>(out.f.ptr(i)), Eigen::Map<const Vec3>(out.u.ptr(i));
  return h;
}

// Mean total loss over the batch; with grads, also the parameter gradients.
inline LossBreakdown stage1_objective(const Stage1Model& model, const std::vector<FrameSample>& data,
                                      const std::vector<std::size_t>& idx, const FisheyeIntrinsics& k,
                                      const TrainConfig& cfg, std::vector<nn::Tensor>* grads) {
  const Stage1Batch batch = stage1_batch(data, idx, model.config());
  Stage1Model::Pass pass;
  const Stage1Output out = model.forward(batch, grads ? &pass : nullptr);
  const int n = static_cast<int>(idx.size());
  nn::Tensor db({n, 45}), df({n, 3}), du({n, 3});
  LossBreakdown sum;
  const double inv = 1.0 / n;
  for (int i = 0; i < n; ++i) {
    const FrameSample& s = data[idx[static_cast<std::size_t>(i)]];
    std::optional<DistanceField> dist;
    if (cfg.consistency && !s.distance.empty()) dist = expand_distance(s.distance, s.mask.width, s.mask.height);
    LossTarget target{s.body, s.head, dist ? &*dist : nullptr};
    LossGradient g;
    detail::accumulate(sum, total_loss(row45(out.body, i), head_row(out, i), target, k, cfg.loss, Stage::kOne, grads ? &g : nullptr));
    if (grads) {
      Eigen::Map<PoseVector>(db.ptr(i)) = g.body * inv;
      Eigen::Map<Vec3>(df.ptr(i)) = g.head.head<3>() * inv;
      Eigen::Map<Vec3>(du.ptr(i)) = g.head.tail<3>() * inv;
    }
  }
  if (grads) model.backward(pass, db, df, du, *grads);
  return detail::scaled(sum, inv);
}

inline TrainResult train_stage1(Stage1Model& model, const std::vector<FrameSample>& data, const FisheyeIntrinsics& k,
                                const TrainConfig& cfg, std::ostream* log = nullptr) {
  auto params = model.params();
  const auto objective = [&](const std::vector<std::size_t>& idx, std::vector<nn::Tensor>* grads) {
    return stage1_objective(model, data, idx, k, cfg, grads);
  };
  const auto dump = [&](const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    nn::save_weights(out, model.describe(), params);
  };
  return detail::run_training(params, data.size(), cfg, objective, dump, log);
}

// Overfit one fixed batch: 500 annealed Adam steps must bring L_d under
// 0.02 with the total loss falling on each of the first ten steps.
struct SmokeResult {
  double final_d = 0.0;
  bool decreasing = false;
  bool passed = false;
  TrainResult run;
};

inline std::vector<FrameSample> spread_batch(const std::vector<FrameSample>& data, std::size_t size) {
  if (data.empty()) throw DataError("training set is empty");
  size = std::min(size, data.size());
  std::vector<FrameSample> out;
  for (std::size_t i = 0; i < size; ++i) out.push_back(data[i * data.size() / size]);
  return out;
}

inline SmokeResult overfit_smoke(Stage1Model& model, const std::vector<FrameSample>& batch, const FisheyeIntrinsics& k,
                                 TrainConfig cfg, int steps = 500, double lr = 3e-3) {
  cfg.epochs = steps;
  cfg.batch = static_cast<int>(batch.size());
  cfg.preflight = false;
  cfg.cosine_decay = true;
  cfg.time_limit_s = 0.0;
  cfg.optimizer.kind = nn::OptimizerKind::kAdam;
  cfg.optimizer.lr = lr;
  SmokeResult r;
  r.run = train_stage1(model, batch, k, cfg);
  std::vector<std::size_t> all(batch.size());
  std::iota(all.begin(), all.end(), 0);
  r.final_d = stage1_objective(model, batch, all, k, cfg, nullptr).d;
  r.decreasing = true;
  for (std::size_t e = 1; e < std::min<std::size_t>(10, r.run.epochs.size()); ++e)
    r.decreasing = r.decreasing && r.run.epochs[e].mean.total < r.run.epochs[e - 1].mean.total;
  r.passed = r.decreasing && r.final_d < 0.02;
  return r;
}

struct Stage1Prediction {
  PosePrediction pose;
  std::vector<double> motion_feature;
};

inline std::vector<Stage1Prediction> predict_stage1(const Stage1Model& model, const std::vector<FrameSample>& data,
                                                    int batch = 32) {
  std::vector<Stage1Prediction> out;
  out.reserve(data.size());
  for (std::size_t b = 0; b < data.size(); b += static_cast<std::size_t>(batch)) {
    std::vector<std::size_t> idx;
    for (std::size_t i = b; i < std::min(data.size(), b + batch); ++i) idx.push_back(i);
    const Stage1Output o = model.forward(stage1_batch(data, idx, model.config()));
    for (std::size_t j = 0; j < idx.size(); ++j) {
      Stage1Prediction p;
      p.pose.body = BodyPose::from_flat(row45(o.body, j));
      p.pose.head = HeadPose::from_flat(head_row(o, j));
      if (!o.motion_feature.data.empty())
        p.motion_feature.assign(o.motion_feature.ptr(j), o.motion_feature.ptr(j) + o.motion_feature.stride0());
      out.push_back(std::move(p));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stage 2

struct Stage2Sample {
  PoseVolume volume;
  std::vector<double> motion_feature;
  PoseVector initial_body = PoseVector::Zero();
  HeadVector head = HeadVector::Zero();  // Stage-1 estimate, held fixed
  PoseVector target_body = PoseVector::Zero();
  const FrameSample* source = nullptr;
};

// A Stage-1 head estimate that does not define a camera frame falls back to
// looking straight ahead.
inline HeadPose usable_head(const HeadPose& h) {
  if (camera_axes_from_head<double>(h.f, h.u)) return h;
  return HeadPose{};
}

inline std::vector<Stage2Sample> make_stage2_samples(const std::vector<FrameSample>& data,
                                                     const std::vector<Stage1Prediction>& stage1,
                                                     const FisheyeIntrinsics& k, const VolumeOptions& vol = {}) {
  if (data.size() != stage1.size()) throw DataError("stage-1 prediction count does not match samples");
  std::vector<Stage2Sample> out(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    Stage2Sample& s = out[i];
    const HeadPose h = usable_head(stage1[i].pose.head);
    s.volume = build_pose_volume(data[i].mask, h, k, vol);
    s.motion_feature = stage1[i].motion_feature;
    s.initial_body = stage1[i].pose.body.flat();
    s.head = h.flat();
    s.target_body = data[i].body;
    s.source = &data[i];
  });
  return out;
}

inline Stage2Batch stage2_batch(const std::vector<Stage2Sample>& data, const std::vector<std::size_t>& idx,
                                int motion_dim) {
  const int n = static_cast<int>(idx.size());
  const int r = data[idx[0]].volume.n;
  Stage2Batch b{nn::Tensor({n, 1, r, r, r}), nn::Tensor({n, motion_dim}), nn::Tensor({n, 45})};
  for (int i = 0; i < n; ++i) {
    const Stage2Sample& s = data[idx[static_cast<std::size_t>(i)]];
    if (s.volume.n != r) throw ShapeError("mixed volume resolutions in one batch");
    if (static_cast<int>(s.motion_feature.size()) != motion_dim)
      throw ShapeError("stage 2 needs a motion feature of size " + std::to_string(motion_dim));
    std::copy(s.volume.grid.begin(), s.volume.grid.end(), b.volume.ptr(i));
    std::copy(s.motion_feature.begin(), s.motion_feature.end(), b.motion_feature.ptr(i));
    Eigen::Map<PoseVector>(b.initial_body.ptr(i)) = s.initial_body;
  }
  return b;
}

inline LossBreakdown stage2_objective(const Stage2Model& model, const std::vector<Stage2Sample>& data,
                                      const std::vector<std::size_t>& idx, const FisheyeIntrinsics& k,
                                      const TrainConfig& cfg, std::vector<nn::Tensor>* grads) {
  const Stage2Batch batch = stage2_batch(data, idx, model.config().motion_dim);
  Stage2Model::Pass pass;
  const nn::Tensor out = model.forward(batch, grads ? &pass : nullptr);
  const int n = static_cast<int>(idx.size());
  nn::Tensor db({n, 45});
  LossBreakdown sum;
  const double inv = 1.0 / n;
  for (int i = 0; i < n; ++i) {
    const Stage2Sample& s = data[idx[static_cast<std::size_t>(i)]];
    std::optional<DistanceField> dist;
    if (cfg.consistency && s.source && !s.source->distance.empty())
      dist = expand_distance(s.source->distance, s.source->mask.width, s.source->mask.height);
    LossTarget target{s.target_body, s.head, dist ? &*dist : nullptr};
    LossGradient g;
    detail::accumulate(sum, total_loss(row45(out, i), s.head, target, k, cfg.loss, Stage::kTwo, grads ? &g : nullptr));
    if (grads) Eigen::Map<PoseVector>(db.ptr(i)) = g.body * inv;
  }
  if (grads) model.backward(pass, db, *grads);
  return detail::scaled(sum, inv);
}

inline TrainResult train_stage2(Stage2Model& model, const std::vector<Stage2Sample>& data, const FisheyeIntrinsics& k,
                                const TrainConfig& cfg, std::ostream* log = nullptr) {
  auto params = model.params();
  const auto objective = [&](const std::vector<std::size_t>& idx, std::vector<nn::Tensor>* grads) {
    return stage2_objective(model, data, idx, k, cfg, grads);
  };
  const auto dump = [&](const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    nn::save_weights(out, model.describe(), params);
  };
  return detail::run_training(params, data.size(), cfg, objective, dump, log);
}

inline std::vector<BodyPose> predict_stage2(const Stage2Model& model, const std::vector<Stage2Sample>& data,
                                            int batch = 32) {
  std::vector<BodyPose> out;
  out.reserve(data.size());
  for (std::size_t b = 0; b < data.size(); b += static_cast<std::size_t>(batch)) {
    std::vector<std::size_t> idx;
    for (std::size_t i = b; i < std::min(data.size(), b + batch); ++i) idx.push_back(i);
    const nn::Tensor o = model.forward(stage2_batch(data, idx, model.config().motion_dim));
    for (std::size_t j = 0; j < idx.size(); ++j) out.push_back(BodyPose::from_flat(row45(o, j)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation over samples

inline EvalReport evaluate_predictions(const std::string& method, const std::vector<FrameSample>& data,
                                       const std::vector<PosePrediction>& pred) {
  if (pred.size() != data.size()) throw DataError("prediction count does not match samples");
  EvalReport r;
  r.method = method;
  for (std::size_t i = 0; i < data.size(); ++i)
    r.add(data[i].sequence, data[i].frame, pred[i], data[i].body_pose(), data[i].head_pose());
  return r;
}

inline EvalReport evaluate_baseline(Baseline b, const std::vector<FrameSample>& data) {
  return evaluate_predictions(baseline_name(b), data, std::vector<PosePrediction>(data.size(), baseline_pose(b)));
}

inline std::vector<PosePrediction> poses_of(const std::vector<Stage1Prediction>& p) {
  std::vector<PosePrediction> out;
  out.reserve(p.size());
  for (const auto& x : p) out.push_back(x.pose);
  return out;
}

}  // namespace egospan
