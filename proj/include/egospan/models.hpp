#pragma once

// Network graphs: shape (segmentation) net, motion feature net, shape
// feature net with balancer, Stage-1 fusion heads, and the Stage-2 volume
// net with its residual refinement head.

#include <random>
#include <span>
#include <string>
#include <vector>

#include "egospan/losses.hpp"
#include "egospan/motionhist.hpp"
#include "egospan/nn/network.hpp"
#include "egospan/volume.hpp"

namespace egospan {

enum class Variant { kFused, kMotionOnly, kShapeOnly, kNoHeight };

inline constexpr std::array<std::pair<Variant, std::string_view>, 4> kVariantNames = {{
    {Variant::kFused, "fused"},
    {Variant::kMotionOnly, "motion_only"},
    {Variant::kShapeOnly, "shape_only"},
    {Variant::kNoHeight, "no_height"},
}};

inline std::string variant_name(Variant v) {
  for (const auto& [k, name] : kVariantNames)
    if (k == v) return std::string(name);
  return "unknown";
}

inline Variant parse_variant(const std::string& s) {
  std::string valid;
  for (const auto& [k, name] : kVariantNames) {
    if (name == s) return k;
    valid += (valid.empty() ? "" : ", ") + std::string(name);
  }
  throw ConfigError("unknown variant '" + s + "' (valid: " + valid + ")");
}

// Channel widths and feature sizes. Every value is a config key.
struct NetConfig {
  int image_size = 256;  // square mask / image side, divisible by 32
  int window = 64;       // motion history length T

  int motion_c1 = 16, motion_c2 = 32, motion_c3 = 32;
  int motion_dim = 512;

  int shape_pool = 4;  // max-pool applied to the mask before the first block
  int shape_c1 = 8, shape_c2 = 16, shape_c3 = 16;
  int balancer_hidden = 64;
  int balanced_dim = 16;

  int body_hidden = 128;
  int dir_hidden = 64;

  int seg_c1 = 8, seg_c2 = 16, seg_c3 = 16, seg_c4 = 8;
  bool coord_maps = true;

  int vol_c1 = 4, vol_c2 = 8, vol_c3 = 8;
  int vol_fc = 128;
  int refine_hidden = 128;

  Variant variant = Variant::kFused;

  void validate() const {
    if (image_size < 32 || image_size % 32 != 0) throw ConfigError("image_size must be a positive multiple of 32");
    if (image_size % (8 * shape_pool) != 0) throw ConfigError("image_size must be divisible by 8 * shape_pool");
    if (window < 4 || window % 4 != 0) throw ConfigError("window must be a positive multiple of 4");
    for (int v : {motion_c1, motion_c2, motion_c3, motion_dim, shape_pool, shape_c1, shape_c2, shape_c3,
                  balancer_hidden, balanced_dim, body_hidden, dir_hidden, seg_c1, seg_c2, seg_c3, seg_c4, vol_c1,
                  vol_c2, vol_c3, vol_fc, refine_hidden})
      if (v < 1) throw ConfigError("network widths must be positive");
  }

  bool uses_motion() const { return variant != Variant::kShapeOnly; }
  bool uses_shape() const { return variant != Variant::kMotionOnly; }
  // Shape-only has nothing to balance against and keeps a motion-sized feature.
  int shape_out_dim() const { return variant == Variant::kShapeOnly ? motion_dim : balanced_dim; }
  int fused_dim() const { return (uses_motion() ? motion_dim : 0) + (uses_shape() ? shape_out_dim() : 0); }
};

// ---------------------------------------------------------------------------
// Input tensors

// (T, 13) motion history as a (1, T, 13) single-channel image.
inline nn::Tensor mhi_tensor(const MotionHistoryImage& mhi, bool drop_height = false) {
  const int T = static_cast<int>(mhi.grid.rows());
  nn::Tensor t({1, T, static_cast<int>(kMotionColumnSize)});
  for (int r = 0; r < T; ++r)
    for (int c = 0; c < static_cast<int>(kMotionColumnSize); ++c)
      t[static_cast<std::size_t>(r) * kMotionColumnSize + c] =
          drop_height && c == static_cast<int>(kHeightChannel) ? 0.0 : mhi.grid(r, c);
  return t;
}

inline nn::Tensor mask_tensor(const ForegroundMask& m) {
  nn::Tensor t({1, m.height, m.width});
  for (std::size_t i = 0; i < m.data.size(); ++i) t[i] = m.data[i];
  return t;
}

inline ForegroundMask tensor_mask(const nn::Tensor& probs, std::size_t batch = 0, double level = 0.5) {
  const int h = probs.dim(probs.rank() - 2), w = probs.dim(probs.rank() - 1);
  ForegroundMask m(w, h);
  const double* p = probs.ptr(batch);
  for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] = p[i] > level ? 1 : 0;
  return m;
}

// Image channels in [0, 1], then x and y coordinate maps in (-1, 1).
inline nn::Tensor shape_net_input(const RgbImage& img, bool coord_maps = true) {
  const int w = img.width, h = img.height;
  nn::Tensor t({coord_maps ? 5 : 3, h, w});
  const std::size_t plane = static_cast<std::size_t>(w) * h;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      for (int c = 0; c < 3; ++c) t[c * plane + i] = img.value(x, y, c);
      if (coord_maps) {
        t[3 * plane + i] = 2.0 * (x + 0.5) / w - 1.0;
        t[4 * plane + i] = 2.0 * (y + 0.5) / h - 1.0;
      }
    }
  return t;
}

inline nn::Tensor volume_tensor(const PoseVolume& v) {
  nn::Tensor t({1, v.n, v.n, v.n});
  for (std::size_t i = 0; i < v.grid.size(); ++i) t[i] = v.grid[i];
  return t;
}

// ---------------------------------------------------------------------------
// Shape net: encoder at 1/4 and 1/8 scale, the coarse branch upsampled and
// concatenated with the fine one, then a 1x1 logit layer upsampled to the
// input size.

class ShapeNet {
 public:
  explicit ShapeNet(const NetConfig& cfg = {}) : cfg_(cfg) {
    cfg_.validate();
    const int s = cfg_.image_size;
    enc1_.add<nn::Conv2d>(cfg_.coord_maps ? 5 : 3, cfg_.seg_c1, 3, 2, 1);
    enc1_.add<nn::ReLU>();
    enc1_.add<nn::MaxPool2d>(2);
    enc2_.add<nn::Conv2d>(cfg_.seg_c1, cfg_.seg_c2, 3, 1, 1);
    enc2_.add<nn::ReLU>();
    enc2_.add<nn::MaxPool2d>(2);
    enc2_.add<nn::Conv2d>(cfg_.seg_c2, cfg_.seg_c3, 3, 1, 1);
    enc2_.add<nn::ReLU>();
    enc2_.add<nn::BilinearUpsample>(s / 4, s / 4);
    dec_.add<nn::Conv2d>(cfg_.seg_c1 + cfg_.seg_c3, cfg_.seg_c4, 3, 1, 1);
    dec_.add<nn::ReLU>();
    dec_.add<nn::Conv2d>(cfg_.seg_c4, 1, 1);
    dec_.add<nn::BilinearUpsample>(s, s);
  }

  const NetConfig& config() const { return cfg_; }

  void init(std::mt19937_64& rng) {
    enc1_.init(rng);
    enc2_.init(rng);
    dec_.init(rng);
  }

  struct Pass {
    nn::Tape enc1, enc2, dec;
  };

  // Logits (N, 1, H, W).
  nn::Tensor logits(const nn::Tensor& x, Pass* pass = nullptr) const {
    const nn::Tensor a = enc1_.forward(x, pass ? &pass->enc1 : nullptr);
    const nn::Tensor b = enc2_.forward(a, pass ? &pass->enc2 : nullptr);
    return dec_.forward(nn::concat(a, b), pass ? &pass->dec : nullptr);
  }

  nn::Tensor probabilities(const nn::Tensor& x) const { return nn::Sigmoid().forward(logits(x)); }

  void backward(const Pass& pass, const nn::Tensor& dlogits, std::span<nn::Tensor> grads) const {
    const std::size_t n1 = enc1_.param_tensor_count(), n2 = enc2_.param_tensor_count();
    const nn::Tensor dcat = dec_.backward(pass.dec, dlogits, grads.subspan(n1 + n2));
    auto [da, db] = nn::split(dcat, cfg_.seg_c1);
    const nn::Tensor da2 = enc2_.backward(pass.enc2, db, grads.subspan(n1, n2));
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += da2[i];
    enc1_.backward(pass.enc1, da, grads.subspan(0, n1));
  }

  nn::ParamList params() {
    nn::ParamList p = enc1_.params();
    nn::append(p, enc2_.params());
    nn::append(p, dec_.params());
    return p;
  }

  std::vector<std::string> describe() const {
    std::vector<std::string> d = {"shape_net coord_maps=" + std::to_string(cfg_.coord_maps) +
                                  " size=" + std::to_string(cfg_.image_size)};
    for (const auto* s : {&enc1_, &enc2_, &dec_})
      for (auto& l : s->describe()) d.push_back(l);
    return d;
  }

  // The 1x1 logit layer; zeroing it gives probability 0.5 everywhere.
  void zero_output_layer() {
    auto& conv = static_cast<nn::Conv2d&>(dec_.layer(2));
    conv.weight().fill(0.0);
    conv.bias().fill(0.0);
  }

 private:
  NetConfig cfg_;
  nn::Sequential enc1_{"seg_enc1"}, enc2_{"seg_enc2"}, dec_{"seg_dec"};
};

// ---------------------------------------------------------------------------
// Stage 1

struct Stage1Batch {
  nn::Tensor mhi;   // (N, 1, T, 13)
  nn::Tensor mask;  // (N, 1, H, W)
};

struct Stage1Output {
  nn::Tensor body;            // (N, 45)
  nn::Tensor f, u;            // (N, 3)
  nn::Tensor motion_feature;  // (N, motion_dim), empty for shape-only
};

class Stage1Model {
 public:
  explicit Stage1Model(const NetConfig& cfg = {}) : cfg_(cfg) {
    cfg_.validate();
    if (cfg_.uses_motion()) {
      const int t4 = cfg_.window / 4;
      motion_.add<nn::Conv2d>(1, cfg_.motion_c1, 3, 1, 1);
      motion_.add<nn::ReLU>();
      motion_.add<nn::MaxPool2d>(2);
      motion_.add<nn::Conv2d>(cfg_.motion_c1, cfg_.motion_c2, 3, 1, 1);
      motion_.add<nn::ReLU>();
      motion_.add<nn::MaxPool2d>(2);
      motion_.add<nn::Conv2d>(cfg_.motion_c2, cfg_.motion_c3, 3, 1, 1);
      motion_.add<nn::ReLU>();
      motion_.add<nn::Flatten>();
      motion_.add<nn::Linear>(cfg_.motion_c3 * t4 * 3, cfg_.motion_dim);
      motion_.add<nn::ReLU>();
    }
    if (cfg_.uses_shape()) {
      const int side = cfg_.image_size / cfg_.shape_pool / 8;
      shape_.add<nn::MaxPool2d>(cfg_.shape_pool);
      for (auto [cin, cout] : {std::pair{1, cfg_.shape_c1}, std::pair{cfg_.shape_c1, cfg_.shape_c2},
                               std::pair{cfg_.shape_c2, cfg_.shape_c3}}) {
        shape_.add<nn::Conv2d>(cin, cout, 3, 1, 1);
        shape_.add<nn::ReLU>();
        shape_.add<nn::MaxPool2d>(2);
      }
      shape_.add<nn::Flatten>();
      balancer_.add<nn::Linear>(cfg_.shape_c3 * side * side, cfg_.balancer_hidden);
      balancer_.add<nn::ReLU>();
      balancer_.add<nn::Linear>(cfg_.balancer_hidden, cfg_.shape_out_dim());
    }
    const int in = cfg_.fused_dim();
    body_.add<nn::Linear>(in, cfg_.body_hidden);
    body_.add<nn::ReLU>();
    body_.add<nn::Linear>(cfg_.body_hidden, 3 * static_cast<int>(kNumKeypoints));
    for (auto* h : {&f_, &u_}) {
      h->add<nn::Linear>(in, cfg_.dir_hidden);
      h->add<nn::ReLU>();
      h->add<nn::Linear>(cfg_.dir_hidden, 3);
    }
  }

  const NetConfig& config() const { return cfg_; }

  void init(std::mt19937_64& rng) {
    for (auto* s : nets()) s->init(rng);
  }

  struct Pass {
    nn::Tape motion, shape, balancer, body, f, u;
  };

  Stage1Output forward(const Stage1Batch& in, Pass* pass = nullptr) const {
    Stage1Output out;
    nn::Tensor fused;
    if (cfg_.uses_motion()) {
      out.motion_feature = motion_.forward(in.mhi, pass ? &pass->motion : nullptr);
      fused = out.motion_feature;
    }
    if (cfg_.uses_shape()) {
      const nn::Tensor raw = shape_.forward(in.mask, pass ? &pass->shape : nullptr);
      const nn::Tensor balanced = balancer_.forward(raw, pass ? &pass->balancer : nullptr);
      fused = fused.data.empty() ? balanced : nn::concat(fused, balanced);
    }
    out.body = body_.forward(fused, pass ? &pass->body : nullptr);
    out.f = f_.forward(fused, pass ? &pass->f : nullptr);
    out.u = u_.forward(fused, pass ? &pass->u : nullptr);
    return out;
  }

  // grads is aligned with params().
  void backward(const Pass& pass, const nn::Tensor& d_body, const nn::Tensor& d_f, const nn::Tensor& d_u,
                std::span<nn::Tensor> grads) const {
    std::vector<std::size_t> offsets{0};
    for (const auto* s : nets()) offsets.push_back(offsets.back() + s->param_tensor_count());
    const auto slice = [&](std::size_t i) { return grads.subspan(offsets[i], offsets[i + 1] - offsets[i]); };
    nn::Tensor dfused = body_.backward(pass.body, d_body, slice(3));
    const nn::Tensor dff = f_.backward(pass.f, d_f, slice(4));
    const nn::Tensor dfu = u_.backward(pass.u, d_u, slice(5));
    for (std::size_t i = 0; i < dfused.size(); ++i) dfused[i] += dff[i] + dfu[i];
    nn::Tensor dmotion, dshape;
    if (cfg_.uses_motion() && cfg_.uses_shape()) {
      std::tie(dmotion, dshape) = nn::split(dfused, cfg_.motion_dim);
    } else if (cfg_.uses_motion()) {
      dmotion = dfused;
    } else {
      dshape = dfused;
    }
    if (cfg_.uses_motion()) motion_.backward(pass.motion, dmotion, slice(0));
    if (cfg_.uses_shape()) {
      const nn::Tensor draw = balancer_.backward(pass.balancer, dshape, slice(2));
      shape_.backward(pass.shape, draw, slice(1));
    }
  }

  nn::ParamList params() {
    nn::ParamList p;
    for (auto* s : nets()) nn::append(p, s->params());
    return p;
  }

  std::vector<std::string> describe() const {
    std::vector<std::string> d = {"stage1 variant=" + variant_name(cfg_.variant) +
                                  " window=" + std::to_string(cfg_.window) +
                                  " size=" + std::to_string(cfg_.image_size)};
    for (const auto* s : nets())
      for (auto& l : s->describe()) d.push_back(l);
    return d;
  }

  // Zeroes the balancer's output layer: the heads then see a constant shape
  // feature and the output no longer depends on the mask.
  void zero_balancer_output() {
    if (cfg_.uses_shape()) balancer_.zero_last_linear();
  }

 private:
  std::array<nn::Sequential*, 6> nets() { return {&motion_, &shape_, &balancer_, &body_, &f_, &u_}; }
  std::array<const nn::Sequential*, 6> nets() const { return {&motion_, &shape_, &balancer_, &body_, &f_, &u_}; }

  NetConfig cfg_;
  nn::Sequential motion_{"motion"}, shape_{"shape"}, balancer_{"balancer"}, body_{"body"}, f_{"f"}, u_{"u"};
};

// ---------------------------------------------------------------------------
// Stage 2

struct Stage2Batch {
  nn::Tensor volume;          // (N, 1, n, n, n)
  nn::Tensor motion_feature;  // (N, motion_dim)
  nn::Tensor initial_body;    // (N, 45)
};

// refined = initial + correction; the correction layer starts at zero, so an
// untrained Stage 2 returns the Stage-1 body unchanged.
class Stage2Model {
 public:
  explicit Stage2Model(const NetConfig& cfg = {}, int volume_resolution = 41) : cfg_(cfg), n_(volume_resolution) {
    cfg_.validate();
    int side = n_;
    int cin = 1;
    for (int cout : {cfg_.vol_c1, cfg_.vol_c2, cfg_.vol_c3}) {
      volume_.add<nn::Conv3d>(cin, cout, 3, 2, 1);
      volume_.add<nn::ReLU>();
      side = (side - 1) / 2 + 1;
      cin = cout;
    }
    volume_.add<nn::Flatten>();
    volume_.add<nn::Linear>(cfg_.vol_c3 * side * side * side, cfg_.vol_fc);
    volume_.add<nn::ReLU>();
    refine_.add<nn::Linear>(cfg_.vol_fc + cfg_.motion_dim + 3 * static_cast<int>(kNumKeypoints), cfg_.refine_hidden);
    refine_.add<nn::ReLU>();
    refine_.add<nn::Linear>(cfg_.refine_hidden, 3 * static_cast<int>(kNumKeypoints));
  }

  const NetConfig& config() const { return cfg_; }
  int volume_resolution() const { return n_; }

  void init(std::mt19937_64& rng) {
    volume_.init(rng);
    refine_.init(rng);
    refine_.zero_last_linear();
  }

  struct Pass {
    nn::Tape volume, refine;
  };

  nn::Tensor forward(const Stage2Batch& in, Pass* pass = nullptr) const {
    const nn::Tensor v = volume_.forward(in.volume, pass ? &pass->volume : nullptr);
    nn::Tensor correction =
        refine_.forward(nn::concat(nn::concat(v, in.motion_feature), in.initial_body), pass ? &pass->refine : nullptr);
    nn::expect_shape(in.initial_body, correction.shape, "stage2 initial body");
    for (std::size_t i = 0; i < correction.size(); ++i) correction[i] += in.initial_body[i];
    return correction;
  }

  void backward(const Pass& pass, const nn::Tensor& d_body, std::span<nn::Tensor> grads) const {
    const std::size_t nv = volume_.param_tensor_count();
    const nn::Tensor dcat = refine_.backward(pass.refine, d_body, grads.subspan(nv));
    volume_.backward(pass.volume, nn::split(dcat, cfg_.vol_fc).first, grads.subspan(0, nv));
  }

  nn::ParamList params() {
    nn::ParamList p = volume_.params();
    nn::append(p, refine_.params());
    return p;
  }

  std::vector<std::string> describe() const {
    std::vector<std::string> d = {"stage2 volume=" + std::to_string(n_)};
    for (const auto* s : {&volume_, &refine_})
      for (auto& l : s->describe()) d.push_back(l);
    return d;
  }

  void zero_volume_net() {
    for (auto& p : volume_.params()) p.value->fill(0.0);
  }

 private:
  NetConfig cfg_;
  int n_;
  nn::Sequential volume_{"volume"}, refine_{"refine"};
};

}  // namespace egospan
