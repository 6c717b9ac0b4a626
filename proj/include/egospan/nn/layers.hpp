#pragma once

// Layers with explicit forward, backward (vector-Jacobian) and jvp
// (Jacobian-vector, with respect to the input) passes. Layers hold only
// parameters, so a trained network can be shared read-only across threads.

#include <array>
#include <cmath>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "egospan/nn/tensor.hpp"

namespace egospan::nn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string describe() const = 0;
  virtual Shape output_shape(const Shape& in) const = 0;
  virtual Tensor forward(const Tensor& x) const = 0;
  // Returns dL/dx and adds dL/dparam into pgrads (same order as params()).
  virtual Tensor backward(const Tensor& x, const Tensor& y, const Tensor& dy, std::span<Tensor> pgrads) const = 0;
  virtual Tensor jvp(const Tensor& x, const Tensor& v) const = 0;
  virtual std::vector<Tensor*> params() { return {}; }
  virtual std::vector<std::string> param_names() const { return {}; }

  std::vector<const Tensor*> params() const {
    auto p = const_cast<Layer*>(this)->params();
    return {p.begin(), p.end()};
  }
};

namespace detail {

// 3D window geometry; 2D layers use a unit depth with kernel 1.
struct Window {
  std::array<int, 3> in{}, k{}, s{}, p{}, out{};

  static Window make(std::array<int, 3> in, std::array<int, 3> k, std::array<int, 3> s, std::array<int, 3> p) {
    Window w{in, k, s, p, {}};
    for (int a = 0; a < 3; ++a) {
      const int span = in[a] + 2 * p[a] - k[a];
      if (span < 0 || s[a] < 1) throw ShapeError("window larger than padded input");
      w.out[a] = span / s[a] + 1;
    }
    return w;
  }
  int in_size() const { return in[0] * in[1] * in[2]; }
  int out_size() const { return out[0] * out[1] * out[2]; }
  int k_size() const { return k[0] * k[1] * k[2]; }
};

// cols is (channels * k_size) x out_size, row-major.
inline void im2col(const double* x, int channels, const Window& w, double* cols) {
  const int P = w.out_size();
  for (int c = 0; c < channels; ++c)
    for (int kz = 0; kz < w.k[0]; ++kz)
      for (int ky = 0; ky < w.k[1]; ++ky)
        for (int kx = 0; kx < w.k[2]; ++kx) {
          double* row = cols + static_cast<std::size_t>(((c * w.k[0] + kz) * w.k[1] + ky) * w.k[2] + kx) * P;
          const double* xc = x + static_cast<std::size_t>(c) * w.in_size();
          for (int oz = 0; oz < w.out[0]; ++oz) {
            const int iz = oz * w.s[0] - w.p[0] + kz;
            for (int oy = 0; oy < w.out[1]; ++oy) {
              const int iy = oy * w.s[1] - w.p[1] + ky;
              double* dst = row + (oz * w.out[1] + oy) * w.out[2];
              if (iz < 0 || iz >= w.in[0] || iy < 0 || iy >= w.in[1]) {
                std::fill(dst, dst + w.out[2], 0.0);
                continue;
              }
              const double* src = xc + (iz * w.in[1] + iy) * w.in[2];
              for (int ox = 0; ox < w.out[2]; ++ox) {
                const int ix = ox * w.s[2] - w.p[2] + kx;
                dst[ox] = (ix >= 0 && ix < w.in[2]) ? src[ix] : 0.0;
              }
            }
          }
        }
}

inline void col2im(const double* cols, int channels, const Window& w, double* x) {
  const int P = w.out_size();
  for (int c = 0; c < channels; ++c)
    for (int kz = 0; kz < w.k[0]; ++kz)
      for (int ky = 0; ky < w.k[1]; ++ky)
        for (int kx = 0; kx < w.k[2]; ++kx) {
          const double* row =
              cols + static_cast<std::size_t>(((c * w.k[0] + kz) * w.k[1] + ky) * w.k[2] + kx) * P;
          double* xc = x + static_cast<std::size_t>(c) * w.in_size();
          for (int oz = 0; oz < w.out[0]; ++oz) {
            const int iz = oz * w.s[0] - w.p[0] + kz;
            if (iz < 0 || iz >= w.in[0]) continue;
            for (int oy = 0; oy < w.out[1]; ++oy) {
              const int iy = oy * w.s[1] - w.p[1] + ky;
              if (iy < 0 || iy >= w.in[1]) continue;
              const double* src = row + (oz * w.out[1] + oy) * w.out[2];
              double* dst = xc + (iz * w.in[1] + iy) * w.in[2];
              for (int ox = 0; ox < w.out[2]; ++ox) {
                const int ix = ox * w.s[2] - w.p[2] + kx;
                if (ix >= 0 && ix < w.in[2]) dst[ix] += src[ox];
              }
            }
          }
        }
}

}  // namespace detail

// Convolution over 2 or 3 spatial dimensions with cubic kernels.
template <int D>
class Conv : public Layer {
  static_assert(D == 2 || D == 3);

 public:
  Conv(int in_channels, int out_channels, int kernel, int stride = 1, int padding = 0)
      : cin_(in_channels), cout_(out_channels), k_(kernel), s_(stride), p_(padding),
        weight_(weight_shape()), bias_(Shape{out_channels}) {
    if (cin_ < 1 || cout_ < 1 || k_ < 1 || s_ < 1 || p_ < 0) throw ConfigError("bad convolution hyperparameters");
  }

  void init(std::mt19937_64& rng) {
    weight_ = random_normal(weight_shape(), rng, std::sqrt(2.0 / fan_in()));
    bias_.fill(0.0);
  }

  std::string describe() const override {
    return "conv" + std::to_string(D) + "d " + std::to_string(cin_) + " " + std::to_string(cout_) + " k" +
           std::to_string(k_) + " s" + std::to_string(s_) + " p" + std::to_string(p_);
  }

  Shape output_shape(const Shape& in) const override {
    check_input(in);
    const auto w = window(in);
    Shape out{in[0], cout_};
    for (int a = 3 - D; a < 3; ++a) out.push_back(w.out[a]);
    return out;
  }

  Tensor forward(const Tensor& x) const override {
    Tensor y(output_shape(x.shape));
    const auto w = window(x.shape);
    const int K = fan_in(), P = w.out_size();
    Buffer cols(static_cast<std::size_t>(K) * P);
    ConstMatrixMap W(weight_.data.data(), cout_, K);
    for (int n = 0; n < x.dim(0); ++n) {
      detail::im2col(x.ptr(n), cin_, w, cols.data());
      MatrixMap out(y.ptr(n), cout_, P);
      out.noalias() = W * ConstMatrixMap(cols.data(), K, P);
      out.colwise() += bias_.vec();
    }
    return y;
  }

  Tensor backward(const Tensor& x, const Tensor&, const Tensor& dy, std::span<Tensor> pgrads) const override {
    expect_shape(dy, output_shape(x.shape), "conv backward");
    const auto w = window(x.shape);
    const int K = fan_in(), P = w.out_size();
    Buffer cols(static_cast<std::size_t>(K) * P);
    ConstMatrixMap W(weight_.data.data(), cout_, K);
    MatrixMap dW(pgrads[0].data.data(), cout_, K);
    Tensor dx(x.shape);
    for (int n = 0; n < x.dim(0); ++n) {
      ConstMatrixMap g(dy.ptr(n), cout_, P);
      detail::im2col(x.ptr(n), cin_, w, cols.data());
      dW.noalias() += g * ConstMatrixMap(cols.data(), K, P).transpose();
      pgrads[1].vec() += g.rowwise().sum();
      MatrixMap(cols.data(), K, P).noalias() = W.transpose() * g;
      detail::col2im(cols.data(), cin_, w, dx.ptr(n));
    }
    return dx;
  }

  Tensor jvp(const Tensor& x, const Tensor& v) const override {
    expect_shape(v, x.shape, "conv jvp");
    Tensor y = forward(v);
    const std::size_t per = y.stride0() / cout_;
    for (int n = 0; n < y.dim(0); ++n)
      for (int c = 0; c < cout_; ++c)
        for (std::size_t i = 0; i < per; ++i) y.ptr(n)[c * per + i] -= bias_[c];
    return y;
  }

  std::vector<Tensor*> params() override { return {&weight_, &bias_}; }
  std::vector<std::string> param_names() const override { return {"weight", "bias"}; }
  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }

 private:
  Shape weight_shape() const {
    Shape s{cout_, cin_};
    for (int a = 0; a < D; ++a) s.push_back(k_);
    return s;
  }
  int fan_in() const { return cin_ * static_cast<int>(std::pow(k_, D)); }
  void check_input(const Shape& in) const {
    if (static_cast<int>(in.size()) != D + 2 || in[1] != cin_) {
      Shape want{-1, cin_};
      for (int a = 0; a < D; ++a) want.push_back(-1);
      throw ShapeError(describe() + ": expected input " + shape_string(want) + ", got " + shape_string(in));
    }
  }
  detail::Window window(const Shape& in) const {
    if constexpr (D == 2)
      return detail::Window::make({1, in[2], in[3]}, {1, k_, k_}, {1, s_, s_}, {0, p_, p_});
    else
      return detail::Window::make({in[2], in[3], in[4]}, {k_, k_, k_}, {s_, s_, s_}, {p_, p_, p_});
  }

  int cin_, cout_, k_, s_, p_;
  Tensor weight_, bias_;
};

using Conv2d = Conv<2>;
using Conv3d = Conv<3>;

// Fully connected; any input rank >= 2 is flattened per batch entry.
class Linear : public Layer {
 public:
  Linear(int in, int out) : in_(in), out_(out), weight_(Shape{out, in}), bias_(Shape{out}) {
    if (in < 1 || out < 1) throw ConfigError("bad linear layer size");
  }

  void init(std::mt19937_64& rng, double gain = 2.0) {
    weight_ = random_normal({out_, in_}, rng, std::sqrt(gain / in_));
    bias_.fill(0.0);
  }

  std::string describe() const override { return "fc " + std::to_string(in_) + " " + std::to_string(out_); }

  Shape output_shape(const Shape& in) const override {
    if (in.size() < 2 || shape_size(in) / in[0] != static_cast<std::size_t>(in_))
      throw ShapeError(describe() + ": expected " + std::to_string(in_) + " features per sample, got " +
                       shape_string(in));
    return {in[0], out_};
  }

  Tensor forward(const Tensor& x) const override {
    Tensor y(output_shape(x.shape));
    MatrixMap out(y.data.data(), x.dim(0), out_);
    out.noalias() = ConstMatrixMap(x.data.data(), x.dim(0), in_) * W().transpose();
    out.rowwise() += bias_.vec().transpose();
    return y;
  }

  Tensor backward(const Tensor& x, const Tensor&, const Tensor& dy, std::span<Tensor> pgrads) const override {
    expect_shape(dy, output_shape(x.shape), "fc backward");
    ConstMatrixMap g(dy.data.data(), x.dim(0), out_);
    MatrixMap(pgrads[0].data.data(), out_, in_).noalias() += g.transpose() * ConstMatrixMap(x.data.data(), x.dim(0), in_);
    pgrads[1].vec() += g.colwise().sum().transpose();
    Tensor dx(x.shape);
    MatrixMap(dx.data.data(), x.dim(0), in_).noalias() = g * W();
    return dx;
  }

  Tensor jvp(const Tensor& x, const Tensor& v) const override {
    expect_shape(v, x.shape, "fc jvp");
    Tensor y(output_shape(x.shape));
    MatrixMap(y.data.data(), x.dim(0), out_).noalias() = ConstMatrixMap(v.data.data(), x.dim(0), in_) * W().transpose();
    return y;
  }

  std::vector<Tensor*> params() override { return {&weight_, &bias_}; }
  std::vector<std::string> param_names() const override { return {"weight", "bias"}; }
  Tensor& weight() { return weight_; }
  Tensor& bias() { return bias_; }

 private:
  ConstMatrixMap W() const { return {weight_.data.data(), out_, in_}; }

  int in_, out_;
  Tensor weight_, bias_;
};

// Max pooling over the last two axes; padded cells never win.
class MaxPool2d : public Layer {
 public:
  explicit MaxPool2d(int kernel, int stride = -1, int padding = 0)
      : k_(kernel), s_(stride < 0 ? kernel : stride), p_(padding) {
    if (k_ < 1 || s_ < 1 || p_ < 0 || 2 * p_ > k_) throw ConfigError("bad max-pool hyperparameters");
  }

  std::string describe() const override {
    return "maxpool2d k" + std::to_string(k_) + " s" + std::to_string(s_) + " p" + std::to_string(p_);
  }

  Shape output_shape(const Shape& in) const override {
    if (in.size() != 4) throw ShapeError(describe() + ": expected rank 4 input, got " + shape_string(in));
    const auto w = window(in);
    return {in[0], in[1], w.out[1], w.out[2]};
  }

  Tensor forward(const Tensor& x) const override {
    Tensor y(output_shape(x.shape));
    visit(x, [&](std::size_t out, std::size_t src) { y[out] = x[src]; });
    return y;
  }

  Tensor backward(const Tensor& x, const Tensor&, const Tensor& dy, std::span<Tensor>) const override {
    expect_shape(dy, output_shape(x.shape), "maxpool backward");
    Tensor dx(x.shape);
    visit(x, [&](std::size_t out, std::size_t src) { dx[src] += dy[out]; });
    return dx;
  }

  Tensor jvp(const Tensor& x, const Tensor& v) const override {
    expect_shape(v, x.shape, "maxpool jvp");
    Tensor y(output_shape(x.shape));
    visit(x, [&](std::size_t out, std::size_t src) { y[out] = v[src]; });
    return y;
  }

 private:
  detail::Window window(const Shape& in) const {
    return detail::Window::make({1, in[2], in[3]}, {1, k_, k_}, {1, s_, s_}, {0, p_, p_});
  }

  // Calls fn(output index, argmax input index); ties go to the first cell.
  template <typename Fn>
  void visit(const Tensor& x, Fn&& fn) const {
    const auto w = window(x.shape);
    const int H = w.in[1], Wd = w.in[2], OH = w.out[1], OW = w.out[2];
    const std::size_t planes = static_cast<std::size_t>(x.dim(0)) * x.dim(1);
    for (std::size_t pl = 0; pl < planes; ++pl) {
      const std::size_t base = pl * H * Wd;
      for (int oy = 0; oy < OH; ++oy)
        for (int ox = 0; ox < OW; ++ox) {
          std::size_t best = 0;
          double best_v = -INFINITY;
          bool found = false;
          for (int ky = 0; ky < k_; ++ky) {
            const int iy = oy * s_ - p_ + ky;
            if (iy < 0 || iy >= H) continue;
            for (int kx = 0; kx < k_; ++kx) {
              const int ix = ox * s_ - p_ + kx;
              if (ix < 0 || ix >= Wd) continue;
              const std::size_t idx = base + static_cast<std::size_t>(iy) * Wd + ix;
              if (!found || x[idx] > best_v) {
                best = idx;
                best_v = x[idx];
                found = true;
              }
            }
          }
          fn((pl * OH + oy) * OW + ox, best);
        }
    }
  }

  int k_, s_, p_;
};

class ReLU : public Layer {
 public:
  std::string describe() const override { return "relu"; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor forward(const Tensor& x) const override {
    Tensor y = x;
    for (auto& v : y.data) v = v > 0.0 ? v : 0.0;
    return y;
  }
  Tensor backward(const Tensor& x, const Tensor&, const Tensor& dy, std::span<Tensor>) const override {
    expect_shape(dy, x.shape, "relu backward");
    Tensor dx(x.shape);
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
    return dx;
  }
  Tensor jvp(const Tensor& x, const Tensor& v) const override { return backward(x, x, v, {}); }
};

class Sigmoid : public Layer {
 public:
  static double eval(double v) { return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); }

  std::string describe() const override { return "sigmoid"; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor forward(const Tensor& x) const override {
    Tensor y = x;
    for (auto& v : y.data) v = eval(v);
    return y;
  }
  Tensor backward(const Tensor& x, const Tensor& y, const Tensor& dy, std::span<Tensor>) const override {
    expect_shape(dy, x.shape, "sigmoid backward");
    Tensor dx(x.shape);
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] = dy[i] * y[i] * (1.0 - y[i]);
    return dx;
  }
  Tensor jvp(const Tensor& x, const Tensor& v) const override { return backward(x, forward(x), v, {}); }
};

// Bilinear resize of the last two axes, align_corners = false: output pixel
// centers map to input coordinate (o + 0.5) * in / out - 0.5, clamped at 0.
class BilinearUpsample : public Layer {
 public:
  BilinearUpsample(int out_h, int out_w) : oh_(out_h), ow_(out_w) {
    if (oh_ < 1 || ow_ < 1) throw ConfigError("bad upsample target");
  }

  std::string describe() const override { return "upsample " + std::to_string(oh_) + " " + std::to_string(ow_); }
  Shape output_shape(const Shape& in) const override {
    if (in.size() != 4) throw ShapeError(describe() + ": expected rank 4 input, got " + shape_string(in));
    return {in[0], in[1], oh_, ow_};
  }

  Tensor forward(const Tensor& x) const override {
    Tensor y(output_shape(x.shape));
    visit(x.shape, [&](std::size_t out, std::size_t src, double wgt) { y[out] += wgt * x[src]; });
    return y;
  }
  Tensor backward(const Tensor& x, const Tensor&, const Tensor& dy, std::span<Tensor>) const override {
    expect_shape(dy, output_shape(x.shape), "upsample backward");
    Tensor dx(x.shape);
    visit(x.shape, [&](std::size_t out, std::size_t src, double wgt) { dx[src] += wgt * dy[out]; });
    return dx;
  }
  Tensor jvp(const Tensor& x, const Tensor& v) const override {
    expect_shape(v, x.shape, "upsample jvp");
    return forward(v);
  }

 private:
  struct Tap {
    int i0, i1;
    double w1;
  };
  static std::vector<Tap> taps(int in, int out) {
    std::vector<Tap> t(static_cast<std::size_t>(out));
    const double scale = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
      const double src = std::max(0.0, (o + 0.5) * scale - 0.5);
      const int i0 = std::min(static_cast<int>(src), in - 1);
      t[o] = {i0, std::min(i0 + 1, in - 1), src - i0};
    }
    return t;
  }

  template <typename Fn>
  void visit(const Shape& in, Fn&& fn) const {
    const int H = in[2], W = in[3];
    const auto ty = taps(H, oh_), tx = taps(W, ow_);
    const std::size_t planes = static_cast<std::size_t>(in[0]) * in[1];
    for (std::size_t pl = 0; pl < planes; ++pl) {
      const std::size_t ib = pl * H * W, ob = pl * oh_ * ow_;
      for (int oy = 0; oy < oh_; ++oy)
        for (int ox = 0; ox < ow_; ++ox) {
          const std::size_t out = ob + static_cast<std::size_t>(oy) * ow_ + ox;
          const Tap& a = ty[oy];
          const Tap& b = tx[ox];
          fn(out, ib + static_cast<std::size_t>(a.i0) * W + b.i0, (1 - a.w1) * (1 - b.w1));
          fn(out, ib + static_cast<std::size_t>(a.i0) * W + b.i1, (1 - a.w1) * b.w1);
          fn(out, ib + static_cast<std::size_t>(a.i1) * W + b.i0, a.w1 * (1 - b.w1));
          fn(out, ib + static_cast<std::size_t>(a.i1) * W + b.i1, a.w1 * b.w1);
        }
    }
  }

  int oh_, ow_;
};

// Reshape to (batch, features).
class Flatten : public Layer {
 public:
  std::string describe() const override { return "flatten"; }
  Shape output_shape(const Shape& in) const override {
    if (in.empty() || in[0] == 0) throw ShapeError("flatten of " + shape_string(in));
    return {in[0], static_cast<int>(shape_size(in) / in[0])};
  }
  Tensor forward(const Tensor& x) const override { return x.reshaped(output_shape(x.shape)); }
  Tensor backward(const Tensor& x, const Tensor&, const Tensor& dy, std::span<Tensor>) const override {
    return dy.reshaped(x.shape);
  }
  Tensor jvp(const Tensor& x, const Tensor& v) const override { return v.reshaped(output_shape(x.shape)); }
};

}  // namespace egospan::nn
