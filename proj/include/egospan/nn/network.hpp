#pragma once

// Layer chains and the flat parameter lists that optimizers, gradient checks
// and weight files work on.

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "egospan/nn/layers.hpp"

namespace egospan::nn {

struct ParamRef {
  std::string name;
  Tensor* value = nullptr;
};
using ParamList = std::vector<ParamRef>;

inline std::vector<Tensor> zeros_like(const ParamList& params) {
  std::vector<Tensor> g;
  g.reserve(params.size());
  for (const auto& p : params) g.emplace_back(p.value->shape);
  return g;
}

inline std::size_t scalar_count(const ParamList& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.value->size();
  return n;
}

inline void append(ParamList& to, const ParamList& from) { to.insert(to.end(), from.begin(), from.end()); }

// Activations of one forward pass: acts[0] is the input, acts[i + 1] the
// output of layer i.
using Tape = std::vector<Tensor>;

class Sequential {
 public:
  explicit Sequential(std::string name = "net") : name_(std::move(name)) {}

  template <typename L, typename... Args>
  L& add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  const std::string& name() const { return name_; }
  std::size_t size() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_[i]; }
  const Layer& layer(std::size_t i) const { return *layers_[i]; }

  Shape output_shape(Shape s) const {
    for (const auto& l : layers_) s = l->output_shape(s);
    return s;
  }

  Tensor forward(const Tensor& x, Tape* tape = nullptr) const {
    if (tape) {
      tape->clear();
      tape->reserve(layers_.size() + 1);
      tape->push_back(x);
      for (const auto& l : layers_) tape->push_back(l->forward(tape->back()));
      return tape->back();
    }
    Tensor y = x;
    for (const auto& l : layers_) y = l->forward(y);
    return y;
  }

  // grads is aligned with params(); returns dL/dinput.
  Tensor backward(const Tape& tape, Tensor dy, std::span<Tensor> grads) const {
    if (tape.size() != layers_.size() + 1) throw ShapeError(name_ + ": tape does not match layer count");
    if (grads.size() != param_tensor_count()) throw ShapeError(name_ + ": gradient list does not match parameters");
    std::size_t offset = grads.size();
    for (std::size_t i = layers_.size(); i-- > 0;) {
      const std::size_t np = layers_[i]->params().size();
      offset -= np;
      dy = layers_[i]->backward(tape[i], tape[i + 1], dy, grads.subspan(offset, np));
    }
    return dy;
  }

  Tensor jvp(const Tape& tape, Tensor v) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) v = layers_[i]->jvp(tape[i], v);
    return v;
  }

  std::size_t param_tensor_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += std::as_const(*l).params().size();
    return n;
  }

  ParamList params() {
    ParamList out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto p = layers_[i]->params();
      const auto names = layers_[i]->param_names();
      for (std::size_t j = 0; j < p.size(); ++j)
        out.push_back({name_ + "." + std::to_string(i) + "." + names[j], p[j]});
    }
    return out;
  }

  std::vector<std::string> describe() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < layers_.size(); ++i)
      out.push_back(name_ + "." + std::to_string(i) + " " + layers_[i]->describe());
    return out;
  }

  // He-normal convolution and fc weights, zero biases.
  void init(std::mt19937_64& rng) {
    for (auto& l : layers_) {
      if (auto* c = dynamic_cast<Conv2d*>(l.get())) c->init(rng);
      if (auto* c = dynamic_cast<Conv3d*>(l.get())) c->init(rng);
      if (auto* f = dynamic_cast<Linear*>(l.get())) f->init(rng);
    }
  }

  void zero_last_linear() {
    for (std::size_t i = layers_.size(); i-- > 0;)
      if (auto* f = dynamic_cast<Linear*>(layers_[i].get())) {
        f->weight().fill(0.0);
        f->bias().fill(0.0);
        return;
      }
  }

 private:
  std::string name_;
  std::vector<std::unique_ptr<Layer>> layers_;
};

// Elementwise L1 loss sum |y - t| and its subgradient (sign, 0 at ties).
inline double l1_loss(const Tensor& y, const Tensor& target, Tensor* dy = nullptr) {
  expect_shape(target, y.shape, "l1 loss");
  if (dy) *dy = Tensor(y.shape);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - target[i];
    s += std::abs(d);
    if (dy) (*dy)[i] = d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0);
  }
  return s;
}

// Mean binary cross-entropy on logits; gradient with respect to the logits.
inline double bce_with_logits(const Tensor& logits, const Tensor& target, Tensor* dlogits = nullptr) {
  expect_shape(target, logits.shape, "bce loss");
  if (dlogits) *dlogits = Tensor(logits.shape);
  const double inv = 1.0 / static_cast<double>(logits.size());
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double z = logits[i], t = target[i];
    s += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
    if (dlogits) (*dlogits)[i] = (Sigmoid::eval(z) - t) * inv;
  }
  return s * inv;
}

}  // namespace egospan::nn
