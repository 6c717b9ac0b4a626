#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "egospan/nn/network.hpp"

namespace egospan::nn {

enum class OptimizerKind { kSgdMomentum, kAdam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double lr = 1e-3;
  double momentum = 0.9;  // sgd; 0 gives plain gradient descent
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const {
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must be in [0, 1)");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) throw ConfigError("adam betas must be in [0, 1)");
  }
};

inline OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "sgd" || s == "sgd_momentum") return OptimizerKind::kSgdMomentum;
  if (s == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + s + "' (valid: sgd, adam)");
}

class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  const OptimizerConfig& config() const { return cfg_; }
  long steps() const { return t_; }

  void set_lr(double lr) {
    if (!(lr >= 0.0)) throw ConfigError("learning rate must be nonnegative");
    cfg_.lr = lr;
  }

  void step(const ParamList& params, std::span<const Tensor> grads) {
    if (grads.size() != params.size()) throw ShapeError("optimizer: gradient count does not match parameters");
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.emplace_back(p.value->shape);
        v_.emplace_back(p.value->shape);
      }
    }
    if (m_.size() != params.size()) throw ShapeError("optimizer: parameter list changed between steps");
    ++t_;
    for (std::size_t i = 0; i < params.size(); ++i) {
      Tensor& p = *params[i].value;
      const Tensor& g = grads[i];
      if (g.shape != p.shape || m_[i].shape != p.shape)
        throw ShapeError("optimizer: " + params[i].name + " expected " + shape_string(p.shape) + ", got " +
                         shape_string(g.shape));
      if (cfg_.kind == OptimizerKind::kSgdMomentum) {
        for (std::size_t j = 0; j < p.size(); ++j) {
          m_[i][j] = cfg_.momentum * m_[i][j] + g[j];
          p[j] -= cfg_.lr * m_[i][j];
        }
      } else {
        const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t j = 0; j < p.size(); ++j) {
          m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * g[j];
          v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * g[j] * g[j];
          p[j] -= cfg_.lr * (m_[i][j] / c1) / (std::sqrt(v_[i][j] / c2) + cfg_.eps);
        }
      }
    }
  }

 private:
  OptimizerConfig cfg_;
  std::vector<Tensor> m_, v_;
  long t_ = 0;
};

}  // namespace egospan::nn
