#pragma once

// Central finite-difference comparison against analytic gradients.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "egospan/nn/network.hpp"

namespace egospan::nn {

struct GradCheckOptions {
  double h = 1e-5;
  std::size_t exhaustive_limit = 100000;  // below this many scalars every one is checked
  std::size_t samples = 1000;
  std::uint64_t seed = 1;
  // A coordinate whose one-sided slopes disagree by more than this (relative)
  // straddles a kink (ReLU, max-pool tie, |x|) and is skipped.
  double kink_tolerance = 1e-3;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
  std::string worst;  // parameter name and index of the worst coordinate
};

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

// loss() must evaluate the scalar objective from the current parameter
// values; analytic[i] holds dloss/dparams[i].
template <typename LossFn>
GradCheckResult gradient_check(const ParamList& params, std::span<const Tensor> analytic, LossFn&& loss,
                               const GradCheckOptions& opt = {}) {
  if (analytic.size() != params.size()) throw ShapeError("gradient check: gradient count does not match parameters");
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t i = 0; i < params.size(); ++i) {
    expect_shape(analytic[i], params[i].value->shape, "gradient check");
    for (std::size_t j = 0; j < params[i].value->size(); ++j) coords.emplace_back(i, j);
  }
  if (coords.size() > opt.exhaustive_limit && coords.size() > opt.samples) {
    std::mt19937_64 rng(opt.seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(opt.samples);
    std::sort(coords.begin(), coords.end());
  }
  GradCheckResult r;
  const double center = loss();
  for (const auto& [i, j] : coords) {
    double& x = (*params[i].value)[j];
    const double keep = x;
    x = keep + opt.h;
    const double up = loss();
    x = keep - opt.h;
    const double down = loss();
    x = keep;
    const double fwd = (up - center) / opt.h, bwd = (center - down) / opt.h;
    const double numeric = (up - down) / (2.0 * opt.h);
    const double e = relative_error(analytic[i][j], numeric);
    const bool kink = relative_error(fwd, bwd) > opt.kink_tolerance && std::abs(fwd - bwd) > 1e-6;
    if (kink && e > 1e-6) {
      ++r.skipped_kinks;
      continue;
    }
    ++r.checked;
    if (r.checked == 1 || e > r.max_rel_error) {
      r.max_rel_error = e;
      r.worst = params[i].name + "[" + std::to_string(j) + "]";
    }
  }
  return r;
}

}  // namespace egospan::nn
