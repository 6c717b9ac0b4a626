#pragma once

// Dense row-major tensors of doubles, up to five dimensions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "egospan/error.hpp"

namespace egospan::nn {

using Shape = std::vector<int>;

// Fixed base alignment keeps Eigen's vectorized paths, and so the rounding,
// identical from run to run.
using Buffer = std::vector<double, Eigen::aligned_allocator<double>>;

inline std::size_t shape_size(const Shape& s) {
  std::size_t n = 1;
  for (int d : s) n *= static_cast<std::size_t>(d);
  return n;
}

inline std::string shape_string(const Shape& s) {
  std::ostringstream o;
  o << "[";
  for (std::size_t i = 0; i < s.size(); ++i) o << (i ? "," : "") << s[i];
  o << "]";
  return o.str();
}

struct Tensor {
  Shape shape;
  Buffer data;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0) : shape(std::move(s)) {
    if (shape.empty() || shape.size() > 5) throw ShapeError("tensor rank must be 1..5, got " + shape_string(shape));
    for (int d : shape)
      if (d < 0) throw ShapeError("negative tensor dimension in " + shape_string(shape));
    data.assign(shape_size(shape), fill);
  }
  Tensor(Shape s, const std::vector<double>& values) : Tensor(std::move(s)) {
    if (values.size() != data.size())
      throw ShapeError("tensor data has " + std::to_string(values.size()) + " values, shape " +
                       shape_string(shape) + " needs " + std::to_string(data.size()));
    std::copy(values.begin(), values.end(), data.begin());
  }

  std::size_t size() const { return data.size(); }
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
  // Elements per batch entry.
  std::size_t stride0() const { return shape.empty() || shape[0] == 0 ? 0 : size() / shape[0]; }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
  double* ptr(std::size_t batch = 0) { return data.data() + batch * stride0(); }
  const double* ptr(std::size_t batch = 0) const { return data.data() + batch * stride0(); }

  Eigen::Map<Eigen::VectorXd> vec() { return {data.data(), static_cast<Eigen::Index>(data.size())}; }
  Eigen::Map<const Eigen::VectorXd> vec() const { return {data.data(), static_cast<Eigen::Index>(data.size())}; }

  Tensor reshaped(Shape s) const {
    if (shape_size(s) != size()) throw ShapeError("cannot reshape " + shape_string(shape) + " to " + shape_string(s));
    Tensor t;
    t.shape = std::move(s);
    t.data = data;
    return t;
  }
  void fill(double v) { std::fill(data.begin(), data.end(), v); }
  bool all_finite() const {
    return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
  }
  bool operator==(const Tensor&) const = default;
};

inline void expect_shape(const Tensor& t, const Shape& want, const char* what) {
  if (t.shape != want)
    throw ShapeError(std::string(what) + ": expected " + shape_string(want) + ", got " + shape_string(t.shape));
}

inline void expect_rank(const Tensor& t, int rank, const char* what) {
  if (t.rank() != rank)
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_string(t.shape));
}

inline double dot(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) throw ShapeError("dot of " + shape_string(a.shape) + " and " + shape_string(b.shape));
  return a.vec().dot(b.vec());
}

inline Tensor random_normal(Shape s, std::mt19937_64& rng, double stddev = 1.0) {
  Tensor t(std::move(s));
  std::normal_distribution<double> n(0.0, stddev);
  for (auto& v : t.data) v = n(rng);
  return t;
}

// Stacks single-sample tensors of identical shape along a new batch axis.
inline Tensor stack(const std::vector<const Tensor*>& items) {
  if (items.empty()) throw ShapeError("stack of zero tensors");
  Shape s = items.front()->shape;
  s.insert(s.begin(), static_cast<int>(items.size()));
  Tensor t(s);
  const std::size_t per = items.front()->size();
  for (std::size_t i = 0; i < items.size(); ++i) {
    expect_shape(*items[i], items.front()->shape, "stack");
    std::copy(items[i]->data.begin(), items[i]->data.end(), t.data.begin() + i * per);
  }
  return t;
}

// Concatenation of two batched tensors along axis 1.
inline Tensor concat(const Tensor& a, const Tensor& b) {
  if (a.rank() != b.rank() || a.rank() < 2 || a.dim(0) != b.dim(0))
    throw ShapeError("concat of " + shape_string(a.shape) + " and " + shape_string(b.shape));
  for (int i = 2; i < a.rank(); ++i)
    if (a.dim(i) != b.dim(i)) throw ShapeError("concat of " + shape_string(a.shape) + " and " + shape_string(b.shape));
  Shape s = a.shape;
  s[1] += b.dim(1);
  Tensor out(s);
  const std::size_t na = a.stride0(), nb = b.stride0();
  for (int n = 0; n < a.dim(0); ++n) {
    std::copy(a.ptr(n), a.ptr(n) + na, out.ptr(n));
    std::copy(b.ptr(n), b.ptr(n) + nb, out.ptr(n) + na);
  }
  return out;
}

// Adjoint of concat: splits axis 1 at `first` channels.
inline std::pair<Tensor, Tensor> split(const Tensor& t, int first) {
  if (t.rank() < 2 || first < 0 || first > t.dim(1))
    throw ShapeError("split of " + shape_string(t.shape) + " at " + std::to_string(first));
  Shape sa = t.shape, sb = t.shape;
  sa[1] = first;
  sb[1] = t.dim(1) - first;
  Tensor a(sa), b(sb);
  const std::size_t na = a.stride0(), nb = b.stride0();
  for (int n = 0; n < t.dim(0); ++n) {
    std::copy(t.ptr(n), t.ptr(n) + na, a.ptr(n));
    std::copy(t.ptr(n) + na, t.ptr(n) + na + nb, b.ptr(n));
  }
  return {std::move(a), std::move(b)};
}

}  // namespace egospan::nn
