#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "charparse/util/error.hpp"

namespace charparse::num {

/// Dense tensor: a shape and a flat row-major value array. Rank 0 is a
/// scalar (one element), rank 1 a vector, rank 2 a matrix. Everything in
/// the model is one of those three.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> v;

  Tensor() = default;

  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    v.assign(static_cast<size_t>(count(shape)), T(0));
  }

  Tensor(std::vector<int> s, std::vector<T> values)
      : shape(std::move(s)), v(std::move(values)) {
    if (count(shape) != static_cast<std::int64_t>(v.size()))
      throw NumericError("tensor: shape " + shape_str(shape) + " needs " +
                         std::to_string(count(shape)) + " values, got " +
                         std::to_string(v.size()));
  }

  static Tensor scalar(T x) { return Tensor({}, {x}); }

  static std::int64_t count(const std::vector<int>& s) {
    std::int64_t n = 1;
    for (int e : s) n *= e;
    return n;
  }

  static std::string shape_str(const std::vector<int>& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
      if (i) out += ",";
      out += std::to_string(s[i]);
    }
    return out + "]";
  }

  std::int64_t numel() const { return static_cast<std::int64_t>(v.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int rows() const { return shape.at(0); }
  int cols() const { return shape.at(1); }

  T* data() { return v.data(); }
  const T* data() const { return v.data(); }

  T& at(int i) { return v[static_cast<size_t>(i)]; }
  T at(int i) const { return v[static_cast<size_t>(i)]; }
  T& at(int i, int j) { return v[static_cast<size_t>(i) * cols() + j]; }
  T at(int i, int j) const { return v[static_cast<size_t>(i) * cols() + j]; }

  void fill(T x) { std::fill(v.begin(), v.end(), x); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool all_finite() const {
    for (T x : v)
      if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
  }

  std::string shape_str() const { return shape_str(shape); }
};

}  // namespace charparse::num
