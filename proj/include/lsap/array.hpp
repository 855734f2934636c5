#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "lsap/errors.hpp"

namespace lsap {

/// Dense row-major array of doubles. Rank 0 (empty shape) is a scalar.
struct Array {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Array() = default;
  Array(std::vector<std::size_t> s, std::vector<double> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (numel_of(shape) != data.size())
      throw NumericError("Array: shape/data length mismatch");
  }

  static std::size_t numel_of(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
  }

  static Array zeros(std::vector<std::size_t> s) {
    std::size_t n = numel_of(s);
    return Array(std::move(s), std::vector<double>(n, 0.0));
  }

  static Array full(std::vector<std::size_t> s, double v) {
    std::size_t n = numel_of(s);
    return Array(std::move(s), std::vector<double>(n, v));
  }

  static Array scalar(double v) { return Array({}, {v}); }

  static Array vec(std::vector<double> d) {
    std::size_t n = d.size();
    return Array({n}, std::move(d));
  }

  std::size_t numel() const { return data.size(); }
  bool is_scalar() const { return shape.empty(); }
  double scalar_value() const {
    if (data.size() != 1) throw NumericError("Array: not a scalar");
    return data[0];
  }

  bool same_shape(const Array& o) const { return shape == o.shape; }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

inline std::string shape_str(const std::vector<std::size_t>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

inline double linf_diff(const Array& a, const Array& b) {
  if (!a.same_shape(b)) throw NumericError("linf_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

inline double l2_norm(const Array& a) {
  double s = 0.0;
  for (double v : a.data) s += v * v;
  return std::sqrt(s);
}

inline double linf_norm(const Array& a) {
  double m = 0.0;
  for (double v : a.data) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace lsap
