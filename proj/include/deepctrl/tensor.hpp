#pragma once

// Dense row-major tensor of doubles, rank 1 or 2. This is the value type the
// tape operates on; all shape/layout conventions live here.

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace deepctrl {

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<std::size_t> s, std::vector<double> d);

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor full(std::vector<std::size_t> shape, double value);
  static Tensor scalar(double value);                       // shape (1, 1)
  static Tensor row(std::vector<double> values);            // shape (1, k)
  static Tensor column(std::vector<double> values);         // shape (k, 1)
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor identity(std::size_t n);

  std::size_t numel() const;
  std::size_t rank() const { return shape.size(); }
  // Rank-1 tensors are treated as a single row in matrix contexts.
  std::size_t rows() const;
  std::size_t cols() const;

  double& at(std::size_t r, std::size_t c);
  double at(std::size_t r, std::size_t c) const;
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  bool same_shape(const Tensor& o) const;
  bool all_finite() const;
  std::string shape_str() const;
};

// Elementwise max |a - b|; shapes must match.
double max_abs_diff(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& t);

// L2 norm of all entries.
double l2_norm(const Tensor& t);

}  // namespace deepctrl
