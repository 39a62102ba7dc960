#include "deepctrl/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace deepctrl {

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  if (shape.empty() || n != data.size()) {
    throw std::invalid_argument("Tensor: element count " + std::to_string(data.size()) +
                                " does not match shape " + shape_str());
  }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
  std::size_t n = 1;
  for (std::size_t e : shape) {
    if (e == 0) throw std::invalid_argument("Tensor: zero extent in shape");
    n *= e;
  }
  Tensor t;
  t.shape = std::move(shape);
  t.data.assign(n, value);
  return t;
}

Tensor Tensor::scalar(double value) { return Tensor({1, 1}, {value}); }

Tensor Tensor::row(std::vector<double> values) {
  const std::size_t k = values.size();
  return Tensor({1, k}, std::move(values));
}

Tensor Tensor::column(std::vector<double> values) {
  const std::size_t k = values.size();
  return Tensor({k, 1}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t = zeros({n, n});
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

std::size_t Tensor::numel() const { return data.size(); }

std::size_t Tensor::rows() const { return shape.size() >= 2 ? shape[0] : 1; }

std::size_t Tensor::cols() const { return shape.size() >= 2 ? shape[1] : shape[0]; }

double& Tensor::at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }

double Tensor::at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

bool Tensor::same_shape(const Tensor& o) const { return rows() == o.rows() && cols() == o.cols(); }

bool Tensor::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? ", " : "") << shape[i];
  os << ")";
  return os.str();
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.numel() != b.numel()) throw std::invalid_argument("max_abs_diff: size mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

Tensor transpose(const Tensor& t) {
  Tensor out = Tensor::zeros({t.cols(), t.rows()});
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) out.at(c, r) = t.at(r, c);
  }
  return out;
}

double l2_norm(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data) s += v * v;
  return std::sqrt(s);
}

}  // namespace deepctrl
