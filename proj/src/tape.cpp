#include "deepctrl/tape.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace deepctrl::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using CMatMap = Eigen::Map<const RowMat>;

CMatMap as_mat(const Tensor& t) { return CMatMap(t.data.data(), t.rows(), t.cols()); }
MatMap as_mat(Tensor& t) { return MatMap(t.data.data(), t.rows(), t.cols()); }

[[noreturn]] void fail(Op op, const std::string& what) {
  throw std::invalid_argument(std::string(op_name(op)) + ": " + what);
}

void require(bool ok, Op op, const std::string& what) {
  if (!ok) fail(op, what);
}

// Shapes for binary elementwise ops: equal, or one operand a (1, F) row
// broadcast across the other's batch dimension.
enum class Broadcast { None, RowA, RowB };

Broadcast broadcast_kind(Op op, const Tensor& a, const Tensor& b) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::None;
  if (a.cols() == b.cols() && a.rows() == 1 && b.rows() > 1) return Broadcast::RowA;
  if (a.cols() == b.cols() && b.rows() == 1 && a.rows() > 1) return Broadcast::RowB;
  fail(op, "shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

Tensor colwise_sum(const Tensor& g) {
  Tensor out = Tensor::zeros({1, g.cols()});
  as_mat(out) = as_mat(g).colwise().sum();
  return out;
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::Constant: return "constant";
    case Op::Leaf: return "leaf";
    case Op::Affine: return "affine";
    case Op::Relu: return "relu";
    case Op::MinZero: return "min_zero";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Scale: return "scale";
    case Op::AddScalar: return "add_scalar";
    case Op::MatMul: return "matmul";
    case Op::ConcatCols: return "concat_cols";
    case Op::SliceCols: return "slice_cols";
    case Op::ReduceMeanBatch: return "reduce_mean_batch";
    case Op::Square: return "square";
    case Op::DiagEmbed: return "diag_embed";
    case Op::BatchNorm: return "batch_norm";
  }
  return "?";
}

NodeId Tape::push(Node n) {
  if (check_finite_ && !n.value.all_finite()) {
    throw std::runtime_error(std::string(op_name(n.op)) + ": non-finite output, shape " +
                             n.value.shape_str());
  }
  nodes_.push_back(std::move(n));
  return nodes_.size() - 1;
}

NodeId Tape::constant(Tensor v) { return push({Op::Constant, {}, std::move(v)}); }

NodeId Tape::leaf(Tensor v) {
  NodeId id = push({Op::Leaf, {}, std::move(v)});
  leaves_.push_back(id);
  return id;
}

NodeId Tape::affine(NodeId weight, NodeId x, NodeId bias) {
  const Tensor& W = nodes_[weight].value;
  const Tensor& X = nodes_[x].value;
  const Tensor& b = nodes_[bias].value;
  require(W.cols() == X.cols(), Op::Affine,
          "weight " + W.shape_str() + " does not accept input " + X.shape_str());
  require(b.rows() == 1 && b.cols() == W.rows(), Op::Affine,
          "bias " + b.shape_str() + " does not match weight " + W.shape_str());
  Tensor out = Tensor::zeros({X.rows(), W.rows()});
  as_mat(out).noalias() = as_mat(X) * as_mat(W).transpose();
  as_mat(out).rowwise() += as_mat(b).row(0);
  return push({Op::Affine, {weight, x, bias}, std::move(out)});
}

NodeId Tape::relu(NodeId x) {
  Tensor out = nodes_[x].value;
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return push({Op::Relu, {x}, std::move(out)});
}

NodeId Tape::min_zero(NodeId x) {
  Tensor out = nodes_[x].value;
  for (double& v : out.data) v = v < 0.0 ? v : 0.0;
  return push({Op::MinZero, {x}, std::move(out)});
}

NodeId Tape::add(NodeId a, NodeId b) {
  const Tensor& A = nodes_[a].value;
  const Tensor& B = nodes_[b].value;
  Broadcast bc = broadcast_kind(Op::Add, A, B);
  Tensor out = Tensor::zeros({std::max(A.rows(), B.rows()), A.cols()});
  if (bc == Broadcast::None)
    as_mat(out) = as_mat(A) + as_mat(B);
  else if (bc == Broadcast::RowA)
    as_mat(out) = as_mat(B).rowwise() + as_mat(A).row(0);
  else
    as_mat(out) = as_mat(A).rowwise() + as_mat(B).row(0);
  return push({Op::Add, {a, b}, std::move(out)});
}

NodeId Tape::sub(NodeId a, NodeId b) {
  const Tensor& A = nodes_[a].value;
  const Tensor& B = nodes_[b].value;
  Broadcast bc = broadcast_kind(Op::Sub, A, B);
  Tensor out = Tensor::zeros({std::max(A.rows(), B.rows()), A.cols()});
  if (bc == Broadcast::None)
    as_mat(out) = as_mat(A) - as_mat(B);
  else if (bc == Broadcast::RowA)
    as_mat(out) = (-as_mat(B)).rowwise() + as_mat(A).row(0);
  else
    as_mat(out) = as_mat(A).rowwise() - as_mat(B).row(0);
  return push({Op::Sub, {a, b}, std::move(out)});
}

NodeId Tape::mul(NodeId a, NodeId b) {
  const Tensor& A = nodes_[a].value;
  const Tensor& B = nodes_[b].value;
  Broadcast bc = broadcast_kind(Op::Mul, A, B);
  Tensor out = Tensor::zeros({std::max(A.rows(), B.rows()), A.cols()});
  if (bc == Broadcast::None)
    as_mat(out) = as_mat(A).cwiseProduct(as_mat(B));
  else if (bc == Broadcast::RowA)
    as_mat(out) = as_mat(B).array().rowwise() * as_mat(A).array().row(0);
  else
    as_mat(out) = as_mat(A).array().rowwise() * as_mat(B).array().row(0);
  return push({Op::Mul, {a, b}, std::move(out)});
}

NodeId Tape::scale(NodeId x, double c) {
  Tensor out = nodes_[x].value;
  for (double& v : out.data) v *= c;
  Node n{Op::Scale, {x}, std::move(out)};
  n.scalar = c;
  return push(std::move(n));
}

NodeId Tape::add_scalar(NodeId x, double c) {
  Tensor out = nodes_[x].value;
  for (double& v : out.data) v += c;
  Node n{Op::AddScalar, {x}, std::move(out)};
  n.scalar = c;
  return push(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b) {
  const Tensor& A = nodes_[a].value;
  const Tensor& B = nodes_[b].value;
  require(A.cols() == B.rows(), Op::MatMul, "inner dimensions " + A.shape_str() + " vs " + B.shape_str());
  Tensor out = Tensor::zeros({A.rows(), B.cols()});
  as_mat(out).noalias() = as_mat(A) * as_mat(B);
  return push({Op::MatMul, {a, b}, std::move(out)});
}

NodeId Tape::concat_cols(const std::vector<NodeId>& parts) {
  require(!parts.empty(), Op::ConcatCols, "no inputs");
  const std::size_t rows = nodes_[parts[0]].value.rows();
  std::size_t total = 0;
  for (NodeId p : parts) {
    require(nodes_[p].value.rows() == rows, Op::ConcatCols,
            "row mismatch " + nodes_[p].value.shape_str());
    total += nodes_[p].value.cols();
  }
  Tensor out = Tensor::zeros({rows, total});
  std::size_t off = 0;
  for (NodeId p : parts) {
    const Tensor& v = nodes_[p].value;
    as_mat(out).middleCols(off, v.cols()) = as_mat(v);
    off += v.cols();
  }
  return push({Op::ConcatCols, parts, std::move(out)});
}

NodeId Tape::slice_cols(NodeId x, std::size_t begin, std::size_t end) {
  const Tensor& X = nodes_[x].value;
  require(begin < end && end <= X.cols(), Op::SliceCols,
          "range [" + std::to_string(begin) + ", " + std::to_string(end) + ") of " + X.shape_str());
  Tensor out = Tensor::zeros({X.rows(), end - begin});
  as_mat(out) = as_mat(X).middleCols(begin, end - begin);
  Node n{Op::SliceCols, {x}, std::move(out)};
  n.col_begin = begin;
  n.col_end = end;
  return push(std::move(n));
}

NodeId Tape::reduce_mean_batch(NodeId x) {
  const Tensor& X = nodes_[x].value;
  Tensor out = Tensor::zeros({1, X.cols()});
  as_mat(out) = as_mat(X).colwise().mean();
  return push({Op::ReduceMeanBatch, {x}, std::move(out)});
}

NodeId Tape::square(NodeId x) {
  Tensor out = nodes_[x].value;
  for (double& v : out.data) v *= v;
  return push({Op::Square, {x}, std::move(out)});
}

NodeId Tape::diag_embed(NodeId x) {
  const Tensor& X = nodes_[x].value;
  require(X.rows() == 1, Op::DiagEmbed, "expected a vector, got " + X.shape_str());
  const std::size_t n = X.cols();
  Tensor out = Tensor::zeros({n, n});
  for (std::size_t i = 0; i < n; ++i) out.at(i, i) = X.data[i];
  return push({Op::DiagEmbed, {x}, std::move(out)});
}

NodeId Tape::batch_norm(NodeId x, NodeId gamma, NodeId beta, Tensor* moving_mean, Tensor* moving_var,
                        double epsilon, double momentum, BnMode mode) {
  const Tensor& X = nodes_[x].value;
  const Tensor& g = nodes_[gamma].value;
  const Tensor& b = nodes_[beta].value;
  const std::size_t batch = X.rows();
  const std::size_t features = X.cols();
  require(g.rows() == 1 && g.cols() == features, Op::BatchNorm, "gamma " + g.shape_str());
  require(b.rows() == 1 && b.cols() == features, Op::BatchNorm, "beta " + b.shape_str());
  require(epsilon > 0.0, Op::BatchNorm, "epsilon must be positive");

  const bool use_batch_stats = mode != BnMode::Eval;
  if (use_batch_stats && batch < 2) {
    fail(Op::BatchNorm, "train mode needs a batch of at least 2, got " + std::to_string(batch));
  }

  Tensor mean({1, features}, std::vector<double>(features, 0.0));
  Tensor var({1, features}, std::vector<double>(features, 0.0));
  if (use_batch_stats) {
    as_mat(mean) = as_mat(X).colwise().mean();
    for (std::size_t f = 0; f < features; ++f) {
      double s = 0.0;
      for (std::size_t r = 0; r < batch; ++r) {
        const double d = X.at(r, f) - mean.data[f];
        s += d * d;
      }
      var.data[f] = s / static_cast<double>(batch);  // biased, matches the forward formula
    }
    if (mode == BnMode::Train && moving_mean != nullptr) {
      for (std::size_t f = 0; f < features; ++f) {
        moving_mean->data[f] = momentum * moving_mean->data[f] + (1.0 - momentum) * mean.data[f];
        moving_var->data[f] = momentum * moving_var->data[f] + (1.0 - momentum) * var.data[f];
      }
    }
  } else {
    mean = *moving_mean;
    var = *moving_var;
  }

  Tensor inv_std = Tensor::zeros({1, features});
  for (std::size_t f = 0; f < features; ++f) inv_std.data[f] = 1.0 / std::sqrt(var.data[f] + epsilon);

  Tensor xhat = Tensor::zeros({batch, features});
  Tensor out = Tensor::zeros({batch, features});
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t f = 0; f < features; ++f) {
      const double xh = (X.at(r, f) - mean.data[f]) * inv_std.data[f];
      xhat.at(r, f) = xh;
      out.at(r, f) = g.data[f] * xh + b.data[f];
    }
  }
  Node n{Op::BatchNorm, {x, gamma, beta}, std::move(out)};
  n.bn_xhat = std::move(xhat);
  n.bn_inv_std = std::move(inv_std);
  n.bn_batch_stats = use_batch_stats;
  return push(std::move(n));
}

std::unordered_map<NodeId, Tensor> Tape::backward(NodeId output) const {
  if (output >= nodes_.size()) throw std::invalid_argument("backward: unknown node id");
  if (nodes_[output].value.numel() != 1) {
    throw std::invalid_argument("backward: output must be a scalar, got " +
                                nodes_[output].value.shape_str());
  }
  std::unordered_map<NodeId, Tensor> result;
  if (leaves_.empty()) return result;

  std::vector<Tensor> grads(nodes_.size());
  std::vector<bool> has_grad(nodes_.size(), false);
  auto accumulate = [&](NodeId id, const Tensor& g) {
    if (!has_grad[id]) {
      grads[id] = g;
      has_grad[id] = true;
    } else {
      for (std::size_t i = 0; i < g.data.size(); ++i) grads[id].data[i] += g.data[i];
    }
  };

  grads[output] = Tensor::full({nodes_[output].value.rows(), nodes_[output].value.cols()}, 1.0);
  has_grad[output] = true;

  for (NodeId id = output + 1; id-- > 0;) {
    if (!has_grad[id]) continue;
    const Node& n = nodes_[id];
    const Tensor& gy = grads[id];
    switch (n.op) {
      case Op::Constant:
      case Op::Leaf:
        break;
      case Op::Affine: {
        const Tensor& W = nodes_[n.inputs[0]].value;
        const Tensor& X = nodes_[n.inputs[1]].value;
        Tensor gW = Tensor::zeros({W.rows(), W.cols()});
        as_mat(gW).noalias() = as_mat(gy).transpose() * as_mat(X);
        accumulate(n.inputs[0], gW);
        Tensor gX = Tensor::zeros({X.rows(), X.cols()});
        as_mat(gX).noalias() = as_mat(gy) * as_mat(W);
        accumulate(n.inputs[1], gX);
        accumulate(n.inputs[2], colwise_sum(gy));
        break;
      }
      case Op::Relu: {
        const Tensor& X = nodes_[n.inputs[0]].value;
        Tensor gx = gy;
        for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] = X.data[i] > 0.0 ? gx.data[i] : 0.0;
        accumulate(n.inputs[0], gx);
        break;
      }
      case Op::MinZero: {
        const Tensor& X = nodes_[n.inputs[0]].value;
        Tensor gx = gy;
        for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] = X.data[i] < 0.0 ? gx.data[i] : 0.0;
        accumulate(n.inputs[0], gx);
        break;
      }
      case Op::Add:
      case Op::Sub: {
        const Tensor& A = nodes_[n.inputs[0]].value;
        const Tensor& B = nodes_[n.inputs[1]].value;
        const double sign_b = n.op == Op::Sub ? -1.0 : 1.0;
        Tensor ga = A.rows() == gy.rows() ? gy : colwise_sum(gy);
        accumulate(n.inputs[0], ga);
        Tensor gb = B.rows() == gy.rows() ? gy : colwise_sum(gy);
        for (double& v : gb.data) v *= sign_b;
        accumulate(n.inputs[1], gb);
        break;
      }
      case Op::Mul: {
        const Tensor& A = nodes_[n.inputs[0]].value;
        const Tensor& B = nodes_[n.inputs[1]].value;
        Tensor gyB = Tensor::zeros({gy.rows(), gy.cols()});
        if (B.rows() == gy.rows())
          as_mat(gyB) = as_mat(gy).cwiseProduct(as_mat(B));
        else
          as_mat(gyB) = as_mat(gy).array().rowwise() * as_mat(B).array().row(0);
        accumulate(n.inputs[0], A.rows() == gy.rows() ? gyB : colwise_sum(gyB));
        Tensor gyA = Tensor::zeros({gy.rows(), gy.cols()});
        if (A.rows() == gy.rows())
          as_mat(gyA) = as_mat(gy).cwiseProduct(as_mat(A));
        else
          as_mat(gyA) = as_mat(gy).array().rowwise() * as_mat(A).array().row(0);
        accumulate(n.inputs[1], B.rows() == gy.rows() ? gyA : colwise_sum(gyA));
        break;
      }
      case Op::Scale: {
        Tensor gx = gy;
        for (double& v : gx.data) v *= n.scalar;
        accumulate(n.inputs[0], gx);
        break;
      }
      case Op::AddScalar:
        accumulate(n.inputs[0], gy);
        break;
      case Op::MatMul: {
        const Tensor& A = nodes_[n.inputs[0]].value;
        const Tensor& B = nodes_[n.inputs[1]].value;
        Tensor gA = Tensor::zeros({A.rows(), A.cols()});
        as_mat(gA).noalias() = as_mat(gy) * as_mat(B).transpose();
        accumulate(n.inputs[0], gA);
        Tensor gB = Tensor::zeros({B.rows(), B.cols()});
        as_mat(gB).noalias() = as_mat(A).transpose() * as_mat(gy);
        accumulate(n.inputs[1], gB);
        break;
      }
      case Op::ConcatCols: {
        std::size_t off = 0;
        for (NodeId p : n.inputs) {
          const Tensor& v = nodes_[p].value;
          Tensor gp = Tensor::zeros({v.rows(), v.cols()});
          as_mat(gp) = as_mat(gy).middleCols(off, v.cols());
          accumulate(p, gp);
          off += v.cols();
        }
        break;
      }
      case Op::SliceCols: {
        const Tensor& X = nodes_[n.inputs[0]].value;
        Tensor gx = Tensor::zeros({X.rows(), X.cols()});
        as_mat(gx).middleCols(n.col_begin, n.col_end - n.col_begin) = as_mat(gy);
        accumulate(n.inputs[0], gx);
        break;
      }
      case Op::ReduceMeanBatch: {
        const Tensor& X = nodes_[n.inputs[0]].value;
        const double inv_b = 1.0 / static_cast<double>(X.rows());
        Tensor gx = Tensor::zeros({X.rows(), X.cols()});
        as_mat(gx) = (as_mat(gy).row(0) * inv_b).replicate(X.rows(), 1);
        accumulate(n.inputs[0], gx);
        break;
      }
      case Op::Square: {
        const Tensor& X = nodes_[n.inputs[0]].value;
        Tensor gx = gy;
        for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] *= 2.0 * X.data[i];
        accumulate(n.inputs[0], gx);
        break;
      }
      case Op::DiagEmbed: {
        const Tensor& X = nodes_[n.inputs[0]].value;
        const std::size_t k = X.cols();
        Tensor gx = Tensor::zeros({1, k});
        for (std::size_t i = 0; i < k; ++i) gx.data[i] = gy.at(i, i);
        accumulate(n.inputs[0], gx);
        break;
      }
      case Op::BatchNorm: {
        const Tensor& g = nodes_[n.inputs[1]].value;
        const std::size_t batch = gy.rows();
        const std::size_t features = gy.cols();
        Tensor ggamma = Tensor::zeros({1, features});
        Tensor gbeta = Tensor::zeros({1, features});
        for (std::size_t r = 0; r < batch; ++r) {
          for (std::size_t f = 0; f < features; ++f) {
            ggamma.data[f] += gy.at(r, f) * n.bn_xhat.at(r, f);
            gbeta.data[f] += gy.at(r, f);
          }
        }
        Tensor gx = Tensor::zeros({batch, features});
        if (n.bn_batch_stats) {
          // Differentiates through the batch mean and variance.
          const double inv_b = 1.0 / static_cast<double>(batch);
          for (std::size_t f = 0; f < features; ++f) {
            const double c = g.data[f] * n.bn_inv_std.data[f];
            const double mean_dy = gbeta.data[f] * inv_b;
            const double mean_dy_xhat = ggamma.data[f] * inv_b;
            for (std::size_t r = 0; r < batch; ++r) {
              gx.at(r, f) = c * (gy.at(r, f) - mean_dy - n.bn_xhat.at(r, f) * mean_dy_xhat);
            }
          }
        } else {
          for (std::size_t r = 0; r < batch; ++r) {
            for (std::size_t f = 0; f < features; ++f) {
              gx.at(r, f) = gy.at(r, f) * g.data[f] * n.bn_inv_std.data[f];
            }
          }
        }
        accumulate(n.inputs[0], gx);
        accumulate(n.inputs[1], ggamma);
        accumulate(n.inputs[2], gbeta);
        break;
      }
    }
  }

  for (NodeId leaf : leaves_) {
    if (has_grad[leaf]) {
      result.emplace(leaf, std::move(grads[leaf]));
    } else {
      const Tensor& v = nodes_[leaf].value;
      result.emplace(leaf, Tensor::zeros({v.rows(), v.cols()}));
    }
  }
  return result;
}

double Tape::min_kink_distance() const {
  double best = std::numeric_limits<double>::infinity();
  for (const Node& n : nodes_) {
    if (n.op != Op::Relu && n.op != Op::MinZero) continue;
    const Tensor& x = nodes_[n.inputs[0]].value;
    for (double v : x.data) best = std::min(best, std::abs(v));
  }
  return best;
}

Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f, const Tensor& point,
                                  double h) {
  if (h <= 0.0) throw std::invalid_argument("finite_difference_gradient: h must be positive");
  Tensor grad = Tensor::zeros({point.rows(), point.cols()});
  Tensor x = point;
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const double orig = x.data[i];
    x.data[i] = orig + h;
    const double fp = f(x);
    x.data[i] = orig - h;
    const double fm = f(x);
    x.data[i] = orig;
    grad.data[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

NodeId sum_cols(Tape& tape, NodeId x) {
  const std::size_t f = tape.value(x).cols();
  return tape.matmul(x, tape.constant(Tensor::full({f, 1}, 1.0)));
}

NodeId dot_rows(Tape& tape, NodeId a, NodeId b) { return sum_cols(tape, tape.mul(a, b)); }

}  // namespace deepctrl::ad
