#pragma once

// Reverse-mode automatic differentiation over dense tensors. The tape records
// a define-by-run graph of primitives; backward() traverses it once in reverse
// creation order and returns exact gradients for every registered leaf.
//
// Subgradient conventions: relu'(0) = 0 and d/dx min{0, x} = 0 at x = 0.

#include <cstddef>
#include <functional>
#include <unordered_map>
#include <vector>

#include "deepctrl/tensor.hpp"

namespace deepctrl::ad {

using NodeId = std::size_t;

enum class Op {
  Constant,
  Leaf,
  Affine,     // y = x Wᵀ + b
  Relu,       // max{0, x}
  MinZero,    // min{0, x}
  Add,
  Sub,
  Mul,
  Scale,      // y = c · x
  AddScalar,  // y = x + c
  MatMul,
  ConcatCols,
  SliceCols,
  ReduceMeanBatch,  // (B, F) -> (1, F)
  Square,
  DiagEmbed,  // (1, n) -> (n, n)
  BatchNorm,
};

const char* op_name(Op op);

// Train: batch statistics, running statistics updated.
// TrainFrozen: batch statistics, running statistics untouched (gradient checks).
// Eval: running statistics, no mutation.
enum class BnMode { Train, TrainFrozen, Eval };

struct Node {
  Op op;
  std::vector<NodeId> inputs;
  Tensor value;
  double scalar = 0.0;                     // Scale / AddScalar constant
  std::size_t col_begin = 0, col_end = 0;  // SliceCols range
  // BatchNorm captures for backward:
  Tensor bn_xhat;     // normalized input, (B, F)
  Tensor bn_inv_std;  // 1/sqrt(var + eps), (1, F)
  bool bn_batch_stats = false;
};

class Tape {
 public:
  explicit Tape(bool check_finite = true) : check_finite_(check_finite) {}

  NodeId constant(Tensor v);
  NodeId leaf(Tensor v);

  NodeId affine(NodeId weight, NodeId x, NodeId bias);
  NodeId relu(NodeId x);
  NodeId min_zero(NodeId x);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId x, double c);
  NodeId add_scalar(NodeId x, double c);
  NodeId matmul(NodeId a, NodeId b);
  NodeId concat_cols(const std::vector<NodeId>& parts);
  NodeId slice_cols(NodeId x, std::size_t begin, std::size_t end);
  NodeId reduce_mean_batch(NodeId x);
  NodeId square(NodeId x);
  NodeId diag_embed(NodeId x);

  // Batch normalization; moving_mean/moving_var belong to the caller and are
  // mutated only in BnMode::Train.
  NodeId batch_norm(NodeId x, NodeId gamma, NodeId beta, Tensor* moving_mean, Tensor* moving_var,
                    double epsilon, double momentum, BnMode mode);

  const Tensor& value(NodeId id) const { return nodes_[id].value; }
  const Node& node(NodeId id) const { return nodes_[id]; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<NodeId>& leaves() const { return leaves_; }

  // Gradients of a scalar output with respect to every leaf. Rejects
  // non-scalar outputs; a tape without leaves yields an empty map.
  std::unordered_map<NodeId, Tensor> backward(NodeId output) const;

  // Smallest |input| seen by any relu/min_zero entry; used by gradient checks
  // to resample points that sit too close to a kink.
  double min_kink_distance() const;

 private:
  NodeId push(Node n);
  std::vector<Node> nodes_;
  std::vector<NodeId> leaves_;
  bool check_finite_;
};

// Central finite differences (f(x + h e_i) - f(x - h e_i)) / (2h); the
// independent oracle backward() is tested against.
Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f, const Tensor& point,
                                  double h = 1e-6);

// Column sum helper: (B, F) -> (B, 1) via matmul with a ones vector.
NodeId sum_cols(Tape& tape, NodeId x);

// Per-row dot product of two (B, F) nodes -> (B, 1).
NodeId dot_rows(Tape& tape, NodeId a, NodeId b);

}  // namespace deepctrl::ad
