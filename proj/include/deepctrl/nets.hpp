#pragma once

// Feedforward subnetworks: dense layers with optional batch normalization and
// ReLU hidden activations. One subnetwork approximates the control at one
// timestep; the stacking happens in control.hpp.

#include <string>
#include <vector>

#include "deepctrl/rng.hpp"
#include "deepctrl/tape.hpp"
#include "deepctrl/tensor.hpp"

namespace deepctrl::nets {

struct DenseLayer {
  Tensor W;  // (out, in)
  Tensor b;  // (1, out)
};

struct BatchNormLayer {
  Tensor gamma;        // (1, F)
  Tensor beta;         // (1, F)
  Tensor moving_mean;  // (1, F)
  Tensor moving_var;   // (1, F)
  double epsilon = 1e-5;
  double momentum = 0.99;
};

enum class OutputHead { Linear, NonNegative };

// Hidden layers use ReLU; the output layer is linear, or gets a ReLU when the
// head is NonNegative. Batch norm sits after each hidden linear map, before
// its activation; the output layer is never normalized.
struct Subnetwork {
  int input_dim = 0;
  int output_dim = 0;
  std::vector<int> hidden;
  OutputHead head = OutputHead::Linear;
  bool use_batchnorm = false;
  std::vector<DenseLayer> layers;  // hidden.size() + 1
  std::vector<BatchNormLayer> bn;  // hidden.size() when use_batchnorm
};

// Weights ~ N(0, 2/fan_in), biases zero, gamma 1, beta 0, moving mean 0,
// moving variance 1.
Subnetwork init_subnetwork(int input_dim, const std::vector<int>& hidden, int output_dim,
                           OutputHead head, bool use_batchnorm, RngStream& rng);

// Records each parameter tensor bound into a tape so gradients can be routed
// back to the owning tensor after backward().
struct ParamRegistry {
  struct Entry {
    std::string name;
    Tensor* tensor;
    ad::NodeId leaf;
  };
  std::vector<Entry> entries;

  ad::NodeId bind(ad::Tape& tape, std::string name, Tensor* tensor) {
    ad::NodeId id = tape.leaf(*tensor);
    entries.push_back({std::move(name), tensor, id});
    return id;
  }
};

// Builds the forward pass on the tape. With a null registry the parameters
// enter as constants (evaluation-only pass). `prefix` names the parameters,
// e.g. "t3" -> "t3.layer0.W".
ad::NodeId subnetwork_forward(ad::Tape& tape, Subnetwork& net, ad::NodeId input, ad::BnMode mode,
                              ParamRegistry* registry = nullptr, const std::string& prefix = "");

// Value-level forward on a scratch tape.
Tensor subnetwork_eval(Subnetwork& net, const Tensor& input, ad::BnMode mode);

// Standalone batch-norm forward for one layer (train updates running stats).
Tensor batchnorm_forward(const Tensor& x, BatchNormLayer& layer, ad::BnMode mode);

// Stable enumeration of all trainable tensors of one subnetwork.
struct ParamRef {
  std::string name;
  Tensor* tensor;
};
std::vector<ParamRef> subnetwork_parameters(Subnetwork& net, const std::string& prefix);

}  // namespace deepctrl::nets
