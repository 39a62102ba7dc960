#include "deepctrl/nets.hpp"

#include <cmath>
#include <stdexcept>

namespace deepctrl::nets {

Subnetwork init_subnetwork(int input_dim, const std::vector<int>& hidden, int output_dim,
                           OutputHead head, bool use_batchnorm, RngStream& rng) {
  if (input_dim <= 0 || output_dim <= 0) {
    throw std::invalid_argument("init_subnetwork: input/output dims must be positive");
  }
  for (int w : hidden) {
    if (w <= 0) throw std::invalid_argument("init_subnetwork: zero-width hidden layer");
  }
  Subnetwork net;
  net.input_dim = input_dim;
  net.output_dim = output_dim;
  net.hidden = hidden;
  net.head = head;
  net.use_batchnorm = use_batchnorm;

  std::vector<int> widths;
  widths.push_back(input_dim);
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(output_dim);

  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int fan_in = widths[l];
    const int fan_out = widths[l + 1];
    const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
    DenseLayer layer;
    layer.W = Tensor::zeros({static_cast<std::size_t>(fan_out), static_cast<std::size_t>(fan_in)});
    for (double& v : layer.W.data) v = std_dev * rng.normal();
    layer.b = Tensor::zeros({1, static_cast<std::size_t>(fan_out)});
    net.layers.push_back(std::move(layer));
  }
  if (use_batchnorm) {
    for (int w : hidden) {
      BatchNormLayer bn;
      const auto f = static_cast<std::size_t>(w);
      bn.gamma = Tensor::full({1, f}, 1.0);
      bn.beta = Tensor::zeros({1, f});
      bn.moving_mean = Tensor::zeros({1, f});
      bn.moving_var = Tensor::full({1, f}, 1.0);
      net.bn.push_back(std::move(bn));
    }
  }
  return net;
}

ad::NodeId subnetwork_forward(ad::Tape& tape, Subnetwork& net, ad::NodeId input, ad::BnMode mode,
                              ParamRegistry* registry, const std::string& prefix) {
  const Tensor& in = tape.value(input);
  if (static_cast<int>(in.cols()) != net.input_dim) {
    throw std::invalid_argument("subnetwork_forward: input has " + std::to_string(in.cols()) +
                                " features, expected " + std::to_string(net.input_dim));
  }
  auto bind = [&](const std::string& name, Tensor* t) -> ad::NodeId {
    if (registry != nullptr) return registry->bind(tape, prefix.empty() ? name : prefix + "." + name, t);
    return tape.constant(*t);
  };

  ad::NodeId h = input;
  const std::size_t n_hidden = net.hidden.size();
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    DenseLayer& layer = net.layers[l];
    const std::string tag = "layer" + std::to_string(l);
    ad::NodeId w = bind(tag + ".W", &layer.W);
    ad::NodeId b = bind(tag + ".b", &layer.b);
    h = tape.affine(w, h, b);
    const bool is_hidden = l < n_hidden;
    if (is_hidden) {
      if (net.use_batchnorm) {
        BatchNormLayer& bn = net.bn[l];
        ad::NodeId g = bind(tag + ".gamma", &bn.gamma);
        ad::NodeId be = bind(tag + ".beta", &bn.beta);
        h = tape.batch_norm(h, g, be, &bn.moving_mean, &bn.moving_var, bn.epsilon, bn.momentum, mode);
      }
      h = tape.relu(h);
    }
  }
  if (net.head == OutputHead::NonNegative) h = tape.relu(h);
  return h;
}

Tensor subnetwork_eval(Subnetwork& net, const Tensor& input, ad::BnMode mode) {
  ad::Tape tape;
  ad::NodeId in = tape.constant(input);
  ad::NodeId out = subnetwork_forward(tape, net, in, mode);
  return tape.value(out);
}

Tensor batchnorm_forward(const Tensor& x, BatchNormLayer& layer, ad::BnMode mode) {
  ad::Tape tape;
  ad::NodeId in = tape.constant(x);
  ad::NodeId g = tape.constant(layer.gamma);
  ad::NodeId b = tape.constant(layer.beta);
  ad::NodeId out =
      tape.batch_norm(in, g, b, &layer.moving_mean, &layer.moving_var, layer.epsilon, layer.momentum, mode);
  return tape.value(out);
}

std::vector<ParamRef> subnetwork_parameters(Subnetwork& net, const std::string& prefix) {
  std::vector<ParamRef> out;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const std::string tag = prefix + ".layer" + std::to_string(l);
    out.push_back({tag + ".W", &net.layers[l].W});
    out.push_back({tag + ".b", &net.layers[l].b});
    if (net.use_batchnorm && l < net.bn.size()) {
      out.push_back({tag + ".gamma", &net.bn[l].gamma});
      out.push_back({tag + ".beta", &net.bn[l].beta});
    }
  }
  return out;
}

}  // namespace deepctrl::nets
