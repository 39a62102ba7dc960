#include "deepctrl/baselines/riccati.hpp"

#include <Eigen/Dense>

#include <stdexcept>

namespace deepctrl::dp {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

RowMat view(const Tensor& t) { return Eigen::Map<const RowMat>(t.data.data(), t.rows(), t.cols()); }

Tensor from_eigen(const RowMat& m) {
  Tensor t = Tensor::zeros({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  Eigen::Map<RowMat>(t.data.data(), t.rows(), t.cols()) = m;
  return t;
}

}  // namespace

LqSolution lq_riccati(const envs::LqProblem& lq) {
  lq.validate();  // rejects singular R
  const RowMat F = view(lq.F);
  const RowMat G = view(lq.G);
  const RowMat Q = view(lq.Q);
  const RowMat R = view(lq.R);
  const int T = lq.horizon;

  LqSolution sol;
  sol.value.assign(static_cast<std::size_t>(T) + 1, Tensor{});
  sol.gains.assign(static_cast<std::size_t>(T), Tensor{});
  RowMat P = view(lq.Q_T);
  sol.value[static_cast<std::size_t>(T)] = from_eigen(P);
  for (int t = T - 1; t >= 0; --t) {
    const RowMat GPG = R + G.transpose() * P * G;
    const RowMat K = GPG.ldlt().solve(G.transpose() * P * F);
    const RowMat closed = F - G * K;
    RowMat P_next = Q + K.transpose() * R * K + closed.transpose() * P * closed;
    P = 0.5 * (P_next + P_next.transpose());
    sol.gains[static_cast<std::size_t>(t)] = from_eigen(K);
    sol.value[static_cast<std::size_t>(t)] = from_eigen(P);
  }
  return sol;
}

double LqSolution::expected_cost(const Tensor& s0, const Tensor& noise_cov) const {
  const RowMat P0 = view(value.front());
  const RowMat s = view(s0);
  double cost = (s * P0 * s.transpose())(0, 0);
  const RowMat cov = view(noise_cov);
  for (std::size_t t = 1; t < value.size(); ++t) {
    cost += (view(value[t]) * cov).trace();
  }
  return cost;
}

Tensor LqSolution::optimal_control(int t, const Tensor& state_row) const {
  if (t < 0 || static_cast<std::size_t>(t) >= gains.size()) {
    throw std::invalid_argument("LqSolution: timestep out of range");
  }
  const RowMat K = view(gains[static_cast<std::size_t>(t)]);
  const RowMat s = view(state_row);
  RowMat a = -(K * s.transpose()).transpose();
  return from_eigen(a);
}

}  // namespace deepctrl::dp
