#include "deepctrl/envs/lq.hpp"

#include <Eigen/Dense>

#include <stdexcept>

namespace deepctrl::envs {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

RowMat to_eigen(const Tensor& t) {
  return Eigen::Map<const RowMat>(t.data.data(), t.rows(), t.cols());
}

}  // namespace

Tensor LqProblem::noise_covariance() const {
  const RowMat L = to_eigen(noise_chol);
  RowMat cov = L * L.transpose();
  Tensor out = Tensor::zeros({noise_chol.rows(), noise_chol.rows()});
  Eigen::Map<RowMat>(out.data.data(), out.rows(), out.cols()) = cov;
  return out;
}

void LqProblem::validate() const {
  const std::size_t m = F.rows();
  const std::size_t n = G.cols();
  if (F.cols() != m || G.rows() != m || Q.rows() != m || Q.cols() != m || R.rows() != n ||
      R.cols() != n || Q_T.rows() != m || Q_T.cols() != m || noise_chol.rows() != m ||
      noise_chol.cols() != m || s0.rows() != 1 || s0.cols() != m) {
    throw std::invalid_argument("LqProblem: inconsistent matrix dimensions");
  }
  if (horizon <= 0) throw std::invalid_argument("LqProblem: horizon must be positive");
  Eigen::SelfAdjointEigenSolver<RowMat> r_eig(to_eigen(R));
  if (r_eig.eigenvalues().minCoeff() <= 0.0) {
    throw std::invalid_argument("LqProblem: R must be positive definite");
  }
  Eigen::SelfAdjointEigenSolver<RowMat> q_eig(to_eigen(Q));
  Eigen::SelfAdjointEigenSolver<RowMat> qt_eig(to_eigen(Q_T));
  if (q_eig.eigenvalues().minCoeff() < -1e-12 || qt_eig.eigenvalues().minCoeff() < -1e-12) {
    throw std::invalid_argument("LqProblem: Q and Q_T must be positive semidefinite");
  }
}

ctl::ControlProblem LqProblem::to_control_problem() const {
  validate();
  ctl::ControlProblem p;
  p.name = "lq";
  p.state_dim = state_dim();
  p.control_dim = control_dim();
  p.horizon = horizon;
  p.exo_dim = state_dim();
  p.initial_state = s0;

  const int m = state_dim();
  const int T = horizon;
  const Tensor chol = noise_chol;
  p.sample_exo = [m, T, chol](RngStream& rng, int batch) {
    ctl::ExoBatch exo;
    exo.batch = batch;
    for (int t = 0; t < T; ++t) {
      exo.steps.push_back(Tensor::zeros({static_cast<std::size_t>(batch), static_cast<std::size_t>(m)}));
    }
    std::vector<double> z(m);
    for (int b = 0; b < batch; ++b) {
      for (int t = 0; t < T; ++t) {
        for (int i = 0; i < m; ++i) z[i] = rng.normal();
        for (int i = 0; i < m; ++i) {
          double v = 0.0;
          for (int j = 0; j <= i; ++j) v += chol.at(i, j) * z[j];
          exo.steps[t].at(b, i) = v;
        }
      }
    }
    return exo;
  };

  const Tensor Ft = transpose(F);
  const Tensor Gt = transpose(G);
  p.build_step = [Ft, Gt](ad::Tape& t, ad::NodeId s, ad::NodeId a, ad::NodeId exo, int) {
    return t.add(t.add(t.matmul(s, t.constant(Ft)), t.matmul(a, t.constant(Gt))), exo);
  };
  const Tensor Qc = Q, Rc = R, QTc = Q_T;
  p.build_stage_cost = [Qc, Rc](ad::Tape& t, ad::NodeId s, ad::NodeId a, int) {
    ad::NodeId cs = ad::dot_rows(t, t.matmul(s, t.constant(Qc)), s);
    ad::NodeId ca = ad::dot_rows(t, t.matmul(a, t.constant(Rc)), a);
    return t.add(cs, ca);
  };
  p.build_terminal_cost = [QTc](ad::Tape& t, ad::NodeId s) {
    return ad::dot_rows(t, t.matmul(s, t.constant(QTc)), s);
  };
  return p;
}

LqProblem make_default_lq(int state_dim, int control_dim, int horizon) {
  LqProblem lq;
  const auto m = static_cast<std::size_t>(state_dim);
  const auto n = static_cast<std::size_t>(control_dim);
  // mildly unstable drift so doing nothing is visibly suboptimal
  lq.F = Tensor::identity(m);
  for (std::size_t i = 0; i < m; ++i) {
    lq.F.at(i, i) = 1.05;
    if (i + 1 < m) lq.F.at(i, i + 1) = 0.1;
  }
  lq.G = Tensor::zeros({m, n});
  for (std::size_t i = 0; i < std::min(m, n); ++i) lq.G.at(i, i) = 1.0;
  lq.Q = Tensor::identity(m);
  lq.R = Tensor::identity(n);
  for (std::size_t i = 0; i < n; ++i) lq.R.at(i, i) = 0.5;
  lq.Q_T = Tensor::identity(m);
  for (std::size_t i = 0; i < m; ++i) lq.Q_T.at(i, i) = 2.0;
  lq.noise_chol = Tensor::identity(m);
  for (std::size_t i = 0; i < m; ++i) lq.noise_chol.at(i, i) = 0.3;
  lq.s0 = Tensor::full({1, m}, 1.0);
  lq.horizon = horizon;
  return lq;
}

}  // namespace deepctrl::envs
