#include "deepctrl/envs/execution.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace deepctrl::envs {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMat> view(const Tensor& t) {
  return Eigen::Map<const RowMat>(t.data.data(), t.rows(), t.cols());
}

Tensor from_eigen(const RowMat& m) {
  Tensor t = Tensor::zeros({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  Eigen::Map<RowMat>(t.data.data(), t.rows(), t.cols()) = m;
  return t;
}

}  // namespace

void ExecutionModel::validate() const {
  const auto nn = static_cast<std::size_t>(n);
  const auto mm = static_cast<std::size_t>(m);
  if (n <= 0 || m <= 0 || horizon <= 0) throw std::invalid_argument("ExecutionModel: bad dimensions");
  if (A.rows() != nn || A.cols() != nn || B.rows() != nn || B.cols() != mm || C.rows() != mm ||
      C.cols() != mm || drift.cols() != nn || vol_chol.rows() != nn || eta_chol.rows() != mm ||
      target_shares.cols() != nn || p0.cols() != nn || x0.cols() != mm) {
    throw std::invalid_argument("ExecutionModel: inconsistent matrix dimensions");
  }
  for (std::size_t i = 0; i < nn; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (std::abs(A.at(i, j) - A.at(j, i)) > 1e-12) {
        throw std::invalid_argument("ExecutionModel: A must be symmetric");
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<RowMat> a_eig(view(A));
  if (a_eig.eigenvalues().minCoeff() <= 0.0) {
    throw std::invalid_argument("ExecutionModel: A must be positive definite");
  }
  const double rho = view(C).eigenvalues().cwiseAbs().maxCoeff();
  if (rho >= 1.0) throw std::invalid_argument("ExecutionModel: spectral radius of C must be < 1");
  for (double v : p0.data) {
    if (v <= 0.0) throw std::invalid_argument("ExecutionModel: initial prices must be positive");
  }
  if (dt <= 0.0) throw std::invalid_argument("ExecutionModel: dt must be positive");
}

Tensor ExecutionModel::price(const Tensor& p_tilde, const Tensor& x, const Tensor& a) const {
  // p = p~ + P(A P a + B x), P = diag[p~]
  Tensor out = Tensor::zeros({1, static_cast<std::size_t>(n)});
  std::vector<double> pa(n);
  for (int i = 0; i < n; ++i) pa[i] = p_tilde.data[i] * a.data[i];
  for (int i = 0; i < n; ++i) {
    double imp = 0.0;
    for (int j = 0; j < n; ++j) imp += A.at(i, j) * pa[j];
    for (int j = 0; j < m; ++j) imp += B.at(i, j) * x.data[j];
    out.data[i] = p_tilde.data[i] + p_tilde.data[i] * imp;
  }
  return out;
}

double ExecutionModel::trade_cost(const Tensor& p_tilde, const Tensor& x, const Tensor& a) const {
  Tensor p = price(p_tilde, x, a);
  double c = 0.0;
  for (int i = 0; i < n; ++i) c += p.data[i] * a.data[i];
  return c;
}

Tensor ExecutionModel::price_step(const Tensor& p_tilde, const Tensor& z) const {
  Tensor out = p_tilde;
  for (int i = 0; i < n; ++i) {
    double cov_ii = 0.0;
    for (int j = 0; j < n; ++j) cov_ii += vol_chol.at(i, j) * vol_chol.at(i, j);
    double shock = 0.0;
    for (int j = 0; j < n; ++j) shock += vol_chol.at(i, j) * z.data[j];
    out.data[i] = p_tilde.data[i] * std::exp((drift.data[i] - 0.5 * cov_ii) * dt + std::sqrt(dt) * shock);
  }
  return out;
}

Tensor ExecutionModel::factor_step(const Tensor& x, const Tensor& eps) const {
  Tensor out = Tensor::zeros({1, static_cast<std::size_t>(m)});
  for (int i = 0; i < m; ++i) {
    double v = 0.0;
    for (int j = 0; j < m; ++j) v += C.at(i, j) * x.data[j];
    for (int j = 0; j <= i; ++j) v += eta_chol.at(i, j) * eps.data[j];
    out.data[i] = v;
  }
  return out;
}

Tensor ExecutionModel::growth_mean() const {
  Tensor k = Tensor::zeros({1, static_cast<std::size_t>(n)});
  for (int i = 0; i < n; ++i) k.data[i] = std::exp(drift.data[i] * dt);
  return k;
}

Tensor ExecutionModel::growth_second_moment() const {
  const RowMat L = view(vol_chol);
  const RowMat cov = L * L.transpose();
  Tensor k = growth_mean();
  Tensor g = Tensor::zeros({static_cast<std::size_t>(n), static_cast<std::size_t>(n)});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g.at(i, j) = k.data[i] * k.data[j] * std::exp(cov(i, j) * dt);
  }
  return g;
}

double ExecutionModel::no_impact_cost() const {
  double c = 0.0;
  for (int i = 0; i < n; ++i) c += p0.data[i] * target_shares.data[i];
  return c;
}

ctl::ControlProblem ExecutionModel::to_control_problem() const {
  validate();
  ctl::ControlProblem p;
  p.name = "execution";
  p.state_dim = state_dim();
  p.control_dim = n;
  p.horizon = horizon;
  p.exo_dim = n + m;

  p.initial_state = Tensor::zeros({1, static_cast<std::size_t>(state_dim())});
  for (int i = 0; i < n; ++i) p.initial_state.data[i] = p0.data[i];
  for (int i = 0; i < m; ++i) p.initial_state.data[n + i] = x0.data[i];
  for (int i = 0; i < n; ++i) p.initial_state.data[n + m + i] = target_shares.data[i];

  const ExecutionModel model = *this;
  p.sample_exo = [model](RngStream& rng, int batch) {
    ctl::ExoBatch exo;
    exo.batch = batch;
    const std::size_t dim = static_cast<std::size_t>(model.n + model.m);
    for (int t = 0; t < model.horizon; ++t) {
      exo.steps.push_back(Tensor::zeros({static_cast<std::size_t>(batch), dim}));
    }
    Tensor z = Tensor::zeros({1, static_cast<std::size_t>(model.n)});
    Tensor eps = Tensor::zeros({1, static_cast<std::size_t>(model.m)});
    for (int b = 0; b < batch; ++b) {
      Tensor pt = model.p0;
      Tensor xt = model.x0;
      for (int t = 0; t < model.horizon; ++t) {
        for (double& v : z.data) v = rng.normal();
        for (double& v : eps.data) v = rng.normal();
        pt = model.price_step(pt, z);
        xt = model.factor_step(xt, eps);
        for (int i = 0; i < model.n; ++i) exo.steps[t].at(b, i) = pt.data[i];
        for (int i = 0; i < model.m; ++i) exo.steps[t].at(b, model.n + i) = xt.data[i];
      }
    }
    return exo;
  };

  const std::size_t nn = static_cast<std::size_t>(n);
  const std::size_t fm = static_cast<std::size_t>(m);
  p.build_step = [nn, fm](ad::Tape& t, ad::NodeId s, ad::NodeId a, ad::NodeId exo, int) {
    ad::NodeId w = t.slice_cols(s, nn + fm, 2 * nn + fm);
    return t.concat_cols({exo, t.sub(w, a)});
  };

  const Tensor Ac = A;
  const Tensor Bt = transpose(B);
  p.build_stage_cost = [nn, fm, Ac, Bt](ad::Tape& t, ad::NodeId s, ad::NodeId a, int) {
    ad::NodeId pt = t.slice_cols(s, 0, nn);
    ad::NodeId x = t.slice_cols(s, nn, nn + fm);
    ad::NodeId y = t.mul(pt, a);  // dollar trade
    ad::NodeId lin = ad::sum_cols(t, y);
    ad::NodeId quad = ad::dot_rows(t, t.matmul(y, t.constant(Ac)), y);
    ad::NodeId cross = ad::dot_rows(t, t.matmul(x, t.constant(Bt)), y);
    return t.add(t.add(lin, quad), cross);
  };

  const int last = horizon - 1;
  p.is_forced = [last](int t) { return t == last; };
  p.build_forced_control = [nn, fm](ad::Tape& t, ad::NodeId s, int) {
    return t.slice_cols(s, nn + fm, 2 * nn + fm);
  };

  // feature normalization: prices around p0, factors by their stationary
  // standard deviation, shares by the target
  p.feature_offset = p.initial_state;
  p.feature_scale = Tensor::zeros({1, static_cast<std::size_t>(state_dim())});
  for (int i = 0; i < n; ++i) p.feature_scale.data[i] = p0.data[i];
  {
    RowMat ceig = view(C);
    RowMat cov = view(eta_chol) * view(eta_chol).transpose();
    RowMat x_cov = cov;
    for (int it = 0; it < 200; ++it) x_cov = ceig * x_cov * ceig.transpose() + cov;
    for (int i = 0; i < m; ++i) {
      p.feature_scale.data[n + i] = std::max(std::sqrt(x_cov(i, i)), 1e-6);
    }
  }
  for (int i = 0; i < n; ++i) p.feature_scale.data[n + m + i] = target_shares.data[i];

  // action transform: zero network output means the uniform split target/T
  p.action_offset = Tensor::zeros({1, nn});
  p.action_scale = Tensor::zeros({1, nn});
  for (int i = 0; i < n; ++i) {
    p.action_offset.data[i] = target_shares.data[i] / static_cast<double>(horizon);
    p.action_scale.data[i] = target_shares.data[i] / static_cast<double>(horizon);
  }
  return p;
}

ExecutionModel make_canonical_execution_model(std::uint64_t seed, int n, int m, int horizon) {
  RngStream rng(seed, StreamKind::Misc, 77);
  ExecutionModel model;
  model.n = n;
  model.m = m;
  model.horizon = horizon;
  const auto nn = static_cast<std::size_t>(n);
  const auto mm = static_cast<std::size_t>(m);

  // A = 5e-7 (I + 0.5 U) with U a random correlation-like PSD factor,
  // symmetrized; keeps per-period impact convex and coupling moderate.
  RowMat v(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) v(i, j) = rng.normal();
  }
  RowMat u = v * v.transpose();
  u /= u.diagonal().maxCoeff();
  RowMat a = 5e-7 * (RowMat::Identity(n, n) + 0.5 * 0.5 * (u + u.transpose()));
  model.A = from_eigen(a);

  model.B = Tensor::zeros({nn, mm});
  for (double& x : model.B.data) x = 1e-6 * (2.0 * rng.uniform() - 1.0);

  // C scaled to spectral radius 0.5
  RowMat c(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) c(i, j) = rng.normal();
  }
  const double rho = c.eigenvalues().cwiseAbs().maxCoeff();
  c *= 0.5 / rho;
  model.C = from_eigen(c);

  model.drift = Tensor::zeros({1, nn});
  model.vol_chol = Tensor::zeros({nn, nn});
  for (int i = 0; i < n; ++i) model.vol_chol.at(i, i) = 0.02;  // 2% per period, independent
  model.eta_chol = Tensor::zeros({mm, mm});
  for (int i = 0; i < m; ++i) model.eta_chol.at(i, i) = 0.25;
  model.dt = 1.0;
  model.target_shares = Tensor::full({1, nn}, 1e5);
  model.p0 = Tensor::full({1, nn}, 50.0);
  model.x0 = Tensor::zeros({1, mm});
  model.validate();
  return model;
}

double execution_relative_cost(double policy_cost, double oracle_cost, const ExecutionModel& model) {
  const double base = model.no_impact_cost();
  const double denom = oracle_cost - base;
  if (std::abs(denom) < 1e-9 * std::max(1.0, std::abs(base))) {
    throw std::invalid_argument("execution_relative_cost: degenerate oracle with no impact cost");
  }
  return (policy_cost - base) / denom;
}

}  // namespace deepctrl::envs
