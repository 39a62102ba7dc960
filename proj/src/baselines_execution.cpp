#include "deepctrl/baselines/execution_dp.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace deepctrl::dp {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

RowMat view(const Tensor& t) { return Eigen::Map<const RowMat>(t.data.data(), t.rows(), t.cols()); }

Vec rowvec(const Tensor& t) {
  return Eigen::Map<const Vec>(t.data.data(), static_cast<Eigen::Index>(t.numel()));
}

Tensor from_eigen(const RowMat& m) {
  Tensor t = Tensor::zeros({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  Eigen::Map<RowMat>(t.data.data(), t.rows(), t.cols()) = m;
  return t;
}

Tensor row_from(const Vec& v) {
  Tensor t = Tensor::zeros({1, static_cast<std::size_t>(v.size())});
  for (Eigen::Index i = 0; i < v.size(); ++i) t.data[static_cast<std::size_t>(i)] = v(i);
  return t;
}

// stage cost in dollar-trade terms: 1'y + y'Ay + y'Bx
double stage_cost_dollars(const envs::ExecutionModel& model, const Vec& y, const Vec& x) {
  const RowMat A = view(model.A);
  const RowMat B = view(model.B);
  return y.sum() + y.dot(A * y) + y.dot(B * x);
}

// E V_{t+1} as a function of the post-trade dollar remainder v = u - y,
// assembled directly from the stored t+1 coefficients and the price-growth
// moments (the route the recursion algebra is checked against).
double expected_continuation(const ExecutionValue& val, int t_next, const Vec& v, const Vec& x) {
  const envs::ExecutionModel& model = val.model;
  const RowMat G2 = view(model.growth_second_moment());
  const Vec k = rowvec(model.growth_mean());
  const RowMat C = view(model.C);
  const RowMat Qn = view(val.Q[static_cast<std::size_t>(t_next)]);
  const RowMat Sn = view(val.S[static_cast<std::size_t>(t_next)]);
  const RowMat Mn = view(val.M[static_cast<std::size_t>(t_next)]);
  const Vec lun = rowvec(val.lu[static_cast<std::size_t>(t_next)]);
  const Vec lxn = rowvec(val.lx[static_cast<std::size_t>(t_next)]);
  const RowMat eta_cov = view(model.eta_chol) * view(model.eta_chol).transpose();

  const Vec cx = C * x;
  double ev = v.dot((G2.cwiseProduct(Qn)) * v);
  ev += (k.cwiseProduct(v)).dot(Sn * cx);
  ev += (k.cwiseProduct(lun)).dot(v);
  ev += cx.dot(Mn * cx) + (Mn * eta_cov).trace();
  ev += lxn.dot(cx);
  ev += val.q[static_cast<std::size_t>(t_next)];
  return ev;
}

}  // namespace

double ExecutionValue::value(int t, const Tensor& p_tilde, const Tensor& x, const Tensor& w) const {
  const Vec u = rowvec(p_tilde).cwiseProduct(rowvec(w));
  const Vec xv = rowvec(x);
  const auto tt = static_cast<std::size_t>(t);
  double v = u.dot(view(Q[tt]) * u);
  v += u.dot(view(S[tt]) * xv);
  v += xv.dot(view(M[tt]) * xv);
  v += rowvec(lu[tt]).dot(u);
  v += rowvec(lx[tt]).dot(xv);
  v += q[tt];
  return v;
}

double ExecutionValue::expected_optimal_cost() const {
  return value(0, model.p0, model.x0, model.target_shares);
}

Tensor ExecutionValue::optimal_trade(int t, const Tensor& p_tilde, const Tensor& x, const Tensor& w) const {
  if (t == model.horizon - 1) return w;  // forced final trade
  const auto tt = static_cast<std::size_t>(t);
  const Vec u = rowvec(p_tilde).cwiseProduct(rowvec(w));
  const Vec y = view(Kw[tt]) * u + view(Kx[tt]) * rowvec(x) + rowvec(kc[tt]);
  Tensor a = Tensor::zeros({1, static_cast<std::size_t>(model.n)});
  for (int i = 0; i < model.n; ++i) a.data[static_cast<std::size_t>(i)] = y(i) / p_tilde.data[static_cast<std::size_t>(i)];
  return a;
}

double ExecutionValue::bellman_residual(int t, const Tensor& p_tilde, const Tensor& x, const Tensor& w) const {
  if (t >= model.horizon - 1) {
    // terminal slice: compare against the forced-trade cost directly
    const double direct = model.trade_cost(p_tilde, x, w);
    const double stored = value(t, p_tilde, x, w);
    return std::abs(direct - stored) / std::max(1.0, std::abs(direct));
  }
  const auto tt = static_cast<std::size_t>(t);
  const Vec u = rowvec(p_tilde).cwiseProduct(rowvec(w));
  const Vec xv = rowvec(x);
  const Vec y_star = view(Kw[tt]) * u + view(Kx[tt]) * xv + rowvec(kc[tt]);

  auto f = [&](const Vec& y) {
    return stage_cost_dollars(model, y, xv) + expected_continuation(*this, t + 1, u - y, xv);
  };
  const double rhs = f(y_star);
  const double stored = value(t, p_tilde, x, w);
  double residual = std::abs(rhs - stored) / std::max(1.0, std::abs(stored));

  // first-order probe: f is smooth in y, so the gradient at y* must vanish
  Vec y = y_star;
  for (int i = 0; i < model.n; ++i) {
    const double h = 1e-4 * (1.0 + std::abs(y(i)));
    const double orig = y(i);
    y(i) = orig + h;
    const double fp = f(y);
    y(i) = orig - h;
    const double fm = f(y);
    y(i) = orig;
    const double grad = (fp - fm) / (2.0 * h);
    residual = std::max(residual, std::abs(grad) * (1.0 + std::abs(orig)) / std::max(1.0, std::abs(rhs)));
  }
  return residual;
}

ExecutionValue execution_optimal(const envs::ExecutionModel& model, double residual_tolerance) {
  model.validate();
  const int n = model.n;
  const int T = model.horizon;
  ExecutionValue val;
  val.model = model;
  const auto steps = static_cast<std::size_t>(T);
  val.Q.assign(steps, Tensor{});
  val.S.assign(steps, Tensor{});
  val.M.assign(steps, Tensor{});
  val.lu.assign(steps, Tensor{});
  val.lx.assign(steps, Tensor{});
  val.q.assign(steps, 0.0);
  if (T >= 2) {
    val.Kw.assign(steps - 1, Tensor{});
    val.Kx.assign(steps - 1, Tensor{});
    val.kc.assign(steps - 1, Tensor{});
  }

  const RowMat A = view(model.A);
  const RowMat B = view(model.B);
  const RowMat C = view(model.C);
  const RowMat G2 = view(model.growth_second_moment());
  const Vec k = rowvec(model.growth_mean());
  const RowMat eta_cov = view(model.eta_chol) * view(model.eta_chol).transpose();

  // forced final trade: V_{T-1} = 1'u + u'Au + u'Bx
  val.Q[steps - 1] = from_eigen(A);
  val.S[steps - 1] = from_eigen(B);
  val.M[steps - 1] = from_eigen(RowMat::Zero(model.m, model.m));
  val.lu[steps - 1] = Tensor::full({1, static_cast<std::size_t>(n)}, 1.0);
  val.lx[steps - 1] = Tensor::zeros({1, static_cast<std::size_t>(model.m)});
  val.q[steps - 1] = 0.0;

  for (int t = T - 2; t >= 0; --t) {
    const auto tt = static_cast<std::size_t>(t);
    const RowMat Qn = view(val.Q[tt + 1]);
    const RowMat Sn = view(val.S[tt + 1]);
    const RowMat Mn = view(val.M[tt + 1]);
    const Vec lun = rowvec(val.lu[tt + 1]);
    const Vec lxn = rowvec(val.lx[tt + 1]);

    const RowMat Qg = G2.cwiseProduct(Qn);  // growth-inflated curvature
    const RowMat H = A + Qg;
    const Eigen::LDLT<RowMat> Hldlt(H);
    if (Hldlt.info() != Eigen::Success) {
      throw std::runtime_error("execution_optimal: trade curvature is not positive definite at t = " +
                               std::to_string(t));
    }
    const RowMat Psi = B - k.asDiagonal() * Sn * C;
    const Vec phi = Vec::Ones(n) - k.cwiseProduct(lun);

    const RowMat HinvQ = Hldlt.solve(Qg);
    const RowMat HinvPsi = Hldlt.solve(Psi);
    const Vec Hinvphi = Hldlt.solve(phi);

    RowMat Qt = Qg - Qg * HinvQ;
    Qt = 0.5 * (Qt + Qt.transpose());
    const RowMat St = k.asDiagonal() * Sn * C + Qg * HinvPsi;
    RowMat Mt = C.transpose() * Mn * C - 0.25 * Psi.transpose() * HinvPsi;
    Mt = 0.5 * (Mt + Mt.transpose());
    const Vec lut = k.cwiseProduct(lun) + Qg * Hinvphi;
    const Vec lxt = C.transpose() * lxn - 0.5 * Psi.transpose() * Hinvphi;
    const double qt = val.q[tt + 1] + (Mn * eta_cov).trace() - 0.25 * phi.dot(Hinvphi);

    val.Q[tt] = from_eigen(Qt);
    val.S[tt] = from_eigen(St);
    val.M[tt] = from_eigen(Mt);
    val.lu[tt] = row_from(lut);
    val.lx[tt] = row_from(lxt);
    val.q[tt] = qt;
    val.Kw[tt] = from_eigen(HinvQ);
    val.Kx[tt] = from_eigen(RowMat(-0.5 * HinvPsi));
    val.kc[tt] = row_from(Vec(-0.5 * Hinvphi));
  }

  // ansatz verification on sampled states
  RngStream rng(901, StreamKind::Misc);
  for (int t = 0; t < T; ++t) {
    for (int trial = 0; trial < 8; ++trial) {
      Tensor p = model.p0;
      for (double& v : p.data) v *= std::exp(0.1 * rng.normal());
      Tensor x = model.x0;
      for (double& v : x.data) v += 0.5 * rng.normal();
      Tensor w = model.target_shares;
      for (double& v : w.data) v *= rng.uniform();
      const double res = val.bellman_residual(t, p, x, w);
      if (res > residual_tolerance) {
        throw std::runtime_error("execution_optimal: ansatz residual " + std::to_string(res) +
                                 " at t = " + std::to_string(t) + " exceeds tolerance");
      }
    }
  }
  return val;
}

double simulate_policy_cost(const envs::ExecutionModel& model, const TradeRule& rule, long samples,
                            RngStream& rng, double* std_error_out) {
  const int T = model.horizon;
  double sum = 0.0, sumsq = 0.0;
  Tensor z = Tensor::zeros({1, static_cast<std::size_t>(model.n)});
  Tensor eps = Tensor::zeros({1, static_cast<std::size_t>(model.m)});
  for (long s = 0; s < samples; ++s) {
    Tensor p = model.p0;
    Tensor x = model.x0;
    Tensor w = model.target_shares;
    double cost = 0.0;
    for (int t = 0; t < T; ++t) {
      Tensor a = t == T - 1 ? w : rule(t, p, x, w);
      cost += model.trade_cost(p, x, a);
      for (std::size_t i = 0; i < w.data.size(); ++i) w.data[i] -= a.data[i];
      for (double& v : z.data) v = rng.normal();
      for (double& v : eps.data) v = rng.normal();
      p = model.price_step(p, z);
      x = model.factor_step(x, eps);
    }
    sum += cost;
    sumsq += cost * cost;
  }
  const double mean = sum / static_cast<double>(samples);
  if (std_error_out != nullptr) {
    const double var =
        samples > 1 ? std::max(0.0, (sumsq - static_cast<double>(samples) * mean * mean) /
                                        static_cast<double>(samples - 1))
                    : 0.0;
    *std_error_out = std::sqrt(var / static_cast<double>(samples));
  }
  return mean;
}

}  // namespace deepctrl::dp
