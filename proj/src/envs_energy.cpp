#include "deepctrl/envs/energy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace deepctrl::envs {

// ---------------------------------------------------------------------------
// MarkovChain

void MarkovChain::validate() const {
  if (levels.empty() || rows.size() != levels.size()) {
    throw std::invalid_argument("MarkovChain: levels/rows size mismatch");
  }
  for (const auto& row : rows) {
    if (row.size() != levels.size()) throw std::invalid_argument("MarkovChain: ragged transition row");
    double sum = 0.0;
    for (double p : row) {
      if (p < 0.0) throw std::invalid_argument("MarkovChain: negative transition probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw std::invalid_argument("MarkovChain: row mass " + std::to_string(sum) + " is not 1");
    }
  }
}

int MarkovChain::step(int index, double u) const {
  const auto& row = rows[static_cast<std::size_t>(index)];
  double cdf = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    cdf += row[j];
    if (u < cdf) return static_cast<int>(j);
  }
  return static_cast<int>(row.size()) - 1;  // u landed in rounding slack
}

std::vector<double> MarkovChain::stationary(int iterations) const {
  const std::size_t k = levels.size();
  std::vector<double> pi(k, 1.0 / static_cast<double>(k));
  std::vector<double> next(k);
  for (int it = 0; it < iterations; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) next[j] += pi[i] * rows[i][j];
    }
    pi.swap(next);
  }
  return pi;
}

MarkovChain make_persistent_chain(int states, double lo, double hi) {
  if (states < 2) throw std::invalid_argument("make_persistent_chain: need at least 2 states");
  MarkovChain chain;
  chain.levels.resize(static_cast<std::size_t>(states));
  for (int i = 0; i < states; ++i) {
    chain.levels[static_cast<std::size_t>(i)] =
        lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(states - 1);
  }
  const double local = 0.85, mix = 0.15;
  const double uniform = mix / static_cast<double>(states);
  chain.rows.assign(static_cast<std::size_t>(states),
                    std::vector<double>(static_cast<std::size_t>(states), uniform));
  for (int i = 0; i < states; ++i) {
    auto& row = chain.rows[static_cast<std::size_t>(i)];
    double stay = 0.5;
    if (i > 0) row[static_cast<std::size_t>(i - 1)] += local * 0.25;
    else stay += 0.25;  // fold the missing neighbor onto self
    if (i + 1 < states) row[static_cast<std::size_t>(i + 1)] += local * 0.25;
    else stay += 0.25;
    row[static_cast<std::size_t>(i)] += local * stay;
  }
  chain.validate();
  return chain;
}

// ---------------------------------------------------------------------------
// Single device

void EnergySingleModel::validate() const {
  wind.validate();
  price.validate();
  demand.validate();
  if (gamma_c < 0.0 || gamma_d < 0.0 || r_max <= 0.0) {
    throw std::invalid_argument("EnergySingleModel: bad transfer caps or capacity");
  }
  if (r0 < 0.0 || r0 > r_max) throw std::invalid_argument("EnergySingleModel: r0 outside [0, r_max]");
  if (horizon <= 0) throw std::invalid_argument("EnergySingleModel: horizon must be positive");
  if (w0 < 0 || w0 >= wind.size() || p0 < 0 || p0 >= price.size() || d0 < 0 || d0 >= demand.size()) {
    throw std::invalid_argument("EnergySingleModel: initial chain index out of range");
  }
}

double EnergySingleModel::reward(double p, double d, const double* a) {
  return p * (d + a[kRm] - a[kMd]);
}

double EnergySingleModel::storage_step(double r, const double* a) {
  return r - a[kRd] + a[kWr] - a[kRm];
}

double EnergySingleModel::storage_step_checked(double r, const double* a) const {
  const double next = storage_step(r, a);
  if (next < -1e-9 || next > r_max + 1e-9) {
    throw std::runtime_error("energy storage step leaves [0, r_max]: r' = " + std::to_string(next));
  }
  return next;
}

void EnergySingleModel::project_row(double r, double w, double d, double* a) const {
  for (int i = 0; i < 5; ++i) a[i] = std::max(0.0, a[i]);
  const double charge_cap = std::max(0.0, std::min(r_max - r, gamma_c));
  a[kWr] = std::min(a[kWr], charge_cap);

  const double wind_use = a[kWr] + a[kWd];
  if (wind_use > w) {
    const double f = wind_use > 0.0 ? w / wind_use : 0.0;
    a[kWr] *= f;
    a[kWd] *= f;
  }
  const double discharge_cap = std::max(0.0, std::min(r, gamma_d));
  const double discharge = a[kRd] + a[kRm];
  if (discharge > discharge_cap) {
    const double f = discharge > 0.0 ? discharge_cap / discharge : 0.0;
    a[kRd] *= f;
    a[kRm] *= f;
  }
  const double served = a[kWd] + a[kRd];
  if (served > d) {
    const double f = served > 0.0 ? d / served : 0.0;
    a[kWd] *= f;
    a[kRd] *= f;
  }
  a[kMd] = d - a[kWd] - a[kRd];  // the uncapped slack source
}

Tensor EnergySingleModel::project(const Tensor& state, const Tensor& control) const {
  Tensor out = control;
  for (std::size_t row = 0; row < state.rows(); ++row) {
    project_row(state.at(row, 0), state.at(row, 1), state.at(row, 3), &out.data[row * 5]);
  }
  return out;
}

double EnergySingleModel::max_violation(double r, double w, double d, const double* a) const {
  double v = 0.0;
  for (int i = 0; i < 5; ++i) v = std::max(v, -a[i]);
  v = std::max(v, std::abs(a[kWd] + a[kRd] + a[kMd] - d));
  v = std::max(v, a[kWr] + a[kWd] - w);
  v = std::max(v, a[kRd] + a[kRm] - std::min(r, gamma_d));
  v = std::max(v, a[kWr] - std::min(r_max - r, gamma_c));
  return v;
}

ChainPaths EnergySingleModel::sample_chain_paths(RngStream& rng, int batch) const {
  ChainPaths paths;
  paths.batch = batch;
  paths.index_paths.assign(static_cast<std::size_t>(horizon) + 1,
                           std::vector<std::array<int, 3>>(static_cast<std::size_t>(batch)));
  for (int b = 0; b < batch; ++b) {
    std::array<int, 3> idx{w0, p0, d0};
    paths.index_paths[0][static_cast<std::size_t>(b)] = idx;
    for (int t = 1; t <= horizon; ++t) {
      idx[0] = wind.step(idx[0], rng.uniform());
      idx[1] = price.step(idx[1], rng.uniform());
      idx[2] = demand.step(idx[2], rng.uniform());
      paths.index_paths[static_cast<std::size_t>(t)][static_cast<std::size_t>(b)] = idx;
    }
  }
  return paths;
}

ctl::ControlProblem EnergySingleModel::to_control_problem() const {
  validate();
  ctl::ControlProblem p;
  p.name = "energy_single";
  p.state_dim = 4;
  p.control_dim = 5;
  p.horizon = horizon;
  p.exo_dim = 3;
  p.initial_state = Tensor::row({r0, wind.levels[static_cast<std::size_t>(w0)],
                                 price.levels[static_cast<std::size_t>(p0)],
                                 demand.levels[static_cast<std::size_t>(d0)]});

  const EnergySingleModel model = *this;
  p.sample_exo = [model](RngStream& rng, int batch) {
    ChainPaths paths = model.sample_chain_paths(rng, batch);
    ctl::ExoBatch exo;
    exo.batch = batch;
    for (int t = 1; t <= model.horizon; ++t) {
      Tensor block = Tensor::zeros({static_cast<std::size_t>(batch), 3});
      for (int b = 0; b < batch; ++b) {
        const auto& idx = paths.index_paths[static_cast<std::size_t>(t)][static_cast<std::size_t>(b)];
        block.at(static_cast<std::size_t>(b), 0) = model.wind.levels[static_cast<std::size_t>(idx[0])];
        block.at(static_cast<std::size_t>(b), 1) = model.price.levels[static_cast<std::size_t>(idx[1])];
        block.at(static_cast<std::size_t>(b), 2) = model.demand.levels[static_cast<std::size_t>(idx[2])];
      }
      exo.steps.push_back(std::move(block));
    }
    return exo;
  };

  p.build_step = [](ad::Tape& t, ad::NodeId s, ad::NodeId a, ad::NodeId exo, int) {
    ad::NodeId dr = t.matmul(a, t.constant(Tensor::column({0.0, 0.0, -1.0, 1.0, -1.0})));
    ad::NodeId r_next = t.add(t.slice_cols(s, 0, 1), dr);
    return t.concat_cols({r_next, exo});
  };
  p.build_stage_cost = [](ad::Tape& t, ad::NodeId s, ad::NodeId a, int) {
    ad::NodeId price_v = t.slice_cols(s, 2, 3);
    ad::NodeId demand_v = t.slice_cols(s, 3, 4);
    ad::NodeId net_sold = t.matmul(a, t.constant(Tensor::column({0.0, -1.0, 0.0, 0.0, 1.0})));
    ad::NodeId reward = t.mul(price_v, t.add(demand_v, net_sold));
    return t.scale(reward, -1.0);  // maximize reward
  };
  p.build_equality = [](ad::Tape& t, ad::NodeId s, ad::NodeId a, int) {
    ad::NodeId served = t.matmul(a, t.constant(Tensor::column({1.0, 1.0, 1.0, 0.0, 0.0})));
    return t.sub(served, t.slice_cols(s, 3, 4));
  };
  const double gc = gamma_c, gd = gamma_d, rmax = r_max;
  p.build_inequality = [gc, gd, rmax](ad::Tape& t, ad::NodeId s, ad::NodeId a, int) {
    ad::NodeId r = t.slice_cols(s, 0, 1);
    ad::NodeId w = t.slice_cols(s, 1, 2);
    // wind budget: w - a_wr - a_wd
    ad::NodeId wind_use = t.matmul(a, t.constant(Tensor::column({1.0, 0.0, 0.0, 1.0, 0.0})));
    ad::NodeId h1 = t.sub(w, wind_use);
    // discharge budget: min(r, gamma_d) - a_rd - a_rm
    ad::NodeId min_rd = t.sub(r, t.relu(t.add_scalar(r, -gd)));
    ad::NodeId discharge = t.matmul(a, t.constant(Tensor::column({0.0, 0.0, 1.0, 0.0, 1.0})));
    ad::NodeId h2 = t.sub(min_rd, discharge);
    // charge headroom: min(r_max - r, gamma_c) - a_wr
    ad::NodeId headroom = t.add_scalar(t.scale(r, -1.0), rmax);
    ad::NodeId min_c = t.sub(headroom, t.relu(t.add_scalar(headroom, -gc)));
    ad::NodeId h3 = t.sub(min_c, t.slice_cols(a, 3, 4));
    return t.concat_cols({h1, h2, h3});
  };
  p.lambda = {500.0};
  p.sigma = {500.0, 500.0, 500.0};

  p.project = [model](const Tensor& s, const Tensor& a, int) { return model.project(s, a); };
  p.head = nets::OutputHead::NonNegative;

  const double w_hi = wind.levels.back();
  const double p_hi = price.levels.back();
  const double d_hi = demand.levels.back();
  p.feature_offset = Tensor::row({0.0, 0.0, 0.0, 0.0});
  p.feature_scale = Tensor::row({r_max, std::max(w_hi, 1.0), std::max(p_hi, 1.0), std::max(d_hi, 1.0)});
  p.action_offset = Tensor::zeros({1, 5});
  p.action_scale = Tensor::row({std::max(d_hi, 1.0), std::max(d_hi, 1.0), std::max(gamma_d, 1.0),
                                std::max(gamma_c, 1.0), std::max(gamma_d, 1.0)});
  return p;
}

EnergySingleModel make_canonical_single(int horizon) {
  EnergySingleModel model;
  model.wind = make_persistent_chain(9, 0.0, 16.0);
  model.price = make_persistent_chain(11, 10.0, 70.0);
  model.demand = make_persistent_chain(7, 0.0, 12.0);
  model.gamma_c = 3.0;
  model.gamma_d = 4.0;
  model.r_max = 30.0;
  model.r0 = 15.0;
  model.w0 = 4;
  model.p0 = 5;
  model.d0 = 3;
  model.horizon = horizon;
  model.validate();
  return model;
}

// ---------------------------------------------------------------------------
// Multi device

void EnergyMultiModel::validate() const {
  wind.validate();
  price.validate();
  if (devices.empty()) throw std::invalid_argument("EnergyMultiModel: no devices");
  if (horizon <= 0) throw std::invalid_argument("EnergyMultiModel: horizon must be positive");
  if (r0.size() != devices.size()) throw std::invalid_argument("EnergyMultiModel: r0 size mismatch");
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const EnergyDevice& d = devices[i];
    if (!(d.eta_c > 0.0 && d.eta_c <= 1.0 && d.eta_d > 0.0 && d.eta_d <= 1.0)) {
      throw std::invalid_argument("EnergyMultiModel: efficiencies must lie in (0, 1]");
    }
    if (d.beta < 0.0 || d.r_max <= 0.0 || d.gamma_c < 0.0 || d.gamma_d < 0.0) {
      throw std::invalid_argument("EnergyMultiModel: bad device parameters");
    }
    if (r0[i] < 0.0 || r0[i] > d.r_max) throw std::invalid_argument("EnergyMultiModel: r0 out of range");
  }
  // capacities ascend; caps, efficiencies and holding costs never increase
  for (std::size_t i = 0; i + 1 < devices.size(); ++i) {
    const EnergyDevice& a = devices[i];
    const EnergyDevice& b = devices[i + 1];
    if (!(b.r_max >= a.r_max && b.gamma_c <= a.gamma_c && b.gamma_d <= a.gamma_d &&
          b.eta_c <= a.eta_c && b.eta_d <= a.eta_d && b.beta <= a.beta)) {
      throw std::invalid_argument("EnergyMultiModel: device parameters violate monotonicity");
    }
  }
}

double EnergyMultiModel::reward(double p, const double* r, const double* a) const {
  double total = 0.0;
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const EnergyDevice& d = devices[i];
    total += p * (d.eta_d * a[3 * i + 1] - a[3 * i + 2]) - d.beta * r[i];
  }
  return total;
}

void EnergyMultiModel::storage_step(const double* r, const double* a, double* r_next) const {
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const EnergyDevice& d = devices[i];
    r_next[i] = r[i] + d.eta_c * a[3 * i] - a[3 * i + 1] + d.eta_c * a[3 * i + 2];
  }
}

void EnergyMultiModel::project_row(const double* r, double w, double* a) const {
  double wind_total = 0.0;
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const EnergyDevice& d = devices[i];
    double& wr = a[3 * i];
    double& rm = a[3 * i + 1];
    double& mr = a[3 * i + 2];
    wr = std::max(0.0, wr);
    rm = std::max(0.0, rm);
    mr = std::max(0.0, mr);
    rm = std::min(rm, std::max(0.0, std::min(r[i], d.gamma_d)));
    const double headroom = std::max(0.0, std::min((d.r_max - r[i]) / d.eta_c, d.gamma_c));
    const double charge = wr + mr;
    if (charge > headroom) {
      const double f = charge > 0.0 ? headroom / charge : 0.0;
      wr *= f;
      mr *= f;
    }
    wind_total += wr;
  }
  if (wind_total > w) {
    const double f = wind_total > 0.0 ? w / wind_total : 0.0;
    for (std::size_t i = 0; i < devices.size(); ++i) a[3 * i] *= f;
  }
}

Tensor EnergyMultiModel::project(const Tensor& state, const Tensor& control) const {
  const std::size_t n = devices.size();
  Tensor out = control;
  for (std::size_t row = 0; row < state.rows(); ++row) {
    project_row(&state.data[row * state.cols()], state.at(row, n), &out.data[row * 3 * n]);
  }
  return out;
}

double EnergyMultiModel::max_violation(const double* r, double w, const double* a) const {
  double v = 0.0;
  double wind_total = 0.0;
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const EnergyDevice& d = devices[i];
    for (int k = 0; k < 3; ++k) v = std::max(v, -a[3 * i + static_cast<std::size_t>(k)]);
    v = std::max(v, a[3 * i + 1] - std::min(r[i], d.gamma_d));
    const double headroom = std::min((d.r_max - r[i]) / d.eta_c, d.gamma_c);
    v = std::max(v, a[3 * i] + a[3 * i + 2] - headroom);
    wind_total += a[3 * i];
  }
  v = std::max(v, wind_total - w);
  return v;
}

ctl::ControlProblem EnergyMultiModel::to_control_problem() const {
  validate();
  const int n = device_count();
  const auto nn = static_cast<std::size_t>(n);
  ctl::ControlProblem p;
  p.name = "energy_multi";
  p.state_dim = n + 2;
  p.control_dim = 3 * n;
  p.horizon = horizon;
  p.exo_dim = 2;

  p.initial_state = Tensor::zeros({1, nn + 2});
  for (int i = 0; i < n; ++i) p.initial_state.data[static_cast<std::size_t>(i)] = r0[static_cast<std::size_t>(i)];
  p.initial_state.data[nn] = wind.levels[static_cast<std::size_t>(w0)];
  p.initial_state.data[nn + 1] = price.levels[static_cast<std::size_t>(p0)];

  const EnergyMultiModel model = *this;
  p.sample_exo = [model](RngStream& rng, int batch) {
    ctl::ExoBatch exo;
    exo.batch = batch;
    for (int t = 0; t < model.horizon; ++t) {
      exo.steps.push_back(Tensor::zeros({static_cast<std::size_t>(batch), 2}));
    }
    for (int b = 0; b < batch; ++b) {
      int iw = model.w0, ip = model.p0;
      for (int t = 0; t < model.horizon; ++t) {
        iw = model.wind.step(iw, rng.uniform());
        ip = model.price.step(ip, rng.uniform());
        exo.steps[static_cast<std::size_t>(t)].at(static_cast<std::size_t>(b), 0) =
            model.wind.levels[static_cast<std::size_t>(iw)];
        exo.steps[static_cast<std::size_t>(t)].at(static_cast<std::size_t>(b), 1) =
            model.price.levels[static_cast<std::size_t>(ip)];
      }
    }
    return exo;
  };

  // a -> delta r mapping: phi_i = (eta_c_i, -1, eta_c_i)
  Tensor flow = Tensor::zeros({3 * nn, nn});
  for (int i = 0; i < n; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    flow.at(3 * ii + 0, ii) = devices[ii].eta_c;
    flow.at(3 * ii + 1, ii) = -1.0;
    flow.at(3 * ii + 2, ii) = devices[ii].eta_c;
  }
  p.build_step = [flow, nn](ad::Tape& t, ad::NodeId s, ad::NodeId a, ad::NodeId exo, int) {
    ad::NodeId r_next = t.add(t.slice_cols(s, 0, nn), t.matmul(a, t.constant(flow)));
    return t.concat_cols({r_next, exo});
  };

  Tensor sell = Tensor::zeros({3 * nn, 1});
  Tensor beta_col = Tensor::zeros({nn, 1});
  for (int i = 0; i < n; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    sell.at(3 * ii + 1, 0) = devices[ii].eta_d;
    sell.at(3 * ii + 2, 0) = -1.0;
    beta_col.at(ii, 0) = devices[ii].beta;
  }
  p.build_stage_cost = [sell, beta_col, nn](ad::Tape& t, ad::NodeId s, ad::NodeId a, int) {
    ad::NodeId price_v = t.slice_cols(s, nn + 1, nn + 2);
    ad::NodeId market = t.mul(price_v, t.matmul(a, t.constant(sell)));
    ad::NodeId holding = t.matmul(t.slice_cols(s, 0, nn), t.constant(beta_col));
    return t.scale(t.sub(market, holding), -1.0);
  };

  Tensor select_wr = Tensor::zeros({3 * nn, nn});
  Tensor select_rm = Tensor::zeros({3 * nn, nn});
  Tensor select_mr = Tensor::zeros({3 * nn, nn});
  Tensor gd_row = Tensor::zeros({1, nn});
  Tensor gc_row = Tensor::zeros({1, nn});
  Tensor rmax_row = Tensor::zeros({1, nn});
  Tensor inv_eta_row = Tensor::zeros({1, nn});
  for (int i = 0; i < n; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    select_wr.at(3 * ii + 0, ii) = 1.0;
    select_rm.at(3 * ii + 1, ii) = 1.0;
    select_mr.at(3 * ii + 2, ii) = 1.0;
    gd_row.data[ii] = devices[ii].gamma_d;
    gc_row.data[ii] = devices[ii].gamma_c;
    rmax_row.data[ii] = devices[ii].r_max;
    inv_eta_row.data[ii] = 1.0 / devices[ii].eta_c;
  }
  p.build_inequality = [select_wr, select_rm, select_mr, gd_row, gc_row, rmax_row, inv_eta_row,
                        nn](ad::Tape& t, ad::NodeId s, ad::NodeId a, int) {
    ad::NodeId r = t.slice_cols(s, 0, nn);
    ad::NodeId w = t.slice_cols(s, nn, nn + 1);
    ad::NodeId a_wr = t.matmul(a, t.constant(select_wr));
    ad::NodeId a_rm = t.matmul(a, t.constant(select_rm));
    ad::NodeId a_mr = t.matmul(a, t.constant(select_mr));
    // discharge: min(r_i, gamma_d_i) - a_rm_i
    ad::NodeId min_rd = t.sub(r, t.relu(t.sub(r, t.constant(gd_row))));
    ad::NodeId h_discharge = t.sub(min_rd, a_rm);
    // charge headroom: min((r_max_i - r_i)/eta_c_i, gamma_c_i) - a_wr_i - a_mr_i
    ad::NodeId room = t.mul(t.sub(t.constant(rmax_row), r), t.constant(inv_eta_row));
    ad::NodeId headroom = t.sub(room, t.relu(t.sub(room, t.constant(gc_row))));
    ad::NodeId h_charge = t.sub(headroom, t.add(a_wr, a_mr));
    // shared wind budget: w - sum_i a_wr_i
    ad::NodeId h_wind = t.sub(w, ad::sum_cols(t, a_wr));
    return t.concat_cols({h_discharge, h_charge, h_wind});
  };
  p.sigma.assign(static_cast<std::size_t>(2 * n + 1), 30.0);

  p.project = [model](const Tensor& s, const Tensor& a, int) { return model.project(s, a); };
  p.head = nets::OutputHead::NonNegative;

  p.feature_offset = Tensor::zeros({1, nn + 2});
  p.feature_scale = Tensor::zeros({1, nn + 2});
  for (int i = 0; i < n; ++i) p.feature_scale.data[static_cast<std::size_t>(i)] = devices[static_cast<std::size_t>(i)].r_max;
  p.feature_scale.data[nn] = std::max(wind.levels.back(), 1.0);
  p.feature_scale.data[nn + 1] = std::max(price.levels.back(), 1.0);
  p.action_offset = Tensor::zeros({1, 3 * nn});
  p.action_scale = Tensor::zeros({1, 3 * nn});
  for (int i = 0; i < n; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    p.action_scale.data[3 * ii + 0] = std::max(devices[ii].gamma_c, 1.0);
    p.action_scale.data[3 * ii + 1] = std::max(devices[ii].gamma_d, 1.0);
    p.action_scale.data[3 * ii + 2] = std::max(devices[ii].gamma_c, 1.0);
  }
  return p;
}

EnergyMultiModel make_canonical_multi(int devices, int horizon, std::uint64_t seed) {
  if (devices <= 0) throw std::invalid_argument("make_canonical_multi: need at least one device");
  RngStream rng(seed, StreamKind::Misc, static_cast<std::uint64_t>(devices));
  EnergyMultiModel model;
  model.wind = make_persistent_chain(9, 0.0, 16.0);
  model.price = make_persistent_chain(11, 10.0, 70.0);
  model.w0 = 4;
  model.p0 = 5;
  model.horizon = horizon;
  for (int i = 0; i < devices; ++i) {
    const double frac = devices == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(devices - 1);
    // bounded jitter, small enough to keep every sequence monotone
    const double spacing = devices > 1 ? 1.0 / static_cast<double>(devices - 1) : 1.0;
    const double jitter = 0.2 * spacing * (rng.uniform() - 0.5);
    const double f = std::clamp(frac + jitter, 0.0, 1.0);
    EnergyDevice d;
    d.r_max = 20.0 + 80.0 * frac;  // capacities stay exactly ascending
    d.gamma_c = 10.0 - 8.0 * f;
    d.gamma_d = 10.0 - 8.0 * f;
    d.eta_c = 0.99 - 0.19 * f;
    d.eta_d = 0.99 - 0.19 * f;
    d.beta = 0.02 - 0.019 * f;
    model.devices.push_back(d);
    model.r0.push_back(d.r_max / 2.0);
  }
  // enforce monotonicity exactly even under jitter
  for (std::size_t i = 1; i < model.devices.size(); ++i) {
    EnergyDevice& prev = model.devices[i - 1];
    EnergyDevice& cur = model.devices[i];
    cur.gamma_c = std::min(cur.gamma_c, prev.gamma_c);
    cur.gamma_d = std::min(cur.gamma_d, prev.gamma_d);
    cur.eta_c = std::min(cur.eta_c, prev.eta_c);
    cur.eta_d = std::min(cur.eta_d, prev.eta_d);
    cur.beta = std::min(cur.beta, prev.beta);
  }
  model.validate();
  return model;
}

}  // namespace deepctrl::envs
