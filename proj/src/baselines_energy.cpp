#include "deepctrl/baselines/energy_dp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace deepctrl::dp {

namespace {

void append_mesh(std::vector<double>& out, double cap, int mesh) {
  if (cap <= 0.0) {
    out.push_back(0.0);
    return;
  }
  for (int i = 0; i < mesh; ++i) {
    out.push_back(cap * static_cast<double>(i) / static_cast<double>(mesh - 1));
  }
}

}  // namespace

std::size_t ValueTable::state_count() const {
  return r_grid.size() * static_cast<std::size_t>(wind_states) * static_cast<std::size_t>(price_states) *
         static_cast<std::size_t>(demand_states);
}

std::size_t ValueTable::state_index(int ir, int iw, int ip, int id) const {
  return ((static_cast<std::size_t>(ir) * static_cast<std::size_t>(wind_states) +
           static_cast<std::size_t>(iw)) *
              static_cast<std::size_t>(price_states) +
          static_cast<std::size_t>(ip)) *
             static_cast<std::size_t>(demand_states) +
         static_cast<std::size_t>(id);
}

int ValueTable::snap_r(double r) const {
  const double lo = r_grid.front();
  const double hi = r_grid.back();
  const double step = (hi - lo) / static_cast<double>(r_grid.size() - 1);
  const double clamped = std::clamp(r, lo, hi);
  return static_cast<int>(std::lround((clamped - lo) / step));
}

double ValueTable::root_value(const envs::EnergySingleModel& model) const {
  return values[0][state_index(snap_r(model.r0), model.w0, model.p0, model.d0)];
}

std::vector<double> charge_candidates(const envs::EnergySingleModel& model, double r, double w, double d,
                                      int mesh) {
  const double cap = std::max(0.0, std::min({model.r_max - r, model.gamma_c, w}));
  std::vector<double> c;
  append_mesh(c, cap, mesh);
  // breakpoint where demand service stops being wind-limited
  const double kink = w - d;
  if (kink > 0.0 && kink < cap) c.push_back(kink);
  return c;
}

std::vector<double> discharge_candidates(const envs::EnergySingleModel& model, double r, int mesh) {
  const double cap = std::max(0.0, std::min(r, model.gamma_d));
  std::vector<double> c;
  append_mesh(c, cap, mesh);
  return c;
}

void reconstruct_action(double r, double w, double d, double charge, double discharge, double* a) {
  (void)r;
  using namespace envs;
  a[kWr] = charge;
  a[kWd] = std::min(d, w - charge);
  a[kRd] = std::min(d - a[kWd], discharge);
  a[kRm] = discharge - a[kRd];
  a[kMd] = d - a[kWd] - a[kRd];
}

ValueTable energy_dp_lookup(const envs::EnergySingleModel& model, int r_points, int mesh) {
  model.validate();
  if (r_points < 2 || mesh < 2 || mesh > 250) {
    throw std::invalid_argument("energy_dp_lookup: bad grid resolution");
  }
  ValueTable table;
  table.r_grid.resize(static_cast<std::size_t>(r_points));
  for (int i = 0; i < r_points; ++i) {
    table.r_grid[static_cast<std::size_t>(i)] =
        model.r_max * static_cast<double>(i) / static_cast<double>(r_points - 1);
  }
  table.wind_states = model.wind.size();
  table.price_states = model.price.size();
  table.demand_states = model.demand.size();
  table.horizon = model.horizon;
  table.mesh = mesh;

  const std::size_t states = table.state_count();
  const auto T = static_cast<std::size_t>(model.horizon);
  table.values.assign(T + 1, std::vector<double>(states, 0.0));  // terminal slice stays zero
  table.greedy_charge.assign(T, std::vector<std::uint8_t>(states, 0));
  table.greedy_discharge.assign(T, std::vector<std::uint8_t>(states, 0));

  const int R = r_points;
  const int W = table.wind_states;
  const int P = table.price_states;
  const int D = table.demand_states;

  std::vector<double> after_d(states), after_p(states), expected(states);
  for (int t = model.horizon - 1; t >= 0; --t) {
    const auto tt = static_cast<std::size_t>(t);
    const std::vector<double>& next = table.values[tt + 1];

    // contract the three independent chains one at a time
    for (int ir = 0; ir < R; ++ir) {
      for (int iw = 0; iw < W; ++iw) {
        for (int ip = 0; ip < P; ++ip) {
          for (int id = 0; id < D; ++id) {
            double acc = 0.0;
            const auto& row = model.demand.rows[static_cast<std::size_t>(id)];
            for (int jd = 0; jd < D; ++jd) acc += row[static_cast<std::size_t>(jd)] * next[table.state_index(ir, iw, ip, jd)];
            after_d[table.state_index(ir, iw, ip, id)] = acc;
          }
        }
      }
    }
    for (int ir = 0; ir < R; ++ir) {
      for (int iw = 0; iw < W; ++iw) {
        for (int id = 0; id < D; ++id) {
          for (int ip = 0; ip < P; ++ip) {
            double acc = 0.0;
            const auto& row = model.price.rows[static_cast<std::size_t>(ip)];
            for (int jp = 0; jp < P; ++jp) acc += row[static_cast<std::size_t>(jp)] * after_d[table.state_index(ir, iw, jp, id)];
            after_p[table.state_index(ir, iw, ip, id)] = acc;
          }
        }
      }
    }
    for (int ir = 0; ir < R; ++ir) {
      for (int ip = 0; ip < P; ++ip) {
        for (int id = 0; id < D; ++id) {
          for (int iw = 0; iw < W; ++iw) {
            double acc = 0.0;
            const auto& row = model.wind.rows[static_cast<std::size_t>(iw)];
            for (int jw = 0; jw < W; ++jw) acc += row[static_cast<std::size_t>(jw)] * after_p[table.state_index(ir, jw, ip, id)];
            expected[table.state_index(ir, iw, ip, id)] = acc;
          }
        }
      }
    }

    // greedy backup over the two free action dimensions
    for (int ir = 0; ir < R; ++ir) {
      const double r = table.r_grid[static_cast<std::size_t>(ir)];
      for (int iw = 0; iw < W; ++iw) {
        const double w = model.wind.levels[static_cast<std::size_t>(iw)];
        for (int ip = 0; ip < P; ++ip) {
          const double p = model.price.levels[static_cast<std::size_t>(ip)];
          for (int id = 0; id < D; ++id) {
            const double d = model.demand.levels[static_cast<std::size_t>(id)];
            const std::vector<double> charges = charge_candidates(model, r, w, d, mesh);
            const std::vector<double> discharges = discharge_candidates(model, r, mesh);
            double best = -1e300;
            std::uint8_t best_ic = 0, best_idis = 0;
            for (std::size_t ic = 0; ic < charges.size(); ++ic) {
              const double c = charges[ic];
              const double wd = std::min(d, w - c);
              for (std::size_t idis = 0; idis < discharges.size(); ++idis) {
                const double dis = discharges[idis];
                const double reward = p * (dis + wd);
                const int ir_next = table.snap_r(r + c - dis);
                const double total = reward + expected[table.state_index(ir_next, iw, ip, id)];
                if (total > best) {
                  best = total;
                  best_ic = static_cast<std::uint8_t>(ic);
                  best_idis = static_cast<std::uint8_t>(idis);
                }
              }
            }
            const std::size_t si = table.state_index(ir, iw, ip, id);
            table.values[tt][si] = best;
            table.greedy_charge[tt][si] = best_ic;
            table.greedy_discharge[tt][si] = best_idis;
          }
        }
      }
    }
  }
  return table;
}

TableEval table_policy_evaluate(const ValueTable& table, const envs::EnergySingleModel& model,
                                const envs::ChainPaths& paths) {
  if (static_cast<int>(paths.index_paths.size()) != model.horizon + 1) {
    throw std::invalid_argument("table_policy_evaluate: path length does not match the horizon");
  }
  double sum = 0.0, sumsq = 0.0;
  double a[5];
  for (int b = 0; b < paths.batch; ++b) {
    int ir = table.snap_r(model.r0);
    double reward = 0.0;
    for (int t = 0; t < model.horizon; ++t) {
      const auto& idx = paths.index_paths[static_cast<std::size_t>(t)][static_cast<std::size_t>(b)];
      const double r = table.r_grid[static_cast<std::size_t>(ir)];
      const double w = model.wind.levels[static_cast<std::size_t>(idx[0])];
      const double p = model.price.levels[static_cast<std::size_t>(idx[1])];
      const double d = model.demand.levels[static_cast<std::size_t>(idx[2])];
      const std::size_t si = table.state_index(ir, idx[0], idx[1], idx[2]);
      const auto tt = static_cast<std::size_t>(t);
      const std::vector<double> charges = charge_candidates(model, r, w, d, table.mesh);
      const std::vector<double> discharges = discharge_candidates(model, r, table.mesh);
      const double c = charges[table.greedy_charge[tt][si]];
      const double dis = discharges[table.greedy_discharge[tt][si]];
      reconstruct_action(r, w, d, c, dis, a);
      reward += envs::EnergySingleModel::reward(p, d, a);
      ir = table.snap_r(r + c - dis);
    }
    sum += reward;
    sumsq += reward * reward;
  }
  TableEval out;
  const double n = static_cast<double>(paths.batch);
  out.mean = sum / n;
  if (paths.batch > 1) {
    const double var = std::max(0.0, (sumsq - n * out.mean * out.mean) / (n - 1.0));
    out.std_error = std::sqrt(var / n);
  }
  return out;
}

TableEval table_policy_evaluate(const ValueTable& table, const envs::EnergySingleModel& model,
                                long samples, RngStream& rng) {
  envs::ChainPaths paths = model.sample_chain_paths(rng, static_cast<int>(samples));
  return table_policy_evaluate(table, model, paths);
}

}  // namespace deepctrl::dp
