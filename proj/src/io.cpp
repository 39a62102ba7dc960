#include "deepctrl/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

namespace deepctrl::io {

using nlohmann::json;

namespace {

const json& require_field(const json& j, const std::string& field, const std::string& path) {
  auto it = j.find(field);
  if (it == j.end()) throw ConfigError(path + field + ": missing");
  return *it;
}

template <typename T>
T get_field(const json& j, const std::string& field, const std::string& path) {
  const json& v = require_field(j, field, path);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + field + ": wrong type");
  }
}

template <typename T>
T get_or(const json& j, const std::string& field, const std::string& path, T fallback) {
  if (!j.contains(field) || j.at(field).is_null()) return fallback;
  try {
    return j.at(field).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + field + ": wrong type");
  }
}

json chain_to_json(const envs::MarkovChain& chain) {
  return json{{"levels", chain.levels}, {"rows", chain.rows}};
}

envs::MarkovChain chain_from_json(const json& j, const std::string& path) {
  envs::MarkovChain chain;
  chain.levels = get_field<std::vector<double>>(j, "levels", path);
  chain.rows = get_field<std::vector<std::vector<double>>>(j, "rows", path);
  chain.validate();
  return chain;
}

}  // namespace

json tensor_to_json(const Tensor& t) {
  return json{{"shape", t.shape}, {"data", t.data}};
}

Tensor tensor_from_json(const json& j, const std::string& field) {
  if (!j.is_object() || !j.contains("shape") || !j.contains("data")) {
    throw ConfigError(field + ": expected a tensor object with shape and data");
  }
  try {
    return Tensor(j.at("shape").get<std::vector<std::size_t>>(), j.at("data").get<std::vector<double>>());
  } catch (const std::exception& e) {
    throw ConfigError(field + ": " + e.what());
  }
}

std::string environment_kind(const Environment& env) {
  if (std::holds_alternative<envs::LqProblem>(env)) return "lq";
  if (std::holds_alternative<envs::ExecutionModel>(env)) return "execution";
  if (std::holds_alternative<envs::EnergySingleModel>(env)) return "energy_single";
  return "energy_multi";
}

ctl::ControlProblem environment_problem(const Environment& env) {
  return std::visit([](const auto& model) { return model.to_control_problem(); }, env);
}

json environment_to_json(const Environment& env) {
  json j;
  j["version"] = 1;
  j["kind"] = environment_kind(env);
  if (const auto* lq = std::get_if<envs::LqProblem>(&env)) {
    j["F"] = tensor_to_json(lq->F);
    j["G"] = tensor_to_json(lq->G);
    j["Q"] = tensor_to_json(lq->Q);
    j["R"] = tensor_to_json(lq->R);
    j["Q_T"] = tensor_to_json(lq->Q_T);
    j["noise_chol"] = tensor_to_json(lq->noise_chol);
    j["s0"] = tensor_to_json(lq->s0);
    j["horizon"] = lq->horizon;
  } else if (const auto* ex = std::get_if<envs::ExecutionModel>(&env)) {
    j["n"] = ex->n;
    j["m"] = ex->m;
    j["horizon"] = ex->horizon;
    j["A"] = tensor_to_json(ex->A);
    j["B"] = tensor_to_json(ex->B);
    j["C"] = tensor_to_json(ex->C);
    j["drift"] = tensor_to_json(ex->drift);
    j["vol_chol"] = tensor_to_json(ex->vol_chol);
    j["eta_chol"] = tensor_to_json(ex->eta_chol);
    j["dt"] = ex->dt;
    j["target_shares"] = tensor_to_json(ex->target_shares);
    j["p0"] = tensor_to_json(ex->p0);
    j["x0"] = tensor_to_json(ex->x0);
  } else if (const auto* es = std::get_if<envs::EnergySingleModel>(&env)) {
    j["wind"] = chain_to_json(es->wind);
    j["price"] = chain_to_json(es->price);
    j["demand"] = chain_to_json(es->demand);
    j["gamma_c"] = es->gamma_c;
    j["gamma_d"] = es->gamma_d;
    j["r_max"] = es->r_max;
    j["r0"] = es->r0;
    j["w0"] = es->w0;
    j["p0"] = es->p0;
    j["d0"] = es->d0;
    j["horizon"] = es->horizon;
  } else if (const auto* em = std::get_if<envs::EnergyMultiModel>(&env)) {
    json devices = json::array();
    for (const auto& d : em->devices) {
      devices.push_back(json{{"r_max", d.r_max},
                             {"gamma_c", d.gamma_c},
                             {"gamma_d", d.gamma_d},
                             {"eta_c", d.eta_c},
                             {"eta_d", d.eta_d},
                             {"beta", d.beta}});
    }
    j["devices"] = devices;
    j["wind"] = chain_to_json(em->wind);
    j["price"] = chain_to_json(em->price);
    j["r0"] = em->r0;
    j["w0"] = em->w0;
    j["p0"] = em->p0;
    j["horizon"] = em->horizon;
  }
  return j;
}

Environment environment_from_json(const json& j) {
  const std::string kind = get_field<std::string>(j, "kind", "");
  if (kind == "lq") {
    envs::LqProblem lq;
    lq.F = tensor_from_json(require_field(j, "F", ""), "F");
    lq.G = tensor_from_json(require_field(j, "G", ""), "G");
    lq.Q = tensor_from_json(require_field(j, "Q", ""), "Q");
    lq.R = tensor_from_json(require_field(j, "R", ""), "R");
    lq.Q_T = tensor_from_json(require_field(j, "Q_T", ""), "Q_T");
    lq.noise_chol = tensor_from_json(require_field(j, "noise_chol", ""), "noise_chol");
    lq.s0 = tensor_from_json(require_field(j, "s0", ""), "s0");
    lq.horizon = get_field<int>(j, "horizon", "");
    lq.validate();
    return lq;
  }
  if (kind == "execution") {
    envs::ExecutionModel ex;
    ex.n = get_field<int>(j, "n", "");
    ex.m = get_field<int>(j, "m", "");
    ex.horizon = get_field<int>(j, "horizon", "");
    ex.A = tensor_from_json(require_field(j, "A", ""), "A");
    ex.B = tensor_from_json(require_field(j, "B", ""), "B");
    ex.C = tensor_from_json(require_field(j, "C", ""), "C");
    ex.drift = tensor_from_json(require_field(j, "drift", ""), "drift");
    ex.vol_chol = tensor_from_json(require_field(j, "vol_chol", ""), "vol_chol");
    ex.eta_chol = tensor_from_json(require_field(j, "eta_chol", ""), "eta_chol");
    ex.dt = get_field<double>(j, "dt", "");
    ex.target_shares = tensor_from_json(require_field(j, "target_shares", ""), "target_shares");
    ex.p0 = tensor_from_json(require_field(j, "p0", ""), "p0");
    ex.x0 = tensor_from_json(require_field(j, "x0", ""), "x0");
    ex.validate();
    return ex;
  }
  if (kind == "energy_single") {
    envs::EnergySingleModel es;
    es.wind = chain_from_json(require_field(j, "wind", ""), "wind.");
    es.price = chain_from_json(require_field(j, "price", ""), "price.");
    es.demand = chain_from_json(require_field(j, "demand", ""), "demand.");
    es.gamma_c = get_field<double>(j, "gamma_c", "");
    es.gamma_d = get_field<double>(j, "gamma_d", "");
    es.r_max = get_field<double>(j, "r_max", "");
    es.r0 = get_field<double>(j, "r0", "");
    es.w0 = get_field<int>(j, "w0", "");
    es.p0 = get_field<int>(j, "p0", "");
    es.d0 = get_field<int>(j, "d0", "");
    es.horizon = get_field<int>(j, "horizon", "");
    es.validate();
    return es;
  }
  if (kind == "energy_multi") {
    envs::EnergyMultiModel em;
    const json& devices = require_field(j, "devices", "");
    if (!devices.is_array() || devices.empty()) throw ConfigError("devices: expected a non-empty array");
    for (std::size_t i = 0; i < devices.size(); ++i) {
      const std::string path = "devices[" + std::to_string(i) + "].";
      envs::EnergyDevice d;
      d.r_max = get_field<double>(devices[i], "r_max", path);
      d.gamma_c = get_field<double>(devices[i], "gamma_c", path);
      d.gamma_d = get_field<double>(devices[i], "gamma_d", path);
      d.eta_c = get_field<double>(devices[i], "eta_c", path);
      d.eta_d = get_field<double>(devices[i], "eta_d", path);
      d.beta = get_field<double>(devices[i], "beta", path);
      em.devices.push_back(d);
    }
    em.wind = chain_from_json(require_field(j, "wind", ""), "wind.");
    em.price = chain_from_json(require_field(j, "price", ""), "price.");
    em.r0 = get_field<std::vector<double>>(j, "r0", "");
    em.w0 = get_field<int>(j, "w0", "");
    em.p0 = get_field<int>(j, "p0", "");
    em.horizon = get_field<int>(j, "horizon", "");
    em.validate();
    return em;
  }
  throw ConfigError("kind: unknown environment kind '" + kind + "'");
}

Environment load_environment(const std::filesystem::path& path) {
  return environment_from_json(read_json(path));
}

void save_environment(const std::filesystem::path& path, const Environment& env) {
  write_json(path, environment_to_json(env));
}

void RunConfig::validate() const {
  train.validate();
  if (evaluation_samples <= 0) throw ConfigError("evaluation_samples: must be positive");
  if (seeds.empty()) throw ConfigError("seeds: must list at least one seed");
  std::set<std::uint64_t> distinct(seeds.begin(), seeds.end());
  if (distinct.size() != seeds.size()) throw ConfigError("seeds: must be distinct");
  if (!std::filesystem::exists(environment_file)) {
    throw ConfigError("environment.file: no such file: " + environment_file.string());
  }
}

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  const json& env = require_field(j, "environment", "");
  const std::filesystem::path file = get_field<std::string>(env, "file", "environment.");
  cfg.environment_file = file.is_absolute() ? file : base_dir / file;

  const json& tr = require_field(j, "training", "");
  const std::string path = "training.";
  cfg.train.batch_size = get_field<int>(tr, "batch_size", path);
  cfg.train.iterations = get_field<long>(tr, "iterations", path);
  cfg.train.validation_batch_size = get_or<int>(tr, "validation_batch_size", path, 4096);
  cfg.train.validation_every = get_or<long>(tr, "validation_every", path, 100);
  cfg.train.hidden = get_field<std::vector<int>>(tr, "hidden", path);
  cfg.train.use_batchnorm = get_or<bool>(tr, "use_batchnorm", path, true);
  cfg.train.eval_chunk = get_or<int>(tr, "eval_chunk", path, 4096);
  {
    auto raw = get_field<std::vector<std::vector<double>>>(tr, "learning_rate", path);
    if (raw.empty()) throw ConfigError("training.learning_rate: must not be empty");
    cfg.train.lr_schedule.clear();
    for (const auto& e : raw) {
      if (e.size() != 2) throw ConfigError("training.learning_rate: entries are [start_iteration, rate]");
      cfg.train.lr_schedule.push_back({static_cast<long>(e[0]), e[1]});
    }
  }
  if (tr.contains("penalty_lambda") && !tr.at("penalty_lambda").is_null()) {
    cfg.train.lambda_override = get_field<std::vector<double>>(tr, "penalty_lambda", path);
  }
  if (tr.contains("penalty_sigma") && !tr.at("penalty_sigma").is_null()) {
    cfg.train.sigma_override = get_field<std::vector<double>>(tr, "penalty_sigma", path);
  }
  cfg.evaluation_samples = get_or<long>(j, "evaluation_samples", "", 100000);
  cfg.seeds = get_field<std::vector<std::uint64_t>>(j, "seeds", "");
  cfg.output_dir = get_or<std::string>(j, "output_dir", "", "runs/out");
  if (cfg.output_dir.is_relative()) cfg.output_dir = base_dir / cfg.output_dir;
  return cfg;
}

json run_config_to_json(const RunConfig& cfg) {
  json tr;
  tr["batch_size"] = cfg.train.batch_size;
  tr["iterations"] = cfg.train.iterations;
  tr["validation_batch_size"] = cfg.train.validation_batch_size;
  tr["validation_every"] = cfg.train.validation_every;
  tr["hidden"] = cfg.train.hidden;
  tr["use_batchnorm"] = cfg.train.use_batchnorm;
  tr["eval_chunk"] = cfg.train.eval_chunk;
  json sched = json::array();
  for (const auto& e : cfg.train.lr_schedule) {
    sched.push_back(json::array({static_cast<double>(e.start_iteration), e.rate}));
  }
  tr["learning_rate"] = sched;
  if (cfg.train.lambda_override) tr["penalty_lambda"] = *cfg.train.lambda_override;
  if (cfg.train.sigma_override) tr["penalty_sigma"] = *cfg.train.sigma_override;
  json j;
  j["version"] = 1;
  j["environment"] = json{{"file", cfg.environment_file.string()}};
  j["training"] = tr;
  j["evaluation_samples"] = cfg.evaluation_samples;
  j["seeds"] = cfg.seeds;
  j["output_dir"] = cfg.output_dir.string();
  return j;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from_json(read_json(path), path.parent_path());
}

json policy_to_json(ctl::StackedPolicy& policy) {
  json subnets = json::array();
  for (std::size_t t = 0; t < policy.subnets.size(); ++t) {
    const nets::Subnetwork& net = policy.subnets[t];
    json layers = json::array();
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      json layer;
      layer["timestep"] = t;
      layer["layer"] = l;
      layer["W"] = tensor_to_json(net.layers[l].W);
      layer["b"] = tensor_to_json(net.layers[l].b);
      if (net.use_batchnorm && l < net.bn.size()) {
        const nets::BatchNormLayer& bn = net.bn[l];
        layer["batchnorm"] = json{{"gamma", tensor_to_json(bn.gamma)},
                                  {"beta", tensor_to_json(bn.beta)},
                                  {"moving_mean", tensor_to_json(bn.moving_mean)},
                                  {"moving_var", tensor_to_json(bn.moving_var)},
                                  {"epsilon", bn.epsilon},
                                  {"momentum", bn.momentum}};
      }
      layers.push_back(std::move(layer));
    }
    subnets.push_back(json{{"timestep", t},
                           {"input_dim", net.input_dim},
                           {"output_dim", net.output_dim},
                           {"hidden", net.hidden},
                           {"head", net.head == nets::OutputHead::NonNegative ? "nonnegative" : "linear"},
                           {"use_batchnorm", net.use_batchnorm},
                           {"layers", std::move(layers)}});
  }
  return json{{"format_version", 1},
              {"horizon", policy.subnets.size()},
              {"skip_batchnorm_first", policy.skip_batchnorm_first},
              {"subnets", std::move(subnets)}};
}

ctl::StackedPolicy policy_from_json(const json& j) {
  if (get_field<int>(j, "format_version", "checkpoint.") != 1) {
    throw ConfigError("checkpoint.format_version: unsupported");
  }
  ctl::StackedPolicy policy;
  policy.skip_batchnorm_first = get_field<bool>(j, "skip_batchnorm_first", "checkpoint.");
  for (const json& sj : require_field(j, "subnets", "checkpoint.")) {
    nets::Subnetwork net;
    net.input_dim = get_field<int>(sj, "input_dim", "subnet.");
    net.output_dim = get_field<int>(sj, "output_dim", "subnet.");
    net.hidden = get_field<std::vector<int>>(sj, "hidden", "subnet.");
    net.head = get_field<std::string>(sj, "head", "subnet.") == "nonnegative"
                   ? nets::OutputHead::NonNegative
                   : nets::OutputHead::Linear;
    net.use_batchnorm = get_field<bool>(sj, "use_batchnorm", "subnet.");
    for (const json& lj : require_field(sj, "layers", "subnet.")) {
      nets::DenseLayer layer;
      layer.W = tensor_from_json(require_field(lj, "W", "layer."), "layer.W");
      layer.b = tensor_from_json(require_field(lj, "b", "layer."), "layer.b");
      net.layers.push_back(std::move(layer));
      if (lj.contains("batchnorm") && !lj.at("batchnorm").is_null()) {
        const json& bj = lj.at("batchnorm");
        nets::BatchNormLayer bn;
        bn.gamma = tensor_from_json(require_field(bj, "gamma", "batchnorm."), "batchnorm.gamma");
        bn.beta = tensor_from_json(require_field(bj, "beta", "batchnorm."), "batchnorm.beta");
        bn.moving_mean =
            tensor_from_json(require_field(bj, "moving_mean", "batchnorm."), "batchnorm.moving_mean");
        bn.moving_var =
            tensor_from_json(require_field(bj, "moving_var", "batchnorm."), "batchnorm.moving_var");
        bn.epsilon = get_field<double>(bj, "epsilon", "batchnorm.");
        bn.momentum = get_field<double>(bj, "momentum", "batchnorm.");
        net.bn.push_back(std::move(bn));
      }
    }
    policy.subnets.push_back(std::move(net));
  }
  return policy;
}

json value_table_to_json(const dp::ValueTable& table) {
  return json{{"format_version", 1},
              {"r_grid", table.r_grid},
              {"wind_states", table.wind_states},
              {"price_states", table.price_states},
              {"demand_states", table.demand_states},
              {"horizon", table.horizon},
              {"mesh", table.mesh},
              {"values", table.values},
              {"greedy_charge", table.greedy_charge},
              {"greedy_discharge", table.greedy_discharge}};
}

dp::ValueTable value_table_from_json(const json& j) {
  if (get_field<int>(j, "format_version", "table.") != 1) {
    throw ConfigError("table.format_version: unsupported");
  }
  dp::ValueTable table;
  table.r_grid = get_field<std::vector<double>>(j, "r_grid", "table.");
  table.wind_states = get_field<int>(j, "wind_states", "table.");
  table.price_states = get_field<int>(j, "price_states", "table.");
  table.demand_states = get_field<int>(j, "demand_states", "table.");
  table.horizon = get_field<int>(j, "horizon", "table.");
  table.mesh = get_field<int>(j, "mesh", "table.");
  table.values = get_field<std::vector<std::vector<double>>>(j, "values", "table.");
  table.greedy_charge = get_field<std::vector<std::vector<std::uint8_t>>>(j, "greedy_charge", "table.");
  table.greedy_discharge =
      get_field<std::vector<std::vector<std::uint8_t>>>(j, "greedy_discharge", "table.");
  return table;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_curve_csv(const std::filesystem::path& path, const std::vector<ctl::LearningCurvePoint>& curve) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "iteration,train_objective,val_objective_penalized,val_objective_projected,max_violation,"
         "wall_seconds\n";
  for (const auto& p : curve) {
    out << p.iteration << ',' << format_double(p.train_objective) << ','
        << format_double(p.val_objective_penalized) << ',' << format_double(p.val_objective_projected)
        << ',' << format_double(p.max_violation) << ',' << format_double(p.wall_seconds) << '\n';
  }
}

void write_aggregate_csv(const std::filesystem::path& path,
                         const std::vector<std::vector<ctl::LearningCurvePoint>>& curves) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "iteration,val_objective_penalized_mean,val_objective_penalized_std,"
         "val_objective_projected_mean,val_objective_projected_std,max_violation_mean,"
         "max_violation_std\n";
  if (curves.empty()) return;
  const std::size_t points = curves.front().size();
  const double n = static_cast<double>(curves.size());
  for (std::size_t i = 0; i < points; ++i) {
    auto stats = [&](auto getter) {
      double mean = 0.0;
      for (const auto& c : curves) mean += getter(c[i]);
      mean /= n;
      double var = 0.0;
      for (const auto& c : curves) var += (getter(c[i]) - mean) * (getter(c[i]) - mean);
      var = curves.size() > 1 ? var / (n - 1.0) : 0.0;
      return std::make_pair(mean, std::sqrt(var));
    };
    auto [pm, ps] = stats([](const ctl::LearningCurvePoint& p) { return p.val_objective_penalized; });
    auto [jm, js] = stats([](const ctl::LearningCurvePoint& p) { return p.val_objective_projected; });
    auto [vm, vs] = stats([](const ctl::LearningCurvePoint& p) { return p.max_violation; });
    out << curves.front()[i].iteration << ',' << format_double(pm) << ',' << format_double(ps) << ','
        << format_double(jm) << ',' << format_double(js) << ',' << format_double(vm) << ','
        << format_double(vs) << '\n';
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace deepctrl::io
