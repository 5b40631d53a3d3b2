// Copyright 2026 The gemdyn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GEMDYN_CONFIG_HPP_
#define GEMDYN_CONFIG_HPP_

// Run configuration: a JSON document with every section optional. Unknown
// keys are rejected at every level. `to_json` writes the fully resolved form.

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gemdyn/data.hpp"
#include "gemdyn/envs.hpp"
#include "gemdyn/errors.hpp"
#include "gemdyn/eval.hpp"
#include "gemdyn/models.hpp"
#include "gemdyn/plan.hpp"
#include "gemdyn/train.hpp"
#include "json.hpp"

namespace gemdyn {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DataSection {
  std::string policy = "default";  // or a policy name
  int n_transitions = 26000;
  std::vector<double> split_weights = {20.0, 2.0, 4.0};  // train, val, test
  OuConfig ou;

  Policy resolved_policy(const std::string& env) const {
    return policy == "default" ? default_policy(env) : parse_policy(policy);
  }
  std::vector<double> fractions() const {
    double total = 0.0;
    for (double w : split_weights) total += w;
    std::vector<double> f;
    for (double w : split_weights) f.push_back(w / total);
    return f;
  }
};

struct PlanSection {
  int steps = 50;
};

struct RunConfig {
  std::string env = "pendulum";
  Constants env_constants;  // overrides of the environment defaults
  std::string model = "gem";
  ModelOptions network;
  ad::AdamConfig optimizer;
  DataSection data;
  TrainConfig train;  // seed and adam are taken from seeds / optimizer
  std::vector<int> horizons = default_horizons();
  MppiConfig planner;  // seed is taken from seeds
  PlanSection plan;
  MbrlConfig mbrl;  // planner, adam and seed are taken from the other sections
  std::vector<std::uint64_t> seeds = {1};
  std::string out = "runs/default";

  void validate() const;
  ModelType model_type() const { return parse_model_type(model); }
  TrainConfig train_config(std::uint64_t seed) const {
    TrainConfig t = train;
    t.adam = optimizer;
    t.seed = seed;
    return t;
  }
  MppiConfig planner_config(std::uint64_t seed) const {
    MppiConfig p = planner;
    p.seed = seed;
    return p;
  }
  MbrlConfig mbrl_config(std::uint64_t seed) const {
    MbrlConfig m = mbrl;
    m.planner = planner_config(seed);
    m.adam = optimizer;
    m.seed = seed;
    return m;
  }
};

namespace detail {

// Reads keys from one JSON object and remembers which were consumed.
class Section {
 public:
  Section(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(where(key) + " has the wrong type");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  Section sub(const char* key) {
    seen_.insert(key);
    static const nlohmann::json kEmpty = nlohmann::json::object();
    return Section(j_.contains(key) ? j_.at(key) : kEmpty, path_.empty() ? key : path_ + "." + key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError("unknown config key '" + where(key) + "'");
  }

  std::string where(const std::string& key = "") const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline void RunConfig::validate() const {
  try {
    auto e = make_env(env, env_constants);
    const ModelType t = model_type();
    (void)t;
    if (network.hidden_sizes.empty()) throw ContractError("network.hidden_sizes is empty");
    for (int h : network.hidden_sizes)
      if (h < 1) throw ContractError("network.hidden_sizes entries must be positive");
    optimizer.validate();
    data.resolved_policy(env);
    if (data.n_transitions < 1) throw ContractError("data.n_transitions must be positive");
    if (data.split_weights.size() != 3) throw ContractError("data.split_weights needs 3 entries");
    for (double w : data.split_weights)
      if (!(w >= 0.0)) throw ContractError("data.split_weights must be non-negative");
    if (!(data.split_weights[0] > 0.0)) throw ContractError("the training split is empty");
    if (!(data.ou.phi >= 0.0 && data.ou.phi < 1.0) || !(data.ou.sigma > 0.0))
      throw ContractError("data.ou needs 0 <= phi < 1 and sigma > 0");
    train_config(0).validate();
    if (horizons.empty()) throw ContractError("horizons is empty");
    for (std::size_t i = 0; i < horizons.size(); ++i)
      if (horizons[i] < 1 || (i > 0 && horizons[i] <= horizons[i - 1]))
        throw ContractError("horizons must be positive and increasing");
    planner.validate();
    planner.noise(e->spec());
    if (plan.steps < 1) throw ContractError("plan.steps must be positive");
    mbrl_config(0).validate();
    if (seeds.empty()) throw ContractError("seeds is empty");
    if (out.empty()) throw ContractError("out is empty");
  } catch (const UnknownEnvError&) {
    throw;
  } catch (const std::exception& ex) {
    throw ConfigError(ex.what());
  }
}

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json constants = nlohmann::json::object();
  for (const auto& [k, v] : c.env_constants) constants[k] = v;
  return {
      {"env", c.env},
      {"env_constants", constants},
      {"model", c.model},
      {"network", c.network.to_json()},
      {"optimizer",
       {{"learning_rate", c.optimizer.learning_rate},
        {"beta1", c.optimizer.beta1},
        {"beta2", c.optimizer.beta2},
        {"epsilon", c.optimizer.epsilon}}},
      {"data",
       {{"policy", c.data.policy},
        {"n_transitions", c.data.n_transitions},
        {"split_weights", c.data.split_weights},
        {"ou", {{"phi", c.data.ou.phi}, {"sigma", c.data.ou.sigma}}}}},
      {"train",
       {{"iterations", c.train.iterations},
        {"batch_size", c.train.batch_size},
        {"log_every", c.train.log_every},
        {"train_eval_rows", c.train.train_eval_rows}}},
      {"horizons", c.horizons},
      {"planner",
       {{"horizon", c.planner.horizon},
        {"num_samples", c.planner.num_samples},
        {"temperature", c.planner.temperature},
        {"noise_std", c.planner.noise_std},
        {"iterations", c.planner.iterations}}},
      {"plan", {{"steps", c.plan.steps}}},
      {"mbrl",
       {{"iterations", c.mbrl.iterations},
        {"transitions_per_iteration", c.mbrl.transitions_per_iteration},
        {"train_steps", c.mbrl.train_steps},
        {"batch_size", c.mbrl.batch_size},
        {"observation_period", c.mbrl.observation_period},
        {"final_window", c.mbrl.final_window}}},
      {"seeds", c.seeds},
      {"out", c.out},
  };
}

// Applies `j` on top of `base`; keys absent from `j` keep their values.
inline RunConfig config_from_json(const nlohmann::json& j, RunConfig c = {}) {
  detail::Section root(j, "");
  root.get("env", c.env);
  {
    detail::Section s = root.sub("env_constants");
    std::map<std::string, double> extra;
    if (root.has("env_constants")) {
      try {
        extra = j.at("env_constants").get<std::map<std::string, double>>();
      } catch (const nlohmann::json::exception&) {
        throw ConfigError("env_constants must map names to numbers");
      }
    }
    for (const auto& [k, v] : extra) c.env_constants[k] = v;
  }
  root.get("model", c.model);
  {
    detail::Section s = root.sub("network");
    s.get("hidden_sizes", c.network.hidden_sizes);
    std::string act = ad::to_string(c.network.activation);
    s.get("activation", act);
    try {
      c.network.activation = ad::parse_activation(act);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("network.activation: ") + e.what());
    }
    s.get("velocity_grad_to_coeff", c.network.velocity_grad_to_coeff);
    s.get("baseline_wrap_angles", c.network.baseline_wrap_angles);
    s.finish();
  }
  {
    detail::Section s = root.sub("optimizer");
    s.get("learning_rate", c.optimizer.learning_rate);
    s.get("beta1", c.optimizer.beta1);
    s.get("beta2", c.optimizer.beta2);
    s.get("epsilon", c.optimizer.epsilon);
    s.finish();
  }
  {
    detail::Section s = root.sub("data");
    s.get("policy", c.data.policy);
    s.get("n_transitions", c.data.n_transitions);
    s.get("split_weights", c.data.split_weights);
    detail::Section ou = s.sub("ou");
    ou.get("phi", c.data.ou.phi);
    ou.get("sigma", c.data.ou.sigma);
    ou.finish();
    s.finish();
  }
  {
    detail::Section s = root.sub("train");
    s.get("iterations", c.train.iterations);
    s.get("batch_size", c.train.batch_size);
    s.get("log_every", c.train.log_every);
    s.get("train_eval_rows", c.train.train_eval_rows);
    s.finish();
  }
  root.get("horizons", c.horizons);
  {
    detail::Section s = root.sub("planner");
    s.get("horizon", c.planner.horizon);
    s.get("num_samples", c.planner.num_samples);
    s.get("temperature", c.planner.temperature);
    s.get("noise_std", c.planner.noise_std);
    s.get("iterations", c.planner.iterations);
    s.finish();
  }
  {
    detail::Section s = root.sub("plan");
    s.get("steps", c.plan.steps);
    s.finish();
  }
  {
    detail::Section s = root.sub("mbrl");
    s.get("iterations", c.mbrl.iterations);
    s.get("transitions_per_iteration", c.mbrl.transitions_per_iteration);
    s.get("train_steps", c.mbrl.train_steps);
    s.get("batch_size", c.mbrl.batch_size);
    s.get("observation_period", c.mbrl.observation_period);
    s.get("final_window", c.mbrl.final_window);
    s.finish();
  }
  root.get("seeds", c.seeds);
  root.get("out", c.out);
  root.finish();
  return c;
}

inline RunConfig parse_config(const std::string& text, RunConfig base = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j, std::move(base));
}

inline RunConfig load_config(const std::string& path, RunConfig base = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

inline std::string dump_config(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

// Applies "a.b.c=value"; the value is parsed as JSON, or taken as a string
// when it is not valid JSON.
inline RunConfig apply_override(const RunConfig& c, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  nlohmann::json patch = nlohmann::json::object();
  nlohmann::json* node = &patch;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' is malformed");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
  return config_from_json(patch, c);
}

}  // namespace gemdyn

#endif  // GEMDYN_CONFIG_HPP_
