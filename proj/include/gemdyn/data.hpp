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

#ifndef GEMDYN_DATA_HPP_
#define GEMDYN_DATA_HPP_

// Transition collection, episode-contiguous splits and JSON-lines storage.
//
// File format: the first line is a header object
//   {"format": "gemdyn-transitions-v1", "env": ..., "seed": ..., "policy": ...,
//    "count": N, "splits": [train, val, test]}
// followed by N lines {"episode": e, "t": t, "s": [...], "a": [...], "s_next": [...]}.

#include <Eigen/Core>

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "gemdyn/envs.hpp"
#include "gemdyn/errors.hpp"
#include "gemdyn/models.hpp"
#include "gemdyn/rng.hpp"

namespace gemdyn {

enum class Policy { kUniformRandom, kOuNoise, kEnergySwingup };

inline std::string to_string(Policy p) {
  switch (p) {
    case Policy::kUniformRandom: return "uniform_random";
    case Policy::kOuNoise: return "ou_noise";
    case Policy::kEnergySwingup: return "energy_swingup";
  }
  return "?";
}

inline Policy parse_policy(const std::string& s) {
  for (Policy p : {Policy::kUniformRandom, Policy::kOuNoise, Policy::kEnergySwingup})
    if (to_string(p) == s) return p;
  throw ContractError("unknown policy '" + s +
                      "' (available: uniform_random, ou_noise, energy_swingup)");
}

inline Policy default_policy(const std::string& env) {
  return env == "pendulum" ? Policy::kEnergySwingup : Policy::kOuNoise;
}

// AR(1) noise with stationary std `sigma` per unit of half action range.
struct OuConfig {
  double phi = 0.9;
  double sigma = 0.4;
};

enum class Split { kTrain = 0, kVal = 1, kTest = 2 };

struct Dataset {
  std::string env;
  std::uint64_t seed = 0;
  std::string policy;
  std::vector<Transition> transitions;
  std::vector<Split> marks;
  std::vector<double> fractions = {1.0, 0.0, 0.0};
  Normalizer state_stats;
  Normalizer action_stats;

  std::size_t size() const { return transitions.size(); }

  std::vector<int> indices(Split s) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < marks.size(); ++i)
      if (marks[i] == s) out.push_back(static_cast<int>(i));
    return out;
  }

  std::size_t count(Split s) const { return indices(s).size(); }
};

// Pendulum energy pump with a balancing PD law near upright.
inline double scripted_swingup(const Env& pendulum, const Vec& x) {
  const Constants& k = pendulum.spec().constants;
  const double m = k.at("mass"), l = k.at("length"), g = k.at("gravity");
  const double umax = k.at("max_torque");
  const double theta = wrap_angle(x[0]), omega = x[1];
  const double energy = 0.5 * m * l * l * omega * omega + m * g * l * std::cos(theta);
  double u;
  if (std::cos(theta) > std::cos(0.5)) {
    u = -m * g * l * std::sin(theta) - 25.0 * theta - 8.0 * omega;
  } else {
    u = 2.0 * (m * g * l - energy) * (omega >= 0.0 ? 1.0 : -1.0);
  }
  return std::clamp(u, -umax, umax);
}

inline Mat stack_rows(const std::vector<Vec>& v) {
  Mat m(v.size(), v.empty() ? 0 : v[0].size());
  for (std::size_t i = 0; i < v.size(); ++i) m.row(i) = v[i].transpose();
  return m;
}

inline void fit_stats(Dataset& ds) {
  std::vector<int> rows = ds.indices(Split::kTrain);
  if (rows.empty()) {
    rows.resize(ds.size());
    std::iota(rows.begin(), rows.end(), 0);
  }
  if (rows.empty()) return;
  std::vector<Vec> s, a;
  for (int i : rows) {
    s.push_back(ds.transitions[i].s);
    a.push_back(ds.transitions[i].a);
  }
  ds.state_stats = Normalizer::fit(stack_rows(s));
  ds.action_stats = Normalizer::fit(stack_rows(a));
}

// Assigns whole episodes to train, val, test in order; an episode goes to the
// split containing its first transition's cumulative position.
inline void split(Dataset& ds, const std::vector<double>& fractions) {
  if (fractions.size() != 3) throw ContractError("split needs three fractions");
  double total = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw ContractError("split fractions must be nonnegative");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ContractError("split fractions must sum to 1");
  ds.fractions = fractions;
  ds.marks.assign(ds.size(), Split::kTrain);
  const double n = static_cast<double>(ds.size());
  const double b1 = std::round(fractions[0] * n);
  const double b2 = std::round((fractions[0] + fractions[1]) * n);
  Split current = Split::kTrain;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (i == 0 || ds.transitions[i].episode != ds.transitions[i - 1].episode) {
      const double pos = static_cast<double>(i);
      current = pos < b1 ? Split::kTrain : (pos < b2 ? Split::kVal : Split::kTest);
    }
    ds.marks[i] = current;
  }
  fit_stats(ds);
}

inline Dataset collect(const Env& env, Policy policy, std::size_t n, std::uint64_t seed,
                       const OuConfig& ou = {}) {
  if (n < 1) throw ContractError("collect needs n >= 1");
  if (policy == Policy::kEnergySwingup && env.name() != "pendulum")
    throw ContractError("energy_swingup policy is only defined for the pendulum");
  const EnvSpec& spec = env.spec();
  const Vec mid = 0.5 * (spec.action_high + spec.action_low);
  const Vec half = 0.5 * (spec.action_high - spec.action_low);
  Rng rng = make_rng(seed, "collect.policy");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Dataset ds;
  ds.env = env.name();
  ds.seed = seed;
  ds.policy = to_string(policy);
  ds.transitions.reserve(n);
  int episode = 0;
  while (ds.transitions.size() < n) {
    EnvState st = env.reset(derive_seed(seed, "collect.reset", episode));
    Vec noise(spec.action_dim);
    for (int i = 0; i < spec.action_dim; ++i) noise[i] = ou.sigma * normal(rng);
    for (int t = 0; t < spec.episode_length && ds.transitions.size() < n; ++t) {
      Vec a(spec.action_dim);
      switch (policy) {
        case Policy::kUniformRandom:
          for (int i = 0; i < spec.action_dim; ++i) a[i] = mid[i] + half[i] * unit(rng);
          break;
        case Policy::kOuNoise:
        case Policy::kEnergySwingup: {
          if (t > 0)
            for (int i = 0; i < spec.action_dim; ++i)
              noise[i] = ou.phi * noise[i] +
                         ou.sigma * std::sqrt(1.0 - ou.phi * ou.phi) * normal(rng);
          a = mid + half.cwiseProduct(noise);
          if (policy == Policy::kEnergySwingup) a[0] += scripted_swingup(env, st.x);
          break;
        }
      }
      a = env.clip(a);
      const EnvState next = env.step(st, a);
      ds.transitions.push_back({episode, t, st.x, a, next.x});
      st = next;
    }
    ++episode;
  }
  split(ds, {1.0, 0.0, 0.0});
  return ds;
}

inline TransitionBatch to_batch(const Dataset& ds, const StateLayout& layout,
                                const std::vector<int>& rows) {
  std::vector<Vec> s, a, sn;
  for (int i : rows) {
    s.push_back(ds.transitions[i].s);
    a.push_back(ds.transitions[i].a);
    sn.push_back(ds.transitions[i].s_next);
  }
  return make_batch(layout, stack_rows(s), stack_rows(a), stack_rows(sn));
}

inline TransitionBatch to_batch(const Dataset& ds, const StateLayout& layout, Split which) {
  return to_batch(ds, layout, ds.indices(which));
}

// Maximal runs of consecutive steps within one episode and one split.
struct Segment {
  int begin = 0;
  int length = 0;
};

inline std::vector<Segment> segments(const Dataset& ds, Split which) {
  std::vector<Segment> out;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.marks[i] != which) continue;
    const bool contiguous = !out.empty() && out.back().begin + out.back().length ==
                                                static_cast<int>(i) &&
                            ds.transitions[i].episode == ds.transitions[i - 1].episode &&
                            ds.transitions[i].t == ds.transitions[i - 1].t + 1;
    if (contiguous) {
      ++out.back().length;
    } else {
      out.push_back({static_cast<int>(i), 1});
    }
  }
  return out;
}

// Lag-1 autocorrelation of action dimension `dim`, pooled within episodes.
inline double action_autocorrelation(const Dataset& ds, int dim) {
  double mean = 0.0;
  for (const Transition& t : ds.transitions) mean += t.a[dim];
  mean /= static_cast<double>(ds.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double d = ds.transitions[i].a[dim] - mean;
    den += d * d;
    if (i > 0 && ds.transitions[i].episode == ds.transitions[i - 1].episode)
      num += d * (ds.transitions[i - 1].a[dim] - mean);
  }
  return den > 0.0 ? num / den : 0.0;
}

namespace detail {

inline nlohmann::json vec_json(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline Vec json_vec(const nlohmann::json& j, long line, const char* field, int expected) {
  if (!j.is_array()) throw ParseError(std::string("field '") + field + "' must be an array", line);
  const std::vector<double> v = j.get<std::vector<double>>();
  if (expected >= 0 && static_cast<int>(v.size()) != expected)
    throw ParseError(std::string("field '") + field + "' has the wrong length", line);
  return Eigen::Map<const Vec>(v.data(), v.size());
}

}  // namespace detail

inline void save_dataset(const Dataset& ds, std::ostream& out) {
  const nlohmann::json header = {{"format", "gemdyn-transitions-v1"},
                                 {"env", ds.env},
                                 {"seed", ds.seed},
                                 {"policy", ds.policy},
                                 {"count", ds.size()},
                                 {"splits", ds.fractions}};
  out << header.dump() << "\n";
  for (const Transition& t : ds.transitions) {
    const nlohmann::json j = {{"episode", t.episode},
                              {"t", t.t},
                              {"s", detail::vec_json(t.s)},
                              {"a", detail::vec_json(t.a)},
                              {"s_next", detail::vec_json(t.s_next)}};
    out << j.dump() << "\n";
  }
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  save_dataset(ds, out);
  if (!out) throw ParseError("write failed for " + path);
}

// `expected_env` empty accepts any env.
inline Dataset load_dataset(std::istream& in, const std::string& expected_env = "") {
  std::string line;
  long lineno = 1;
  if (!std::getline(in, line)) throw ParseError("empty dataset file", 1);
  Dataset ds;
  std::size_t count = 0;
  try {
    const nlohmann::json h = nlohmann::json::parse(line);
    if (h.at("format").get<std::string>() != "gemdyn-transitions-v1")
      throw ParseError("unsupported dataset format", 1);
    ds.env = h.at("env").get<std::string>();
    ds.seed = h.at("seed").get<std::uint64_t>();
    ds.policy = h.at("policy").get<std::string>();
    count = h.at("count").get<std::size_t>();
    ds.fractions = h.at("splits").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad header: ") + e.what(), 1);
  }
  if (!expected_env.empty() && ds.env != expected_env)
    throw ContractError("dataset holds env '" + ds.env + "' but '" + expected_env +
                        "' was requested");
  const std::unique_ptr<Env> env = make_env(ds.env);
  const int sd = env->spec().state_dim, ad = env->spec().action_dim;
  ds.transitions.reserve(count);
  while (std::getline(in, line)) {
    ++lineno;
    if (ds.transitions.size() == count) throw ParseError("more transitions than header count", lineno);
    Transition t;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      t.episode = j.at("episode").get<int>();
      t.t = j.at("t").get<int>();
      t.s = detail::json_vec(j.at("s"), lineno, "s", sd);
      t.a = detail::json_vec(j.at("a"), lineno, "a", ad);
      t.s_next = detail::json_vec(j.at("s_next"), lineno, "s_next", sd);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed transition: ") + e.what(), lineno);
    }
    ds.transitions.push_back(std::move(t));
  }
  if (ds.transitions.size() != count)
    throw ParseError("file ends after " + std::to_string(ds.transitions.size()) + " of " +
                         std::to_string(count) + " transitions",
                     lineno + 1);
  split(ds, ds.fractions);
  return ds;
}

inline Dataset load_dataset(const std::string& path, const std::string& expected_env = "") {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  return load_dataset(in, expected_env);
}

}  // namespace gemdyn

#endif  // GEMDYN_DATA_HPP_
