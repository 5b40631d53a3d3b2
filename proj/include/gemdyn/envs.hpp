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

#ifndef GEMDYN_ENVS_HPP_
#define GEMDYN_ENVS_HPP_

// Deterministic rigid-body environments integrated with classical RK4.
//
// Angle convention: 0 is upright for the pendulum, cart-pole and double
// pendulum; the hanging rest position sits on the +-pi branch. Angle entries
// are wrapped to (-pi, pi] after every step.
//
//   pendulum         s = (theta, omega)                 a = (torque)
//   cartpole         s = (x, theta, xdot, omega)        a = (force)
//   double_pendulum  s = (q1, q2, w1, w2), q2 relative  a = (tau1, tau2)
//   reacher          s = (q1, q2, w1, w2), q2 relative  a = (tau1, tau2)
//
// Energies are shifted so the hanging rest configuration has zero energy.

#include <Eigen/Core>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "gemdyn/errors.hpp"
#include "gemdyn/layout.hpp"
#include "gemdyn/rng.hpp"

namespace gemdyn {

using Constants = std::map<std::string, double>;

struct EnvSpec {
  std::string name;
  int state_dim = 0;
  int action_dim = 0;
  Vec action_low;
  Vec action_high;
  double dt = 0.0;
  int episode_length = 0;
  StateLayout layout;
  Constants constants;

  void validate() const {
    if (!(dt > 0.0)) throw ContractError("env dt must be positive");
    if (action_low.size() != action_dim || action_high.size() != action_dim)
      throw ContractError("action bounds do not match action_dim");
    if (!action_low.allFinite() || !action_high.allFinite())
      throw ContractError("action bounds must be finite");
    if ((action_high - action_low).minCoeff() <= 0.0)
      throw ContractError("action bounds must satisfy low < high");
    if (layout.state_dim != state_dim) throw LayoutError("layout does not cover state_dim");
    layout.validate();
  }

  double constant(const std::string& key) const {
    auto it = constants.find(key);
    if (it == constants.end()) throw ContractError("env " + name + " has no constant " + key);
    return it->second;
  }
};

struct EnvState {
  Vec x;
  Vec goal;
};

class Env {
 public:
  explicit Env(EnvSpec spec) : spec_(std::move(spec)) { spec_.validate(); }
  virtual ~Env() = default;

  const EnvSpec& spec() const { return spec_; }
  const std::string& name() const { return spec_.name; }
  double dt() const { return spec_.dt; }

  virtual Vec derivative(const Vec& x, const Vec& a) const = 0;
  virtual EnvState reset(std::uint64_t seed) const = 0;
  virtual double reward(const Vec& x, const Vec& a, const Vec& goal) const = 0;
  virtual bool has_energy() const { return false; }
  virtual double energy(const Vec&) const { throw ContractError(name() + " has no energy"); }

  double reward(const EnvState& s, const Vec& a) const { return reward(s.x, a, s.goal); }

  Vec clip(const Vec& a) const {
    if (a.size() != spec_.action_dim) throw DimensionError("action length mismatch");
    return a.cwiseMax(spec_.action_low).cwiseMin(spec_.action_high);
  }

  // One RK4 step on the unwrapped state, then angle wrapping.
  Vec integrate(const Vec& x, const Vec& a_in) const {
    if (x.size() != spec_.state_dim) throw DimensionError("state length mismatch");
    const Vec a = clip(a_in);
    const double h = spec_.dt;
    const Vec k1 = derivative(x, a);
    const Vec k2 = derivative(x + 0.5 * h * k1, a);
    const Vec k3 = derivative(x + 0.5 * h * k2, a);
    const Vec k4 = derivative(x + h * k3, a);
    Vec next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite()) throw NumericError(name() + ": non-finite state after step");
    return next;
  }

  Vec wrap(Vec x) const {
    for (int i : spec_.layout.angle_indices()) x[i] = wrap_angle(x[i]);
    return x;
  }

  EnvState step(const EnvState& s, const Vec& a) const {
    return {wrap(integrate(s.x, a)), s.goal};
  }

 protected:
  EnvSpec spec_;
};

namespace detail {

inline StateLayout planar_layout(int state_dim, std::vector<int> angles, std::vector<int> raw,
                                 std::vector<int> vel) {
  StateLayout l;
  l.state_dim = state_dim;
  for (int i : angles) l.slots.push_back({lie::GroupKind::kSO2, {i}, std::nullopt});
  l.raw_static_indices = std::move(raw);
  l.velocity_indices = std::move(vel);
  return l;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Constants merge(Constants base, const Constants& overrides, const std::string& env) {
  for (const auto& [k, v] : overrides) {
    if (!base.count(k)) throw ContractError("unknown constant '" + k + "' for env " + env);
    base[k] = v;
  }
  return base;
}

// Two-link planar arm with point masses at the link ends.
struct TwoLink {
  double m1, m2, l1, l2, g, damping;

  Eigen::Matrix2d mass(double q2) const {
    const double c2 = std::cos(q2);
    Eigen::Matrix2d M;
    M(0, 0) = (m1 + m2) * l1 * l1 + m2 * l2 * l2 + 2.0 * m2 * l1 * l2 * c2;
    M(0, 1) = m2 * l2 * l2 + m2 * l1 * l2 * c2;
    M(1, 0) = M(0, 1);
    M(1, 1) = m2 * l2 * l2;
    return M;
  }

  Vec derivative(const Vec& x, const Vec& tau) const {
    const double q1 = x[0], q2 = x[1], w1 = x[2], w2 = x[3];
    const double h = m2 * l1 * l2 * std::sin(q2);
    Eigen::Vector2d rhs;
    rhs[0] = tau[0] + h * (2.0 * w1 * w2 + w2 * w2) +
             g * ((m1 + m2) * l1 * std::sin(q1) + m2 * l2 * std::sin(q1 + q2)) - damping * w1;
    rhs[1] = tau[1] - h * w1 * w1 + g * m2 * l2 * std::sin(q1 + q2) - damping * w2;
    const Eigen::Vector2d acc = mass(q2).partialPivLu().solve(rhs);
    Vec d(4);
    d << w1, w2, acc[0], acc[1];
    return d;
  }

  double energy(const Vec& x) const {
    const Eigen::Vector2d w(x[2], x[3]);
    const double kinetic = 0.5 * w.dot(mass(x[1]) * w);
    const double height = (m1 + m2) * l1 * std::cos(x[0]) + m2 * l2 * std::cos(x[0] + x[1]);
    return kinetic + g * (height + (m1 + m2) * l1 + m2 * l2);
  }

  Eigen::Vector2d tip(const Vec& x) const {
    return {-l1 * std::sin(x[0]) - l2 * std::sin(x[0] + x[1]),
            l1 * std::cos(x[0]) + l2 * std::cos(x[0] + x[1])};
  }
};

}  // namespace detail

// Constants: mass, length, gravity, damping, max_torque, action_cost.
// Reset: theta = pi + U(-0.3, 0.3) (wrapped), omega = U(-0.5, 0.5).
// Reward: cos(theta) - action_cost * u^2.
class Pendulum final : public Env {
 public:
  static Constants defaults() {
    return {{"mass", 1.0}, {"length", 1.0}, {"gravity", 9.81}, {"damping", 0.05},
            {"max_torque", 8.0}, {"action_cost", 0.001}, {"dt", 0.02}, {"episode_length", 200}};
  }

  explicit Pendulum(const Constants& overrides = {}) : Env(make_spec(overrides)) {}

  Vec derivative(const Vec& x, const Vec& a) const override {
    const double m = c("mass"), l = c("length");
    Vec d(2);
    d << x[1], (c("gravity") / l) * std::sin(x[0]) +
                   (a[0] - c("damping") * x[1]) / (m * l * l);
    return d;
  }

  EnvState reset(std::uint64_t seed) const override {
    Rng rng = make_rng(seed, "pendulum.reset");
    Vec x(2);
    x[0] = wrap_angle(std::numbers::pi + detail::uniform(rng, -0.3, 0.3));
    x[1] = detail::uniform(rng, -0.5, 0.5);
    return {x, Vec()};
  }

  double reward(const Vec& x, const Vec& a, const Vec&) const override {
    return std::cos(x[0]) - c("action_cost") * a.squaredNorm();
  }

  bool has_energy() const override { return true; }
  double energy(const Vec& x) const override {
    const double m = c("mass"), l = c("length");
    return 0.5 * m * l * l * x[1] * x[1] + m * c("gravity") * l * (std::cos(x[0]) + 1.0);
  }

 private:
  double c(const char* k) const { return spec_.constants.at(k); }

  static EnvSpec make_spec(const Constants& overrides) {
    EnvSpec s;
    s.name = "pendulum";
    s.constants = detail::merge(defaults(), overrides, s.name);
    s.state_dim = 2;
    s.action_dim = 1;
    s.action_low = Vec::Constant(1, -s.constants["max_torque"]);
    s.action_high = Vec::Constant(1, s.constants["max_torque"]);
    s.dt = s.constants["dt"];
    s.episode_length = static_cast<int>(s.constants["episode_length"]);
    s.layout = detail::planar_layout(2, {0}, {}, {1});
    return s;
  }
};

// Constants: cart_mass, pole_mass, half_length, gravity, max_force, action_cost.
// Reset: every coordinate U(-0.05, 0.05) around upright.
// Reward: cos(theta) - action_cost * u^2.
class CartPole final : public Env {
 public:
  static Constants defaults() {
    return {{"cart_mass", 1.0}, {"pole_mass", 0.1}, {"half_length", 0.5},
            {"gravity", 9.81}, {"max_force", 10.0}, {"action_cost", 0.001},
            {"dt", 0.02}, {"episode_length", 200}};
  }

  explicit CartPole(const Constants& overrides = {}) : Env(make_spec(overrides)) {}

  Vec derivative(const Vec& x, const Vec& a) const override {
    const double mc = c("cart_mass"), mp = c("pole_mass"), l = c("half_length");
    const double total = mc + mp;
    const double st = std::sin(x[1]), ct = std::cos(x[1]);
    const double temp = (a[0] + mp * l * x[3] * x[3] * st) / total;
    const double theta_acc =
        (c("gravity") * st - ct * temp) / (l * (4.0 / 3.0 - mp * ct * ct / total));
    const double x_acc = temp - mp * l * theta_acc * ct / total;
    Vec d(4);
    d << x[2], x[3], x_acc, theta_acc;
    return d;
  }

  EnvState reset(std::uint64_t seed) const override {
    Rng rng = make_rng(seed, "cartpole.reset");
    Vec x(4);
    for (int i = 0; i < 4; ++i) x[i] = detail::uniform(rng, -0.05, 0.05);
    return {x, Vec()};
  }

  double reward(const Vec& x, const Vec& a, const Vec&) const override {
    return std::cos(x[1]) - c("action_cost") * a.squaredNorm();
  }

 private:
  double c(const char* k) const { return spec_.constants.at(k); }

  static EnvSpec make_spec(const Constants& overrides) {
    EnvSpec s;
    s.name = "cartpole";
    s.constants = detail::merge(defaults(), overrides, s.name);
    s.state_dim = 4;
    s.action_dim = 1;
    s.action_low = Vec::Constant(1, -s.constants["max_force"]);
    s.action_high = Vec::Constant(1, s.constants["max_force"]);
    s.dt = s.constants["dt"];
    s.episode_length = static_cast<int>(s.constants["episode_length"]);
    s.layout = detail::planar_layout(4, {1}, {0}, {2, 3});
    return s;
  }
};

// Constants: mass1, mass2, length1, length2, gravity, damping, max_torque.
// Reset: q1 = pi + U(-0.2, 0.2) (wrapped), q2, w1, w2 = U(-0.2, 0.2).
// Reward: tip height l1 cos q1 + l2 cos(q1 + q2).
class DoublePendulum final : public Env {
 public:
  static Constants defaults() {
    return {{"mass1", 1.0}, {"mass2", 1.0}, {"length1", 0.5}, {"length2", 0.5},
            {"gravity", 9.81}, {"damping", 0.05}, {"max_torque", 5.0},
            {"dt", 0.01}, {"episode_length", 200}};
  }

  explicit DoublePendulum(const Constants& overrides = {}) : Env(make_spec(overrides)) {}

  Vec derivative(const Vec& x, const Vec& a) const override { return arm().derivative(x, a); }

  EnvState reset(std::uint64_t seed) const override {
    Rng rng = make_rng(seed, "double_pendulum.reset");
    Vec x(4);
    x[0] = wrap_angle(std::numbers::pi + detail::uniform(rng, -0.2, 0.2));
    for (int i = 1; i < 4; ++i) x[i] = detail::uniform(rng, -0.2, 0.2);
    return {x, Vec()};
  }

  double reward(const Vec& x, const Vec&, const Vec&) const override { return arm().tip(x)[1]; }

  bool has_energy() const override { return true; }
  double energy(const Vec& x) const override { return arm().energy(x); }

  detail::TwoLink arm() const {
    const Constants& k = spec_.constants;
    return {k.at("mass1"), k.at("mass2"), k.at("length1"), k.at("length2"),
            k.at("gravity"), k.at("damping")};
  }

 private:
  static EnvSpec make_spec(const Constants& overrides) {
    EnvSpec s;
    s.name = "double_pendulum";
    s.constants = detail::merge(defaults(), overrides, s.name);
    s.state_dim = 4;
    s.action_dim = 2;
    s.action_low = Vec::Constant(2, -s.constants["max_torque"]);
    s.action_high = Vec::Constant(2, s.constants["max_torque"]);
    s.dt = s.constants["dt"];
    s.episode_length = static_cast<int>(s.constants["episode_length"]);
    s.layout = detail::planar_layout(4, {0, 1}, {}, {2, 3});
    return s;
  }
};

// Horizontal two-link arm (no gravity) reaching for a goal.
// Constants: mass1, mass2, length1, length2, damping, max_torque, action_cost.
// Reset: q1, q2, w1, w2 = U(-0.1, 0.1); goal uniform in the disk of radius
// 0.9 * (length1 + length2).
// Reward: -|tip - goal| - action_cost * |a|^2.
class Reacher final : public Env {
 public:
  static Constants defaults() {
    return {{"mass1", 1.0}, {"mass2", 1.0}, {"length1", 0.1}, {"length2", 0.1},
            {"damping", 0.25}, {"max_torque", 2.0}, {"action_cost", 0.01},
            {"dt", 0.01}, {"episode_length", 200}};
  }

  explicit Reacher(const Constants& overrides = {}) : Env(make_spec(overrides)) {}

  Vec derivative(const Vec& x, const Vec& a) const override { return arm().derivative(x, a); }

  EnvState reset(std::uint64_t seed) const override {
    Rng rng = make_rng(seed, "reacher.reset");
    Vec x(4);
    for (int i = 0; i < 4; ++i) x[i] = detail::uniform(rng, -0.1, 0.1);
    const double radius = 0.9 * (spec_.constants.at("length1") + spec_.constants.at("length2"));
    const double r = radius * std::sqrt(detail::uniform(rng, 0.0, 1.0));
    const double phi = detail::uniform(rng, -std::numbers::pi, std::numbers::pi);
    Vec goal(2);
    goal << r * std::cos(phi), r * std::sin(phi);
    return {x, goal};
  }

  double reward(const Vec& x, const Vec& a, const Vec& goal) const override {
    if (goal.size() != 2) throw DimensionError("reacher reward needs a 2-D goal");
    const Eigen::Vector2d tip = arm().tip(x);
    return -(tip - Eigen::Vector2d(goal[0], goal[1])).norm() -
           spec_.constants.at("action_cost") * a.squaredNorm();
  }

  bool has_energy() const override { return true; }
  double energy(const Vec& x) const override { return arm().energy(x); }

  detail::TwoLink arm() const {
    const Constants& k = spec_.constants;
    return {k.at("mass1"), k.at("mass2"), k.at("length1"), k.at("length2"), 0.0,
            k.at("damping")};
  }

 private:
  static EnvSpec make_spec(const Constants& overrides) {
    EnvSpec s;
    s.name = "reacher";
    s.constants = detail::merge(defaults(), overrides, s.name);
    s.state_dim = 4;
    s.action_dim = 2;
    s.action_low = Vec::Constant(2, -s.constants["max_torque"]);
    s.action_high = Vec::Constant(2, s.constants["max_torque"]);
    s.dt = s.constants["dt"];
    s.episode_length = static_cast<int>(s.constants["episode_length"]);
    s.layout = detail::planar_layout(4, {0, 1}, {}, {2, 3});
    return s;
  }
};

inline std::vector<std::string> env_names() {
  return {"cartpole", "double_pendulum", "pendulum", "reacher"};
}

inline std::unique_ptr<Env> make_env(const std::string& name, const Constants& overrides = {}) {
  if (name == "pendulum") return std::make_unique<Pendulum>(overrides);
  if (name == "cartpole") return std::make_unique<CartPole>(overrides);
  if (name == "double_pendulum") return std::make_unique<DoublePendulum>(overrides);
  if (name == "reacher") return std::make_unique<Reacher>(overrides);
  std::string list;
  for (const std::string& n : env_names()) list += (list.empty() ? "" : ", ") + n;
  throw UnknownEnvError("unknown env '" + name + "' (available: " + list + ")");
}

}  // namespace gemdyn

#endif  // GEMDYN_ENVS_HPP_
