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

#ifndef GEMDYN_SELFTEST_HPP_
#define GEMDYN_SELFTEST_HPP_

// Invariant battery behind `gemdyn selftest` and the acceptance checks.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "gemdyn/envs.hpp"
#include "gemdyn/lie.hpp"
#include "gemdyn/models.hpp"
#include "gemdyn/rng.hpp"

namespace gemdyn::selftest {

struct CheckResult {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  int samples = 0;

  bool passed() const { return std::isfinite(max_error) && max_error <= tolerance; }
};

struct Options {
  std::array<lie::Basis, 4> bases = {lie::basis(lie::GroupKind::kSO2),
                                     lie::basis(lie::GroupKind::kSO3),
                                     lie::basis(lie::GroupKind::kSE2),
                                     lie::basis(lie::GroupKind::kSE3)};
  int lie_samples = 2000;
  int gradient_configs = 5;
  std::uint64_t seed = 0;
};

inline constexpr std::array<lie::GroupKind, 4> kAllKinds = {
    lie::GroupKind::kSO2, lie::GroupKind::kSO3, lie::GroupKind::kSE2, lie::GroupKind::kSE3};

// 30-term Taylor series with scaling and squaring.
inline lie::Matrix series_exp(const lie::Matrix& m, int terms = 30) {
  int squarings = 0;
  for (double norm = m.norm(); norm > 0.5; norm *= 0.5) ++squarings;
  const lie::Matrix a = m / std::ldexp(1.0, squarings);
  lie::Matrix sum = lie::Matrix::Identity(m.rows(), m.cols());
  lie::Matrix term = sum;
  for (int n = 1; n < terms; ++n) {
    term = (term * a / static_cast<double>(n)).eval();
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = (sum * sum).eval();
  return sum;
}

// Uniform direction, uniform norm in [0, max_norm].
inline lie::Coeffs random_coeffs(Rng& rng, int k, double max_norm) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  lie::Coeffs c(k);
  do {
    for (int i = 0; i < k; ++i) c[i] = normal(rng);
  } while (c.norm() == 0.0);
  return c * (max_norm * unit(rng) / c.norm());
}

inline double rotation_norm(lie::GroupKind kind, const lie::Coeffs& c) {
  return lie::rotation_dim(kind) == 2 ? std::abs(c[0]) : c.head<3>().norm();
}

// Manifold defect of the closed-form exponential and of the series
// exponential of hat(basis, alpha).
inline CheckResult group_invariants(lie::GroupKind kind, const lie::Basis& basis, int n,
                                    std::uint64_t seed) {
  Rng rng = make_rng(seed, "selftest.invariants", static_cast<std::uint64_t>(kind));
  CheckResult r{"invariants " + std::string(lie::to_string(kind)), 0.0, 1e-9, n};
  for (int i = 0; i < n; ++i) {
    const lie::Coeffs c = random_coeffs(rng, lie::algebra_dim(kind), 2.0 * std::numbers::pi);
    const lie::GroupElement closed(kind, lie::exp_coeffs(kind, c));
    const lie::GroupElement series(kind, series_exp(lie::hat(basis, c)));
    r.max_error = std::max({r.max_error, lie::invariant_defect(closed).worst(),
                            lie::invariant_defect(series).worst()});
  }
  return r;
}

inline CheckResult exp_matches_series(lie::GroupKind kind, const lie::Basis& basis, int n,
                                      std::uint64_t seed) {
  Rng rng = make_rng(seed, "selftest.series", static_cast<std::uint64_t>(kind));
  CheckResult r{"exp vs series " + std::string(lie::to_string(kind)), 0.0, 1e-10, n};
  for (int i = 0; i < n; ++i) {
    const lie::Coeffs c = random_coeffs(rng, lie::algebra_dim(kind), 2.0 * std::numbers::pi);
    const lie::Matrix d = lie::exp_coeffs(kind, c) - series_exp(lie::hat(basis, c));
    r.max_error = std::max(r.max_error, d.cwiseAbs().maxCoeff());
  }
  return r;
}

// Round trip on the principal branch (rotation angle below pi - 1e-3).
inline CheckResult log_exp_round_trip(lie::GroupKind kind, int n, std::uint64_t seed) {
  Rng rng = make_rng(seed, "selftest.log", static_cast<std::uint64_t>(kind));
  CheckResult r{"log(exp) " + std::string(lie::to_string(kind)), 0.0, 1e-8, 0};
  for (int i = 0; i < n; ++i) {
    const lie::Coeffs c = random_coeffs(rng, lie::algebra_dim(kind), 2.0 * std::numbers::pi);
    if (rotation_norm(kind, c) >= std::numbers::pi - 1e-3) continue;
    const lie::AlgebraVector back = lie::log_map(lie::exp_map(lie::AlgebraVector(kind, c)));
    r.max_error = std::max(r.max_error, (back.coeffs() - c).cwiseAbs().maxCoeff());
    ++r.samples;
  }
  return r;
}

inline CheckResult angle_axis_consistency(const lie::Basis& so3, int n, std::uint64_t seed) {
  Rng rng = make_rng(seed, "selftest.angle_axis");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> angle(-2.0 * std::numbers::pi, 2.0 * std::numbers::pi);
  CheckResult r{"angle-axis vs exp", 0.0, 1e-10, n};
  for (int i = 0; i < n; ++i) {
    Eigen::Vector3d u(normal(rng), normal(rng), normal(rng));
    u.normalize();
    const double t = angle(rng);
    const lie::Matrix a = lie::angle_axis_to_group({u, t}).matrix();
    const lie::Coeffs c = t * u;
    const lie::Matrix b = lie::exp_coeffs(lie::GroupKind::kSO3, c);
    const lie::Matrix s = series_exp(lie::hat(so3, c));
    r.max_error = std::max({r.max_error, (a - b).cwiseAbs().maxCoeff(), (a - s).cwiseAbs().maxCoeff()});
  }
  return r;
}

// SE(2) + SO(3) + SE(3) slots with one raw static and three velocities.
inline StateLayout mixed_layout() {
  StateLayout l;
  l.state_dim = 12;
  l.slots = {{lie::GroupKind::kSE2, {0, 1, 2}, std::nullopt},
             {lie::GroupKind::kSO3, {3}, Eigen::Vector3d(1, 2, 2) / 3.0},
             {lie::GroupKind::kSE3, {4, 5, 6, 7}, Eigen::Vector3d(0, 0.6, 0.8)}};
  l.raw_static_indices = {8};
  l.velocity_indices = {9, 10, 11};
  return l;
}

struct NamedLayout {
  std::string name;
  StateLayout layout;
  int action_dim;
};

inline std::vector<NamedLayout> gradient_layouts() {
  std::vector<NamedLayout> out;
  for (const std::string& name : env_names()) {
    auto env = make_env(name);
    out.push_back({name, env->spec().layout, env->spec().action_dim});
  }
  out.push_back({"mixed", mixed_layout(), 2});
  return out;
}

// Worst relative error of backward() against central differences over
// entries whose magnitude exceeds 1e-8, for `configs` random GEM models and
// batches on one layout. The gradient is that of the joint total loss.
inline CheckResult gem_gradient(const NamedLayout& nl, int configs, std::uint64_t seed,
                                std::vector<int> hidden = {8, 8}) {
  CheckResult r{"gradient " + nl.name, 0.0, 1e-4, configs};
  Rng rng = make_rng(seed, "selftest.gradient." + nl.name);
  std::uniform_real_distribution<double> big(-2.5, 2.5), small(-0.2, 0.2), act(-1.0, 1.0);
  ModelOptions opt;
  opt.hidden_sizes = std::move(hidden);
  opt.velocity_grad_to_coeff = true;
  const int n = 4, d = nl.layout.state_dim;
  for (int k = 0; k < configs; ++k) {
    Mat s(n, d), sn(n, d), a(n, nl.action_dim);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) {
        s(i, j) = big(rng);
        sn(i, j) = s(i, j) + small(rng);
      }
      for (int j = 0; j < nl.action_dim; ++j) a(i, j) = act(rng);
    }
    const TransitionBatch b = make_batch(nl.layout, s, a, sn);
    GemModel m(nl.layout, nl.action_dim, opt, rng());
    m.fit_normalization(b);
    std::vector<double> g;
    m.loss(b, &g);
    std::unique_ptr<TrainableModel> probe = m.clone();
    const std::vector<double> fd = ad::finite_diff_gradient(
        [&](std::span<const double> p) {
          probe->set_params(p);
          return probe->loss(b, nullptr).total;
        },
        m.get_params(), 1e-5);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double scale = std::max(std::abs(g[i]), std::abs(fd[i]));
      if (scale > 1e-8) r.max_error = std::max(r.max_error, std::abs(g[i] - fd[i]) / scale);
    }
  }
  return r;
}

// Relative drift of the energy of an undamped, unactuated system.
inline CheckResult energy_drift(const std::string& env_name, const Vec& x0, int steps) {
  auto env = make_env(env_name, {{"damping", 0.0}});
  CheckResult r{"energy drift " + env_name, 0.0, 1e-6, steps};
  const double e0 = env->energy(x0);
  const Vec zero = Vec::Zero(env->spec().action_dim);
  Vec x = x0;
  for (int t = 0; t < steps; ++t) {
    x = env->integrate(x, zero);
    r.max_error = std::max(r.max_error, std::abs(env->energy(x) - e0) / std::abs(e0));
  }
  return r;
}

inline Vec pendulum_energy_start() {
  Vec x(2);
  x << 0.5, 1.0;
  return x;
}

inline Vec double_pendulum_energy_start() {
  Vec x(4);
  x << 2.5, -0.4, 0.3, -0.2;
  return x;
}

inline std::vector<CheckResult> run(const Options& opt = {}) {
  std::vector<CheckResult> out;
  for (lie::GroupKind kind : kAllKinds) {
    const lie::Basis& b = opt.bases[static_cast<int>(kind)];
    out.push_back(group_invariants(kind, b, opt.lie_samples, opt.seed));
    out.push_back(exp_matches_series(kind, b, opt.lie_samples, opt.seed));
    out.push_back(log_exp_round_trip(kind, opt.lie_samples, opt.seed));
  }
  out.push_back(angle_axis_consistency(opt.bases[1], opt.lie_samples, opt.seed));
  for (const NamedLayout& nl : gradient_layouts())
    out.push_back(gem_gradient(nl, opt.gradient_configs, opt.seed));
  out.push_back(energy_drift("pendulum", pendulum_energy_start(), 1000));
  out.push_back(energy_drift("double_pendulum", double_pendulum_energy_start(), 1000));
  return out;
}

inline bool all_passed(const std::vector<CheckResult>& results) {
  for (const CheckResult& r : results)
    if (!r.passed()) return false;
  return true;
}

inline void print_report(std::ostream& os, const std::vector<CheckResult>& results) {
  char line[160];
  std::snprintf(line, sizeof line, "%-26s %8s %12s %10s  %s\n", "check", "samples", "max_error",
                "tolerance", "status");
  os << line;
  for (const CheckResult& r : results) {
    std::snprintf(line, sizeof line, "%-26s %8d %12.3e %10.1e  %s\n", r.name.c_str(), r.samples,
                  r.max_error, r.tolerance, r.passed() ? "PASS" : "FAIL");
    os << line;
  }
}

}  // namespace gemdyn::selftest

#endif  // GEMDYN_SELFTEST_HPP_
