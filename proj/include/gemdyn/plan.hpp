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

#ifndef GEMDYN_PLAN_HPP_
#define GEMDYN_PLAN_HPP_

// MPPI planning, open-loop planning evaluation and the model-based RL loop.
//

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "gemdyn/envs.hpp"
#include "gemdyn/errors.hpp"
#include "gemdyn/models.hpp"
#include "gemdyn/rng.hpp"
#include "gemdyn/train.hpp"

namespace gemdyn {

// r(s_{t+1}, a_t) for one row.
using RewardFn = std::function<double(const Vec& next_state, const Vec& action)>;

inline RewardFn env_reward(const Env& env, const Vec& goal) {
  return [&env, goal](const Vec& x, const Vec& a) { return env.reward(x, a, goal); };
}

struct MppiConfig {
  int horizon = 25;
  int num_samples = 256;
  double temperature = 0.03;
  // Per action dimension; empty means 0.3 x action range.
  std::vector<double> noise_std;
  int iterations = 2;
  std::uint64_t seed = 0;

  void validate() const {
    if (horizon < 1) throw ContractError("MPPI horizon must be >= 1");
    if (num_samples < 2) throw ContractError("MPPI needs at least 2 samples");
    if (!(temperature > 0.0)) throw ContractError("MPPI temperature must be positive");
    if (iterations < 1) throw ContractError("MPPI iterations must be >= 1");
    for (double s : noise_std)
      if (!(s > 0.0)) throw ContractError("MPPI noise std must be positive");
  }

  Vec noise(const EnvSpec& spec) const {
    if (noise_std.empty()) return 0.3 * (spec.action_high - spec.action_low);
    if (static_cast<int>(noise_std.size()) != spec.action_dim)
      throw ContractError("MPPI noise_std length does not match action_dim");
    return Eigen::Map<const Vec>(noise_std.data(), noise_std.size());
  }
};

// Softmax of returns / temperature. Non-finite returns get zero weight.
inline Vec mppi_weights(const Vec& returns, double temperature) {
  double best = -std::numeric_limits<double>::infinity();
  for (double r : returns)
    if (std::isfinite(r)) best = std::max(best, r);
  if (!std::isfinite(best)) throw PlanningError("every MPPI rollout returned a non-finite reward");
  Vec w(returns.size());
  for (Eigen::Index i = 0; i < returns.size(); ++i)
    w[i] = std::isfinite(returns[i]) ? std::exp((returns[i] - best) / temperature) : 0.0;
  return w / w.sum();
}

// Sum of rewards along each row's predicted trajectory under `seqs[t]`.
inline Vec rollout_returns(const DynamicsModel& model, const RewardFn& reward, const Vec& s0,
                           const std::vector<Mat>& seqs) {
  const Eigen::Index n = seqs[0].rows();
  Mat latent = model.encode(s0.transpose().replicate(n, 1));
  Vec ret = Vec::Zero(n);
  for (const Mat& a : seqs) {
    latent = model.step(latent, a);
    const Mat x = model.decode(latent);
    for (Eigen::Index r = 0; r < n; ++r) {
      if (!std::isfinite(ret[r])) continue;
      if (!x.row(r).allFinite()) {
        ret[r] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      ret[r] += reward(x.row(r).transpose(), a.row(r).transpose());
    }
  }
  return ret;
}

// Returns the refined H x action_dim sequence. `nominal` seeds the search
// (zero when empty); `rng` supplies all sampling noise.
inline Mat mppi_plan(const DynamicsModel& model, const EnvSpec& spec, const RewardFn& reward,
                     const Vec& s0, const MppiConfig& cfg, Rng& rng, Mat nominal = Mat()) {
  cfg.validate();
  if (model.action_dim() != spec.action_dim || model.state_dim() != spec.state_dim)
    throw ContractError("model and environment layouts disagree");
  const int H = cfg.horizon, N = cfg.num_samples, A = spec.action_dim;
  if (nominal.size() == 0) nominal = Mat::Zero(H, A);
  if (nominal.rows() != H || nominal.cols() != A)
    throw ContractError("MPPI nominal sequence has the wrong shape");
  const Vec sigma = cfg.noise(spec);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int it = 0; it < cfg.iterations; ++it) {
    std::vector<Mat> seqs(H, Mat(N, A));
    for (int k = 0; k < N; ++k)
      for (int t = 0; t < H; ++t)
        for (int j = 0; j < A; ++j) {
          const double u = nominal(t, j) + sigma[j] * normal(rng);
          seqs[t](k, j) = std::clamp(u, spec.action_low[j], spec.action_high[j]);
        }
    const Vec w = mppi_weights(rollout_returns(model, reward, s0, seqs), cfg.temperature);
    for (int t = 0; t < H; ++t) nominal.row(t) = w.transpose() * seqs[t];
  }
  return nominal;
}

// Drops the first row and repeats the last one.
inline Mat shift_plan(const Mat& plan) {
  Mat out(plan.rows(), plan.cols());
  out.topRows(plan.rows() - 1) = plan.bottomRows(plan.rows() - 1);
  out.row(plan.rows() - 1) = plan.row(plan.rows() - 1);
  return out;
}

struct PlanTrace {
  std::vector<double> rewards;  // per executed step
  Mat actions;

  double mean() const {
    return rewards.empty() ? 0.0
                           : std::accumulate(rewards.begin(), rewards.end(), 0.0) /
                                 static_cast<double>(rewards.size());
  }
};

// One planning call from the true s0 with horizon `steps`; the plan is then
// executed in the environment without replanning.
inline PlanTrace open_loop_eval(const DynamicsModel& model, const Env& env, MppiConfig cfg,
                                std::uint64_t episode_seed, int steps = 50) {
  if (steps < 1) throw ContractError("open-loop evaluation needs at least one step");
  cfg.horizon = steps;
  const EnvState start = env.reset(episode_seed);
  Rng rng = make_rng(cfg.seed, "plan.open_loop", episode_seed);
  PlanTrace trace;
  trace.actions = mppi_plan(model, env.spec(), env_reward(env, start.goal), start.x, cfg, rng);
  EnvState s = start;
  for (int t = 0; t < steps; ++t) {
    const Vec a = trace.actions.row(t).transpose();
    s = env.step(s, a);
    trace.rewards.push_back(env.reward(s, a));
  }
  return trace;
}

struct MbrlConfig {
  int iterations = 8;                // learning iterations after the random one
  int transitions_per_iteration = 150;
  int train_steps = 500;
  int batch_size = 10;
  int observation_period = 5;
  int final_window = 50;             // steps averaged into mean_final_reward
  MppiConfig planner;
  ad::AdamConfig adam;
  std::uint64_t seed = 0;

  void validate() const {
    if (iterations < 1 || transitions_per_iteration < 1 || train_steps < 1 || batch_size < 1 ||
        observation_period < 1 || final_window < 1)
      throw ContractError("MBRL config values must be positive");
    if (final_window > transitions_per_iteration)
      throw ContractError("final_window exceeds the episode length");
    planner.validate();
    adam.validate();
  }
};

struct MbrlPoint {
  int iteration = 0;
  int samples_trained = 0;
  double mean_final_reward = 0.0;
  double mean_reward = 0.0;
  int observation_reads = 0;
};

struct MbrlCurve {
  std::vector<MbrlPoint> points;
  bool diverged = false;
  std::string diagnostic;
};

struct EpisodeResult {
  std::vector<Transition> transitions;
  std::vector<double> rewards;
  int observation_reads = 0;
};

// One episode acting through MPPI on a belief that is replaced by the true
// state every `period` steps and propagated by the model otherwise.
inline EpisodeResult belief_mpc_episode(const DynamicsModel& model, const Env& env,
                                        const MppiConfig& planner, int steps, int period,
                                        std::uint64_t episode_seed, int episode_id, Rng& rng) {
  EpisodeResult out;
  EnvState s = env.reset(episode_seed);
  const RewardFn reward = env_reward(env, s.goal);
  Mat belief, plan;
  for (int t = 0; t < steps; ++t) {
    if (t % period == 0) {
      belief = model.encode(s.x.transpose());
      ++out.observation_reads;
    }
    const Vec b = model.decode(belief).row(0).transpose();
    plan = mppi_plan(model, env.spec(), reward, b, planner, rng,
                     plan.size() ? shift_plan(plan) : Mat());
    const Vec a = plan.row(0).transpose();
    const EnvState next = env.step(s, a);
    out.transitions.push_back({episode_id, t, s.x, a, next.x});
    out.rewards.push_back(env.reward(next, a));
    belief = model.step(belief, plan.topRows(1));
    s = next;
  }
  return out;
}

inline TransitionBatch buffer_batch(const StateLayout& layout, const std::vector<Transition>& buf) {
  Mat s(buf.size(), layout.state_dim), a(buf.size(), buf[0].a.size()), sn(buf.size(), layout.state_dim);
  for (std::size_t i = 0; i < buf.size(); ++i) {
    s.row(i) = buf[i].s.transpose();
    a.row(i) = buf[i].a.transpose();
    sn.row(i) = buf[i].s_next.transpose();
  }
  return make_batch(layout, std::move(s), std::move(a), std::move(sn));
}

// Iteration 0 collects one random-action episode. Each later iteration trains
// on the whole buffer, acts with the trained model, records the episode's
// reward against the number of samples trained on, and appends its
// transitions. `model` null runs the true-dynamics oracle, which skips
// training but reports the same sample counts.
inline MbrlCurve mbrl_loop(TrainableModel* model, const Env& env, const MbrlConfig& cfg) {
  cfg.validate();
  const EnvSpec& spec = env.spec();
  const int T = cfg.transitions_per_iteration;
  Rng act_rng = make_rng(cfg.seed, "mbrl.random_actions");
  Rng plan_rng = make_rng(cfg.seed, "mbrl.planner");
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Transition> buffer;
  {
    EnvState s = env.reset(derive_seed(cfg.seed, "mbrl.episode", 0));
    for (int t = 0; t < T; ++t) {
      Vec a(spec.action_dim);
      for (int j = 0; j < spec.action_dim; ++j)
        a[j] = spec.action_low[j] + (spec.action_high[j] - spec.action_low[j]) * unit(act_rng);
      const EnvState next = env.step(s, a);
      buffer.push_back({0, t, s.x, a, next.x});
      s = next;
    }
  }

  std::shared_ptr<const Env> env_view(&env, [](const Env*) {});
  TrueDynamics oracle(env_view);
  std::unique_ptr<ad::AdamState> adam;
  std::vector<double> params;
  if (model) {
    model->fit_normalization(buffer_batch(spec.layout, buffer));
    params = model->get_params();
    adam = std::make_unique<ad::AdamState>(params.size(), cfg.adam);
  }

  MbrlCurve curve;
  std::vector<double> grad;
  for (int it = 1; it <= cfg.iterations; ++it) {
    if (model) {
      const TransitionBatch data = buffer_batch(spec.layout, buffer);
      BatchSampler sampler(static_cast<int>(data.size()), derive_seed(cfg.seed, "mbrl.train", it));
      try {
        for (int k = 0; k < cfg.train_steps; ++k) {
          const LossParts lp = model->loss(data.gather(sampler.next(cfg.batch_size)), &grad);
          if (!std::isfinite(lp.total)) throw NumericError("non-finite MBRL training loss");
          ad::adam_step(*adam, params, grad);
          model->set_params(params);
        }
      } catch (const NumericError& e) {
        curve.diverged = true;
        curve.diagnostic = "iteration " + std::to_string(it) + ": " + e.what();
        break;
      }
    }
    const DynamicsModel& planner_model = model ? static_cast<const DynamicsModel&>(*model) : oracle;
    EpisodeResult ep;
    try {
      ep = belief_mpc_episode(planner_model, env, cfg.planner, T, cfg.observation_period,
                              derive_seed(cfg.seed, "mbrl.episode", it), it, plan_rng);
    } catch (const PlanningError& e) {
      curve.diverged = true;
      curve.diagnostic = "iteration " + std::to_string(it) + ": " + e.what();
      break;
    }
    MbrlPoint p;
    p.iteration = it;
    p.samples_trained = static_cast<int>(buffer.size());
    p.observation_reads = ep.observation_reads;
    p.mean_reward = std::accumulate(ep.rewards.begin(), ep.rewards.end(), 0.0) / T;
    p.mean_final_reward =
        std::accumulate(ep.rewards.end() - cfg.final_window, ep.rewards.end(), 0.0) /
        cfg.final_window;
    curve.points.push_back(p);
    buffer.insert(buffer.end(), ep.transitions.begin(), ep.transitions.end());
  }
  return curve;
}

// First samples_trained at which the curve reaches `threshold`; -1 if never.
inline int samples_to_threshold(const MbrlCurve& curve, double threshold) {
  for (const MbrlPoint& p : curve.points)
    if (p.mean_final_reward >= threshold) return p.samples_trained;
  return -1;
}

}  // namespace gemdyn

#endif  // GEMDYN_PLAN_HPP_
