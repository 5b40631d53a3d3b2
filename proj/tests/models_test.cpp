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

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <limits>
#include <numbers>

#include "gemdyn/envs.hpp"
#include "gemdyn/models.hpp"
#include "oracles.hpp"

namespace gemdyn {
namespace {

using lie::GroupKind;

StateLayout mixed_layout() {
  StateLayout l;
  l.state_dim = 12;
  l.slots = {{GroupKind::kSE2, {0, 1, 2}, std::nullopt},
             {GroupKind::kSO3, {3}, Eigen::Vector3d(1, 2, 2) / 3.0},
             {GroupKind::kSE3, {4, 5, 6, 7}, Eigen::Vector3d(0, 0.6, 0.8)}};
  l.raw_static_indices = {8};
  l.velocity_indices = {9, 10, 11};
  return l;
}

ModelOptions small_options() {
  ModelOptions o;
  o.hidden_sizes = {8, 8};
  return o;
}

// Finite differences see the joint loss, so the velocity gradient must reach
// the coefficient net.
ModelOptions joint_options() {
  ModelOptions o = small_options();
  o.velocity_grad_to_coeff = true;
  return o;
}

Mat random_mat(Rng& rng, int rows, int cols, double lo, double hi) {
  Mat m(rows, cols);
  std::uniform_real_distribution<double> u(lo, hi);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

TransitionBatch random_batch(Rng& rng, const StateLayout& layout, int action_dim, int n) {
  const Mat s = random_mat(rng, n, layout.state_dim, -2.5, 2.5);
  const Mat ds = random_mat(rng, n, layout.state_dim, -0.2, 0.2);
  return make_batch(layout, s, random_mat(rng, n, action_dim, -1, 1), s + ds);
}

TEST(GroupLatent, RoundTripAndWidth) {
  const StateLayout l = mixed_layout();
  Rng rng(1);
  const Mat s = random_mat(rng, 20, 12, -3.0, 3.0);
  const Mat lat = group_latent(l, s);
  EXPECT_EQ(lat.cols(), 9 + 9 + 16 + 1 + 3);
  const Mat back = group_latent_to_state(l, lat);
  EXPECT_LE((back - s).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GemModel, NetworkShapes) {
  auto env = make_env("cartpole");
  GemModel m(env->spec().layout, 1, ModelOptions{}, 3);
  EXPECT_EQ(m.coeff_spec().input_dim, 4 + 1 + 2 + 1);
  EXPECT_EQ(m.coeff_spec().output_dim, 1 + 1);
  EXPECT_EQ(m.vel_spec().input_dim, m.coeff_spec().input_dim + m.coeff_spec().output_dim);
  EXPECT_EQ(m.vel_spec().output_dim, 2);
  EXPECT_EQ(m.coeff_spec().hidden_sizes, (std::vector<int>{100, 100}));
}

TEST(GemModel, ZeroWeightsPredictNoChange) {
  const StateLayout l = mixed_layout();
  GemModel m(l, 2, small_options(), 4);
  m.set_params(std::vector<double>(m.num_params(), 0.0));
  Rng rng(2);
  const Mat s = random_mat(rng, 6, 12, -2, 2);
  const Mat lat = m.encode(s);
  const Mat out = m.outputs(lat, random_mat(rng, 6, 2, -1, 1));
  EXPECT_EQ(out.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LE((m.step(lat, random_mat(rng, 6, 2, -1, 1)) - lat).cwiseAbs().maxCoeff(), 0.0);
}

TEST(GemModel, PredictionMatchesExpOfHatTimesG) {
  const StateLayout l = mixed_layout();
  GemModel m(l, 2, small_options(), 5);
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat s = random_mat(rng, 4, 12, -2, 2);
    const Mat a = random_mat(rng, 4, 2, -1, 1);
    const Mat lat = m.encode(s);
    const Mat out = m.outputs(lat, a);
    const Mat next = m.advance(lat, out);
    for (int r = 0; r < 4; ++r) {
      int lc = 0, ac = 0;
      for (const GroupSlot& slot : l.slots) {
        const int n = lie::matrix_dim(slot.kind), k = lie::algebra_dim(slot.kind);
        const lie::Basis b = lie::basis(slot.kind);
        Eigen::MatrixXd hat = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < k; ++i) hat += out(r, ac + i) * b.elements[i];
        Eigen::MatrixXd g(n, n);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) g(i, j) = lat(r, lc + i * n + j);
        const Eigen::MatrixXd expect = testing::series_exp(hat) * g;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) EXPECT_NEAR(next(r, lc + i * n + j), expect(i, j), 1e-12);
        const lie::GroupElement ge(slot.kind, expect);
        EXPECT_TRUE(lie::invariant_defect(ge).ok(1e-10));
        lc += n * n;
        ac += k;
      }
      for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(next(r, lc + i), lat(r, lc + i) + out(r, ac + i));
    }
  }
}

TEST(GemModel, ClosureForArbitraryWeights) {
  const StateLayout l = mixed_layout();
  GemModel m(l, 2, small_options(), 6);
  Rng rng(4);
  std::vector<double> p(m.num_params());
  for (double& x : p) x = std::uniform_real_distribution<double>(-3, 3)(rng);
  m.set_params(p);
  Mat lat = m.encode(random_mat(rng, 5, 12, -2, 2));
  for (int t = 0; t < 50; ++t) lat = m.step(lat, random_mat(rng, 5, 2, -1, 1));
  for (int r = 0; r < 5; ++r) {
    int lc = 0;
    for (const GroupSlot& slot : l.slots) {
      const int n = lie::matrix_dim(slot.kind);
      const lie::GroupElement g(slot.kind, ad::ConstMatMap(lat.row(r).data() + lc, n, n));
      EXPECT_LE(lie::invariant_defect(g).orthogonality, 1e-8);
      EXPECT_LE(lie::invariant_defect(g).determinant, 1e-8);
      lc += n * n;
    }
  }
}

TEST(GemModel, ShapeErrors) {
  GemModel m(make_env("pendulum")->spec().layout, 1, small_options(), 1);
  const Mat lat = m.encode(Mat::Zero(2, 2));
  EXPECT_THROW(m.step(lat, Mat::Zero(2, 2)), ContractError);
  EXPECT_THROW(m.step(lat, Mat::Zero(3, 1)), ContractError);
  EXPECT_THROW(m.encode(Mat::Zero(2, 3)), DimensionError);
  TransitionBatch empty = make_batch(m.layout(), Mat(0, 2), Mat(0, 1), Mat(0, 2));
  EXPECT_THROW(m.loss(empty, nullptr), ContractError);
}

TEST(GemLoss, PerfectPredictionIsZero) {
  const StateLayout l = mixed_layout();
  GemModel m(l, 2, small_options(), 7);
  Rng rng(5);
  const Mat s = random_mat(rng, 8, 12, -2, 2);
  const Mat a = random_mat(rng, 8, 2, -1, 1);
  TransitionBatch b = make_batch(l, s, a, s);
  b.latent_next = m.step(b.latent, a);
  const LossParts lp = m.loss(b, nullptr);
  EXPECT_LE(lp.total, 1e-24);
  m.set_params(std::vector<double>(m.num_params(), 0.0));
  const TransitionBatch still = make_batch(l, s, a, s);
  EXPECT_EQ(m.loss(still, nullptr).total, 0.0);
}

TEST(GemLoss, PendulumRotationClosedForm) {
  auto env = make_env("pendulum");
  const StateLayout& l = env->spec().layout;
  GemModel m(l, 1, small_options(), 8);
  m.set_params(std::vector<double>(m.num_params(), 0.0));
  for (double delta : {0.01, 0.3, 1.0, 2.5}) {
    Mat s(1, 2), sn(1, 2);
    s << 0.4, 1.0;
    sn << 0.4 + delta, 1.5;
    const LossParts lp = m.loss(make_batch(l, s, Mat::Zero(1, 1), sn), nullptr);
    EXPECT_NEAR(lp.alpha, 4.0 * (1.0 - std::cos(delta)), 1e-14);
    EXPECT_NEAR(lp.velocity, 0.25, 1e-15);
    EXPECT_NEAR(lp.total, lp.alpha + lp.velocity, 1e-15);
  }
}

TEST(GemLoss, CartPoleRawStaticDeltaEntersAlphaLoss) {
  auto env = make_env("cartpole");
  GemModel m(env->spec().layout, 1, small_options(), 9);
  m.set_params(std::vector<double>(m.num_params(), 0.0));
  Mat s(2, 4), sn(2, 4);
  s << 0.1, 0.2, 0.0, 0.0, -0.3, 0.0, 0.0, 0.0;
  sn << 0.4, 0.2, 0.0, 0.0, -0.3, 0.0, 0.0, 0.0;
  const LossParts lp = m.loss(make_batch(env->spec().layout, s, Mat::Zero(2, 1), sn), nullptr);
  EXPECT_NEAR(lp.alpha, 0.09 / 2, 1e-15);
  EXPECT_EQ(lp.velocity, 0.0);
}

double max_relative_gradient_error(const TrainableModel& model, const TransitionBatch& b,
                                   double magnitude_floor) {
  std::vector<double> g;
  model.loss(b, &g);
  std::unique_ptr<TrainableModel> probe = model.clone();
  const std::vector<double> p0 = model.get_params();
  const std::vector<double> fd = ad::finite_diff_gradient(
      [&](std::span<const double> p) {
        probe->set_params(p);
        return probe->loss(b, nullptr).total;
      },
      p0, 1e-5);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (std::max(std::abs(g[i]), std::abs(fd[i])) > magnitude_floor)
      worst = std::max(worst, testing::rel_error(g[i], fd[i]));
  return worst;
}

TEST(GemLoss, GradientMatchesFiniteDifferences) {
  Rng rng(6);
  std::vector<std::pair<StateLayout, int>> layouts;
  for (const std::string& name : env_names()) {
    auto env = make_env(name);
    layouts.emplace_back(env->spec().layout, env->spec().action_dim);
  }
  layouts.emplace_back(mixed_layout(), 2);
  for (const auto& [layout, adim] : layouts) {
    for (int trial = 0; trial < 3; ++trial) {
      GemModel m(layout, adim, joint_options(), 10 + trial);
      const TransitionBatch b = random_batch(rng, layout, adim, 4);
      m.fit_normalization(b);
      EXPECT_LE(max_relative_gradient_error(m, b, 1e-6), 1e-4);
    }
  }
}

TEST(GemLoss, GradientSwitchBlocksVelocityLossIntoCoefficientNet) {
  auto env = make_env("reacher");
  Rng rng(7);
  const TransitionBatch b = random_batch(rng, env->spec().layout, 2, 6);
  ModelOptions o = small_options();
  o.velocity_grad_to_coeff = false;
  GemModel blocked(env->spec().layout, 2, o, 3);
  o.velocity_grad_to_coeff = true;
  GemModel open(env->spec().layout, 2, o, 3);
  std::vector<double> gb, go;
  blocked.loss(b, &gb);
  open.loss(b, &go);
  const std::size_t nc = blocked.coeff_spec().num_params();
  // Blocked: coefficient gradient is that of L^alpha alone.
  GemModel alpha_only(env->spec().layout, 2, o, 3);
  const auto fd = ad::finite_diff_gradient(
      [&](std::span<const double> p) {
        alpha_only.set_params(p);
        return alpha_only.loss(b, nullptr).alpha;
      },
      blocked.get_params(), 1e-5);
  double diff_open = 0.0;
  for (std::size_t i = 0; i < nc; ++i) {
    EXPECT_NEAR(gb[i], fd[i], 1e-7 + 1e-4 * std::abs(fd[i]));
    diff_open = std::max(diff_open, std::abs(go[i] - gb[i]));
  }
  EXPECT_GT(diff_open, 1e-6);
  for (std::size_t i = nc; i < gb.size(); ++i) EXPECT_DOUBLE_EQ(gb[i], go[i]);
}

TEST(GemModel, NormalizationZeroMeanOutputs) {
  auto env = make_env("pendulum");
  GemModel m(env->spec().layout, 1, small_options(), 1);
  Rng rng(8);
  const TransitionBatch b = random_batch(rng, env->spec().layout, 1, 200);
  m.fit_normalization(b);
  const Mat t = m.targets(b);
  EXPECT_EQ(t.rows(), 200);
  EXPECT_NEAR(m.coeff_scale()[0], std::sqrt(t.col(0).array().square().mean()), 1e-14);
  // alpha target equals the wrapped angle change
  for (int r = 0; r < 200; ++r)
    EXPECT_NEAR(t(r, 0), wrap_angle(b.s_next(r, 0) - b.s(r, 0)), 1e-12);
  m.set_params(std::vector<double>(m.num_params(), 0.0));
  EXPECT_EQ(m.outputs(b.latent, b.a).cwiseAbs().maxCoeff(), 0.0);
}

TEST(BaselineModel, ZeroWeightsAndPerfectPredictor) {
  auto env = make_env("cartpole");
  BaselineModel m(env->spec().layout, 1, small_options(), 2);
  EXPECT_EQ(m.spec().output_dim, 4);
  m.set_params(std::vector<double>(m.num_params(), 0.0));
  Rng rng(9);
  const Mat s = random_mat(rng, 5, 4, -1, 1);
  const Mat a = random_mat(rng, 5, 1, -1, 1);
  EXPECT_EQ(m.predict(s, a), s);
  TransitionBatch b = make_batch(env->spec().layout, s, a, s);
  EXPECT_EQ(m.loss(b, nullptr).total, 0.0);
  BaselineModel r(env->spec().layout, 1, small_options(), 2);
  b = make_batch(env->spec().layout, s, a, r.predict(s, a));
  EXPECT_LE(r.loss(b, nullptr).total, 1e-28);
}

TEST(BaselineModel, WrapsAngleDeltasAndPredictions) {
  auto env = make_env("pendulum");
  Mat s(1, 2), sn(1, 2);
  s << 3.1, 1.0;
  sn << -3.1, 1.0;
  const TransitionBatch b = make_batch(env->spec().layout, s, Mat::Zero(1, 1), sn);
  ModelOptions o = small_options();
  BaselineModel wrapped(env->spec().layout, 1, o, 1);
  EXPECT_NEAR(wrapped.targets(b)(0, 0), 2 * std::numbers::pi - 6.2, 1e-12);
  o.baseline_wrap_angles = false;
  BaselineModel raw(env->spec().layout, 1, o, 1);
  EXPECT_NEAR(raw.targets(b)(0, 0), -6.2, 1e-12);
  Mat out(1, 2);
  out << 0.2, 0.0;
  EXPECT_NEAR(wrapped.advance(s, out)(0, 0), 3.3 - 2 * std::numbers::pi, 1e-12);
  EXPECT_NEAR(raw.advance(s, out)(0, 0), 3.3, 1e-12);
}

TEST(BaselineModel, GradientMatchesFiniteDifferences) {
  Rng rng(10);
  for (const std::string& name : env_names()) {
    auto env = make_env(name);
    BaselineModel m(env->spec().layout, env->spec().action_dim, small_options(), 3);
    const TransitionBatch b = random_batch(rng, env->spec().layout, env->spec().action_dim, 5);
    m.fit_normalization(b);
    EXPECT_LE(max_relative_gradient_error(m, b, 1e-6), 1e-4) << name;
  }
}

TEST(Ensemble, MeanOfMembers) {
  auto env = make_env("reacher");
  for (ModelType t : {ModelType::kGemEnsemble, ModelType::kBaselineEnsemble}) {
    auto e = make_model(t, env->spec().layout, 2, small_options(), 11);
    auto& ens = dynamic_cast<Ensemble&>(*e);
    ASSERT_EQ(ens.size(), 5u);
    Rng rng(11);
    const Mat lat = ens.encode(random_mat(rng, 7, 4, -2, 2));
    const Mat a = random_mat(rng, 7, 2, -2, 2);
    Mat mean = Mat::Zero(7, ens.member(0).outputs(lat, a).cols());
    for (std::size_t k = 0; k < 5; ++k) mean += ens.member(k).outputs(lat, a);
    mean /= 5.0;
    EXPECT_LE((ens.outputs(lat, a) - mean).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((ens.step(lat, a) - ens.member(0).advance(lat, mean)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_GT((ens.member(0).outputs(lat, a) - ens.member(1).outputs(lat, a)).norm(), 0.0);
  }
}

TEST(Ensemble, IdenticalMembersEqualSingleModel) {
  auto env = make_env("pendulum");
  std::vector<std::unique_ptr<TrainableModel>> members;
  for (int k = 0; k < 5; ++k)
    members.push_back(std::make_unique<GemModel>(env->spec().layout, 1, small_options(), 42));
  Ensemble e(std::move(members));
  GemModel single(env->spec().layout, 1, small_options(), 42);
  Rng rng(12);
  const Mat lat = single.encode(random_mat(rng, 6, 2, -3, 3));
  const Mat a = random_mat(rng, 6, 1, -2, 2);
  EXPECT_LE((e.step(lat, a) - single.step(lat, a)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Ensemble, GradientIsSumOfMemberGradients) {
  auto env = make_env("cartpole");
  auto e = make_model(ModelType::kGemEnsemble, env->spec().layout, 1, joint_options(), 13);
  auto& ens = dynamic_cast<Ensemble&>(*e);
  Rng rng(13);
  const TransitionBatch b = random_batch(rng, env->spec().layout, 1, 6);
  ens.fit_normalization(b);
  std::vector<double> g;
  const LossParts total = ens.loss(b, &g);
  double sum = 0.0;
  std::size_t off = 0;
  for (std::size_t k = 0; k < ens.size(); ++k) {
    std::vector<double> gk;
    sum += ens.member(k).loss(b, &gk).total;
    for (std::size_t i = 0; i < gk.size(); ++i) EXPECT_EQ(g[off + i], gk[i]);
    off += gk.size();
  }
  EXPECT_EQ(off, g.size());
  EXPECT_NEAR(total.total, sum, 1e-14);
  EXPECT_LE(max_relative_gradient_error(ens, b, 1e-6), 1e-4);
}

TEST(Ensemble, RejectsMismatchedMembers) {
  auto env = make_env("pendulum");
  std::vector<std::unique_ptr<TrainableModel>> members;
  members.push_back(std::make_unique<GemModel>(env->spec().layout, 1, small_options(), 1));
  members.push_back(std::make_unique<BaselineModel>(env->spec().layout, 1, small_options(), 1));
  EXPECT_THROW(Ensemble(std::move(members)), ContractError);
  std::vector<std::unique_ptr<TrainableModel>> sizes;
  ModelOptions big = small_options();
  big.hidden_sizes = {9, 8};
  sizes.push_back(std::make_unique<GemModel>(env->spec().layout, 1, small_options(), 1));
  sizes.push_back(std::make_unique<GemModel>(env->spec().layout, 1, big, 1));
  EXPECT_THROW(Ensemble(std::move(sizes)), ContractError);
}

TEST(Rollout, HorizonOneIsSinglePrediction) {
  auto env = make_env("reacher");
  GemModel m(env->spec().layout, 2, small_options(), 14);
  Rng rng(14);
  const Mat s = random_mat(rng, 3, 4, -2, 2);
  const Mat a = random_mat(rng, 3, 2, -1, 1);
  const Rollout r = rollout(m, s, {a});
  ASSERT_EQ(r.states.size(), 1u);
  EXPECT_EQ(r.states[0], m.predict(s, a));
  EXPECT_FALSE(r.truncated);
  EXPECT_THROW(rollout(m, s, {}), ContractError);
}

TEST(Rollout, TrueDynamicsReproducesEnvironment) {
  std::shared_ptr<const Env> env = make_env("double_pendulum");
  TrueDynamics oracle(env);
  Rng rng(15);
  EnvState st = env->reset(3);
  std::vector<Mat> actions;
  std::vector<Vec> truth;
  for (int t = 0; t < 50; ++t) {
    const Mat a = random_mat(rng, 1, 2, -5, 5);
    actions.push_back(a);
    st = env->step(st, a.row(0).transpose());
    truth.push_back(st.x);
  }
  const Rollout r = rollout(oracle, env->reset(3).x.transpose(), actions);
  for (int t = 0; t < 50; ++t) EXPECT_EQ(Vec(r.states[t].row(0).transpose()), truth[t]);
}

TEST(Rollout, GemStaysOnManifoldAfterFiftySteps) {
  const StateLayout l = mixed_layout();
  GemModel m(l, 2, small_options(), 16);
  Rng rng(16);
  std::vector<Mat> actions;
  for (int t = 0; t < 50; ++t) actions.push_back(random_mat(rng, 4, 2, -1, 1));
  const Mat s0 = random_mat(rng, 4, 12, -2, 2);
  Mat lat = m.encode(s0);
  for (const Mat& a : actions) lat = m.step(lat, a);
  int lc = 0;
  for (const GroupSlot& slot : l.slots) {
    const int n = lie::matrix_dim(slot.kind);
    for (int r = 0; r < 4; ++r) {
      const lie::GroupElement g(slot.kind, ad::ConstMatMap(lat.row(r).data() + lc, n, n));
      EXPECT_LE(lie::invariant_defect(g).orthogonality, 1e-8);
    }
    lc += n * n;
  }
  const Rollout r = rollout(m, s0, actions);
  EXPECT_LE((r.states.back() - m.decode(lat)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Rollout, NonFiniteRowsAreTruncatedAndFlagged) {
  auto env = make_env("pendulum");
  BaselineModel m(env->spec().layout, 1, small_options(), 17);
  std::vector<double> p(m.num_params(), 0.0);
  const std::size_t last_bias = p.size() - 1;
  p[last_bias] = 1e308;  // omega delta saturates to +inf after a couple steps
  m.set_params(p);
  Mat s(2, 2);
  s << 0.1, 0.0, 0.2, 0.0;
  std::vector<Mat> actions(5, Mat::Zero(2, 1));
  const Rollout r = rollout(m, s, actions);
  EXPECT_TRUE(r.truncated);
  EXPECT_LT(r.finite_steps[0], 5);
  for (const Mat& x : r.states) EXPECT_TRUE(x.allFinite());
}

TEST(Persistence, SaveLoadReproducesPredictions) {
  auto env = make_env("cartpole");
  const auto dir = std::filesystem::temp_directory_path() / "gemdyn_models_test";
  std::filesystem::create_directories(dir);
  Rng rng(18);
  const TransitionBatch b = random_batch(rng, env->spec().layout, 1, 30);
  for (ModelType t : {ModelType::kGem, ModelType::kBaseline, ModelType::kGemEnsemble,
                      ModelType::kBaselineEnsemble}) {
    auto m = make_model(t, env->spec().layout, 1, small_options(), 19);
    m->fit_normalization(b);
    const std::string path = (dir / (to_string(t) + ".ckpt")).string();
    save_model(path, *m, "cartpole", small_options(), 19);
    const LoadedModel back = load_model(path);
    EXPECT_EQ(back.env, "cartpole");
    EXPECT_EQ(back.model->type(), t);
    EXPECT_EQ(back.model->get_params(), m->get_params());
    EXPECT_EQ(back.model->predict(b.s, b.a), m->predict(b.s, b.a));
  }
  EXPECT_THROW(load_model((dir / "missing.ckpt").string()), ParseError);
}

TEST(ModelType, Parse) {
  EXPECT_EQ(parse_model_type("gem_ensemble"), ModelType::kGemEnsemble);
  EXPECT_EQ(to_string(parse_model_type("true")), "true");
  EXPECT_THROW(parse_model_type("pets"), ContractError);
}

}  // namespace
}  // namespace gemdyn
