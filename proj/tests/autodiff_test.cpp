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

#include "gemdyn/autodiff.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "gemdyn/checkpoint.hpp"
#include "oracles.hpp"

namespace gemdyn::ad {
namespace {

using gemdyn::testing::rel_error;

// Straight-line re-evaluation of an MLP with explicit loops.
std::vector<double> reference_mlp(const MlpSpec& spec, const std::vector<double>& p,
                                  std::vector<double> x) {
  const std::vector<int> w = spec.widths();
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    std::vector<double> y(w[l + 1], 0.0);
    for (int j = 0; j < w[l + 1]; ++j) {
      double s = 0.0;
      for (int i = 0; i < w[l]; ++i) s += x[i] * p[off + i * w[l + 1] + j];
      y[j] = s;
    }
    off += static_cast<std::size_t>(w[l]) * w[l + 1];
    for (int j = 0; j < w[l + 1]; ++j) {
      y[j] += p[off + j];
      if (l + 2 < w.size())
        y[j] = spec.activation == Activation::kTanh ? std::tanh(y[j]) : std::max(0.0, y[j]);
    }
    off += w[l + 1];
    x = std::move(y);
  }
  return x;
}

Mat random_mat(std::mt19937_64& rng, int rows, int cols, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

std::vector<double> random_params(std::mt19937_64& rng, std::size_t n, double scale) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> p(n);
  for (double& v : p) v = d(rng);
  return p;
}

TEST(MlpSpec, ParamCount) {
  const MlpSpec s{3, {4, 5}, 2, Activation::kTanh};
  EXPECT_EQ(s.num_params(), 3u * 4 + 4 + 4 * 5 + 5 + 5 * 2 + 2);
  EXPECT_THROW((MlpSpec{0, {4}, 1}.validate()), DimensionError);
}

TEST(MlpForward, ZeroWeightsGiveZero) {
  const MlpSpec s{3, {8, 8}, 2};
  const std::vector<double> p(s.num_params(), 0.0);
  Tape tape(p.size());
  const NodeId in = tape.constant(Mat::Constant(4, 3, 1.7));
  const NodeId out = mlp_forward(s, p, 0, in, tape);
  EXPECT_EQ(tape.value(out).norm(), 0.0);
}

TEST(MlpForward, IdentityLinearLayer) {
  const MlpSpec s{3, {}, 3};
  std::vector<double> p(s.num_params(), 0.0);
  for (int i = 0; i < 3; ++i) p[i * 3 + i] = 1.0;
  Mat x(2, 3);
  x << 1, -2, 3, 0.5, 0.25, -8;
  Tape tape(p.size());
  EXPECT_EQ(tape.value(mlp_forward(s, p, 0, tape.constant(x), tape)), x);
  EXPECT_EQ(mlp_apply(s, p, x), x);
}

TEST(MlpForward, MatchesStraightLineReference) {
  std::mt19937_64 rng(1);
  for (Activation act : {Activation::kTanh, Activation::kRelu}) {
    const MlpSpec s{5, {7, 6}, 3, act};
    const std::vector<double> p = random_params(rng, s.num_params(), 0.7);
    const Mat x = random_mat(rng, 6, 5);
    Tape tape(p.size());
    const Mat y = tape.value(mlp_forward(s, p, 0, tape.constant(x), tape));
    const Mat y2 = mlp_apply(s, p, x);
    for (int r = 0; r < x.rows(); ++r) {
      std::vector<double> row(x.row(r).data(), x.row(r).data() + 5);
      const std::vector<double> ref = reference_mlp(s, p, row);
      for (int c = 0; c < 3; ++c) {
        EXPECT_NEAR(y(r, c), ref[c], 1e-12);
        EXPECT_NEAR(y2(r, c), ref[c], 1e-12);
      }
    }
  }
}

TEST(MlpForward, DeterministicAndStateless) {
  std::mt19937_64 rng(2);
  const MlpSpec s{4, {10}, 2};
  const std::vector<double> p = random_params(rng, s.num_params(), 0.5);
  const Mat x = random_mat(rng, 3, 4);
  Tape t1(p.size()), t2(p.size());
  const Mat a = t1.value(mlp_forward(s, p, 0, t1.constant(x), t1));
  const std::size_t nodes = t1.size();
  const Mat b = t2.value(mlp_forward(s, p, 0, t2.constant(x), t2));
  EXPECT_EQ(a, b);
  EXPECT_EQ(t2.size(), nodes);
  EXPECT_THROW(mlp_forward(s, std::vector<double>(3), 0, t1.constant(x), t1),
               DimensionError);
}

TEST(InitParams, GlorotRangeAndZeroBiases) {
  const MlpSpec s{6, {10}, 4};
  const std::vector<double> p = init_params(s, 42);
  const double lim1 = std::sqrt(6.0 / 16.0), lim2 = std::sqrt(6.0 / 14.0);
  for (int i = 0; i < 60; ++i) EXPECT_LE(std::abs(p[i]), lim1);
  for (int i = 60; i < 70; ++i) EXPECT_EQ(p[i], 0.0);
  for (int i = 70; i < 110; ++i) EXPECT_LE(std::abs(p[i]), lim2);
  for (int i = 110; i < 114; ++i) EXPECT_EQ(p[i], 0.0);
  EXPECT_EQ(p, init_params(s, 42));
  EXPECT_NE(p, init_params(s, 43));
}

TEST(Backward, SquaredNormOfLeaf) {
  const std::vector<double> x = {1.5, -2.0, 0.25};
  Tape tape(3);
  const NodeId leaf = tape.parameter(x, 0, 1, 3);
  const NodeId loss = tape.squared_error_loss(leaf, tape.constant(Mat::Zero(1, 3)));
  EXPECT_DOUBLE_EQ(tape.scalar(loss), 1.5 * 1.5 + 4.0 + 0.0625);
  const std::vector<double> g = tape.backward(loss);
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(g[i], 2.0 * x[i]);
}

TEST(Backward, ConstantLossHasZeroGradient) {
  const std::vector<double> p = {1.0, 2.0};
  Tape tape(2);
  tape.parameter(p, 0, 1, 2);
  const NodeId loss =
      tape.squared_error_loss(tape.constant(Mat::Ones(1, 1)), tape.constant(Mat::Zero(1, 1)));
  const std::vector<double> g = tape.backward(loss);
  EXPECT_EQ(g, std::vector<double>(2, 0.0));
}

TEST(Backward, NonScalarLossThrows) {
  const std::vector<double> p = {1.0, 2.0};
  Tape tape(2);
  const NodeId leaf = tape.parameter(p, 0, 1, 2);
  EXPECT_THROW(tape.backward(leaf), ContractError);
}

TEST(Backward, StopGradientBlocksFlow) {
  const std::vector<double> p = {3.0};
  Tape tape(1);
  const NodeId leaf = tape.parameter(p, 0, 1, 1);
  const NodeId loss =
      tape.squared_error_loss(tape.stop_gradient(leaf), tape.constant(Mat::Zero(1, 1)));
  EXPECT_EQ(tape.backward(loss)[0], 0.0);
}

// Loss through the Lie primitives: frobenius(exp(W in) * G, G_target).
double lie_loss(const MlpSpec& spec, std::span<const double> p, const Mat& in,
                lie::GroupKind kind, const Mat& g, const Mat& target,
                std::vector<double>* grad) {
  Tape tape(p.size());
  const NodeId alpha = mlp_forward(spec, p, 0, tape.constant(in), tape);
  const NodeId next = tape.compose(tape.exp(alpha, kind), tape.constant(g), kind);
  const NodeId loss = tape.frobenius_loss(next, tape.constant(target));
  if (grad) *grad = tape.backward(loss);
  return tape.scalar(loss);
}

Mat random_group_rows(std::mt19937_64& rng, lie::GroupKind kind, int rows) {
  const int n = lie::matrix_dim(kind);
  Mat out(rows, n * n);
  for (int r = 0; r < rows; ++r) {
    const Mat c = random_mat(rng, 1, lie::algebra_dim(kind));
    const lie::Matrix m = lie::exp_coeffs(kind, lie::Coeffs(c.row(0).transpose()));
    out.row(r) = Eigen::Map<const RowVec>(m.data(), n * n);
  }
  return out;
}

void expect_gradients_match(const std::vector<double>& an, const std::vector<double>& fd,
                            double tol) {
  ASSERT_EQ(an.size(), fd.size());
  for (std::size_t i = 0; i < an.size(); ++i) {
    if (std::abs(an[i]) <= 1e-8 && std::abs(fd[i]) <= 1e-8) continue;
    EXPECT_LT(rel_error(an[i], fd[i]), tol) << "i=" << i << " an=" << an[i] << " fd=" << fd[i];
  }
}

TEST(Backward, LieLossMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  for (lie::GroupKind kind : {lie::GroupKind::kSO2, lie::GroupKind::kSO3,
                              lie::GroupKind::kSE2, lie::GroupKind::kSE3}) {
    for (int trial = 0; trial < 100 / 4; ++trial) {
      const MlpSpec spec{3, {5}, lie::algebra_dim(kind), Activation::kTanh};
      const std::vector<double> p = random_params(rng, spec.num_params(), 0.6);
      const Mat in = random_mat(rng, 4, 3);
      const Mat g = random_group_rows(rng, kind, 4);
      const Mat target = random_group_rows(rng, kind, 4);
      std::vector<double> an;
      lie_loss(spec, p, in, kind, g, target, &an);
      const std::vector<double> fd = finite_diff_gradient(
          [&](std::span<const double> q) { return lie_loss(spec, q, in, kind, g, target, nullptr); },
          p, 1e-5);
      expect_gradients_match(an, fd, 1e-4);
    }
  }
}

TEST(Backward, HatSliceConcatScaleMatchFiniteDifferences) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const MlpSpec spec{4, {6}, 5, trial % 2 ? Activation::kTanh : Activation::kRelu};
    const std::vector<double> p = random_params(rng, spec.num_params(), 0.5);
    const Mat in = random_mat(rng, 3, 4);
    const Mat target = random_mat(rng, 3, 9 + 2);
    RowVec scale(2);
    scale << 0.3, -1.7;
    auto loss = [&](std::span<const double> q, std::vector<double>* grad) {
      Tape tape(q.size());
      const NodeId out = mlp_forward(spec, q, 0, tape.constant(in), tape);
      const NodeId h = tape.hat(tape.slice_cols(out, 0, 3), lie::GroupKind::kSO3);
      const NodeId rest = tape.scale_cols(tape.slice_cols(out, 3, 2), scale);
      const NodeId all = tape.concat_cols({h, rest});
      const NodeId l = tape.add(tape.squared_error_loss(all, tape.constant(target)),
                                tape.squared_error_loss(rest, tape.constant(Mat::Zero(3, 2))));
      if (grad) *grad = tape.backward(l);
      return tape.scalar(l);
    };
    std::vector<double> an;
    loss(p, &an);
    const std::vector<double> fd = finite_diff_gradient(
        [&](std::span<const double> q) { return loss(q, nullptr); }, p, 1e-5);
    expect_gradients_match(an, fd, 1e-4);
  }
}

TEST(Adam, ZeroGradientLeavesParams) {
  std::vector<double> p = {1.0, -2.0};
  AdamState s(2);
  const std::vector<double> g(2, 0.0);
  adam_step(s, p, g);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0}));
}

TEST(Adam, FirstStepIsSignScaled) {
  std::vector<double> p = {1.0, 1.0, 1.0};
  const std::vector<double> g = {0.5, -3.0, 1e-9};
  AdamState s(3, AdamConfig{5e-4, 0.9, 0.999, 1e-8});
  adam_step(s, p, g);
  // m_hat = g, v_hat = g^2 after bias correction at t = 1.
  for (int i = 0; i < 3; ++i)
    EXPECT_NEAR(p[i], 1.0 - 5e-4 * g[i] / (std::abs(g[i]) + 1e-8), 1e-15);
}

TEST(Adam, DeterministicAndRejectsNonFinite) {
  std::vector<double> a = {0.3, 0.4}, b = a;
  AdamState sa(2), sb(2);
  const std::vector<double> g = {0.1, -0.2};
  for (int i = 0; i < 5; ++i) {
    adam_step(sa, a, g);
    adam_step(sb, b, g);
  }
  EXPECT_EQ(a, b);
  const std::vector<double> bad = {NAN, 0.0};
  EXPECT_THROW(adam_step(sa, a, bad), NumericError);
  EXPECT_THROW(AdamState(2, AdamConfig{0.0}), ContractError);
}

TEST(FiniteDiff, QuadraticAndLinear) {
  auto quad = [](std::span<const double> x) { return 3.0 * x[0] * x[0] + x[0] * x[1]; };
  const std::vector<double> g = finite_diff_gradient(quad, {2.0, -1.0}, 1e-4);
  EXPECT_NEAR(g[0], 12.0 - 1.0, 1e-9);
  EXPECT_NEAR(g[1], 2.0, 1e-9);
  auto lin = [](std::span<const double> x) { return 2.0 * x[0] - 5.0 * x[1]; };
  for (double h : {1e-1, 1e-3, 1.0}) {
    const std::vector<double> gl = finite_diff_gradient(lin, {0.3, 0.7}, h);
    EXPECT_NEAR(gl[0], 2.0, 1e-12);
    EXPECT_NEAR(gl[1], -5.0, 1e-12);
  }
  EXPECT_THROW(finite_diff_gradient(lin, {0.0}, 0.0), ContractError);
}

TEST(Checkpoint, BinaryRoundTripIsBitExact) {
  std::mt19937_64 rng(8);
  std::vector<NetworkCheckpoint> nets;
  for (int k = 0; k < 3; ++k) {
    NetworkCheckpoint n;
    n.spec = MlpSpec{3 + k, {4, 2}, 2, k % 2 ? Activation::kRelu : Activation::kTanh};
    n.seed = 1000 + k;
    n.params = random_params(rng, n.spec.num_params(), 1.0);
    nets.push_back(n);
  }
  std::stringstream buf;
  write_checkpoint(buf, nets);
  const std::string bytes = buf.str();
  EXPECT_EQ(bytes.substr(0, 8), "GEMDYNCK");
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 1u);  // little-endian version
  const std::vector<NetworkCheckpoint> back = read_checkpoint(buf);
  EXPECT_EQ(back, nets);
  std::stringstream bad("NOTMAGIC");
  EXPECT_THROW(read_checkpoint(bad), ParseError);
  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_checkpoint(truncated), ParseError);
  const nlohmann::json j = to_json(nets[0]);
  EXPECT_EQ(j.at("params").get<std::vector<double>>(), nets[0].params);
  EXPECT_EQ(mlp_spec_from_json(j.at("spec")), nets[0].spec);
}

TEST(Tanh, MatchesStdTanh) {
  Mat x(1, 4001);
  for (int i = 0; i <= 4000; ++i) x(0, i) = -40.0 + 0.02 * i;
  x(0, 7) = 1e-300;
  x(0, 8) = -0.0;
  const Mat y = tanh(x);
  for (int i = 0; i <= 4000; ++i) EXPECT_NEAR(y(0, i), std::tanh(x(0, i)), 4e-16) << x(0, i);
  EXPECT_EQ(tanh(Mat::Constant(1, 1, 1e308))(0, 0), 1.0);
  EXPECT_EQ(tanh(Mat::Constant(1, 1, -1e308))(0, 0), -1.0);
}

}  // namespace
}  // namespace gemdyn::ad
