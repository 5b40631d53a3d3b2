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

#ifndef GEMDYN_AUTODIFF_HPP_
#define GEMDYN_AUTODIFF_HPP_

// A small reverse-mode tape over batched row-major matrices (one row per
// sample) with the handful of primitives the dynamics models need, plus the
// MLP, Adam and finite-difference utilities built on top of it.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gemdyn/errors.hpp"
#include "gemdyn/lie.hpp"

namespace gemdyn::ad {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::RowVectorXd;
using ConstMatMap = Eigen::Map<const Mat>;

// Elementwise tanh through the vectorized exp; absolute error below 4e-16.
inline Mat tanh(const Mat& x) {
  const auto e = (-2.0 * x.array().abs()).exp();
  return x.array().sign() * (1.0 - e) / (1.0 + e);
}

enum class Activation { kTanh, kRelu };

inline std::string to_string(Activation a) {
  return a == Activation::kTanh ? "tanh" : "relu";
}

inline Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  throw ParseError("unknown activation '" + name + "'");
}

struct MlpSpec {
  int input_dim = 1;
  std::vector<int> hidden_sizes = {100, 100};
  int output_dim = 1;
  Activation activation = Activation::kTanh;

  void validate() const {
    bool ok = input_dim >= 1 && output_dim >= 1;
    for (int h : hidden_sizes) ok = ok && h >= 1;
    if (!ok) throw DimensionError("MlpSpec: all dimensions must be >= 1");
  }

  // Widths input, hidden..., output.
  std::vector<int> widths() const {
    std::vector<int> w{input_dim};
    w.insert(w.end(), hidden_sizes.begin(), hidden_sizes.end());
    w.push_back(output_dim);
    return w;
  }

  // Each layer stores a row-major (fan_in x fan_out) weight followed by its
  // fan_out biases.
  std::size_t num_params() const {
    const std::vector<int> w = widths();
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < w.size(); ++l)
      n += static_cast<std::size_t>(w[l]) * w[l + 1] + w[l + 1];
    return n;
  }

  bool operator==(const MlpSpec&) const = default;
};

struct NodeId {
  int index = -1;
  bool valid() const { return index >= 0; }
};

enum class Op {
  kConstant,
  kParameter,
  kMatmul,
  kAddBias,
  kAdd,
  kActivation,
  kScaleCols,
  kSliceCols,
  kConcatCols,
  kStopGradient,
  kHat,
  kExp,
  kCompose,
  kFrobeniusLoss,
  kSquaredErrorLoss,
};

// Records primitives in execution order; backward() walks the record in
// reverse, visiting every node once.
class Tape {
 public:
  explicit Tape(std::size_t num_params = 0) : num_params_(num_params) {}

  std::size_t num_params() const { return num_params_; }
  std::size_t size() const { return nodes_.size(); }
  Op op(NodeId id) const { return at(id).op; }

  const Mat& value(NodeId id) const { return at(id).value; }

  double scalar(NodeId id) const {
    const Mat& v = value(id);
    if (v.rows() != 1 || v.cols() != 1) throw ContractError("node is not a scalar");
    return v(0, 0);
  }

  NodeId constant(Mat value) {
    Node n;
    n.op = Op::kConstant;
    n.value = std::move(value);
    return push(std::move(n));
  }

  // Leaf viewing a rows x cols row-major block of the global parameter
  // vector starting at `offset`.
  NodeId parameter(std::span<const double> block, std::size_t offset, int rows, int cols) {
    if (block.size() != static_cast<std::size_t>(rows) * cols ||
        offset + block.size() > num_params_) {
      throw DimensionError("Tape::parameter: block does not fit the parameter vector");
    }
    Node n;
    n.op = Op::kParameter;
    n.value = ConstMatMap(block.data(), rows, cols);
    n.offset = offset;
    n.requires_grad = true;
    return push(std::move(n));
  }

  NodeId matmul(NodeId x, NodeId w) {
    const Mat& xv = value(x);
    const Mat& wv = value(w);
    if (xv.cols() != wv.rows()) throw DimensionError("matmul: inner dimensions differ");
    return push_op(Op::kMatmul, xv * wv, {x, w});
  }

  NodeId add_bias(NodeId x, NodeId bias) {
    const Mat& xv = value(x);
    const Mat& bv = value(bias);
    if (bv.rows() != 1 || bv.cols() != xv.cols())
      throw DimensionError("add_bias: bias must be 1 x cols");
    Mat out = xv;
    out.rowwise() += bv.row(0);
    return push_op(Op::kAddBias, std::move(out), {x, bias});
  }

  NodeId add(NodeId a, NodeId b) {
    const Mat& av = value(a);
    const Mat& bv = value(b);
    if (av.rows() != bv.rows() || av.cols() != bv.cols())
      throw DimensionError("add: shapes differ");
    return push_op(Op::kAdd, av + bv, {a, b});
  }

  NodeId activation(NodeId x, Activation act) {
    const Mat& xv = value(x);
    Mat out = act == Activation::kTanh ? tanh(xv)
                                       : Mat(xv.array().max(0.0));
    NodeId id = push_op(Op::kActivation, std::move(out), {x});
    nodes_[id.index].activation = act;
    return id;
  }

  // Column-wise scaling by a fixed row vector.
  NodeId scale_cols(NodeId x, const RowVec& scale) {
    const Mat& xv = value(x);
    if (scale.size() != xv.cols()) throw DimensionError("scale_cols: width mismatch");
    Mat out = xv.array().rowwise() * scale.array();
    NodeId id = push_op(Op::kScaleCols, std::move(out), {x});
    nodes_[id.index].scale = scale;
    return id;
  }

  NodeId slice_cols(NodeId x, int start, int count) {
    const Mat& xv = value(x);
    if (start < 0 || count < 0 || start + count > xv.cols())
      throw DimensionError("slice_cols: range out of bounds");
    NodeId id = push_op(Op::kSliceCols, xv.middleCols(start, count), {x});
    nodes_[id.index].start = start;
    return id;
  }

  NodeId concat_cols(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw DimensionError("concat_cols: no inputs");
    const Eigen::Index rows = value(parts.front()).rows();
    Eigen::Index cols = 0;
    for (NodeId p : parts) {
      if (value(p).rows() != rows) throw DimensionError("concat_cols: row counts differ");
      cols += value(p).cols();
    }
    Mat out(rows, cols);
    Eigen::Index c = 0;
    for (NodeId p : parts) {
      out.middleCols(c, value(p).cols()) = value(p);
      c += value(p).cols();
    }
    return push_op(Op::kConcatCols, std::move(out), parts);
  }

  // Same value, no gradient flows through.
  NodeId stop_gradient(NodeId x) {
    Node n;
    n.op = Op::kStopGradient;
    n.value = value(x);
    n.inputs = {x};
    return push(std::move(n));
  }

  // Rows of K algebra coefficients -> rows of flattened n x n algebra matrices.
  NodeId hat(NodeId alpha, lie::GroupKind kind) {
    const Mat& av = value(alpha);
    check_coeff_width(av, kind, "hat");
    const lie::Basis& b = cached_basis(kind);
    const int n = lie::matrix_dim(kind);
    Mat out = Mat::Zero(av.rows(), n * n);
    for (Eigen::Index r = 0; r < av.rows(); ++r)
      for (int i = 0; i < lie::algebra_dim(kind); ++i)
        out.row(r) += av(r, i) * Eigen::Map<const RowVec>(b.elements[i].data(), n * n);
    NodeId id = push_op(Op::kHat, std::move(out), {alpha});
    nodes_[id.index].kind = kind;
    return id;
  }

  // Rows of K algebra coefficients -> rows of flattened exp(hat(alpha)).
  NodeId exp(NodeId alpha, lie::GroupKind kind) {
    const Mat& av = value(alpha);
    check_coeff_width(av, kind, "exp");
    const int n = lie::matrix_dim(kind);
    Mat out(av.rows(), n * n);
    std::vector<lie::Jacobian> jacs;
    const bool grad = at(alpha).requires_grad;
    if (grad) jacs.reserve(av.rows());
    for (Eigen::Index r = 0; r < av.rows(); ++r) {
      const lie::Coeffs c = av.row(r).transpose();
      const lie::Matrix m = lie::exp_coeffs(kind, c);
      out.row(r) = Eigen::Map<const RowVec>(m.data(), n * n);
      if (grad) jacs.push_back(lie::exp_jacobian_coeffs(kind, c));
    }
    NodeId id = push_op(Op::kExp, std::move(out), {alpha});
    nodes_[id.index].kind = kind;
    nodes_[id.index].jacobians = std::move(jacs);
    return id;
  }

  // Row-wise matrix product of flattened group elements a * b.
  NodeId compose(NodeId a, NodeId b, lie::GroupKind kind) {
    const Mat& av = value(a);
    const Mat& bv = value(b);
    const int n = lie::matrix_dim(kind);
    if (av.cols() != n * n || bv.cols() != n * n || av.rows() != bv.rows())
      throw DimensionError("compose: operands are not matching group rows");
    Mat out(av.rows(), n * n);
    for (Eigen::Index r = 0; r < av.rows(); ++r) {
      Eigen::Map<Mat>(out.row(r).data(), n, n) =
          ConstMatMap(av.row(r).data(), n, n) * ConstMatMap(bv.row(r).data(), n, n);
    }
    NodeId id = push_op(Op::kCompose, std::move(out), {a, b});
    nodes_[id.index].kind = kind;
    return id;
  }

  // Mean over rows of the squared Frobenius distance between flattened
  // group elements.
  NodeId frobenius_loss(NodeId pred, NodeId target) {
    return push_loss(Op::kFrobeniusLoss, pred, target);
  }

  // Mean over rows of the squared Euclidean error.
  NodeId squared_error_loss(NodeId pred, NodeId target) {
    return push_loss(Op::kSquaredErrorLoss, pred, target);
  }

  // Gradient of a scalar node with respect to the global parameter vector.
  std::vector<double> backward(NodeId loss) const {
    const Mat& lv = value(loss);
    if (lv.rows() != 1 || lv.cols() != 1)
      throw ContractError("backward: loss node must be a 1x1 scalar");
    std::vector<double> grad(num_params_, 0.0);
    std::vector<Mat> adj(nodes_.size());
    adj[loss.index] = Mat::Ones(1, 1);
    for (int i = loss.index; i >= 0; --i) {
      const Node& n = nodes_[i];
      if (!n.requires_grad || adj[i].size() == 0) continue;
      propagate(n, adj[i], adj, grad);
    }
    return grad;
  }

 private:
  struct Node {
    Op op = Op::kConstant;
    Mat value;
    std::vector<NodeId> inputs;
    bool requires_grad = false;
    std::size_t offset = 0;
    Activation activation = Activation::kTanh;
    RowVec scale;
    int start = 0;
    lie::GroupKind kind = lie::GroupKind::kSO2;
    std::vector<lie::Jacobian> jacobians;
  };

  static const lie::Basis& cached_basis(lie::GroupKind kind) {
    static const std::vector<lie::Basis> kBases = {
        lie::basis(lie::GroupKind::kSO2), lie::basis(lie::GroupKind::kSO3),
        lie::basis(lie::GroupKind::kSE2), lie::basis(lie::GroupKind::kSE3)};
    return kBases[static_cast<int>(kind)];
  }

  static void check_coeff_width(const Mat& v, lie::GroupKind kind, const char* where) {
    if (v.cols() != lie::algebra_dim(kind))
      throw DimensionError(std::string(where) + ": coefficient width mismatch");
  }

  const Node& at(NodeId id) const {
    if (id.index < 0 || id.index >= static_cast<int>(nodes_.size()))
      throw ContractError("invalid tape node id");
    return nodes_[id.index];
  }

  NodeId push(Node n) {
    nodes_.push_back(std::move(n));
    return NodeId{static_cast<int>(nodes_.size()) - 1};
  }

  NodeId push_op(Op op, Mat value, std::vector<NodeId> inputs) {
    Node n;
    n.op = op;
    n.value = std::move(value);
    for (NodeId in : inputs) n.requires_grad = n.requires_grad || at(in).requires_grad;
    n.inputs = std::move(inputs);
    return push(std::move(n));
  }

  NodeId push_loss(Op op, NodeId pred, NodeId target) {
    const Mat& p = value(pred);
    const Mat& t = value(target);
    if (p.rows() != t.rows() || p.cols() != t.cols())
      throw DimensionError("loss: prediction and target shapes differ");
    if (p.rows() == 0) throw ContractError("loss: empty batch");
    Mat out(1, 1);
    out(0, 0) = (p - t).squaredNorm() / static_cast<double>(p.rows());
    return push_op(op, std::move(out), {pred, target});
  }

  void accumulate(std::vector<Mat>& adj, NodeId id, const Mat& g) const {
    if (!nodes_[id.index].requires_grad) return;
    Mat& a = adj[id.index];
    if (a.size() == 0) {
      a = g;
    } else {
      a += g;
    }
  }

  void propagate(const Node& n, const Mat& g, std::vector<Mat>& adj,
                 std::vector<double>& grad) const {
    switch (n.op) {
      case Op::kConstant:
      case Op::kStopGradient:
        return;
      case Op::kParameter: {
        Eigen::Map<Mat>(grad.data() + n.offset, n.value.rows(), n.value.cols()) += g;
        return;
      }
      case Op::kMatmul: {
        const Mat& x = value(n.inputs[0]);
        const Mat& w = value(n.inputs[1]);
        if (nodes_[n.inputs[0].index].requires_grad)
          accumulate(adj, n.inputs[0], g * w.transpose());
        if (nodes_[n.inputs[1].index].requires_grad)
          accumulate(adj, n.inputs[1], x.transpose() * g);
        return;
      }
      case Op::kAddBias:
        accumulate(adj, n.inputs[0], g);
        accumulate(adj, n.inputs[1], g.colwise().sum());
        return;
      case Op::kAdd:
        accumulate(adj, n.inputs[0], g);
        accumulate(adj, n.inputs[1], g);
        return;
      case Op::kActivation: {
        if (n.activation == Activation::kTanh) {
          accumulate(adj, n.inputs[0], g.cwiseProduct(Mat((1.0 - n.value.array().square()))));
        } else {
          const Mat& x = value(n.inputs[0]);
          accumulate(adj, n.inputs[0], Mat((x.array() > 0.0).select(g.array(), 0.0)));
        }
        return;
      }
      case Op::kScaleCols:
        accumulate(adj, n.inputs[0], Mat(g.array().rowwise() * n.scale.array()));
        return;
      case Op::kSliceCols: {
        const Mat& x = value(n.inputs[0]);
        Mat full = Mat::Zero(x.rows(), x.cols());
        full.middleCols(n.start, g.cols()) = g;
        accumulate(adj, n.inputs[0], full);
        return;
      }
      case Op::kConcatCols: {
        Eigen::Index c = 0;
        for (NodeId in : n.inputs) {
          const Eigen::Index w = value(in).cols();
          accumulate(adj, in, g.middleCols(c, w));
          c += w;
        }
        return;
      }
      case Op::kHat: {
        const lie::Basis& b = cached_basis(n.kind);
        const int sq = lie::matrix_dim(n.kind) * lie::matrix_dim(n.kind);
        const int k = lie::algebra_dim(n.kind);
        Mat ga(g.rows(), k);
        for (int i = 0; i < k; ++i) {
          const Eigen::Map<const Eigen::VectorXd> e(b.elements[i].data(), sq);
          ga.col(i) = g * e;
        }
        accumulate(adj, n.inputs[0], ga);
        return;
      }
      case Op::kExp: {
        const int k = lie::algebra_dim(n.kind);
        Mat ga(g.rows(), k);
        for (Eigen::Index r = 0; r < g.rows(); ++r)
          ga.row(r) = g.row(r) * n.jacobians[r];
        accumulate(adj, n.inputs[0], ga);
        return;
      }
      case Op::kCompose: {
        const int d = lie::matrix_dim(n.kind);
        const Mat& av = value(n.inputs[0]);
        const Mat& bv = value(n.inputs[1]);
        const bool ga_needed = nodes_[n.inputs[0].index].requires_grad;
        const bool gb_needed = nodes_[n.inputs[1].index].requires_grad;
        Mat ga(g.rows(), g.cols()), gb(g.rows(), g.cols());
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
          const ConstMatMap gr(g.row(r).data(), d, d);
          if (ga_needed)
            Eigen::Map<Mat>(ga.row(r).data(), d, d) =
                gr * ConstMatMap(bv.row(r).data(), d, d).transpose();
          if (gb_needed)
            Eigen::Map<Mat>(gb.row(r).data(), d, d) =
                ConstMatMap(av.row(r).data(), d, d).transpose() * gr;
        }
        if (ga_needed) accumulate(adj, n.inputs[0], ga);
        if (gb_needed) accumulate(adj, n.inputs[1], gb);
        return;
      }
      case Op::kFrobeniusLoss:
      case Op::kSquaredErrorLoss: {
        const Mat& p = value(n.inputs[0]);
        const Mat& t = value(n.inputs[1]);
        const double s = 2.0 * g(0, 0) / static_cast<double>(p.rows());
        const Mat diff = s * (p - t);
        accumulate(adj, n.inputs[0], diff);
        accumulate(adj, n.inputs[1], -diff);
        return;
      }
    }
  }

  std::size_t num_params_;
  std::vector<Node> nodes_;
};

// Affine-activation stack whose final layer is linear; every intermediate is
// recorded on `tape`. Parameter gradients land at grad_offset + local index.
inline NodeId mlp_forward(const MlpSpec& spec, std::span<const double> params,
                          std::size_t grad_offset, NodeId input, Tape& tape) {
  if (params.size() != spec.num_params())
    throw DimensionError("mlp_forward: parameter count does not match spec");
  if (tape.value(input).cols() != spec.input_dim)
    throw DimensionError("mlp_forward: input width does not match spec");
  const std::vector<int> w = spec.widths();
  NodeId h = input;
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    const std::size_t nw = static_cast<std::size_t>(w[l]) * w[l + 1];
    const NodeId weight =
        tape.parameter(params.subspan(off, nw), grad_offset + off, w[l], w[l + 1]);
    off += nw;
    const NodeId bias =
        tape.parameter(params.subspan(off, w[l + 1]), grad_offset + off, 1, w[l + 1]);
    off += w[l + 1];
    h = tape.add_bias(tape.matmul(h, weight), bias);
    if (l + 2 < w.size()) h = tape.activation(h, spec.activation);
  }
  return h;
}

// Tape-free forward pass for prediction.
inline Mat mlp_apply(const MlpSpec& spec, std::span<const double> params, const Mat& input) {
  if (params.size() != spec.num_params())
    throw DimensionError("mlp_apply: parameter count does not match spec");
  if (input.cols() != spec.input_dim)
    throw DimensionError("mlp_apply: input width does not match spec");
  const std::vector<int> w = spec.widths();
  Mat h = input;
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    const ConstMatMap weight(params.data() + off, w[l], w[l + 1]);
    off += static_cast<std::size_t>(w[l]) * w[l + 1];
    const Eigen::Map<const RowVec> bias(params.data() + off, w[l + 1]);
    off += w[l + 1];
    Mat next = h * weight;
    next.rowwise() += bias;
    if (l + 2 < w.size()) {
      if (spec.activation == Activation::kTanh) {
        next = tanh(next);
      } else {
        next = next.array().max(0.0);
      }
    }
    h = std::move(next);
  }
  return h;
}

// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
inline std::vector<double> init_params(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::vector<double> p(spec.num_params(), 0.0);
  const std::vector<int> w = spec.widths();
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    const double limit = std::sqrt(6.0 / (w[l] + w[l + 1]));
    std::uniform_real_distribution<double> u(-limit, limit);
    const std::size_t nw = static_cast<std::size_t>(w[l]) * w[l + 1];
    for (std::size_t i = 0; i < nw; ++i) p[off + i] = u(rng);
    off += nw + w[l + 1];
  }
  return p;
}

struct AdamConfig {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const {
    if (!(learning_rate > 0.0) || beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 ||
        beta2 >= 1.0 || !(epsilon > 0.0))
      throw ContractError("AdamConfig: invalid hyperparameters");
  }
};

struct AdamState {
  AdamState(std::size_t n, AdamConfig config = {})
      : config(config), first(n, 0.0), second(n, 0.0) {
    config.validate();
  }

  AdamConfig config;
  std::vector<double> first;
  std::vector<double> second;
  long step = 0;
};

inline void adam_step(AdamState& state, std::span<double> params,
                      std::span<const double> grads) {
  if (params.size() != state.first.size() || grads.size() != params.size())
    throw DimensionError("adam_step: shapes disagree");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw NumericError("adam_step: non-finite gradient at index " + std::to_string(i) +
                         " (step " + std::to_string(state.step) + ")");
    }
  }
  const AdamConfig& c = state.config;
  ++state.step;
  const double corr1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double corr2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.first[i] = c.beta1 * state.first[i] + (1.0 - c.beta1) * grads[i];
    state.second[i] = c.beta2 * state.second[i] + (1.0 - c.beta2) * grads[i] * grads[i];
    const double mhat = state.first[i] / corr1;
    const double vhat = state.second[i] / corr2;
    params[i] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon);
  }
}

// Central differences (f(p + h e_i) - f(p - h e_i)) / 2h.
inline std::vector<double> finite_diff_gradient(
    const std::function<double(std::span<const double>)>& loss_fn,
    std::vector<double> params, double h) {
  if (!(h > 0.0)) throw ContractError("finite_diff_gradient: step must be positive");
  std::vector<double> g(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + h;
    const double fp = loss_fn(params);
    params[i] = keep - h;
    const double fm = loss_fn(params);
    params[i] = keep;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace gemdyn::ad

#endif  // GEMDYN_AUTODIFF_HPP_
