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

#ifndef GEMDYN_MODELS_HPP_
#define GEMDYN_MODELS_HPP_

// Learned dynamics models and the shared rollout machinery.
//
// Every model works on batches of rows. A model encodes raw states into its
// own latent rows, maps (latent, action) rows to raw output rows, and
// advances latents with those outputs. Ensembles average member outputs
// before advancing.
//
// GEM latent row: [flattened G per slot (row-major), raw statics, upsilon].
// GEM output row: [alpha per slot, raw-static deltas, delta upsilon].
// Baseline latent row: the raw state. Output row: state delta ordered as
// [static indices, velocity indices].

#include <Eigen/Core>

#include <cmath>
#include <fstream>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "gemdyn/autodiff.hpp"
#include "gemdyn/checkpoint.hpp"
#include "gemdyn/envs.hpp"
#include "gemdyn/errors.hpp"
#include "gemdyn/layout.hpp"
#include "gemdyn/lie.hpp"
#include "gemdyn/rng.hpp"

namespace gemdyn {

using ad::Mat;
using ad::RowVec;

enum class ModelType { kGem, kBaseline, kGemEnsemble, kBaselineEnsemble, kTrue };

inline std::string to_string(ModelType t) {
  switch (t) {
    case ModelType::kGem: return "gem";
    case ModelType::kBaseline: return "baseline";
    case ModelType::kGemEnsemble: return "gem_ensemble";
    case ModelType::kBaselineEnsemble: return "baseline_ensemble";
    case ModelType::kTrue: return "true";
  }
  return "?";
}

inline ModelType parse_model_type(const std::string& s) {
  for (ModelType t : {ModelType::kGem, ModelType::kBaseline, ModelType::kGemEnsemble,
                      ModelType::kBaselineEnsemble, ModelType::kTrue})
    if (to_string(t) == s) return t;
  throw ContractError("unknown model type '" + s +
                      "' (available: gem, baseline, gem_ensemble, baseline_ensemble, true)");
}

inline constexpr int kEnsembleSize = 5;

// One recorded step s -> s_next under action a.
struct Transition {
  int episode = 0;
  int t = 0;
  Vec s, a, s_next;
};

// A batch of transitions with the layout's group latents cached.
struct TransitionBatch {
  Mat s, a, s_next;
  Mat latent, latent_next;

  Eigen::Index size() const { return s.rows(); }

  TransitionBatch gather(std::span<const int> rows) const {
    TransitionBatch out;
    auto pick = [&](const Mat& m) {
      Mat r(rows.size(), m.cols());
      for (std::size_t i = 0; i < rows.size(); ++i) r.row(i) = m.row(rows[i]);
      return r;
    };
    out.s = pick(s);
    out.a = pick(a);
    out.s_next = pick(s_next);
    out.latent = pick(latent);
    out.latent_next = pick(latent_next);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Group latents

inline Mat group_latent(const StateLayout& layout, const Mat& states) {
  if (states.cols() != layout.state_dim) throw DimensionError("state width does not match layout");
  const int width = layout.group_feature_dim() +
                    static_cast<int>(layout.raw_static_indices.size() +
                                     layout.velocity_indices.size());
  Mat out(states.rows(), width);
  for (Eigen::Index r = 0; r < states.rows(); ++r) {
    const Vec s = states.row(r).transpose();
    int c = 0;
    for (const GroupSlot& slot : layout.slots) {
      const lie::Matrix m = slot_to_group(slot, s).matrix();
      const int n = lie::matrix_dim(slot.kind);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out(r, c++) = m(i, j);
    }
    for (int i : layout.raw_static_indices) out(r, c++) = s[i];
    for (int i : layout.velocity_indices) out(r, c++) = s[i];
  }
  return out;
}

inline Mat group_latent_to_state(const StateLayout& layout, const Mat& latent,
                                 bool* at_branch = nullptr) {
  Mat out(latent.rows(), layout.state_dim);
  for (Eigen::Index r = 0; r < latent.rows(); ++r) {
    int c = 0;
    for (const GroupSlot& slot : layout.slots) {
      const int n = lie::matrix_dim(slot.kind);
      const lie::Matrix m = ad::ConstMatMap(latent.row(r).data() + c, n, n);
      out(r, slot.angle_index()) = slot_angle(slot, m, at_branch);
      if (lie::is_euclidean(slot.kind))
        for (int i = 0; i + 1 < static_cast<int>(slot.indices.size()); ++i)
          out(r, slot.indices[i]) = m(i, n - 1);
      c += n * n;
    }
    for (int i : layout.raw_static_indices) out(r, i) = latent(r, c++);
    for (int i : layout.velocity_indices) out(r, i) = latent(r, c++);
  }
  return out;
}

inline TransitionBatch make_batch(const StateLayout& layout, Mat s, Mat a, Mat s_next) {
  if (s.rows() != a.rows() || s.rows() != s_next.rows())
    throw DimensionError("transition batch rows disagree");
  TransitionBatch b;
  b.latent = group_latent(layout, s);
  b.latent_next = group_latent(layout, s_next);
  b.s = std::move(s);
  b.a = std::move(a);
  b.s_next = std::move(s_next);
  return b;
}

// ---------------------------------------------------------------------------
// Normalization

// Per-column affine standardization (x - mean) / scale fitted on training rows.
struct Normalizer {
  RowVec mean;
  RowVec scale;

  static constexpr double kMinScale = 1e-8;

  static Normalizer identity(int dim) { return {RowVec::Zero(dim), RowVec::Ones(dim)}; }

  static Normalizer fit(const Mat& x, bool center = true) {
    if (x.rows() < 1) throw NormalizationError("cannot fit a normalizer on zero rows");
    Normalizer n;
    const RowVec mu = x.colwise().mean();
    const RowVec var = (x.rowwise() - mu).array().square().colwise().mean();
    n.mean = center ? mu : RowVec::Zero(x.cols());
    n.scale = center ? RowVec(var.array().sqrt())
                     : RowVec(x.array().square().colwise().mean().sqrt());
    for (Eigen::Index i = 0; i < n.scale.size(); ++i)
      if (!(n.scale[i] > kMinScale)) n.scale[i] = 1.0;
    return n;
  }

  Mat apply(const Mat& x) const {
    if (x.cols() != mean.size()) throw DimensionError("normalizer width mismatch");
    return (x.rowwise() - mean).array().rowwise() / scale.array();
  }

  nlohmann::json to_json() const {
    return {{"mean", std::vector<double>(mean.data(), mean.data() + mean.size())},
            {"scale", std::vector<double>(scale.data(), scale.data() + scale.size())}};
  }

  static Normalizer from_json(const nlohmann::json& j) {
    const auto m = j.at("mean").get<std::vector<double>>();
    const auto s = j.at("scale").get<std::vector<double>>();
    if (m.size() != s.size()) throw NormalizationError("normalizer mean/scale size mismatch");
    Normalizer n;
    n.mean = Eigen::Map<const RowVec>(m.data(), m.size());
    n.scale = Eigen::Map<const RowVec>(s.data(), s.size());
    return n;
  }
};

inline Mat hconcat(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows()) throw DimensionError("hconcat: row mismatch");
  Mat out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

// ---------------------------------------------------------------------------
// Model interfaces

class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;

  virtual ModelType type() const = 0;
  virtual const StateLayout& layout() const = 0;
  virtual int action_dim() const = 0;
  virtual Mat encode(const Mat& states) const = 0;
  virtual Mat decode(const Mat& latent) const = 0;
  virtual Mat outputs(const Mat& latent, const Mat& actions) const = 0;
  virtual Mat advance(const Mat& latent, const Mat& outputs) const = 0;

  std::string tag() const { return to_string(type()); }
  int state_dim() const { return layout().state_dim; }

  Mat step(const Mat& latent, const Mat& actions) const {
    if (actions.cols() != action_dim()) throw ContractError("action width does not match model");
    if (actions.rows() != latent.rows()) throw ContractError("action rows do not match latents");
    return advance(latent, outputs(latent, actions));
  }

  Mat predict(const Mat& states, const Mat& actions) const {
    return decode(step(encode(states), actions));
  }
};

struct LossParts {
  double total = 0.0;
  double alpha = 0.0;     // L^alpha for GEM; static-part error for the baseline
  double velocity = 0.0;  // L^upsilon
};

class TrainableModel : public DynamicsModel {
 public:
  virtual std::size_t num_params() const = 0;
  virtual std::vector<double> get_params() const = 0;
  virtual void set_params(std::span<const double> p) = 0;
  virtual void fit_normalization(const TransitionBatch& train) = 0;
  // Loss on `batch`; when `grad` is non-null it receives dL/dparams.
  virtual LossParts loss(const TransitionBatch& batch, std::vector<double>* grad) const = 0;
  virtual std::vector<NetworkCheckpoint> networks() const = 0;
  virtual void load_networks(const std::vector<NetworkCheckpoint>& nets) = 0;
  virtual nlohmann::json sidecar() const = 0;
  virtual void load_sidecar(const nlohmann::json& j) = 0;
  virtual std::unique_ptr<TrainableModel> clone() const = 0;
};

struct ModelOptions {
  std::vector<int> hidden_sizes = {100, 100};
  ad::Activation activation = ad::Activation::kTanh;
  // GEM: let the velocity loss reach the coefficient net through alpha. Off
  // trains the coefficient net on L^alpha and the velocity net on L^upsilon.
  bool velocity_grad_to_coeff = false;
  // Baseline: regress wrapped angle deltas and wrap predicted angles.
  bool baseline_wrap_angles = true;

  nlohmann::json to_json() const {
    return {{"hidden_sizes", hidden_sizes},
            {"activation", ad::to_string(activation)},
            {"velocity_grad_to_coeff", velocity_grad_to_coeff},
            {"baseline_wrap_angles", baseline_wrap_angles}};
  }

  static ModelOptions from_json(const nlohmann::json& j) {
    ModelOptions o;
    o.hidden_sizes = j.at("hidden_sizes").get<std::vector<int>>();
    o.activation = ad::parse_activation(j.at("activation").get<std::string>());
    o.velocity_grad_to_coeff = j.at("velocity_grad_to_coeff").get<bool>();
    o.baseline_wrap_angles = j.at("baseline_wrap_angles").get<bool>();
    return o;
  }
};

namespace detail {

inline void check_network(const NetworkCheckpoint& n, const ad::MlpSpec& spec) {
  if (!(n.spec == spec)) throw ContractError("checkpoint network spec does not match model");
  if (n.params.size() != spec.num_params())
    throw ContractError("checkpoint parameter count does not match spec");
}

inline std::vector<double> row_to_vector(const RowVec& r) {
  return std::vector<double>(r.data(), r.data() + r.size());
}

inline RowVec vector_to_row(const std::vector<double>& v) {
  return Eigen::Map<const RowVec>(v.data(), v.size());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// GEM

class GemModel final : public TrainableModel {
 public:
  GemModel(StateLayout layout, int action_dim, const ModelOptions& options, std::uint64_t seed)
      : layout_(std::move(layout)), action_dim_(action_dim), options_(options), seed_(seed) {
    layout_.validate();
    if (action_dim_ < 1) throw DimensionError("action_dim must be >= 1");
    num_raw_ = static_cast<int>(layout_.raw_static_indices.size());
    num_vel_ = static_cast<int>(layout_.velocity_indices.size());
    num_alpha_ = layout_.algebra_dim();
    latent_dim_ = layout_.group_feature_dim() + num_raw_ + num_vel_;
    coeff_spec_ = {latent_dim_ + action_dim_, options_.hidden_sizes, num_alpha_ + num_raw_,
                   options_.activation};
    vel_spec_ = {coeff_spec_.input_dim + coeff_spec_.output_dim, options_.hidden_sizes,
                 std::max(num_vel_, 1), options_.activation};
    coeff_spec_.validate();
    vel_spec_.validate();
    if (coeff_spec_.output_dim < 1) throw LayoutError("GEM layout has no static coordinates");
    coeff_params_ = ad::init_params(coeff_spec_, derive_seed(seed_, "gem.coeff"));
    vel_params_ = ad::init_params(vel_spec_, derive_seed(seed_, "gem.velocity"));
    input_ = Normalizer::identity(coeff_spec_.input_dim);
    coeff_scale_ = RowVec::Ones(coeff_spec_.output_dim);
    vel_scale_ = RowVec::Ones(vel_spec_.output_dim);
  }

  ModelType type() const override { return ModelType::kGem; }
  const StateLayout& layout() const override { return layout_; }
  int action_dim() const override { return action_dim_; }
  const ad::MlpSpec& coeff_spec() const { return coeff_spec_; }
  const ad::MlpSpec& vel_spec() const { return vel_spec_; }
  const ModelOptions& options() const { return options_; }
  void set_velocity_grad_to_coeff(bool on) { options_.velocity_grad_to_coeff = on; }
  const Normalizer& input_normalizer() const { return input_; }
  const RowVec& coeff_scale() const { return coeff_scale_; }
  const RowVec& vel_scale() const { return vel_scale_; }
  int output_dim() const { return num_alpha_ + num_raw_ + num_vel_; }

  void set_normalization(Normalizer input, RowVec coeff_scale, RowVec vel_scale) {
    if (input.mean.size() != coeff_spec_.input_dim || coeff_scale.size() != coeff_spec_.output_dim ||
        vel_scale.size() != vel_spec_.output_dim)
      throw NormalizationError("GEM normalization widths do not match the networks");
    input_ = std::move(input);
    coeff_scale_ = std::move(coeff_scale);
    vel_scale_ = std::move(vel_scale);
  }

  Mat encode(const Mat& states) const override { return group_latent(layout_, states); }
  Mat decode(const Mat& latent) const override { return group_latent_to_state(layout_, latent); }

  // Coefficient and velocity outputs in physical units.
  Mat outputs(const Mat& latent, const Mat& actions) const override {
    const Mat x = input_.apply(hconcat(latent, actions));
    const Mat c = ad::mlp_apply(coeff_spec_, coeff_params_, x);
    const Mat v = ad::mlp_apply(vel_spec_, vel_params_, hconcat(x, c));
    Mat out(latent.rows(), output_dim());
    out.leftCols(coeff_spec_.output_dim) = c.array().rowwise() * coeff_scale_.array();
    if (num_vel_ > 0) out.rightCols(num_vel_) = v.array().rowwise() * vel_scale_.array();
    return out;
  }

  // G_{t+1} = exp(alpha) G_t per slot, statics and velocities by deltas.
  Mat advance(const Mat& latent, const Mat& out) const override {
    if (latent.cols() != latent_dim_ || out.cols() != output_dim() || latent.rows() != out.rows())
      throw ContractError("GEM advance: shape mismatch");
    Mat next = latent;
    for (Eigen::Index r = 0; r < latent.rows(); ++r) {
      int lc = 0, ac = 0;
      for (const GroupSlot& slot : layout_.slots) {
        const int n = lie::matrix_dim(slot.kind), k = lie::algebra_dim(slot.kind);
        const lie::Coeffs alpha = out.row(r).segment(ac, k).transpose();
        const lie::Matrix g = ad::ConstMatMap(latent.row(r).data() + lc, n, n);
        const lie::Matrix g1 =
            lie::compose_matrices(slot.kind, lie::exp_coeffs(slot.kind, alpha), g);
        Eigen::Map<Mat>(next.row(r).data() + lc, n, n) = g1;
        lc += n * n;
        ac += k;
      }
      for (int i = 0; i < num_raw_ + num_vel_; ++i) next(r, lc + i) += out(r, ac + i);
    }
    return next;
  }

  std::size_t num_params() const override { return coeff_params_.size() + vel_params_.size(); }

  std::vector<double> get_params() const override {
    std::vector<double> p = coeff_params_;
    p.insert(p.end(), vel_params_.begin(), vel_params_.end());
    return p;
  }

  void set_params(std::span<const double> p) override {
    if (p.size() != num_params()) throw DimensionError("GEM parameter count mismatch");
    coeff_params_.assign(p.begin(), p.begin() + coeff_params_.size());
    vel_params_.assign(p.begin() + coeff_params_.size(), p.end());
  }

  void fit_normalization(const TransitionBatch& train) override {
    input_ = Normalizer::fit(hconcat(train.latent, train.a));
    const Mat t = targets(train);
    if (t.rows() == 0) throw NormalizationError("no usable transitions to fit GEM scales");
    coeff_scale_ = Normalizer::fit(t.leftCols(coeff_spec_.output_dim), false).scale;
    vel_scale_ = num_vel_ > 0 ? Normalizer::fit(t.rightCols(num_vel_), false).scale
                              : RowVec::Ones(1);
  }

  // Ground-truth outputs: alpha = log(G_{t+1} G_t^-1), deltas of statics and
  // velocities. Rows whose relative rotation sits on the log branch cut are
  // dropped.
  Mat targets(const TransitionBatch& b) const {
    std::vector<RowVec> rows;
    for (Eigen::Index r = 0; r < b.size(); ++r) {
      RowVec t(output_dim());
      int lc = 0, ac = 0;
      bool ok = true;
      for (const GroupSlot& slot : layout_.slots) {
        const int n = lie::matrix_dim(slot.kind), k = lie::algebra_dim(slot.kind);
        const lie::GroupElement g0(slot.kind, ad::ConstMatMap(b.latent.row(r).data() + lc, n, n));
        const lie::GroupElement g1(slot.kind,
                                   ad::ConstMatMap(b.latent_next.row(r).data() + lc, n, n));
        try {
          t.segment(ac, k) = lie::log_map(lie::compose(g1, lie::inverse(g0))).coeffs().transpose();
        } catch (const BranchError&) {
          ok = false;
        }
        lc += n * n;
        ac += k;
      }
      for (int i = 0; i < num_raw_ + num_vel_; ++i)
        t[ac + i] = b.latent_next(r, lc + i) - b.latent(r, lc + i);
      if (ok) rows.push_back(t);
    }
    Mat out(rows.size(), output_dim());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(i) = rows[i];
    return out;
  }

  LossParts loss(const TransitionBatch& b, std::vector<double>* grad) const override {
    if (b.size() < 1) throw ContractError("GEM loss on an empty batch");
    if (b.latent.cols() != latent_dim_ || b.a.cols() != action_dim_)
      throw ContractError("GEM loss: batch shape does not match model");
    ad::Tape tape(num_params());
    const ad::NodeId x = tape.constant(input_.apply(hconcat(b.latent, b.a)));
    const ad::NodeId c = ad::mlp_forward(coeff_spec_, coeff_params_, 0, x, tape);
    const ad::NodeId alpha = tape.scale_cols(c, coeff_scale_);

    ad::NodeId l_alpha;
    int lc = 0, ac = 0;
    for (const GroupSlot& slot : layout_.slots) {
      const int n = lie::matrix_dim(slot.kind), k = lie::algebra_dim(slot.kind);
      const ad::NodeId e = tape.exp(tape.slice_cols(alpha, ac, k), slot.kind);
      const ad::NodeId g0 = tape.constant(b.latent.middleCols(lc, n * n));
      const ad::NodeId g1 = tape.constant(b.latent_next.middleCols(lc, n * n));
      const ad::NodeId term = tape.frobenius_loss(tape.compose(e, g0, slot.kind), g1);
      l_alpha = l_alpha.valid() ? tape.add(l_alpha, term) : term;
      lc += n * n;
      ac += k;
    }
    if (num_raw_ > 0) {
      const Mat delta = b.latent_next.middleCols(lc, num_raw_) - b.latent.middleCols(lc, num_raw_);
      const ad::NodeId term =
          tape.squared_error_loss(tape.slice_cols(alpha, ac, num_raw_), tape.constant(delta));
      l_alpha = l_alpha.valid() ? tape.add(l_alpha, term) : term;
    }
    lc += num_raw_;

    ad::NodeId total = l_alpha;
    double l_vel = 0.0;
    if (num_vel_ > 0) {
      const ad::NodeId c_in = options_.velocity_grad_to_coeff ? c : tape.stop_gradient(c);
      const ad::NodeId v = ad::mlp_forward(vel_spec_, vel_params_, coeff_params_.size(),
                                           tape.concat_cols({x, c_in}), tape);
      const Mat dv = b.latent_next.middleCols(lc, num_vel_) - b.latent.middleCols(lc, num_vel_);
      const ad::NodeId term =
          tape.squared_error_loss(tape.scale_cols(v, vel_scale_), tape.constant(dv));
      l_vel = tape.scalar(term);
      total = tape.add(total, term);
    }
    if (grad) *grad = tape.backward(total);
    return {tape.scalar(total), tape.scalar(l_alpha), l_vel};
  }

  std::vector<NetworkCheckpoint> networks() const override {
    return {{coeff_spec_, derive_seed(seed_, "gem.coeff"), coeff_params_},
            {vel_spec_, derive_seed(seed_, "gem.velocity"), vel_params_}};
  }

  void load_networks(const std::vector<NetworkCheckpoint>& nets) override {
    if (nets.size() != 2) throw ContractError("GEM checkpoint must hold two networks");
    detail::check_network(nets[0], coeff_spec_);
    detail::check_network(nets[1], vel_spec_);
    coeff_params_ = nets[0].params;
    vel_params_ = nets[1].params;
  }

  nlohmann::json sidecar() const override {
    return {{"input", input_.to_json()},
            {"coeff_scale", detail::row_to_vector(coeff_scale_)},
            {"vel_scale", detail::row_to_vector(vel_scale_)}};
  }

  void load_sidecar(const nlohmann::json& j) override {
    set_normalization(Normalizer::from_json(j.at("input")),
                      detail::vector_to_row(j.at("coeff_scale").get<std::vector<double>>()),
                      detail::vector_to_row(j.at("vel_scale").get<std::vector<double>>()));
  }

  std::unique_ptr<TrainableModel> clone() const override {
    return std::make_unique<GemModel>(*this);
  }

 private:
  StateLayout layout_;
  int action_dim_;
  ModelOptions options_;
  std::uint64_t seed_;
  int num_raw_ = 0, num_vel_ = 0, num_alpha_ = 0, latent_dim_ = 0;
  ad::MlpSpec coeff_spec_, vel_spec_;
  std::vector<double> coeff_params_, vel_params_;
  Normalizer input_;
  RowVec coeff_scale_, vel_scale_;
};

// ---------------------------------------------------------------------------
// Baseline

class BaselineModel final : public TrainableModel {
 public:
  BaselineModel(StateLayout layout, int action_dim, const ModelOptions& options,
                std::uint64_t seed)
      : layout_(std::move(layout)), action_dim_(action_dim), options_(options), seed_(seed) {
    layout_.validate();
    if (action_dim_ < 1) throw DimensionError("action_dim must be >= 1");
    order_ = layout_.static_indices();
    num_static_ = static_cast<int>(order_.size());
    order_.insert(order_.end(), layout_.velocity_indices.begin(), layout_.velocity_indices.end());
    spec_ = {layout_.state_dim + action_dim_, options_.hidden_sizes, layout_.state_dim,
             options_.activation};
    spec_.validate();
    params_ = ad::init_params(spec_, derive_seed(seed_, "baseline.net"));
    input_ = Normalizer::identity(spec_.input_dim);
    out_scale_ = RowVec::Ones(spec_.output_dim);
  }

  ModelType type() const override { return ModelType::kBaseline; }
  const StateLayout& layout() const override { return layout_; }
  int action_dim() const override { return action_dim_; }
  const ad::MlpSpec& spec() const { return spec_; }
  const RowVec& out_scale() const { return out_scale_; }
  const Normalizer& input_normalizer() const { return input_; }
  const std::vector<int>& output_order() const { return order_; }

  void set_normalization(Normalizer input, RowVec out_scale) {
    if (input.mean.size() != spec_.input_dim || out_scale.size() != spec_.output_dim)
      throw NormalizationError("baseline normalization widths do not match the network");
    input_ = std::move(input);
    out_scale_ = std::move(out_scale);
  }

  Mat encode(const Mat& states) const override {
    if (states.cols() != layout_.state_dim) throw DimensionError("state width mismatch");
    return states;
  }
  Mat decode(const Mat& latent) const override { return latent; }

  Mat outputs(const Mat& latent, const Mat& actions) const override {
    const Mat d = ad::mlp_apply(spec_, params_, input_.apply(hconcat(latent, actions)));
    return d.array().rowwise() * out_scale_.array();
  }

  Mat advance(const Mat& latent, const Mat& out) const override {
    if (latent.cols() != layout_.state_dim || out.cols() != layout_.state_dim ||
        latent.rows() != out.rows())
      throw ContractError("baseline advance: shape mismatch");
    Mat next = latent;
    for (int k = 0; k < static_cast<int>(order_.size()); ++k) next.col(order_[k]) += out.col(k);
    if (options_.baseline_wrap_angles)
      for (int i : layout_.angle_indices())
        for (Eigen::Index r = 0; r < next.rows(); ++r) next(r, i) = wrap_angle(next(r, i));
    return next;
  }

  // State deltas in output order.
  Mat targets(const TransitionBatch& b) const {
    Mat t(b.size(), layout_.state_dim);
    for (int k = 0; k < static_cast<int>(order_.size()); ++k)
      t.col(k) = b.s_next.col(order_[k]) - b.s.col(order_[k]);
    if (options_.baseline_wrap_angles)
      for (int k = 0; k < num_static_; ++k)
        if (layout_.is_angle(order_[k]))
          for (Eigen::Index r = 0; r < t.rows(); ++r) t(r, k) = wrap_angle(t(r, k));
    return t;
  }

  std::size_t num_params() const override { return params_.size(); }
  std::vector<double> get_params() const override { return params_; }
  void set_params(std::span<const double> p) override {
    if (p.size() != params_.size()) throw DimensionError("baseline parameter count mismatch");
    params_.assign(p.begin(), p.end());
  }

  void fit_normalization(const TransitionBatch& train) override {
    input_ = Normalizer::fit(hconcat(train.s, train.a));
    out_scale_ = Normalizer::fit(targets(train), false).scale;
  }

  LossParts loss(const TransitionBatch& b, std::vector<double>* grad) const override {
    if (b.size() < 1) throw ContractError("baseline loss on an empty batch");
    if (b.s.cols() != layout_.state_dim || b.a.cols() != action_dim_)
      throw ContractError("baseline loss: batch shape does not match model");
    ad::Tape tape(num_params());
    const ad::NodeId x = tape.constant(input_.apply(hconcat(b.s, b.a)));
    const ad::NodeId d = tape.scale_cols(ad::mlp_forward(spec_, params_, 0, x, tape), out_scale_);
    const Mat t = targets(b);
    const int nv = layout_.state_dim - num_static_;
    const ad::NodeId ls = tape.squared_error_loss(tape.slice_cols(d, 0, num_static_),
                                                  tape.constant(t.leftCols(num_static_)));
    ad::NodeId total = ls;
    double lv = 0.0;
    if (nv > 0) {
      const ad::NodeId term = tape.squared_error_loss(tape.slice_cols(d, num_static_, nv),
                                                      tape.constant(t.rightCols(nv)));
      lv = tape.scalar(term);
      total = tape.add(ls, term);
    }
    if (grad) *grad = tape.backward(total);
    return {tape.scalar(total), tape.scalar(ls), lv};
  }

  std::vector<NetworkCheckpoint> networks() const override {
    return {{spec_, derive_seed(seed_, "baseline.net"), params_}};
  }

  void load_networks(const std::vector<NetworkCheckpoint>& nets) override {
    if (nets.size() != 1) throw ContractError("baseline checkpoint must hold one network");
    detail::check_network(nets[0], spec_);
    params_ = nets[0].params;
  }

  nlohmann::json sidecar() const override {
    return {{"input", input_.to_json()}, {"out_scale", detail::row_to_vector(out_scale_)}};
  }

  void load_sidecar(const nlohmann::json& j) override {
    set_normalization(Normalizer::from_json(j.at("input")),
                      detail::vector_to_row(j.at("out_scale").get<std::vector<double>>()));
  }

  std::unique_ptr<TrainableModel> clone() const override {
    return std::make_unique<BaselineModel>(*this);
  }

 private:
  StateLayout layout_;
  int action_dim_;
  ModelOptions options_;
  std::uint64_t seed_;
  std::vector<int> order_;
  int num_static_ = 0;
  ad::MlpSpec spec_;
  std::vector<double> params_;
  Normalizer input_;
  RowVec out_scale_;
};

// ---------------------------------------------------------------------------
// Ensemble

// Members are trained in unison on the summed loss; predictions average the
// members' raw outputs before the latent is advanced.
class Ensemble final : public TrainableModel {
 public:
  explicit Ensemble(std::vector<std::unique_ptr<TrainableModel>> members)
      : members_(std::move(members)) {
    if (members_.empty()) throw ContractError("ensemble needs at least one member");
    const ModelType t = members_[0]->type();
    if (t != ModelType::kGem && t != ModelType::kBaseline)
      throw ContractError("ensemble members must be gem or baseline models");
    for (const auto& m : members_) {
      if (m->type() != t || m->num_params() != members_[0]->num_params() ||
          to_json(m->layout()).dump() != to_json(members_[0]->layout()).dump() ||
          m->action_dim() != members_[0]->action_dim())
        throw ContractError("ensemble members must share type, spec and layout");
    }
  }

  ModelType type() const override {
    return members_[0]->type() == ModelType::kGem ? ModelType::kGemEnsemble
                                                  : ModelType::kBaselineEnsemble;
  }
  const StateLayout& layout() const override { return members_[0]->layout(); }
  int action_dim() const override { return members_[0]->action_dim(); }
  std::size_t size() const { return members_.size(); }
  const TrainableModel& member(std::size_t k) const { return *members_[k]; }

  Mat encode(const Mat& states) const override { return members_[0]->encode(states); }
  Mat decode(const Mat& latent) const override { return members_[0]->decode(latent); }

  Mat outputs(const Mat& latent, const Mat& actions) const override {
    Mat sum = members_[0]->outputs(latent, actions);
    for (std::size_t k = 1; k < members_.size(); ++k) sum += members_[k]->outputs(latent, actions);
    return sum / static_cast<double>(members_.size());
  }

  Mat advance(const Mat& latent, const Mat& out) const override {
    return members_[0]->advance(latent, out);
  }

  std::size_t num_params() const override {
    std::size_t n = 0;
    for (const auto& m : members_) n += m->num_params();
    return n;
  }

  std::vector<double> get_params() const override {
    std::vector<double> p;
    p.reserve(num_params());
    for (const auto& m : members_) {
      const std::vector<double> q = m->get_params();
      p.insert(p.end(), q.begin(), q.end());
    }
    return p;
  }

  void set_params(std::span<const double> p) override {
    if (p.size() != num_params()) throw DimensionError("ensemble parameter count mismatch");
    std::size_t off = 0;
    for (auto& m : members_) {
      m->set_params(p.subspan(off, m->num_params()));
      off += m->num_params();
    }
  }

  void fit_normalization(const TransitionBatch& train) override {
    for (auto& m : members_) m->fit_normalization(train);
  }

  LossParts loss(const TransitionBatch& b, std::vector<double>* grad) const override {
    LossParts total;
    if (grad) grad->clear();
    std::vector<double> g;
    for (const auto& m : members_) {
      const LossParts l = m->loss(b, grad ? &g : nullptr);
      total.total += l.total;
      total.alpha += l.alpha;
      total.velocity += l.velocity;
      if (grad) grad->insert(grad->end(), g.begin(), g.end());
    }
    return total;
  }

  std::vector<NetworkCheckpoint> networks() const override {
    std::vector<NetworkCheckpoint> out;
    for (const auto& m : members_) {
      auto n = m->networks();
      out.insert(out.end(), n.begin(), n.end());
    }
    return out;
  }

  void load_networks(const std::vector<NetworkCheckpoint>& nets) override {
    const std::size_t per = members_[0]->networks().size();
    if (nets.size() != per * members_.size())
      throw ContractError("ensemble checkpoint network count mismatch");
    for (std::size_t k = 0; k < members_.size(); ++k)
      members_[k]->load_networks({nets.begin() + k * per, nets.begin() + (k + 1) * per});
  }

  nlohmann::json sidecar() const override {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& m : members_) arr.push_back(m->sidecar());
    return {{"members", arr}};
  }

  void load_sidecar(const nlohmann::json& j) override {
    const auto& arr = j.at("members");
    if (arr.size() != members_.size()) throw ContractError("ensemble sidecar member count mismatch");
    for (std::size_t k = 0; k < members_.size(); ++k) members_[k]->load_sidecar(arr[k]);
  }

  std::unique_ptr<TrainableModel> clone() const override {
    std::vector<std::unique_ptr<TrainableModel>> m;
    for (const auto& x : members_) m.push_back(x->clone());
    return std::make_unique<Ensemble>(std::move(m));
  }

 private:
  std::vector<std::unique_ptr<TrainableModel>> members_;
};

// ---------------------------------------------------------------------------
// Oracle

// The environment itself behind the model interface.
class TrueDynamics final : public DynamicsModel {
 public:
  explicit TrueDynamics(std::shared_ptr<const Env> env) : env_(std::move(env)) {}

  ModelType type() const override { return ModelType::kTrue; }
  const StateLayout& layout() const override { return env_->spec().layout; }
  int action_dim() const override { return env_->spec().action_dim; }
  Mat encode(const Mat& states) const override { return states; }
  Mat decode(const Mat& latent) const override { return latent; }

  Mat outputs(const Mat& latent, const Mat& actions) const override {
    Mat next(latent.rows(), latent.cols());
    for (Eigen::Index r = 0; r < latent.rows(); ++r) {
      const Vec x = latent.row(r).transpose();
      const Vec a = actions.row(r).transpose();
      Vec y = env_->wrap(env_->integrate(x, a));
      next.row(r) = y.transpose();
    }
    return next;
  }

  Mat advance(const Mat&, const Mat& out) const override { return out; }

 private:
  std::shared_ptr<const Env> env_;
};

// ---------------------------------------------------------------------------
// Construction and persistence

inline std::unique_ptr<TrainableModel> make_model(ModelType type, const StateLayout& layout,
                                                  int action_dim, const ModelOptions& options,
                                                  std::uint64_t seed) {
  switch (type) {
    case ModelType::kGem:
      return std::make_unique<GemModel>(layout, action_dim, options, seed);
    case ModelType::kBaseline:
      return std::make_unique<BaselineModel>(layout, action_dim, options, seed);
    case ModelType::kGemEnsemble:
    case ModelType::kBaselineEnsemble: {
      const ModelType base =
          type == ModelType::kGemEnsemble ? ModelType::kGem : ModelType::kBaseline;
      std::vector<std::unique_ptr<TrainableModel>> members;
      for (int k = 0; k < kEnsembleSize; ++k)
        members.push_back(
            make_model(base, layout, action_dim, options, derive_seed(seed, "ensemble.member", k)));
      return std::make_unique<Ensemble>(std::move(members));
    }
    case ModelType::kTrue:
      break;
  }
  throw ContractError("the true-dynamics model is not trainable");
}

// Writes `path` (binary networks) and `path`.json (layout, options,
// normalization).
inline void save_model(const std::string& path, const TrainableModel& model,
                       const std::string& env_name, const ModelOptions& options,
                       std::uint64_t seed) {
  save_checkpoint(path, model.networks());
  nlohmann::json j = {{"env", env_name},
                      {"model", model.tag()},
                      {"seed", seed},
                      {"action_dim", model.action_dim()},
                      {"layout", to_json(model.layout())},
                      {"options", options.to_json()},
                      {"normalization", model.sidecar()}};
  std::ofstream out(path + ".json", std::ios::binary);
  if (!out) throw ParseError("cannot write " + path + ".json");
  out << j.dump(2) << "\n";
}

struct LoadedModel {
  std::unique_ptr<TrainableModel> model;
  std::string env;
  ModelOptions options;
  std::uint64_t seed = 0;
};

inline LoadedModel load_model(const std::string& path) {
  std::ifstream in(path + ".json", std::ios::binary);
  if (!in) throw ParseError("cannot open " + path + ".json");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ".json: " + e.what());
  }
  LoadedModel out;
  out.env = j.at("env").get<std::string>();
  out.options = ModelOptions::from_json(j.at("options"));
  out.seed = j.at("seed").get<std::uint64_t>();
  out.model = make_model(parse_model_type(j.at("model").get<std::string>()),
                         layout_from_json(j.at("layout")), j.at("action_dim").get<int>(),
                         out.options, out.seed);
  out.model->load_networks(load_checkpoint(path));
  out.model->load_sidecar(j.at("normalization"));
  return out;
}

// ---------------------------------------------------------------------------
// Rollout

struct Rollout {
  std::vector<Mat> states;        // states[t] = predicted s_{t+1}, rows = starts
  std::vector<int> finite_steps;  // per row, steps before a non-finite value
  bool truncated = false;
};

// Open-loop rollout of `actions[t]` (rows = starts) from `s0`. A row whose
// latent turns non-finite is frozen at its last finite prediction.
inline Rollout rollout(const DynamicsModel& model, const Mat& s0, const std::vector<Mat>& actions) {
  if (actions.empty()) throw ContractError("rollout horizon must be >= 1");
  Rollout out;
  out.finite_steps.assign(s0.rows(), static_cast<int>(actions.size()));
  Mat latent = model.encode(s0);
  Mat last = s0;
  for (std::size_t t = 0; t < actions.size(); ++t) {
    Mat next = model.step(latent, actions[t]);
    Mat state = model.decode(next);
    for (Eigen::Index r = 0; r < next.rows(); ++r) {
      if (out.finite_steps[r] < static_cast<int>(actions.size())) {
        next.row(r) = latent.row(r);
        state.row(r) = last.row(r);
      } else if (!next.row(r).allFinite() || !state.row(r).allFinite()) {
        out.finite_steps[r] = static_cast<int>(t);
        out.truncated = true;
        next.row(r) = latent.row(r);
        state.row(r) = last.row(r);
      }
    }
    latent = std::move(next);
    last = state;
    out.states.push_back(std::move(state));
  }
  return out;
}

}  // namespace gemdyn

#endif  // GEMDYN_MODELS_HPP_
