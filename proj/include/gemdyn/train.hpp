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

#ifndef GEMDYN_TRAIN_HPP_
#define GEMDYN_TRAIN_HPP_

// Minibatch Adam training with periodic validation and best-checkpoint
// selection.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gemdyn/autodiff.hpp"
#include "gemdyn/errors.hpp"
#include "gemdyn/models.hpp"
#include "gemdyn/rng.hpp"

namespace gemdyn {

struct TrainConfig {
  int iterations = 10000;
  int batch_size = 10;
  int log_every = 100;
  // Rows of the training split used for the logged train loss.
  int train_eval_rows = 2000;
  ad::AdamConfig adam;
  std::uint64_t seed = 0;

  void validate() const {
    if (iterations < 0) throw ContractError("iterations must be >= 0");
    if (batch_size < 1) throw ContractError("batch_size must be >= 1");
    if (log_every < 1) throw ContractError("log_every must be >= 1");
    if (train_eval_rows < 1) throw ContractError("train_eval_rows must be >= 1");
    adam.validate();
  }
};

struct TrainLogRow {
  int iter = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double l_alpha = 0.0;
  double l_velocity = 0.0;
};

struct TrainResult {
  std::vector<TrainLogRow> log;
  int best_iter = 0;
  double best_val = std::numeric_limits<double>::infinity();
  double final_val = std::numeric_limits<double>::infinity();
};

// Epoch-shuffled minibatch indices drawn from one seeded stream.
class BatchSampler {
 public:
  BatchSampler(int n, std::uint64_t seed) : order_(n), rng_(make_rng(seed, "train.batches")) {
    if (n < 1) throw ContractError("cannot sample batches from an empty set");
    std::iota(order_.begin(), order_.end(), 0);
    reshuffle();
  }

  std::vector<int> next(int size) {
    std::vector<int> out(size);
    for (int& i : out) {
      if (pos_ == order_.size()) reshuffle();
      i = order_[pos_++];
    }
    return out;
  }

 private:
  void reshuffle() {
    std::shuffle(order_.begin(), order_.end(), rng_);
    pos_ = 0;
  }

  std::vector<int> order_;
  std::size_t pos_ = 0;
  Rng rng_;
};

// Trains `model` in place and leaves it at the best validation checkpoint.
// With an empty validation batch the training-subset loss selects instead.
inline TrainResult train(TrainableModel& model, const TransitionBatch& train_set,
                         const TransitionBatch& val_set, const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.size() < 1) throw ContractError("training set is empty");
  const int n = static_cast<int>(train_set.size());
  std::vector<int> eval_rows(std::min(n, cfg.train_eval_rows));
  std::iota(eval_rows.begin(), eval_rows.end(), 0);
  const TransitionBatch train_eval = train_set.gather(eval_rows);
  const bool has_val = val_set.size() > 0;

  std::vector<double> params = model.get_params();
  ad::AdamState adam(params.size(), cfg.adam);
  BatchSampler sampler(n, cfg.seed);
  TrainResult result;
  std::vector<double> best = params;

  auto record = [&](int iter) {
    const LossParts tr = model.loss(train_eval, nullptr);
    const double val = has_val ? model.loss(val_set, nullptr).total : tr.total;
    if (!std::isfinite(tr.total) || !std::isfinite(val)) {
      std::ostringstream msg;
      msg << "non-finite loss at iteration " << iter << " (train " << tr.total << ", val " << val
          << ")";
      throw NumericError(msg.str());
    }
    result.log.push_back({iter, tr.total, val, tr.alpha, tr.velocity});
    result.final_val = val;
    if (val < result.best_val) {
      result.best_val = val;
      result.best_iter = iter;
      best = params;
    }
  };

  record(0);
  std::vector<double> grad;
  for (int it = 1; it <= cfg.iterations; ++it) {
    const TransitionBatch batch = train_set.gather(sampler.next(cfg.batch_size));
    const LossParts lp = model.loss(batch, &grad);
    if (!std::isfinite(lp.total))
      throw NumericError("non-finite minibatch loss at iteration " + std::to_string(it));
    ad::adam_step(adam, params, grad);
    model.set_params(params);
    if (it % cfg.log_every == 0 || it == cfg.iterations) record(it);
  }
  model.set_params(best);
  return result;
}

}  // namespace gemdyn

#endif  // GEMDYN_TRAIN_HPP_
