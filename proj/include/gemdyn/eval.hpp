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

#ifndef GEMDYN_EVAL_HPP_
#define GEMDYN_EVAL_HPP_

// Long-horizon open-loop prediction error. Every start index of a long
// enough test segment is rolled out once to the longest horizon with the
// recorded actions; shorter horizons are prefixes of that rollout. Errors are
// squared Euclidean norms in raw state space with wrapped angle differences,
// averaged over the steps of a horizon and then over starts.

#include <algorithm>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "gemdyn/csv.hpp"
#include "gemdyn/data.hpp"
#include "gemdyn/errors.hpp"
#include "gemdyn/layout.hpp"
#include "gemdyn/models.hpp"

namespace gemdyn {

inline const std::vector<int>& default_horizons() {
  static const std::vector<int> h = {1, 5, 10, 25, 50};
  return h;
}

struct HorizonReport {
  std::string model;
  std::vector<int> horizons;
  std::vector<double> mse_total, mse_static, mse_dynamic;
  int starts = 0;
  int skipped_segments = 0;
  int truncated_rollouts = 0;

  double mean_total() const {
    double s = 0.0;
    for (double e : mse_total) s += e;
    return mse_total.empty() ? 0.0 : s / static_cast<double>(mse_total.size());
  }

  double at(int horizon) const {
    for (std::size_t i = 0; i < horizons.size(); ++i)
      if (horizons[i] == horizon) return mse_total[i];
    throw ContractError("horizon " + std::to_string(horizon) + " not in report");
  }
};

// Squared error split into static and dynamic parts, angles wrapped.
inline std::pair<double, double> state_error(const StateLayout& layout, const RowVec& pred,
                                             const RowVec& truth) {
  double st = 0.0, dy = 0.0;
  for (int i : layout.static_indices()) {
    const double d = layout.is_angle(i) ? wrap_angle(pred[i] - truth[i]) : pred[i] - truth[i];
    st += d * d;
  }
  for (int i : layout.velocity_indices) {
    const double d = pred[i] - truth[i];
    dy += d * d;
  }
  return {st, dy};
}

inline HorizonReport horizon_errors(const DynamicsModel& model, const Dataset& ds, Split which,
                                    const std::vector<int>& horizons = default_horizons()) {
  if (horizons.empty()) throw ContractError("need at least one horizon");
  for (std::size_t i = 0; i < horizons.size(); ++i)
    if (horizons[i] < 1 || (i > 0 && horizons[i] <= horizons[i - 1]))
      throw ContractError("horizons must be positive and strictly increasing");
  const int hmax = horizons.back();
  const StateLayout& layout = model.layout();

  HorizonReport rep;
  rep.model = model.tag();
  rep.horizons = horizons;
  std::vector<int> starts;
  for (const Segment& seg : segments(ds, which)) {
    if (seg.length < hmax) {
      ++rep.skipped_segments;
      continue;
    }
    for (int i = seg.begin; i + hmax <= seg.begin + seg.length; ++i) starts.push_back(i);
  }
  rep.starts = static_cast<int>(starts.size());
  const std::size_t nh = horizons.size();
  rep.mse_total.assign(nh, 0.0);
  rep.mse_static.assign(nh, 0.0);
  rep.mse_dynamic.assign(nh, 0.0);
  if (starts.empty()) return rep;

  const int B = rep.starts;
  Mat s0(B, layout.state_dim);
  std::vector<Mat> actions(hmax, Mat(B, model.action_dim()));
  for (int r = 0; r < B; ++r) {
    s0.row(r) = ds.transitions[starts[r]].s.transpose();
    for (int t = 0; t < hmax; ++t) actions[t].row(r) = ds.transitions[starts[r] + t].a.transpose();
  }
  const Rollout ro = rollout(model, s0, actions);
  for (int r = 0; r < B; ++r)
    if (ro.finite_steps[r] < hmax) ++rep.truncated_rollouts;

  // Per start: running sums of per-step errors, read off at each horizon.
  std::vector<double> sum_st(nh, 0.0), sum_dy(nh, 0.0);
  for (int r = 0; r < B; ++r) {
    double cs = 0.0, cd = 0.0;
    std::size_t k = 0;
    for (int t = 0; t < hmax; ++t) {
      const auto [es, ed] = state_error(layout, ro.states[t].row(r),
                                        ds.transitions[starts[r] + t].s_next.transpose());
      cs += es;
      cd += ed;
      if (t + 1 == horizons[k]) {
        sum_st[k] += cs / horizons[k];
        sum_dy[k] += cd / horizons[k];
        ++k;
      }
    }
  }
  for (std::size_t k = 0; k < nh; ++k) {
    rep.mse_static[k] = sum_st[k] / B;
    rep.mse_dynamic[k] = sum_dy[k] / B;
    rep.mse_total[k] = rep.mse_static[k] + rep.mse_dynamic[k];
  }
  return rep;
}

// Horizon-averaged errors divided by the larger of the two.
inline std::pair<double, double> normalized_relative_error(const HorizonReport& a,
                                                           const HorizonReport& b) {
  if (a.horizons != b.horizons) throw ContractError("reports use different horizons");
  const double ea = a.mean_total(), eb = b.mean_total();
  const double m = std::max(ea, eb);
  if (m == 0.0) return {1.0, 1.0};
  return {ea / m, eb / m};
}

inline std::vector<std::string> horizon_csv_columns() {
  return {"env", "model", "seed", "horizon", "mse_total", "mse_static", "mse_dynamic"};
}

inline void write_horizon_rows(CsvWriter& csv, const std::string& env, std::uint64_t seed,
                               const HorizonReport& rep) {
  for (std::size_t k = 0; k < rep.horizons.size(); ++k)
    csv.row({env, rep.model, std::to_string(seed), std::to_string(rep.horizons[k]),
             fmt17(rep.mse_total[k]), fmt17(rep.mse_static[k]), fmt17(rep.mse_dynamic[k])});
}

}  // namespace gemdyn

#endif  // GEMDYN_EVAL_HPP_
