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

#ifndef GEMDYN_LAYOUT_HPP_
#define GEMDYN_LAYOUT_HPP_

// StateLayout maps a raw state vector s = (rho, upsilon) onto a stack of
// group elements, pass-through static scalars, and a velocity block.
//
// Slot index conventions (indices point into the raw state vector):
//   SO2: {angle}
//   SO3: {angle}            rotation about the slot's fixed unit axis
//   SE2: {x, y, angle}
//   SE3: {x, y, z, angle}   rotation about the slot's fixed unit axis

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gemdyn/errors.hpp"
#include "gemdyn/lie.hpp"

namespace gemdyn {

using Vec = Eigen::VectorXd;

// Wraps to (-pi, pi].
inline double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * std::numbers::pi);
  if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
  return r;
}

struct GroupSlot {
  lie::GroupKind kind = lie::GroupKind::kSO2;
  std::vector<int> indices;
  std::optional<Eigen::Vector3d> axis;

  static int index_count(lie::GroupKind kind) {
    switch (kind) {
      case lie::GroupKind::kSO2: return 1;
      case lie::GroupKind::kSO3: return 1;
      case lie::GroupKind::kSE2: return 3;
      case lie::GroupKind::kSE3: return 4;
    }
    return 0;
  }

  // Raw-state index of this slot's angle.
  int angle_index() const { return indices.back(); }
};

struct StateLayout {
  int state_dim = 0;
  std::vector<GroupSlot> slots;
  std::vector<int> raw_static_indices;
  std::vector<int> velocity_indices;

  void validate() const {
    std::vector<int> seen(std::max(state_dim, 0), 0);
    auto mark = [&](int i) {
      if (i < 0 || i >= state_dim) throw LayoutError("layout index out of range");
      if (seen[i]++) throw LayoutError("layout index " + std::to_string(i) + " used twice");
    };
    for (const GroupSlot& s : slots) {
      if (static_cast<int>(s.indices.size()) != GroupSlot::index_count(s.kind))
        throw LayoutError("slot of kind " + std::string(lie::to_string(s.kind)) +
                          " has the wrong number of indices");
      if (lie::rotation_dim(s.kind) == 3) {
        if (!s.axis) throw LayoutError("3-D rotation slot is missing its axis");
        if (std::abs(s.axis->norm() - 1.0) > lie::kAxisTolerance)
          throw LayoutError("slot axis is not a unit vector");
      }
      for (int i : s.indices) mark(i);
    }
    for (int i : raw_static_indices) mark(i);
    for (int i : velocity_indices) mark(i);
    for (int i = 0; i < state_dim; ++i)
      if (!seen[i]) throw LayoutError("layout does not cover state index " + std::to_string(i));
  }

  int group_feature_dim() const {
    int n = 0;
    for (const GroupSlot& s : slots) n += lie::matrix_dim(s.kind) * lie::matrix_dim(s.kind);
    return n;
  }

  int algebra_dim() const {
    int n = 0;
    for (const GroupSlot& s : slots) n += lie::algebra_dim(s.kind);
    return n;
  }

  std::vector<int> angle_indices() const {
    std::vector<int> out;
    for (const GroupSlot& s : slots) out.push_back(s.angle_index());
    return out;
  }

  // rho: every index owned by a slot or a raw static.
  std::vector<int> static_indices() const {
    std::vector<int> out;
    for (const GroupSlot& s : slots) out.insert(out.end(), s.indices.begin(), s.indices.end());
    out.insert(out.end(), raw_static_indices.begin(), raw_static_indices.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  bool is_angle(int index) const {
    for (const GroupSlot& s : slots)
      if (s.angle_index() == index) return true;
    return false;
  }
};

inline lie::GroupElement slot_to_group(const GroupSlot& slot, const Vec& state) {
  const double angle = state[slot.angle_index()];
  const int n = lie::matrix_dim(slot.kind);
  lie::Matrix m = lie::Matrix::Identity(n, n);
  switch (slot.kind) {
    case lie::GroupKind::kSO2:
    case lie::GroupKind::kSE2:
      m.topLeftCorner(2, 2) = lie::detail::planar_rotation(angle);
      if (slot.kind == lie::GroupKind::kSE2) {
        m(0, 2) = state[slot.indices[0]];
        m(1, 2) = state[slot.indices[1]];
      }
      break;
    case lie::GroupKind::kSO3:
    case lie::GroupKind::kSE3: {
      if (!slot.axis) throw LayoutError("3-D rotation slot is missing its axis");
      m.topLeftCorner(3, 3) = lie::angle_axis_to_group({*slot.axis, angle}).matrix();
      if (slot.kind == lie::GroupKind::kSE3)
        for (int i = 0; i < 3; ++i) m(i, 3) = state[slot.indices[i]];
      break;
    }
  }
  return lie::GroupElement(slot.kind, m);
}

// One group element per slot, in slot order.
inline std::vector<lie::GroupElement> state_to_groups(const Vec& state,
                                                      const StateLayout& layout) {
  if (state.size() != layout.state_dim)
    throw LayoutError("state length " + std::to_string(state.size()) +
                      " does not match layout dimension " + std::to_string(layout.state_dim));
  std::vector<lie::GroupElement> out;
  out.reserve(layout.slots.size());
  for (const GroupSlot& s : layout.slots) out.push_back(slot_to_group(s, state));
  return out;
}

// Angle of a slot's rotation block on (-pi, pi]. An exact half turn, where
// atan2 may report -pi, is resolved to +pi and reported through `at_branch`.
inline double slot_angle(const GroupSlot& slot, const lie::Matrix& m, bool* at_branch) {
  double angle;
  if (lie::rotation_dim(slot.kind) == 2) {
    angle = std::atan2(m(1, 0), m(0, 0));
  } else {
    const Eigen::Vector3d vee(0.5 * (m(2, 1) - m(1, 2)), 0.5 * (m(0, 2) - m(2, 0)),
                              0.5 * (m(1, 0) - m(0, 1)));
    const double co = 0.5 * (m(0, 0) + m(1, 1) + m(2, 2) - 1.0);
    angle = std::atan2(slot.axis->dot(vee), co);
  }
  if (std::numbers::pi - std::abs(angle) < 1e-12) {
    if (at_branch) *at_branch = true;
    angle = std::numbers::pi;
  }
  return angle;
}

// Writes each slot's raw coordinates into `state`; other entries untouched.
inline void groups_to_state(const std::vector<lie::GroupElement>& groups,
                            const StateLayout& layout, Vec& state,
                            bool* at_branch = nullptr) {
  if (groups.size() != layout.slots.size())
    throw LayoutError("group count does not match layout slots");
  if (state.size() != layout.state_dim) state = Vec::Zero(layout.state_dim);
  for (std::size_t k = 0; k < groups.size(); ++k) {
    const GroupSlot& slot = layout.slots[k];
    const lie::Matrix& m = groups[k].matrix();
    if (groups[k].kind() != slot.kind) throw LayoutError("group kind does not match slot");
    state[slot.angle_index()] = slot_angle(slot, m, at_branch);
    const int n = lie::matrix_dim(slot.kind);
    if (lie::is_euclidean(slot.kind))
      for (int i = 0; i + 1 < static_cast<int>(slot.indices.size()); ++i)
        state[slot.indices[i]] = m(i, n - 1);
  }
}

inline nlohmann::json to_json(const StateLayout& layout) {
  nlohmann::json slots = nlohmann::json::array();
  for (const GroupSlot& s : layout.slots) {
    nlohmann::json j = {{"kind", lie::to_string(s.kind)}, {"indices", s.indices}};
    if (s.axis) j["axis"] = {s.axis->x(), s.axis->y(), s.axis->z()};
    slots.push_back(j);
  }
  return {{"state_dim", layout.state_dim},
          {"slots", slots},
          {"raw_static_indices", layout.raw_static_indices},
          {"velocity_indices", layout.velocity_indices}};
}

inline StateLayout layout_from_json(const nlohmann::json& j) {
  StateLayout l;
  l.state_dim = j.at("state_dim").get<int>();
  for (const auto& sj : j.at("slots")) {
    GroupSlot s;
    s.kind = lie::parse_group_kind(sj.at("kind").get<std::string>());
    s.indices = sj.at("indices").get<std::vector<int>>();
    if (sj.contains("axis")) {
      const std::vector<double> a = sj.at("axis").get<std::vector<double>>();
      if (a.size() != 3) throw LayoutError("slot axis must have 3 entries");
      s.axis = Eigen::Vector3d(a[0], a[1], a[2]);
    }
    l.slots.push_back(std::move(s));
  }
  l.raw_static_indices = j.at("raw_static_indices").get<std::vector<int>>();
  l.velocity_indices = j.at("velocity_indices").get<std::vector<int>>();
  l.validate();
  return l;
}

}  // namespace gemdyn

#endif  // GEMDYN_LAYOUT_HPP_
