// Copyright 2026 The fmse Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fmse/transform.hpp"
#include "fmse/types.hpp"

namespace fmse {

/// Per-agent extrinsics, each sensor stored as T_XA against the agent root A
/// (the TOP LiDAR unless re-rooted).
///
/// Convention: an entry for sensor X maps root coordinates into X's frame,
/// and transform_between(B, C) = T_BA * inv(T_CA) maps C coordinates into B.
/// Chaining therefore reads left to right:
///   transform_between(B, D) == compose(transform_between(B, C), transform_between(C, D)).
class CalibrationGraph {
 public:
  struct Change {
    SensorId sensor;
    RigidTransform previous;
    RigidTransform replacement;
  };

  struct ConsistencyReport {
    double max_residual = 0.0;
    std::size_t triples_checked = 0;
  };

  CalibrationGraph() = default;
  /// Restricts registration to sensors of `registry`.
  explicit CalibrationGraph(std::vector<SensorId> registry);

  /// Register (or overwrite, last write wins) `sensor`'s transform to its
  /// agent root. Returns the replacement notice when an entry existed.
  /// Throws NON_IDENTITY_ROOT for a non-identity root entry and
  /// UNREGISTERED_SENSOR when a registry is set and lacks `sensor`.
  std::optional<Change> add(const SensorId& sensor, const RigidTransform& to_root);

  const RigidTransform* lookup(const SensorId& sensor) const;
  const SensorId& root(Agent agent) const;
  std::vector<SensorId> sensors() const;
  std::vector<SensorId> sensors(Agent agent) const;
  std::size_t size() const { return entries_.size(); }
  const std::vector<Change>& change_log() const { return log_; }

  /// T_BC = T_BA * inv(T_CA). Throws UNREGISTERED_SENSOR or CROSS_AGENT.
  RigidTransform transform_between(const SensorId& from, const SensorId& to) const;

  /// Max over all same-agent triples (B, C, D) of
  /// |T_BD - T_BC * T_CD| (elementwise, 4x4).
  ConsistencyReport consistency_check() const;

  /// Same pairwise transforms, but every entry of `new_root`'s agent is
  /// expressed against `new_root` instead.
  CalibrationGraph rerooted(const SensorId& new_root) const;

  /// Throws MISSING_ROOT when an agent of the meta (or any agent with
  /// entries) lacks its TOP LiDAR entry.
  static CalibrationGraph load_from_meta(const DatasetMeta& meta);
  std::map<SensorId, RigidTransform> save_to_meta() const { return entries_; }

  /// Standalone calibration document: {"format": "fmse-calibration",
  /// "version": 1, "roots": [...], "calibration": [...]}.
  nlohmann::json to_json() const;
  static CalibrationGraph from_json(const nlohmann::json& doc);

 private:
  std::vector<SensorId> registry_;
  std::map<Agent, SensorId> roots_{{Agent::Vehicle, root_sensor(Agent::Vehicle)},
                                    {Agent::Tower, root_sensor(Agent::Tower)}};
  std::map<SensorId, RigidTransform> entries_;
  std::vector<Change> log_;
};

}  // namespace fmse
