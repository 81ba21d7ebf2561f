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

#include "fmse/calib_graph.hpp"

#include <algorithm>
#include <set>

#include "fmse/error.hpp"
#include "fmse/meta_json.hpp"

namespace fmse {

namespace {

constexpr double kRootTolerance = 1e-12;

}  // namespace

CalibrationGraph::CalibrationGraph(std::vector<SensorId> registry) : registry_(std::move(registry)) {}

std::optional<CalibrationGraph::Change> CalibrationGraph::add(const SensorId& sensor, const RigidTransform& to_root) {
  if (!registry_.empty() && std::find(registry_.begin(), registry_.end(), sensor) == registry_.end()) {
    throw Error(ErrorCode::UnregisteredSensor, to_string(sensor) + " is not in the sensor registry");
  }
  if (sensor == root(sensor.agent) && max_abs_difference(to_root, RigidTransform::identity()) > kRootTolerance) {
    throw Error(ErrorCode::NonIdentityRoot, to_string(sensor) + " is the agent root and must map to identity");
  }
  auto [it, inserted] = entries_.try_emplace(sensor, to_root);
  if (inserted) return std::nullopt;
  Change change{sensor, it->second, to_root};
  it->second = to_root;
  log_.push_back(change);
  return change;
}

const RigidTransform* CalibrationGraph::lookup(const SensorId& sensor) const {
  const auto it = entries_.find(sensor);
  return it == entries_.end() ? nullptr : &it->second;
}

const SensorId& CalibrationGraph::root(Agent agent) const { return roots_.at(agent); }

std::vector<SensorId> CalibrationGraph::sensors() const {
  std::vector<SensorId> out;
  for (const auto& [id, t] : entries_) out.push_back(id);
  return out;
}

std::vector<SensorId> CalibrationGraph::sensors(Agent agent) const {
  std::vector<SensorId> out;
  for (const auto& [id, t] : entries_) {
    if (id.agent == agent) out.push_back(id);
  }
  return out;
}

RigidTransform CalibrationGraph::transform_between(const SensorId& from, const SensorId& to) const {
  const auto* b = lookup(from);
  if (!b) throw Error(ErrorCode::UnregisteredSensor, to_string(from) + " has no calibration entry");
  const auto* c = lookup(to);
  if (!c) throw Error(ErrorCode::UnregisteredSensor, to_string(to) + " has no calibration entry");
  if (from.agent != to.agent) {
    throw Error(ErrorCode::CrossAgent, to_string(from) + " and " + to_string(to) + " belong to different agents");
  }
  return compose(*b, invert(*c));
}

CalibrationGraph::ConsistencyReport CalibrationGraph::consistency_check() const {
  ConsistencyReport report;
  for (Agent agent : {Agent::Vehicle, Agent::Tower}) {
    const auto ids = sensors(agent);
    for (const auto& b : ids) {
      for (const auto& c : ids) {
        const auto bc = transform_between(b, c);
        for (const auto& d : ids) {
          const double r = max_abs_difference(transform_between(b, d), compose(bc, transform_between(c, d)));
          report.max_residual = std::max(report.max_residual, r);
          ++report.triples_checked;
        }
      }
    }
  }
  return report;
}

CalibrationGraph CalibrationGraph::rerooted(const SensorId& new_root) const {
  if (!lookup(new_root)) throw Error(ErrorCode::UnregisteredSensor, to_string(new_root) + " has no calibration entry");
  CalibrationGraph g(registry_);
  g.roots_ = roots_;
  g.roots_[new_root.agent] = new_root;
  for (const auto& [id, t] : entries_) {
    g.entries_.emplace(id, id.agent == new_root.agent ? transform_between(id, new_root) : t);
  }
  g.entries_[new_root] = RigidTransform::identity();
  return g;
}

CalibrationGraph CalibrationGraph::load_from_meta(const DatasetMeta& meta) {
  std::set<Agent> agents(meta.agents.begin(), meta.agents.end());
  for (const auto& [id, t] : meta.calibration) agents.insert(id.agent);
  std::vector<SensorId> registry;
  for (const auto& s : meta.sensor_registry) registry.push_back(s.id);
  CalibrationGraph g(std::move(registry));
  for (Agent a : agents) {
    if (!meta.calibration.contains(root_sensor(a))) {
      throw Error(ErrorCode::MissingRoot, "calibration lacks root " + to_string(root_sensor(a)));
    }
  }
  for (const auto& [id, t] : meta.calibration) g.add(id, t);
  return g;
}

nlohmann::json CalibrationGraph::to_json() const {
  nlohmann::json roots = nlohmann::json::array();
  for (const auto& [agent, id] : roots_) roots.push_back(to_string(id));
  return nlohmann::json{{"format", "fmse-calibration"},
                        {"version", 1},
                        {"roots", roots},
                        {"calibration", calibration_to_json(entries_)}};
}

CalibrationGraph CalibrationGraph::from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "fmse-calibration") {
      throw Error(ErrorCode::MalformedRecord, "not a calibration document");
    }
    CalibrationGraph g;
    if (doc.contains("roots")) {
      for (const auto& r : doc.at("roots")) {
        const auto id = parse_sensor_id(r.get<std::string>());
        if (!id) throw Error(ErrorCode::MalformedRecord, "bad root " + r.dump());
        g.roots_[id->agent] = *id;
      }
    }
    const auto entries = calibration_from_json(doc.at("calibration"));
    std::set<Agent> agents;
    for (const auto& [id, t] : entries) agents.insert(id.agent);
    for (Agent a : agents) {
      if (!entries.contains(g.root(a))) throw Error(ErrorCode::MissingRoot, "calibration lacks root " + to_string(g.root(a)));
    }
    for (const auto& [id, t] : entries) g.add(id, t);
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("calibration document: ") + e.what());
  }
}

}  // namespace fmse
