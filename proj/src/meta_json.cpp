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

#include "fmse/meta_json.hpp"

#include "fmse/error.hpp"

namespace fmse {

using nlohmann::json;

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::MalformedRecord, "metadata: " + what); }

SensorId sensor_ref(const json& j, const char* key = "sensor") {
  const auto id = parse_sensor_id(j.at(key).get<std::string>());
  if (!id) malformed("bad sensor reference " + j.at(key).dump());
  SensorId out = *id;
  if (j.contains("modality")) {
    const auto m = parse_modality(j.at("modality").get<std::string>());
    if (!m) malformed("bad modality " + j.at("modality").dump());
    out.modality = *m;
  }
  return out;
}

SensorSpec sensor_from_json(const json& j) {
  SensorSpec s;
  const auto agent = parse_agent(j.at("agent").get<std::string>());
  const auto modality = parse_modality(j.at("modality").get<std::string>());
  if (!agent || !modality) malformed("bad sensor entry " + j.dump());
  s.id = SensorId(*agent, j.at("name").get<std::string>(), *modality);
  s.resolution = j.at("resolution").get<std::array<std::uint32_t, 2>>();
  s.frequency_hz = j.at("frequency_hz").get<double>();
  s.hfov_deg = j.at("hfov_deg").get<double>();
  s.vfov_deg = j.at("vfov_deg").get<double>();
  if (j.contains("details")) s.details = j.at("details").get<std::map<std::string, std::string>>();
  return s;
}

}  // namespace

std::string canonical_dump(const json& j) { return j.dump(); }

json sensor_to_json(const SensorSpec& spec) {
  return json{{"agent", to_string(spec.id.agent)},
              {"name", spec.id.name},
              {"modality", to_string(spec.id.modality)},
              {"resolution", spec.resolution},
              {"frequency_hz", spec.frequency_hz},
              {"hfov_deg", spec.hfov_deg},
              {"vfov_deg", spec.vfov_deg},
              {"details", spec.details}};
}

json intrinsics_to_json(const CameraIntrinsics& intr) {
  return json{{"fx", intr.fx},         {"fy", intr.fy},        {"cx", intr.cx},
              {"cy", intr.cy},         {"distortion", intr.distortion},
              {"width", intr.width},   {"height", intr.height}};
}

CameraIntrinsics intrinsics_from_json(const json& j) {
  CameraIntrinsics c;
  c.fx = j.at("fx").get<double>();
  c.fy = j.at("fy").get<double>();
  c.cx = j.at("cx").get<double>();
  c.cy = j.at("cy").get<double>();
  c.distortion = j.at("distortion").get<std::array<double, 5>>();
  c.width = j.at("width").get<std::uint32_t>();
  c.height = j.at("height").get<std::uint32_t>();
  return c;
}

json calibration_to_json(const std::map<SensorId, RigidTransform>& calibration) {
  json arr = json::array();
  for (const auto& [id, t] : calibration) {
    const auto q = t.quaternion();
    const auto& tr = t.translation();
    arr.push_back(json{{"sensor", to_string(id)},
                       {"modality", to_string(id.modality)},
                       {"rotation_wxyz", {q.w(), q.x(), q.y(), q.z()}},
                       {"translation_m", {tr.x(), tr.y(), tr.z()}}});
  }
  return arr;
}

std::map<SensorId, RigidTransform> calibration_from_json(const json& j) {
  std::map<SensorId, RigidTransform> out;
  try {
    for (const auto& e : j) {
      const auto q = e.at("rotation_wxyz").get<std::array<double, 4>>();
      const auto t = e.at("translation_m").get<std::array<double, 3>>();
      out[sensor_ref(e)] = RigidTransform::from_quaternion(Eigen::Quaterniond(q[0], q[1], q[2], q[3]),
                                                           Eigen::Vector3d(t[0], t[1], t[2]));
    }
  } catch (const json::exception& ex) {
    malformed(ex.what());
  }
  return out;
}

json meta_to_json(const DatasetMeta& meta) {
  json agents = json::array();
  for (Agent a : meta.agents) agents.push_back(to_string(a));
  json sensors = json::array();
  for (const auto& s : meta.sensor_registry) sensors.push_back(sensor_to_json(s));
  json intrinsics = json::array();
  for (const auto& [id, intr] : meta.intrinsics) {
    json e = intrinsics_to_json(intr);
    e["sensor"] = to_string(id);
    e["modality"] = to_string(id.modality);
    intrinsics.push_back(std::move(e));
  }
  return json{{"format_version", {{"major", meta.format_version.major}, {"minor", meta.format_version.minor}}},
              {"data_drop_id", meta.data_drop_id},
              {"agents", agents},
              {"sensors", sensors},
              {"intrinsics", intrinsics},
              {"calibration", calibration_to_json(meta.calibration)},
              {"creation_time_ns", meta.creation_time}};
}

DatasetMeta meta_from_json(const json& j) {
  DatasetMeta m;
  try {
    if (!j.is_object()) malformed("document is not an object");
    const auto& v = j.at("format_version");
    m.format_version = {v.at("major").get<std::uint16_t>(), v.at("minor").get<std::uint16_t>()};
    m.data_drop_id = j.at("data_drop_id").get<std::string>();
    for (const auto& a : j.at("agents")) {
      const auto agent = parse_agent(a.get<std::string>());
      if (!agent) malformed("bad agent " + a.dump());
      m.agents.push_back(*agent);
    }
    for (const auto& s : j.at("sensors")) m.sensor_registry.push_back(sensor_from_json(s));
    for (const auto& e : j.at("intrinsics")) m.intrinsics[sensor_ref(e)] = intrinsics_from_json(e);
    m.calibration = calibration_from_json(j.at("calibration"));
    m.creation_time = j.at("creation_time_ns").get<Timestamp>();
  } catch (const json::exception& ex) {
    malformed(ex.what());
  }
  return m;
}

bool equivalent(const DatasetMeta& a, const DatasetMeta& b, double tolerance) {
  if (a.format_version != b.format_version || a.data_drop_id != b.data_drop_id || a.agents != b.agents ||
      a.sensor_registry != b.sensor_registry || a.intrinsics != b.intrinsics ||
      a.creation_time != b.creation_time || a.calibration.size() != b.calibration.size()) {
    return false;
  }
  for (const auto& [id, t] : a.calibration) {
    const auto it = b.calibration.find(id);
    if (it == b.calibration.end() || max_abs_difference(t, it->second) > tolerance) return false;
  }
  return true;
}

}  // namespace fmse
