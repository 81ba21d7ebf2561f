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

#include "fmse/types.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "fmse/error.hpp"

namespace fmse {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); }

template <typename T>
const T* find_as(const Frame& f, Agent agent, std::string_view name) {
  const Record* r = f.find(agent, name);
  return r ? std::get_if<T>(r) : nullptr;
}

}  // namespace

std::string_view to_string(Agent a) { return a == Agent::Vehicle ? "VEHICLE" : "TOWER"; }

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::Camera: return "CAMERA";
    case Modality::Lidar: return "LIDAR";
    case Modality::Ins: return "INS";
    case Modality::Gnss: return "GNSS";
  }
  return "CAMERA";
}

std::optional<Agent> parse_agent(std::string_view s) {
  if (s == "VEHICLE") return Agent::Vehicle;
  if (s == "TOWER") return Agent::Tower;
  return std::nullopt;
}

std::optional<Modality> parse_modality(std::string_view s) {
  if (s == "CAMERA") return Modality::Camera;
  if (s == "LIDAR") return Modality::Lidar;
  if (s == "INS") return Modality::Ins;
  if (s == "GNSS") return Modality::Gnss;
  return std::nullopt;
}

Modality modality_for_name(std::string_view name) {
  if (name.find("LIDAR") != std::string_view::npos) return Modality::Lidar;
  if (name == "INS") return Modality::Ins;
  if (name == "GNSS") return Modality::Gnss;
  return Modality::Camera;
}

std::string to_string(const SensorId& id) {
  std::string s(to_string(id.agent));
  s += '/';
  s += id.name;
  return s;
}

std::optional<SensorId> parse_sensor_id(std::string_view s) {
  const auto slash = s.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  const auto agent = parse_agent(s.substr(0, slash));
  const auto name = s.substr(slash + 1);
  if (!agent || name.empty()) return std::nullopt;
  return SensorId(*agent, std::string(name));
}

std::string_view root_sensor_name(Agent a) { return a == Agent::Vehicle ? "LIDAR_TOP" : "TOWER_LIDAR_TOP"; }

SensorId root_sensor(Agent a) { return SensorId(a, std::string(root_sensor_name(a)), Modality::Lidar); }

double horizontal_fov(const CameraIntrinsics& intr) {
  return 2.0 * std::atan(static_cast<double>(intr.width) / (2.0 * intr.fx)) * 180.0 / std::numbers::pi;
}

double vertical_fov(const CameraIntrinsics& intr) {
  return 2.0 * std::atan(static_cast<double>(intr.height) / (2.0 * intr.fy)) * 180.0 / std::numbers::pi;
}

std::string_view to_string(PixelEncoding e) {
  switch (e) {
    case PixelEncoding::Rgb8: return "rgb8";
    case PixelEncoding::Bgr8: return "bgr8";
    case PixelEncoding::Mono8: return "mono8";
  }
  return "rgb8";
}

std::optional<PixelEncoding> parse_encoding(std::string_view s) {
  if (s == "rgb8" || s == "RGB8") return PixelEncoding::Rgb8;
  if (s == "bgr8" || s == "BGR8") return PixelEncoding::Bgr8;
  if (s == "mono8" || s == "MONO8") return PixelEncoding::Mono8;
  return std::nullopt;
}

std::uint32_t channels(PixelEncoding e) { return e == PixelEncoding::Mono8 ? 1 : 3; }

const SensorId& record_sensor(const Record& r) {
  return std::visit([](const auto& v) -> const SensorId& { return v.sensor; }, r);
}

Timestamp record_timestamp(const Record& r) {
  if (const auto* img = std::get_if<CameraImage>(&r)) return img->timestamp;
  if (const auto* pc = std::get_if<PointCloud>(&r)) return pc->frame_timestamp;
  const auto& ins = std::get<InsBlock>(r);
  return ins.records.empty() ? 0 : ins.records.front().timestamp;
}

const Record* Frame::find(const SensorId& id) const {
  const auto it = records.find(id);
  return it == records.end() ? nullptr : &it->second;
}

const Record* Frame::find(Agent agent, std::string_view name) const {
  for (const auto& [id, rec] : records) {
    if (id.agent == agent && id.name == name) return &rec;
  }
  return nullptr;
}

const CameraImage* Frame::camera(Agent agent, std::string_view name) const {
  return find_as<CameraImage>(*this, agent, name);
}

const PointCloud* Frame::lidar(Agent agent, std::string_view name) const {
  return find_as<PointCloud>(*this, agent, name);
}

const InsBlock* Frame::ins(Agent agent, std::string_view name) const {
  return find_as<InsBlock>(*this, agent, name);
}

std::optional<std::size_t> DatasetMeta::registry_index(const SensorId& id) const {
  for (std::size_t i = 0; i < sensor_registry.size(); ++i) {
    if (sensor_registry[i].id == id) return i;
  }
  return std::nullopt;
}

const SensorSpec* DatasetMeta::find_sensor(const SensorId& id) const {
  const auto i = registry_index(id);
  return i ? &sensor_registry[*i] : nullptr;
}

const SensorSpec* DatasetMeta::find_sensor(Agent agent, std::string_view name) const {
  for (const auto& s : sensor_registry) {
    if (s.id.agent == agent && s.id.name == name) return &s;
  }
  return nullptr;
}

void validate(const SensorSpec& spec) {
  if (spec.id.name.empty()) invalid("sensor name is empty");
  if (!(spec.frequency_hz > 0.0)) invalid(to_string(spec.id) + ": frequency must be > 0");
  if (!(spec.hfov_deg > 0.0 && spec.hfov_deg <= 360.0)) invalid(to_string(spec.id) + ": hfov must be in (0, 360]");
  if (!(spec.vfov_deg > 0.0 && spec.vfov_deg <= 180.0)) invalid(to_string(spec.id) + ": vfov must be in (0, 180]");
}

void validate(const CameraIntrinsics& intr) {
  if (!(intr.fx > 0.0 && intr.fy > 0.0)) invalid("focal lengths must be positive");
  if (!(intr.cx >= 0.0 && intr.cx < intr.width)) invalid("cx outside [0, width)");
  if (!(intr.cy >= 0.0 && intr.cy < intr.height)) invalid("cy outside [0, height)");
  for (double d : intr.distortion) {
    if (!std::isfinite(d)) invalid("distortion coefficient is not finite");
  }
}

void validate(const CameraImage& img) {
  const std::size_t expected =
      static_cast<std::size_t>(img.width) * img.height * channels(img.encoding);
  if (img.pixels.size() != expected) {
    invalid(to_string(img.sensor) + ": pixel buffer has " + std::to_string(img.pixels.size()) +
            " bytes, expected " + std::to_string(expected));
  }
}

void validate(const PointCloud& cloud) {
  constexpr std::uint32_t kPeriodNs = 100'000'000;
  for (const auto& p : cloud.points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z) || !std::isfinite(p.intensity)) {
      invalid(to_string(cloud.sensor) + ": non-finite point");
    }
    if (p.dt_ns >= kPeriodNs) invalid(to_string(cloud.sensor) + ": point dt exceeds one scan period");
  }
}

void validate(const InsRecord& rec) {
  const auto& q = rec.orientation;
  const double n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  if (std::abs(n - 1.0) > 1e-9) invalid("INS orientation is not a unit quaternion");
  if (!(std::abs(rec.latitude_deg) <= 90.0)) invalid("INS latitude outside [-90, 90]");
  if (!(std::abs(rec.longitude_deg) <= 180.0)) invalid("INS longitude outside [-180, 180]");
}

void validate(const EgoMotionState& motion) {
  if (!motion.linear_velocity.allFinite() || !motion.angular_velocity.allFinite()) {
    invalid("ego motion has non-finite components");
  }
}

void validate(const DatasetMeta& meta) {
  std::set<std::pair<Agent, std::string>> seen;
  for (const auto& spec : meta.sensor_registry) {
    validate(spec);
    if (!seen.emplace(spec.id.agent, spec.id.name).second) {
      invalid("duplicate sensor " + to_string(spec.id));
    }
    if (spec.id.modality != modality_for_name(spec.id.name) &&
        modality_for_name(spec.id.name) != Modality::Camera) {
      invalid(to_string(spec.id) + ": modality inconsistent with sensor name");
    }
  }
  for (const auto& [id, intr] : meta.intrinsics) {
    if (!meta.registry_index(id)) invalid("intrinsics for unregistered sensor " + to_string(id));
    validate(intr);
  }
  for (const auto& [id, t] : meta.calibration) {
    if (!meta.registry_index(id)) invalid("calibration for unregistered sensor " + to_string(id));
  }
  for (Agent a : meta.agents) {
    const auto it = meta.calibration.find(root_sensor(a));
    if (it == meta.calibration.end()) {
      throw Error(ErrorCode::MissingRoot, "calibration lacks root " + to_string(root_sensor(a)));
    }
    if (max_abs_difference(it->second, RigidTransform::identity()) > 1e-12) {
      throw Error(ErrorCode::NonIdentityRoot, to_string(root_sensor(a)) + " must map to identity");
    }
  }
}

}  // namespace fmse
