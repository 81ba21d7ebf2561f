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

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fmse/transform.hpp"

namespace fmse {

/// Nanoseconds since the Unix epoch, UTC.
using Timestamp = std::uint64_t;

inline constexpr Timestamp kNanosPerSecond = 1'000'000'000ULL;

enum class Agent : std::uint8_t { Vehicle, Tower };
enum class Modality : std::uint8_t { Camera, Lidar, Ins, Gnss };

std::string_view to_string(Agent a);
std::string_view to_string(Modality m);
std::optional<Agent> parse_agent(std::string_view s);
std::optional<Modality> parse_modality(std::string_view s);

/// Modality implied by a sensor token: *LIDAR* -> Lidar, INS -> Ins,
/// GNSS -> Gnss, anything else -> Camera.
Modality modality_for_name(std::string_view name);

struct SensorId {
  Agent agent = Agent::Vehicle;
  std::string name;
  Modality modality = Modality::Camera;

  SensorId() = default;
  SensorId(Agent a, std::string n, Modality m) : agent(a), name(std::move(n)), modality(m) {}
  /// Modality derived from the name.
  SensorId(Agent a, std::string n) : agent(a), name(std::move(n)), modality(modality_for_name(name)) {}

  auto operator<=>(const SensorId&) const = default;
  bool operator==(const SensorId&) const = default;
};

/// "VEHICLE/FRONT_LEFT"
std::string to_string(const SensorId& id);
/// Inverse of to_string(SensorId); modality taken from the name.
std::optional<SensorId> parse_sensor_id(std::string_view s);

/// Root sensor token for an agent.
std::string_view root_sensor_name(Agent a);
SensorId root_sensor(Agent a);

struct SensorSpec {
  SensorId id;
  /// (width px, height px) for cameras, (azimuth bins, channels) for LiDAR.
  std::array<std::uint32_t, 2> resolution{0, 0};
  double frequency_hz = 0.0;
  double hfov_deg = 0.0;
  double vfov_deg = 0.0;
  std::map<std::string, std::string> details;

  bool operator==(const SensorSpec&) const = default;
};

/// Pinhole model with 5-coefficient radial-tangential distortion
/// (k1, k2, p1, p2, k3).
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  std::array<double, 5> distortion{0, 0, 0, 0, 0};
  std::uint32_t width = 0;
  std::uint32_t height = 0;

  double k1() const { return distortion[0]; }
  double k2() const { return distortion[1]; }
  double p1() const { return distortion[2]; }
  double p2() const { return distortion[3]; }
  double k3() const { return distortion[4]; }

  bool operator==(const CameraIntrinsics&) const = default;
};

/// 2 atan(width / (2 fx)), degrees.
double horizontal_fov(const CameraIntrinsics& intr);
/// 2 atan(height / (2 fy)), degrees.
double vertical_fov(const CameraIntrinsics& intr);

enum class PixelEncoding : std::uint8_t { Rgb8 = 0, Bgr8 = 1, Mono8 = 2 };

std::string_view to_string(PixelEncoding e);
std::optional<PixelEncoding> parse_encoding(std::string_view s);
std::uint32_t channels(PixelEncoding e);

struct CameraImage {
  SensorId sensor;
  Timestamp timestamp = 0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  PixelEncoding encoding = PixelEncoding::Rgb8;
  std::vector<std::uint8_t> pixels;
  std::uint32_t exposure_us = 0;

  bool operator==(const CameraImage&) const = default;
};

/// Same layout as the on-disk point struct (24 bytes).
struct Point {
  float x = 0;
  float y = 0;
  float z = 0;
  float intensity = 0;
  /// Offset from the cloud's frame timestamp, nanoseconds.
  std::uint32_t dt_ns = 0;
  std::uint16_t channel = 0;
  std::uint16_t reserved = 0;

  bool operator==(const Point&) const = default;
};
static_assert(sizeof(Point) == 24);

struct PointCloud {
  SensorId sensor;
  Timestamp frame_timestamp = 0;
  std::vector<Point> points;

  bool operator==(const PointCloud&) const = default;
};

/// One INS sample. Orientation is body-to-world, (w, x, y, z).
struct InsRecord {
  Timestamp timestamp = 0;
  double latitude_deg = 0;
  double longitude_deg = 0;
  double altitude_m = 0;
  std::array<double, 4> orientation{1, 0, 0, 0};
  /// Body frame, m/s.
  std::array<double, 3> velocity{0, 0, 0};
  /// Body frame, rad/s.
  std::array<double, 3> angular_rate{0, 0, 0};

  bool operator==(const InsRecord&) const = default;
};

struct InsBlock {
  SensorId sensor;
  std::vector<InsRecord> records;

  bool operator==(const InsBlock&) const = default;
};

/// Constant twist of a sensor, expressed in the sensor frame.
struct EgoMotionState {
  Eigen::Vector3d linear_velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d angular_velocity = Eigen::Vector3d::Zero();
};

using Record = std::variant<CameraImage, PointCloud, InsBlock>;

const SensorId& record_sensor(const Record& r);
/// Image timestamp, cloud frame timestamp, or first INS sample (0 if empty).
Timestamp record_timestamp(const Record& r);

struct Frame {
  std::uint64_t index = 0;
  Timestamp reference_timestamp = 0;
  std::map<SensorId, Record> records;
  /// Presence flags for expected sensors. Sensors with a record are implied
  /// present; entries here make absences explicit.
  std::map<SensorId, bool> completeness;

  bool operator==(const Frame&) const = default;

  const Record* find(const SensorId& id) const;
  /// Lookup by agent and token, e.g. (Vehicle, "FRONT_LEFT").
  const Record* find(Agent agent, std::string_view name) const;
  const CameraImage* camera(Agent agent, std::string_view name) const;
  const PointCloud* lidar(Agent agent, std::string_view name) const;
  const InsBlock* ins(Agent agent, std::string_view name) const;
};

struct FormatVersion {
  std::uint16_t major = 1;
  std::uint16_t minor = 0;

  auto operator<=>(const FormatVersion&) const = default;
};

struct DatasetMeta {
  FormatVersion format_version;
  std::string data_drop_id;
  std::vector<Agent> agents;
  std::vector<SensorSpec> sensor_registry;
  std::map<SensorId, CameraIntrinsics> intrinsics;
  /// Sensor-to-root extrinsics; root = per-agent TOP LiDAR.
  std::map<SensorId, RigidTransform> calibration;
  Timestamp creation_time = 0;

  /// Registry position of `id`, if registered.
  std::optional<std::size_t> registry_index(const SensorId& id) const;
  const SensorSpec* find_sensor(const SensorId& id) const;
  const SensorSpec* find_sensor(Agent agent, std::string_view name) const;
};

/// Throw Error(InvalidArgument) describing the first violated invariant.
void validate(const SensorSpec& spec);
void validate(const CameraIntrinsics& intr);
void validate(const CameraImage& img);
void validate(const PointCloud& cloud);
void validate(const InsRecord& rec);
void validate(const EgoMotionState& motion);
void validate(const DatasetMeta& meta);

}  // namespace fmse
