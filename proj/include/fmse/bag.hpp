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

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fmse/codec.hpp"
#include "fmse/transform.hpp"
#include "fmse/types.hpp"

namespace fmse {

enum class MessageKind { Image, PointCloud2, Odometry, NavSatFix, TfMessage };

struct MessageType {
  std::string_view name;
  std::string_view md5;
  /// Full definition text including dependencies, as carried in
  /// connection headers.
  std::string_view definition;
};

const MessageType& message_type(MessageKind kind);
MessageKind message_kind(Modality modality);

/// "/vehicle/camera/front_left", "/tower/lidar/top", "/vehicle/ins".
std::string default_topic(const SensorId& id);
/// Coordinate frame name of a sensor, e.g. "vehicle/lidar_top".
std::string sensor_frame_id(const SensorId& id);

class TopicMap {
 public:
  TopicMap() = default;
  /// Default topic for every sensor in the registry.
  static TopicMap defaults(const DatasetMeta& meta);

  void set(const SensorId& id, std::string topic);
  /// nullptr if unmapped.
  const std::string* find(const SensorId& id) const;
  const std::map<SensorId, std::string>& entries() const { return topics_; }
  /// Throws INVALID_ARGUMENT on duplicate topics or topics without a
  /// leading '/'.
  void validate() const;

  /// {"VEHICLE/FRONT_LEFT": "/cam/fl", ...}; unknown sensors are rejected
  /// by callers via UNMAPPED_SENSOR at export time, not here.
  static TopicMap from_json(const nlohmann::json& j, const DatasetMeta& meta);
  nlohmann::json to_json() const;

 private:
  std::map<SensorId, std::string> topics_;
};

struct RosTime {
  std::uint32_t sec = 0;
  std::uint32_t nsec = 0;
  bool operator==(const RosTime&) const = default;
};

/// Throws OUT_OF_RANGE past the 32-bit seconds range.
RosTime to_ros_time(Timestamp ns);

std::vector<std::uint8_t> serialize_image_message(const CameraImage& image, std::string_view frame_id,
                                                  std::uint32_t seq = 0);
std::vector<std::uint8_t> serialize_pointcloud_message(const PointCloud& cloud, std::string_view frame_id,
                                                       std::uint32_t seq = 0);
/// Odometry: pose.position = (latitude, longitude, altitude), orientation
/// from the record, twist = (velocity, angular rate).
std::vector<std::uint8_t> serialize_odometry_message(const InsRecord& ins, std::string_view child_frame_id,
                                                     std::uint32_t seq = 0);
std::vector<std::uint8_t> serialize_navsatfix_message(const InsRecord& fix, std::string_view frame_id,
                                                      std::uint32_t seq = 0);
/// Odometry for INS sensors, NavSatFix for GNSS sensors.
std::vector<std::uint8_t> serialize_nav_message(const InsRecord& ins, const SensorId& sensor, std::uint32_t seq = 0);

struct StaticTransform {
  std::string parent;
  std::string child;
  /// Maps child coordinates into the parent frame.
  RigidTransform parent_from_child;
};

std::vector<std::uint8_t> serialize_tf_message(const std::vector<StaticTransform>& transforms, Timestamp stamp);

/// Root-to-sensor transforms of the dataset calibration in tf form.
std::vector<StaticTransform> calibration_transforms(const DatasetMeta& meta);

struct ExportOptions {
  /// Publishes the calibration once, latched, ahead of the first message.
  bool include_calibration = true;
  std::string calibration_topic = "/tf_static";
};

struct ExportSummary {
  std::uint64_t messages = 0;
  std::uint64_t connections = 0;
  std::uint64_t chunks = 0;
  std::uint64_t bytes = 0;
  std::map<std::string, std::uint64_t> messages_per_topic;
};

inline constexpr std::string_view kBagVersionLine = "#ROSBAG V2.0\n";
inline constexpr std::size_t kBagHeaderRecordSize = 4096;

/// Writes a bag v2.0 file with one uncompressed chunk per frame. The sink
/// must be seekable: the bag header is rewritten once the index position is
/// known. INS and GNSS blocks produce one message per sample.
ExportSummary export_bag(const DatasetReader& reader, const TopicMap& topics, std::ostream& sink,
                         const ExportOptions& options = {});

}  // namespace fmse
