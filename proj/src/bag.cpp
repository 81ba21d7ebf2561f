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

#include "fmse/bag.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <limits>
#include <set>

#include "fmse/error.hpp"

namespace fmse {

namespace {

#define FMSE_MSG_SEPARATOR "================================================================================\n"

constexpr std::string_view kImageDef =
    "std_msgs/Header header\n"
    "uint32 height\n"
    "uint32 width\n"
    "string encoding\n"
    "uint8 is_bigendian\n"
    "uint32 step\n"
    "uint8[] data\n"
    "\n" FMSE_MSG_SEPARATOR
    "MSG: std_msgs/Header\n"
    "uint32 seq\n"
    "time stamp\n"
    "string frame_id\n";

constexpr std::string_view kPointCloud2Def =
    "std_msgs/Header header\n"
    "uint32 height\n"
    "uint32 width\n"
    "sensor_msgs/PointField[] fields\n"
    "bool is_bigendian\n"
    "uint32 point_step\n"
    "uint32 row_step\n"
    "uint8[] data\n"
    "bool is_dense\n"
    "\n" FMSE_MSG_SEPARATOR
    "MSG: std_msgs/Header\n"
    "uint32 seq\n"
    "time stamp\n"
    "string frame_id\n"
    "\n" FMSE_MSG_SEPARATOR
    "MSG: sensor_msgs/PointField\n"
    "uint8 INT8    = 1\n"
    "uint8 UINT8   = 2\n"
    "uint8 INT16   = 3\n"
    "uint8 UINT16  = 4\n"
    "uint8 INT32   = 5\n"
    "uint8 UINT32  = 6\n"
    "uint8 FLOAT32 = 7\n"
    "uint8 FLOAT64 = 8\n"
    "string name\n"
    "uint32 offset\n"
    "uint8  datatype\n"
    "uint32 count\n";

constexpr std::string_view kOdometryDef =
    "std_msgs/Header header\n"
    "string child_frame_id\n"
    "geometry_msgs/PoseWithCovariance pose\n"
    "geometry_msgs/TwistWithCovariance twist\n"
    "\n" FMSE_MSG_SEPARATOR
    "MSG: std_msgs/Header\n"
    "uint32 seq\n"
    "time stamp\n"
    "string frame_id\n"
    "\n" FMSE_MSG_SEPARATOR
    "MSG: geometry_msgs/PoseWithCovariance\n"
    "geometry_msgs/Pose pose\n"
    "float64[36] covariance\n"
    "\n" FMSE_MSG_SEPARATOR
    "MSG: geometry_msgs/Pose\n"
    "geometry_msgs/Point position\n"
    "geometry_msgs/Quaternion orientation\n"
    "\n" FMSE_MSG_SEPARATOR
    "MSG: geometry_msgs/Point\n"
    "float64 x\n"
    "float64 y\n"
    "float64 z\n"
    "\n" FMSE_MSG_SEPARATOR
    "MSG: geometry_msgs/Quaternion\n"
    "float64 x\n"
    "float64 y\n"
    "float64 z\n"
    "float64 w\n"
    "\n" FMSE_MSG_SEPARATOR
    "MSG: geometry_msgs/TwistWithCovariance\n"
    "geometry_msgs/Twist twist\n"
    "float64[36] covariance\n"
    "\n" FMSE_MSG_SEPARATOR
    "MSG: geometry_msgs/Twist\n"
    "geometry_msgs/Vector3 linear\n"
    "geometry_msgs/Vector3 angular\n"
    "\n" FMSE_MSG_SEPARATOR
    "MSG: geometry_msgs/Vector3\n"
    "float64 x\n"
    "float64 y\n"
    "float64 z\n";

constexpr std::string_view kNavSatFixDef =
    "std_msgs/Header header\n"
    "sensor_msgs/NavSatStatus status\n"
    "float64 latitude\n"
    "float64 longitude\n"
    "float64 altitude\n"
    "float64[9] position_covariance\n"
    "uint8 COVARIANCE_TYPE_UNKNOWN = 0\n"
    "uint8 COVARIANCE_TYPE_APPROXIMATED = 1\n"
    "uint8 COVARIANCE_TYPE_DIAGONAL_KNOWN = 2\n"
    "uint8 COVARIANCE_TYPE_KNOWN = 3\n"
    "uint8 position_covariance_type\n"
    "\n" FMSE_MSG_SEPARATOR
    "MSG: std_msgs/Header\n"
    "uint32 seq\n"
    "time stamp\n"
    "string frame_id\n"
    "\n" FMSE_MSG_SEPARATOR
    "MSG: sensor_msgs/NavSatStatus\n"
    "int8 STATUS_NO_FIX =  -1\n"
    "int8 STATUS_FIX =      0\n"
    "int8 STATUS_SBAS_FIX = 1\n"
    "int8 STATUS_GBAS_FIX = 2\n"
    "int8 status\n"
    "uint16 SERVICE_GPS =     1\n"
    "uint16 SERVICE_GLONASS = 2\n"
    "uint16 SERVICE_COMPASS = 4\n"
    "uint16 SERVICE_GALILEO = 8\n"
    "uint16 service\n";

constexpr std::string_view kTfMessageDef =
    "geometry_msgs/TransformStamped[] transforms\n"
    "\n" FMSE_MSG_SEPARATOR
    "MSG: geometry_msgs/TransformStamped\n"
    "std_msgs/Header header\n"
    "string child_frame_id\n"
    "geometry_msgs/Transform transform\n"
    "\n" FMSE_MSG_SEPARATOR
    "MSG: std_msgs/Header\n"
    "uint32 seq\n"
    "time stamp\n"
    "string frame_id\n"
    "\n" FMSE_MSG_SEPARATOR
    "MSG: geometry_msgs/Transform\n"
    "geometry_msgs/Vector3 translation\n"
    "geometry_msgs/Quaternion rotation\n"
    "\n" FMSE_MSG_SEPARATOR
    "MSG: geometry_msgs/Vector3\n"
    "float64 x\n"
    "float64 y\n"
    "float64 z\n"
    "\n" FMSE_MSG_SEPARATOR
    "MSG: geometry_msgs/Quaternion\n"
    "float64 x\n"
    "float64 y\n"
    "float64 z\n"
    "float64 w\n";

#undef FMSE_MSG_SEPARATOR

const MessageType kTypes[] = {
    {"sensor_msgs/Image", "060021388200f6f0f447d0fcd9c64743", kImageDef},
    {"sensor_msgs/PointCloud2", "1158d486dd51d683ce2f1be655c3c181", kPointCloud2Def},
    {"nav_msgs/Odometry", "cd5e73d190d741a2f92e81eda573aca7", kOdometryDef},
    {"sensor_msgs/NavSatFix", "2d3a8cd499b9b4a0249fb98fd05cfa48", kNavSatFixDef},
    {"tf2_msgs/TFMessage", "94810edda583a504dfda3829e70d7eec", kTfMessageDef},
};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

class Buffer {
 public:
  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u16(std::uint16_t v) { raw(&v, 2); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }
  void time(RosTime t) {
    u32(t.sec);
    u32(t.nsec);
  }
  void str(std::string_view s) {
    u32(checked_u32(s.size()));
    raw(s.data(), s.size());
  }
  void blob(std::span<const std::uint8_t> b) {
    u32(checked_u32(b.size()));
    raw(b.data(), b.size());
  }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes.insert(bytes.end(), b, b + n);
  }
  void header(std::uint32_t seq, Timestamp stamp, std::string_view frame_id) {
    u32(seq);
    time(to_ros_time(stamp));
    str(frame_id);
  }

  static std::uint32_t checked_u32(std::size_t n) {
    if (n > std::numeric_limits<std::uint32_t>::max()) throw Error(ErrorCode::OutOfRange, "field exceeds 4 GiB");
    return static_cast<std::uint32_t>(n);
  }

  std::vector<std::uint8_t> bytes;
};

std::string_view encoding_name(PixelEncoding e) {
  switch (e) {
    case PixelEncoding::Rgb8: return "rgb8";
    case PixelEncoding::Bgr8: return "bgr8";
    case PixelEncoding::Mono8: return "mono8";
  }
  throw Error(ErrorCode::UnsupportedEncoding, "pixel encoding " + std::to_string(static_cast<int>(e)));
}

}  // namespace

const MessageType& message_type(MessageKind kind) { return kTypes[static_cast<int>(kind)]; }

MessageKind message_kind(Modality modality) {
  switch (modality) {
    case Modality::Camera: return MessageKind::Image;
    case Modality::Lidar: return MessageKind::PointCloud2;
    case Modality::Ins: return MessageKind::Odometry;
    case Modality::Gnss: return MessageKind::NavSatFix;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown modality");
}

std::string default_topic(const SensorId& id) {
  std::string_view name = id.name;
  auto strip = [&name](std::string_view prefix) {
    if (name.substr(0, prefix.size()) == prefix) name.remove_prefix(prefix.size());
  };
  strip("TOWER_");
  const std::string modality = lower(to_string(id.modality));
  switch (id.modality) {
    case Modality::Camera:
      strip("CAMERA_");
      strip("CAM_");
      break;
    case Modality::Lidar: strip("LIDAR_"); break;
    default: break;
  }
  std::string topic = "/" + lower(to_string(id.agent)) + "/" + modality;
  const std::string rest = lower(name);
  if (!rest.empty() && rest != modality) topic += "/" + rest;
  return topic;
}

std::string sensor_frame_id(const SensorId& id) { return lower(to_string(id.agent)) + "/" + lower(id.name); }

TopicMap TopicMap::defaults(const DatasetMeta& meta) {
  TopicMap m;
  for (const auto& s : meta.sensor_registry) m.set(s.id, default_topic(s.id));
  return m;
}

void TopicMap::set(const SensorId& id, std::string topic) { topics_[id] = std::move(topic); }

const std::string* TopicMap::find(const SensorId& id) const {
  auto it = topics_.find(id);
  return it == topics_.end() ? nullptr : &it->second;
}

void TopicMap::validate() const {
  std::set<std::string_view> seen;
  for (const auto& [id, topic] : topics_) {
    if (topic.size() < 2 || topic.front() != '/') {
      throw Error(ErrorCode::InvalidArgument, "topic for " + to_string(id) + " must start with '/': \"" + topic + "\"");
    }
    if (!seen.insert(topic).second) throw Error(ErrorCode::InvalidArgument, "duplicate topic " + topic);
  }
}

TopicMap TopicMap::from_json(const nlohmann::json& j, const DatasetMeta& meta) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "topic map must be a JSON object");
  TopicMap m = defaults(meta);
  for (const auto& [key, value] : j.items()) {
    if (!value.is_string()) throw Error(ErrorCode::InvalidArgument, "topic for " + key + " must be a string");
    const auto id = parse_sensor_id(key);
    if (!id) throw Error(ErrorCode::InvalidArgument, "bad sensor id \"" + key + "\"");
    const SensorSpec* spec = meta.find_sensor(id->agent, id->name);
    if (spec == nullptr) throw Error(ErrorCode::UnregisteredSensor, key);
    m.set(spec->id, value.get<std::string>());
  }
  m.validate();
  return m;
}

nlohmann::json TopicMap::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [id, topic] : topics_) j[to_string(id)] = topic;
  return j;
}

RosTime to_ros_time(Timestamp ns) {
  const std::uint64_t sec = ns / 1'000'000'000ULL;
  if (sec > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::OutOfRange, "timestamp " + std::to_string(ns) + " exceeds 32-bit seconds");
  }
  return {static_cast<std::uint32_t>(sec), static_cast<std::uint32_t>(ns % 1'000'000'000ULL)};
}

std::vector<std::uint8_t> serialize_image_message(const CameraImage& image, std::string_view frame_id,
                                                  std::uint32_t seq) {
  const std::string_view enc = encoding_name(image.encoding);
  validate(image);
  Buffer b;
  b.header(seq, image.timestamp, frame_id);
  b.u32(image.height);
  b.u32(image.width);
  b.str(enc);
  b.u8(0);
  b.u32(Buffer::checked_u32(std::size_t{image.width} * channels(image.encoding)));
  b.blob(image.pixels);
  return std::move(b.bytes);
}

std::vector<std::uint8_t> serialize_pointcloud_message(const PointCloud& cloud, std::string_view frame_id,
                                                       std::uint32_t seq) {
  constexpr std::uint8_t kUint32 = 6;
  constexpr std::uint8_t kFloat32 = 7;
  struct Field {
    std::string_view name;
    std::uint32_t offset;
    std::uint8_t type;
  };
  constexpr Field kFields[] = {
      {"x", 0, kFloat32}, {"y", 4, kFloat32}, {"z", 8, kFloat32}, {"intensity", 12, kFloat32}, {"t", 16, kUint32}};
  Buffer b;
  b.header(seq, cloud.frame_timestamp, frame_id);
  b.u32(1);
  b.u32(Buffer::checked_u32(cloud.points.size()));
  b.u32(std::size(kFields));
  for (const auto& f : kFields) {
    b.str(f.name);
    b.u32(f.offset);
    b.u8(f.type);
    b.u32(1);
  }
  b.u8(0);
  b.u32(sizeof(Point));
  b.u32(Buffer::checked_u32(cloud.points.size() * sizeof(Point)));
  b.u32(Buffer::checked_u32(cloud.points.size() * sizeof(Point)));
  b.raw(cloud.points.data(), cloud.points.size() * sizeof(Point));
  b.u8(1);
  return std::move(b.bytes);
}

std::vector<std::uint8_t> serialize_odometry_message(const InsRecord& ins, std::string_view child_frame_id,
                                                     std::uint32_t seq) {
  Buffer b;
  b.header(seq, ins.timestamp, "earth");
  b.str(child_frame_id);
  b.f64(ins.latitude_deg);
  b.f64(ins.longitude_deg);
  b.f64(ins.altitude_m);
  const auto& q = ins.orientation;
  b.f64(q[1]);
  b.f64(q[2]);
  b.f64(q[3]);
  b.f64(q[0]);
  for (int i = 0; i < 36; ++i) b.f64(0.0);
  for (double v : ins.velocity) b.f64(v);
  for (double v : ins.angular_rate) b.f64(v);
  for (int i = 0; i < 36; ++i) b.f64(0.0);
  return std::move(b.bytes);
}

std::vector<std::uint8_t> serialize_navsatfix_message(const InsRecord& fix, std::string_view frame_id,
                                                      std::uint32_t seq) {
  Buffer b;
  b.header(seq, fix.timestamp, frame_id);
  b.u8(0);   // STATUS_FIX
  b.u16(1);  // SERVICE_GPS
  b.f64(fix.latitude_deg);
  b.f64(fix.longitude_deg);
  b.f64(fix.altitude_m);
  for (int i = 0; i < 9; ++i) b.f64(0.0);
  b.u8(0);  // COVARIANCE_TYPE_UNKNOWN
  return std::move(b.bytes);
}

std::vector<std::uint8_t> serialize_nav_message(const InsRecord& ins, const SensorId& sensor, std::uint32_t seq) {
  if (sensor.modality == Modality::Gnss) return serialize_navsatfix_message(ins, sensor_frame_id(sensor), seq);
  if (sensor.modality == Modality::Ins) return serialize_odometry_message(ins, sensor_frame_id(sensor), seq);
  throw Error(ErrorCode::InvalidArgument, to_string(sensor) + " is not a navigation sensor");
}

std::vector<std::uint8_t> serialize_tf_message(const std::vector<StaticTransform>& transforms, Timestamp stamp) {
  Buffer b;
  b.u32(Buffer::checked_u32(transforms.size()));
  for (const auto& t : transforms) {
    b.header(0, stamp, t.parent);
    b.str(t.child);
    const Eigen::Vector3d& p = t.parent_from_child.translation();
    b.f64(p.x());
    b.f64(p.y());
    b.f64(p.z());
    const Eigen::Quaterniond q = t.parent_from_child.quaternion();
    b.f64(q.x());
    b.f64(q.y());
    b.f64(q.z());
    b.f64(q.w());
  }
  return std::move(b.bytes);
}

std::vector<StaticTransform> calibration_transforms(const DatasetMeta& meta) {
  std::vector<StaticTransform> out;
  for (const auto& [sensor, to_sensor] : meta.calibration) {
    const SensorId root = root_sensor(sensor.agent);
    if (sensor == root) continue;
    out.push_back({sensor_frame_id(root), sensor_frame_id(sensor), invert(to_sensor)});
  }
  return out;
}

namespace {

using Fields = std::vector<std::pair<std::string, std::vector<std::uint8_t>>>;

template <typename T>
std::vector<std::uint8_t> le(T v) {
  std::vector<std::uint8_t> out(sizeof(T));
  std::memcpy(out.data(), &v, sizeof(T));
  return out;
}

std::vector<std::uint8_t> text(std::string_view s) { return {s.begin(), s.end()}; }

std::vector<std::uint8_t> time_bytes(RosTime t) {
  std::vector<std::uint8_t> out = le(t.sec);
  const auto ns = le(t.nsec);
  out.insert(out.end(), ns.begin(), ns.end());
  return out;
}

std::vector<std::uint8_t> encode_fields(const Fields& fields) {
  Buffer b;
  for (const auto& [name, value] : fields) {
    b.u32(Buffer::checked_u32(name.size() + 1 + value.size()));
    b.raw(name.data(), name.size());
    b.u8('=');
    b.raw(value.data(), value.size());
  }
  return std::move(b.bytes);
}

void append_record(std::vector<std::uint8_t>& out, const Fields& fields, std::span<const std::uint8_t> data) {
  Buffer b;
  b.blob(encode_fields(fields));
  b.blob(data);
  out.insert(out.end(), b.bytes.begin(), b.bytes.end());
}

struct Connection {
  std::uint32_t id = 0;
  std::string topic;
  MessageKind kind{};
  bool latching = false;
  bool announced = false;
};

struct PendingMessage {
  std::uint32_t conn;
  Timestamp time;
  std::vector<std::uint8_t> data;
};

struct ChunkInfo {
  std::uint64_t position;
  Timestamp start;
  Timestamp end;
  std::map<std::uint32_t, std::uint32_t> counts;
};

class BagWriter {
 public:
  explicit BagWriter(std::ostream& out) : out_(out) {}

  void begin() {
    write(text(kBagVersionLine));
    header_pos_ = pos_;
    write(bag_header(0, 0, 0));
  }

  std::uint32_t connection(const std::string& topic, MessageKind kind, bool latching) {
    auto it = by_topic_.find(topic);
    if (it != by_topic_.end()) return it->second;
    const auto id = static_cast<std::uint32_t>(connections_.size());
    connections_.push_back({id, topic, kind, latching, false});
    by_topic_[topic] = id;
    return id;
  }

  void chunk(std::vector<PendingMessage> messages) {
    if (messages.empty()) return;
    std::stable_sort(messages.begin(), messages.end(),
                     [](const PendingMessage& a, const PendingMessage& b) { return a.time < b.time; });
    std::vector<std::uint8_t> data;
    std::map<std::uint32_t, std::vector<std::pair<Timestamp, std::uint32_t>>> index;
    ChunkInfo info{pos_, messages.front().time, messages.back().time, {}};
    for (auto& m : messages) {
      Connection& c = connections_[m.conn];
      if (!c.announced) {
        append_record(data, connection_header(c), connection_data(c));
        c.announced = true;
      }
      index[m.conn].emplace_back(m.time, Buffer::checked_u32(data.size()));
      append_record(data, {{"op", {0x02}}, {"conn", le(m.conn)}, {"time", time_bytes(to_ros_time(m.time))}}, m.data);
      ++info.counts[m.conn];
      ++messages_;
      ++per_topic_[c.topic];
    }
    std::vector<std::uint8_t> rec;
    append_record(rec, {{"op", {0x05}}, {"compression", text("none")}, {"size", le(Buffer::checked_u32(data.size()))}},
                  data);
    write(rec);
    for (const auto& [conn, entries] : index) {
      Buffer b;
      for (const auto& [t, offset] : entries) {
        b.time(to_ros_time(t));
        b.u32(offset);
      }
      std::vector<std::uint8_t> idx;
      append_record(idx,
                    {{"op", {0x04}},
                     {"ver", le(std::uint32_t{1})},
                     {"conn", le(conn)},
                     {"count", le(Buffer::checked_u32(entries.size()))}},
                    b.bytes);
      write(idx);
    }
    chunks_.push_back(std::move(info));
  }

  ExportSummary finish() {
    const std::uint64_t index_pos = pos_;
    std::vector<std::uint8_t> tail;
    for (const auto& c : connections_) append_record(tail, connection_header(c), connection_data(c));
    for (const auto& ci : chunks_) {
      Buffer b;
      for (const auto& [conn, count] : ci.counts) {
        b.u32(conn);
        b.u32(count);
      }
      append_record(tail,
                    {{"op", {0x06}},
                     {"ver", le(std::uint32_t{1})},
                     {"chunk_pos", le(ci.position)},
                     {"start_time", time_bytes(to_ros_time(ci.start))},
                     {"end_time", time_bytes(to_ros_time(ci.end))},
                     {"count", le(Buffer::checked_u32(ci.counts.size()))}},
                    b.bytes);
    }
    write(tail);
    const std::uint64_t end = pos_;
    out_.seekp(static_cast<std::streamoff>(header_pos_));
    if (!out_) throw Error(ErrorCode::IoFailure, "bag sink is not seekable");
    const auto header = bag_header(index_pos, Buffer::checked_u32(connections_.size()),
                                   Buffer::checked_u32(chunks_.size()));
    out_.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
    out_.seekp(static_cast<std::streamoff>(end));
    out_.flush();
    if (!out_) throw Error(ErrorCode::IoFailure, "bag write failed");

    ExportSummary s;
    s.messages = messages_;
    s.connections = connections_.size();
    s.chunks = chunks_.size();
    s.bytes = end;
    s.messages_per_topic = per_topic_;
    return s;
  }

 private:
  static std::vector<std::uint8_t> bag_header(std::uint64_t index_pos, std::uint32_t conns, std::uint32_t chunks) {
    const auto fields = encode_fields(
        {{"op", {0x03}}, {"index_pos", le(index_pos)}, {"conn_count", le(conns)}, {"chunk_count", le(chunks)}});
    const std::size_t padding = kBagHeaderRecordSize - 8 - fields.size();
    std::vector<std::uint8_t> out;
    append_record(out, {{"op", {0x03}}, {"index_pos", le(index_pos)}, {"conn_count", le(conns)}, {"chunk_count", le(chunks)}},
                  std::vector<std::uint8_t>(padding, ' '));
    return out;
  }

  static Fields connection_header(const Connection& c) {
    return {{"op", {0x07}}, {"conn", le(c.id)}, {"topic", text(c.topic)}};
  }

  static std::vector<std::uint8_t> connection_data(const Connection& c) {
    const MessageType& t = message_type(c.kind);
    Fields f{{"topic", text(c.topic)},
             {"type", text(t.name)},
             {"md5sum", text(t.md5)},
             {"message_definition", text(t.definition)}};
    if (c.latching) f.emplace_back("latching", text("1"));
    return encode_fields(f);
  }

  void write(const std::vector<std::uint8_t>& bytes) {
    out_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out_) throw Error(ErrorCode::IoFailure, "bag write failed");
    pos_ += bytes.size();
  }

  std::ostream& out_;
  std::uint64_t pos_ = 0;
  std::uint64_t header_pos_ = 0;
  std::vector<Connection> connections_;
  std::map<std::string, std::uint32_t> by_topic_;
  std::vector<ChunkInfo> chunks_;
  std::uint64_t messages_ = 0;
  std::map<std::string, std::uint64_t> per_topic_;
};

}  // namespace

ExportSummary export_bag(const DatasetReader& reader, const TopicMap& topics, std::ostream& sink,
                         const ExportOptions& options) {
  topics.validate();
  if (options.include_calibration) {
    if (options.calibration_topic.empty() || options.calibration_topic.front() != '/') {
      throw Error(ErrorCode::InvalidArgument, "calibration topic must start with '/'");
    }
    for (const auto& [id, topic] : topics.entries()) {
      if (topic == options.calibration_topic) {
        throw Error(ErrorCode::InvalidArgument, "topic " + topic + " collides with the calibration topic");
      }
    }
  }
  const DatasetMeta& meta = reader.meta();
  BagWriter writer(sink);
  writer.begin();

  bool calibration_pending = options.include_calibration && !calibration_transforms(meta).empty();
  auto topic_for = [&](const SensorId& id) -> const std::string& {
    const std::string* t = topics.find(id);
    if (t == nullptr) throw Error(ErrorCode::UnmappedSensor, "no topic for " + to_string(id));
    return *t;
  };

  FrameStream stream = reader.stream_frames();
  std::uint32_t seq = 0;
  while (auto frame = stream.next()) {
    std::vector<PendingMessage> messages;
    for (const auto& [id, record] : frame->records) {
      const std::string& topic = topic_for(id);
      if (const auto* img = std::get_if<CameraImage>(&record)) {
        messages.push_back({writer.connection(topic, MessageKind::Image, false), img->timestamp,
                            serialize_image_message(*img, sensor_frame_id(id), seq++)});
      } else if (const auto* cloud = std::get_if<PointCloud>(&record)) {
        messages.push_back({writer.connection(topic, MessageKind::PointCloud2, false), cloud->frame_timestamp,
                            serialize_pointcloud_message(*cloud, sensor_frame_id(id), seq++)});
      } else {
        const auto& block = std::get<InsBlock>(record);
        const std::uint32_t conn = writer.connection(topic, message_kind(id.modality), false);
        for (const auto& sample : block.records) {
          messages.push_back({conn, sample.timestamp, serialize_nav_message(sample, id, seq++)});
        }
      }
    }
    if (calibration_pending && !messages.empty()) {
      Timestamp first = messages.front().time;
      for (const auto& m : messages) first = std::min(first, m.time);
      messages.push_back({writer.connection(options.calibration_topic, MessageKind::TfMessage, true), first,
                          serialize_tf_message(calibration_transforms(meta), first)});
      // Ties keep insertion order; move the transforms ahead of same-time data.
      std::rotate(messages.begin(), messages.end() - 1, messages.end());
      calibration_pending = false;
    }
    writer.chunk(std::move(messages));
  }
  return writer.finish();
}

}  // namespace fmse
