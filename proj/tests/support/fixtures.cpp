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

#include "fixtures.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Geometry>

#include "fmse/error.hpp"

namespace fmse::testing {

namespace {

SensorSpec spec(Agent agent, std::string name, std::uint32_t w, std::uint32_t h, double hz, double hfov, double vfov,
                std::map<std::string, std::string> details = {}) {
  SensorSpec s;
  s.id = SensorId{agent, name, modality_for_name(name)};
  s.resolution = {w, h};
  s.frequency_hz = hz;
  s.hfov_deg = hfov;
  s.vfov_deg = vfov;
  s.details = std::move(details);
  return s;
}

CameraIntrinsics intrinsics_for_fov(std::uint32_t w, std::uint32_t h, double hfov_deg, double k1) {
  CameraIntrinsics in;
  in.width = w;
  in.height = h;
  in.fx = w / (2.0 * std::tan(hfov_deg * std::numbers::pi / 360.0));
  in.fy = in.fx;
  in.cx = w / 2.0;
  in.cy = h / 2.0;
  in.distortion = {k1, k1 / 10.0, 0.0005, -0.0003, 0.0};
  return in;
}

RigidTransform mount(double yaw_deg, const Eigen::Vector3d& position) {
  // Camera optical frame (z forward, x right, y down) looking along the
  // root's x axis rotated by yaw, mounted at `position` in root coordinates.
  Eigen::Matrix3d optical_to_body;
  optical_to_body << 0, 0, 1, -1, 0, 0, 0, -1, 0;
  const Eigen::Matrix3d yaw = Eigen::AngleAxisd(yaw_deg * std::numbers::pi / 180.0, Eigen::Vector3d::UnitZ()).matrix();
  const RigidTransform sensor_to_root(yaw * optical_to_body, position);
  return invert(sensor_to_root);
}

}  // namespace

DatasetMeta realistic_meta() {
  DatasetMeta m;
  m.data_drop_id = "drop-synthetic-001";
  m.agents = {Agent::Vehicle, Agent::Tower};
  m.creation_time = 1'700'000'000'000'000'000ULL;
  const std::map<std::string, std::string> narrow{{"model", "a2A1920-51gcPRO"}, {"exposure_us", "800"},
                                                  {"focal_length_mm", "6"}, {"aperture", "f/4.0"}};
  const std::map<std::string, std::string> wide{{"model", "a2A1920-51gcPRO"}, {"exposure_us", "800"},
                                                {"focal_length_mm", "4"}, {"aperture", "f/4.0"}};
  const std::pair<const char*, double> vehicle_cams[] = {{"STEREO_LEFT", 0},  {"STEREO_RIGHT", 0},
                                                         {"BACK_LEFT", 150},  {"BACK_RIGHT", -150},
                                                         {"FRONT_LEFT", 30},  {"FRONT_RIGHT", -30}};
  for (const auto& [name, yaw] : vehicle_cams) {
    const bool front = std::string_view(name).starts_with("FRONT");
    m.sensor_registry.push_back(spec(Agent::Vehicle, name, 1920, 1200, 10, front ? 79.1 : 57.6, front ? 54.3 : 37.7,
                                     front ? wide : narrow));
  }
  m.sensor_registry.push_back(spec(Agent::Vehicle, "LIDAR_TOP", 1024, 128, 10, 360, 45, {{"model", "OS1"}, {"range_m", "90"}}));
  m.sensor_registry.push_back(spec(Agent::Vehicle, "LIDAR_LEFT", 1024, 128, 10, 360, 90, {{"model", "OS0"}, {"range_m", "35"}}));
  m.sensor_registry.push_back(spec(Agent::Vehicle, "LIDAR_RIGHT", 1024, 128, 10, 360, 90, {{"model", "OS0"}, {"range_m", "35"}}));
  m.sensor_registry.push_back(spec(Agent::Vehicle, "INS", 0, 0, 1000, 360, 180, {{"model", "3DM-GQ7"}}));
  m.sensor_registry.push_back(spec(Agent::Tower, "TOWER_CAM_1", 1920, 1200, 10, 57.6, 37.7, narrow));
  m.sensor_registry.push_back(spec(Agent::Tower, "TOWER_CAM_2", 1920, 1200, 10, 57.6, 37.7, narrow));
  m.sensor_registry.push_back(spec(Agent::Tower, "TOWER_LIDAR_1", 400, 51, 10, 70, 30, {{"model", "Cube 1 Outdoor"}}));
  m.sensor_registry.push_back(spec(Agent::Tower, "TOWER_LIDAR_2", 400, 51, 10, 70, 30, {{"model", "Cube 1 Outdoor"}}));
  m.sensor_registry.push_back(spec(Agent::Tower, "TOWER_LIDAR_TOP", 1024, 128, 10, 360, 22.5, {{"model", "OS2"}}));
  m.sensor_registry.push_back(spec(Agent::Tower, "GNSS", 0, 0, 1, 360, 180, {{"model", "C099-F9P"}}));

  for (const auto& s : m.sensor_registry) {
    if (s.id.modality == Modality::Camera) {
      m.intrinsics[s.id] = intrinsics_for_fov(s.resolution[0], s.resolution[1], s.hfov_deg, -0.12);
    }
  }
  const Eigen::Vector3d up(0, 0, -0.4);
  for (const auto& [name, yaw] : vehicle_cams) {
    const double y = std::string_view(name).ends_with("LEFT") ? 0.5 : -0.5;
    m.calibration[SensorId{Agent::Vehicle, name, Modality::Camera}] = mount(yaw, Eigen::Vector3d(0.8, y, 0) + up);
  }
  m.calibration[root_sensor(Agent::Vehicle)] = RigidTransform::identity();
  m.calibration[SensorId{Agent::Vehicle, "LIDAR_LEFT", Modality::Lidar}] =
      invert(RigidTransform::from_axis_angle(Eigen::Vector3d::UnitX(), 0.3, Eigen::Vector3d(1.9, 0.8, -0.6)));
  m.calibration[SensorId{Agent::Vehicle, "LIDAR_RIGHT", Modality::Lidar}] =
      invert(RigidTransform::from_axis_angle(Eigen::Vector3d::UnitX(), -0.3, Eigen::Vector3d(1.9, -0.8, -0.6)));
  m.calibration[SensorId{Agent::Vehicle, "INS", Modality::Ins}] =
      invert(RigidTransform::from_translation(Eigen::Vector3d(-0.5, 0, -1.3)));
  m.calibration[root_sensor(Agent::Tower)] = RigidTransform::identity();
  m.calibration[SensorId{Agent::Tower, "TOWER_CAM_1", Modality::Camera}] = mount(-20, Eigen::Vector3d(0, 0, -1.5));
  m.calibration[SensorId{Agent::Tower, "TOWER_CAM_2", Modality::Camera}] = mount(20, Eigen::Vector3d(0, 0, -1.5));
  m.calibration[SensorId{Agent::Tower, "TOWER_LIDAR_1", Modality::Lidar}] =
      invert(RigidTransform::from_axis_angle(Eigen::Vector3d::UnitZ(), -0.35, Eigen::Vector3d(0, 0.1, -1.4)));
  m.calibration[SensorId{Agent::Tower, "TOWER_LIDAR_2", Modality::Lidar}] =
      invert(RigidTransform::from_axis_angle(Eigen::Vector3d::UnitZ(), 0.35, Eigen::Vector3d(0, -0.1, -1.4)));
  validate(m);
  return m;
}

DatasetMeta small_meta() {
  DatasetMeta m;
  m.data_drop_id = "drop-small";
  m.agents = {Agent::Vehicle, Agent::Tower};
  m.creation_time = 1'700'000'000'000'000'000ULL;
  m.sensor_registry.push_back(spec(Agent::Vehicle, "LIDAR_TOP", 1024, 128, 10, 360, 45));
  m.sensor_registry.push_back(spec(Agent::Vehicle, "FRONT_LEFT", 64, 40, 10, 79.1, 54.3));
  m.sensor_registry.push_back(spec(Agent::Vehicle, "INS", 0, 0, 1000, 360, 180));
  m.sensor_registry.push_back(spec(Agent::Tower, "TOWER_LIDAR_TOP", 1024, 128, 10, 360, 22.5));
  m.sensor_registry.push_back(spec(Agent::Tower, "TOWER_CAM_1", 64, 40, 10, 57.6, 37.7));
  for (const auto& s : m.sensor_registry) {
    if (s.id.modality == Modality::Camera) {
      m.intrinsics[s.id] = intrinsics_for_fov(s.resolution[0], s.resolution[1], s.hfov_deg, 0.0);
    }
  }
  m.calibration[root_sensor(Agent::Vehicle)] = RigidTransform::identity();
  m.calibration[SensorId{Agent::Vehicle, "FRONT_LEFT", Modality::Camera}] = mount(0, Eigen::Vector3d(0.8, 0.5, -0.4));
  m.calibration[SensorId{Agent::Vehicle, "INS", Modality::Ins}] =
      invert(RigidTransform::from_translation(Eigen::Vector3d(-0.5, 0, -1.3)));
  m.calibration[root_sensor(Agent::Tower)] = RigidTransform::identity();
  m.calibration[SensorId{Agent::Tower, "TOWER_CAM_1", Modality::Camera}] = mount(0, Eigen::Vector3d(0, 0, -1.5));
  validate(m);
  return m;
}

Eigen::Vector3d random_unit(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector3d v;
  do {
    v = Eigen::Vector3d(n(rng), n(rng), n(rng));
  } while (v.norm() < 1e-6);
  return v.normalized();
}

RigidTransform random_transform(Rng& rng, double max_translation) {
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> t(-max_translation, max_translation);
  return RigidTransform::from_axis_angle(random_unit(rng), angle(rng), Eigen::Vector3d(t(rng), t(rng), t(rng)));
}

CameraImage random_image(Rng& rng, const SensorId& id, Timestamp t, std::uint32_t w, std::uint32_t h,
                         PixelEncoding enc) {
  CameraImage img;
  img.sensor = id;
  img.timestamp = t;
  img.width = w;
  img.height = h;
  img.encoding = enc;
  img.exposure_us = 800;
  img.pixels.resize(std::size_t{w} * h * channels(enc));
  std::uniform_int_distribution<int> byte(0, 255);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(byte(rng));
  return img;
}

PointCloud random_cloud(Rng& rng, const SensorId& id, Timestamp t, std::size_t n) {
  PointCloud c;
  c.sensor = id;
  c.frame_timestamp = t;
  c.points.resize(n);
  std::uniform_real_distribution<float> pos(-80.0f, 80.0f);
  std::uniform_real_distribution<float> inten(0.0f, 1.0f);
  std::uniform_int_distribution<std::uint32_t> dt(0, 99'999'999);
  std::uniform_int_distribution<int> ch(0, 127);
  for (auto& p : c.points) {
    p.x = pos(rng);
    p.y = pos(rng);
    p.z = pos(rng) / 8.0f;
    p.intensity = inten(rng);
    p.dt_ns = dt(rng);
    p.channel = static_cast<std::uint16_t>(ch(rng));
  }
  return c;
}

InsRecord random_ins(Rng& rng, Timestamp t) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  InsRecord r;
  r.timestamp = t;
  r.latitude_deg = 48.0 + 0.01 * u(rng);
  r.longitude_deg = 11.0 + 0.01 * u(rng);
  r.altitude_m = 500.0 + u(rng);
  const Eigen::Quaterniond q = Eigen::Quaterniond(u(rng), u(rng), u(rng), u(rng)).normalized();
  r.orientation = {q.w(), q.x(), q.y(), q.z()};
  r.velocity = {10 * u(rng), u(rng), 0.1 * u(rng)};
  r.angular_rate = {0.1 * u(rng), 0.1 * u(rng), 0.5 * u(rng)};
  return r;
}

InsBlock random_ins_block(Rng& rng, const SensorId& id, Timestamp first, std::size_t n, std::uint64_t step_ns) {
  InsBlock b;
  b.sensor = id;
  for (std::size_t i = 0; i < n; ++i) b.records.push_back(random_ins(rng, first + i * step_ns));
  return b;
}

Frame random_frame(Rng& rng, const DatasetMeta& meta, std::uint64_t index, Timestamp reference,
                   const FrameShape& shape) {
  Frame f;
  f.index = index;
  f.reference_timestamp = reference;
  std::uniform_int_distribution<std::int64_t> jitter(-2'000'000, 2'000'000);
  std::uniform_int_distribution<std::size_t> npts(0, shape.max_points);
  std::bernoulli_distribution drop(shape.drop_probability);
  for (const auto& s : meta.sensor_registry) {
    if (drop(rng)) {
      f.completeness[s.id] = false;
      continue;
    }
    const Timestamp t = static_cast<Timestamp>(static_cast<std::int64_t>(reference) + jitter(rng));
    switch (s.id.modality) {
      case Modality::Camera:
        f.records.emplace(s.id, random_image(rng, s.id, t, shape.image_width, shape.image_height));
        break;
      case Modality::Lidar: f.records.emplace(s.id, random_cloud(rng, s.id, t, npts(rng))); break;
      case Modality::Ins:
      case Modality::Gnss:
        f.records.emplace(s.id, random_ins_block(rng, s.id, reference - 50'000'000 + 1'000'000, shape.ins_samples,
                                                 1'000'000));
        break;
    }
    f.completeness[s.id] = true;
  }
  return f;
}

std::vector<Frame> random_frames(Rng& rng, const DatasetMeta& meta, std::size_t count, const FrameShape& shape) {
  std::vector<Frame> frames;
  const Timestamp base = 1'700'000'000'000'000'000ULL;
  for (std::size_t i = 0; i < count; ++i) frames.push_back(random_frame(rng, meta, i, base + i * 100'000'000ULL, shape));
  return frames;
}

std::vector<std::byte> write_bytes(const DatasetMeta& meta, std::span<const Frame> frames) {
  std::ostringstream out(std::ios::binary);
  write_dataset(meta, frames, out);
  const std::string s = out.str();
  std::vector<std::byte> bytes(s.size());
  std::memcpy(bytes.data(), s.data(), s.size());
  return bytes;
}

DatasetReader open_bytes(std::vector<std::byte> bytes, bool seekable) {
  auto src = memory_source(std::move(bytes));
  if (!seekable) src = non_seekable(std::move(src));
  return DatasetReader::open(std::move(src));
}

std::vector<RecordSpan> layout_records(std::span<const std::byte> file) {
  auto u64 = [&](std::size_t at) {
    std::uint64_t v;
    std::memcpy(&v, file.data() + at, 8);
    return v;
  };
  std::vector<RecordSpan> out;
  std::size_t at = 20 + u64(8);
  while (at + 32 <= file.size()) {
    RecordSpan r;
    r.offset = at;
    r.kind = static_cast<std::uint8_t>(file[at]);
    std::memcpy(&r.sensor, file.data() + at + 4, 2);
    r.payload_offset = at + 32;
    r.payload_length = u64(at + 16);
    out.push_back(r);
    at = r.payload_offset + r.payload_length;
  }
  if (at != file.size()) throw Error(ErrorCode::MalformedRecord, "layout walk did not end at end of file");
  return out;
}

std::filesystem::path temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "fmse-tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
}

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::vector<char> raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  std::vector<std::byte> out(raw.size());
  std::memcpy(out.data(), raw.data(), raw.size());
  return out;
}

}  // namespace fmse::testing
