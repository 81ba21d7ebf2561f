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

#include "cli.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "fmse/bag.hpp"
#include "fmse/calib_graph.hpp"
#include "fmse/codec.hpp"
#include "fmse/error.hpp"
#include "fmse/meta_json.hpp"
#include "fmse/projection.hpp"

namespace fmse::cli {

namespace {

using nlohmann::json;

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
  auto log = std::make_shared<spdlog::logger>("fmse", sink);
  log->set_pattern("[%l] %v");
  log->set_level(spdlog::level::warn);
  if (const char* env = std::getenv("FMSE_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only accept recognised ones.
    if (level != spdlog::level::off || std::string_view(env) == "off") log->set_level(level);
  }
  return log;
}

std::string describe(const Error& e) {
  std::string name(error_name(e.code()));
  for (auto& c : name) c = c == '_' ? ' ' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  std::string_view msg = e.what();
  const auto colon = msg.find(": ");
  if (colon != std::string_view::npos) msg.remove_prefix(colon + 2);
  return name + ": " + std::string(msg);
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ChecksumMismatch:
    case ErrorCode::MetaChecksumMismatch: return kExitIntegrity;
    default: return kExitUsage;
  }
}

void emit_json(std::ostream& out, const json& j) { out << canonical_dump(j) << '\n'; }

SensorId resolve_sensor(const DatasetMeta& meta, const std::string& selector) {
  if (selector.find('/') != std::string::npos) {
    const auto id = parse_sensor_id(selector);
    const SensorSpec* spec = id ? meta.find_sensor(id->agent, id->name) : nullptr;
    if (spec == nullptr) throw Error(ErrorCode::UnregisteredSensor, "unknown sensor " + selector);
    return spec->id;
  }
  std::optional<SensorId> match;
  for (const auto& s : meta.sensor_registry) {
    if (s.id.name != selector) continue;
    if (match) throw Error(ErrorCode::InvalidArgument, "sensor name " + selector + " is ambiguous; use AGENT/NAME");
    match = s.id;
  }
  if (!match) throw Error(ErrorCode::UnregisteredSensor, "unknown sensor " + selector);
  return *match;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot open " + path + " for writing");
  return f;
}

// ---------------------------------------------------------------------------

int cmd_info(const std::string& path, bool as_json, std::ostream& out) {
  const DatasetReader reader = DatasetReader::open(path);
  const DatasetMeta& meta = reader.meta();
  const auto& index = reader.index();
  const std::uint64_t frames = reader.frame_count().value_or(index.size());
  Timestamp first = 0;
  Timestamp last = 0;
  if (!index.empty()) {
    first = index.front().reference_timestamp;
    last = index.back().reference_timestamp;
  }
  if (as_json) {
    json j;
    j["format_version"] = {{"major", reader.version().major}, {"minor", reader.version().minor}};
    j["data_drop_id"] = meta.data_drop_id;
    j["creation_time_ns"] = meta.creation_time;
    j["frames"] = frames;
    j["first_timestamp_ns"] = first;
    j["last_timestamp_ns"] = last;
    j["duration_ns"] = last - first;
    json sensors = json::array();
    for (const auto& s : meta.sensor_registry) sensors.push_back(sensor_to_json(s));
    j["sensors"] = std::move(sensors);
    emit_json(out, j);
    return kExitOk;
  }
  out << "format: " << reader.version().major << '.' << reader.version().minor << '\n';
  out << "data_drop_id: " << meta.data_drop_id << '\n';
  out << "frames: " << frames << '\n';
  out << "duration_ns: " << (last - first) << '\n';
  out << "sensors: " << meta.sensor_registry.size() << '\n';
  for (const auto& s : meta.sensor_registry) {
    out << "  " << to_string(s.id) << "  " << to_string(s.id.modality) << "  " << s.resolution[0] << 'x'
        << s.resolution[1] << "  " << s.frequency_hz << " Hz  " << s.hfov_deg << '/' << s.vfov_deg << " deg\n";
  }
  return kExitOk;
}

json failure_to_json(const IntegrityFailure& f) {
  json j;
  j["frame_index"] = f.frame_index ? json(*f.frame_index) : json(nullptr);
  j["sensor"] = f.sensor ? json(to_string(*f.sensor)) : json(nullptr);
  j["record"] = f.record;
  j["byte_offset"] = f.byte_offset;
  j["expected"] = f.expected_checksum;
  j["actual"] = f.actual_checksum;
  return j;
}

int cmd_validate(const std::string& path, bool as_json, std::ostream& out) {
  const DatasetReader reader = DatasetReader::open(path);
  const IntegrityReport report = reader.validate();
  if (as_json) {
    json j;
    j["ok"] = report.ok;
    j["frames_checked"] = report.frames_checked;
    j["file_digest_checked"] = report.file_digest_checked;
    j["file_digest_match"] = report.file_digest_match;
    json failures = json::array();
    for (const auto& f : report.failures) failures.push_back(failure_to_json(f));
    j["failures"] = std::move(failures);
    emit_json(out, j);
  } else {
    out << (report.ok ? "ok" : "FAILED") << ": " << report.frames_checked << " frames checked, "
        << report.failures.size() << " failures\n";
    for (const auto& f : report.failures) {
      out << "  " << f.record;
      if (f.frame_index) out << " frame " << *f.frame_index;
      if (f.sensor) out << " sensor " << to_string(*f.sensor);
      out << " at offset " << f.byte_offset << ": expected " << f.expected_checksum << ", got " << f.actual_checksum
          << '\n';
    }
  }
  return report.ok ? kExitOk : kExitIntegrity;
}

struct ProjectArgs {
  std::string input;
  std::uint64_t frame = 0;
  std::string camera;
  std::vector<std::string> lidars;
  std::string output;
  bool distort = false;
  int point_radius = 1;
  std::optional<double> depth_min;
  std::optional<double> depth_max;
};

int cmd_project(const ProjectArgs& a, bool as_json, std::ostream& out, spdlog::logger& log) {
  const DatasetReader reader = DatasetReader::open(a.input);
  const DatasetMeta& meta = reader.meta();
  const SensorId cam = resolve_sensor(meta, a.camera);
  if (cam.modality != Modality::Camera) throw Error(ErrorCode::InvalidArgument, to_string(cam) + " is not a camera");
  auto intr_it = meta.intrinsics.find(cam);
  if (intr_it == meta.intrinsics.end()) throw Error(ErrorCode::InvalidArgument, "no intrinsics for " + to_string(cam));

  std::vector<SensorId> lidars;
  if (a.lidars.empty()) {
    for (const auto& s : meta.sensor_registry) {
      if (s.id.modality == Modality::Lidar && s.id.agent == cam.agent) lidars.push_back(s.id);
    }
  } else {
    for (const auto& sel : a.lidars) {
      const SensorId id = resolve_sensor(meta, sel);
      if (id.modality != Modality::Lidar) throw Error(ErrorCode::InvalidArgument, to_string(id) + " is not a LiDAR");
      lidars.push_back(id);
    }
  }

  const auto& index = reader.index();
  auto pos = std::find_if(index.begin(), index.end(), [&](const IndexEntry& e) { return e.frame_index == a.frame; });
  if (pos == index.end()) throw Error(ErrorCode::OutOfRange, "no frame with index " + std::to_string(a.frame));
  const Frame frame = reader.get_frame(static_cast<std::uint64_t>(pos - index.begin()));

  const auto* image = frame.find(cam) ? std::get_if<CameraImage>(frame.find(cam)) : nullptr;
  if (image == nullptr) {
    throw Error(ErrorCode::OutOfRange, "frame " + std::to_string(a.frame) + " has no image from " + to_string(cam));
  }
  const CalibrationGraph graph = CalibrationGraph::load_from_meta(meta);
  std::vector<ProjectedPoint> projected;
  json per_lidar = json::object();
  for (const auto& lidar : lidars) {
    const auto* rec = frame.find(lidar);
    const auto* cloud = rec ? std::get_if<PointCloud>(rec) : nullptr;
    if (cloud == nullptr) {
      log.warn("frame {} has no cloud from {}", a.frame, to_string(lidar));
      per_lidar[to_string(lidar)] = 0;
      continue;
    }
    const auto pts = project_cloud(*cloud, graph.transform_between(cam, lidar), intr_it->second, a.distort);
    log.info("{}: {} of {} points in view", to_string(lidar), pts.size(), cloud->points.size());
    per_lidar[to_string(lidar)] = pts.size();
    projected.insert(projected.end(), pts.begin(), pts.end());
  }

  std::vector<Rgb> colors;
  if (!projected.empty()) {
    std::vector<double> depths;
    depths.reserve(projected.size());
    for (const auto& p : projected) depths.push_back(p.depth);
    if (a.depth_min || a.depth_max) {
      const auto [lo, hi] = std::minmax_element(depths.begin(), depths.end());
      colors = colorize_depth(depths, a.depth_min.value_or(*lo), a.depth_max.value_or(*hi));
    } else {
      colors = colorize_depth(depths);
    }
  }
  const CameraImage overlay = render_overlay(*image, projected, colors, a.point_radius);
  {
    std::ofstream f = open_output(a.output);
    write_ppm(f, overlay);
  }

  if (as_json) {
    json j;
    j["frame_index"] = a.frame;
    j["camera"] = to_string(cam);
    j["points_in_view"] = projected.size();
    j["lidars"] = per_lidar;
    j["output"] = a.output;
    emit_json(out, j);
  } else {
    out << "frame " << a.frame << ": " << projected.size() << " points projected onto " << to_string(cam) << " -> "
        << a.output << '\n';
  }
  return kExitOk;
}

struct ExportArgs {
  std::string input;
  std::string bag;
  std::string topics;
  bool no_calibration = false;
};

int cmd_export(const ExportArgs& a, bool as_json, std::ostream& out) {
  const DatasetReader reader = DatasetReader::open(a.input);
  TopicMap topics = TopicMap::defaults(reader.meta());
  if (!a.topics.empty()) {
    std::ifstream f(a.topics);
    if (!f) throw Error(ErrorCode::IoFailure, "cannot read " + a.topics);
    topics = TopicMap::from_json(json::parse(f), reader.meta());
  }
  ExportOptions opts;
  opts.include_calibration = !a.no_calibration;
  std::ofstream sink = open_output(a.bag);
  const ExportSummary s = export_bag(reader, topics, sink, opts);
  if (as_json) {
    json j;
    j["messages"] = s.messages;
    j["connections"] = s.connections;
    j["chunks"] = s.chunks;
    j["bytes"] = s.bytes;
    j["messages_per_topic"] = s.messages_per_topic;
    emit_json(out, j);
  } else {
    out << "wrote " << a.bag << ": " << s.messages << " messages on " << s.connections << " topics in " << s.chunks
        << " chunks (" << s.bytes << " bytes)\n";
    for (const auto& [topic, n] : s.messages_per_topic) out << "  " << topic << ": " << n << '\n';
  }
  return kExitOk;
}

struct AssembleArgs {
  std::string input;
  std::string output;
  std::optional<std::uint64_t> period_ns;
  std::optional<std::uint64_t> phase_ns;
  std::optional<std::uint64_t> tolerance_ns;
};

int cmd_assemble(const AssembleArgs& a, bool as_json, std::ostream& out) {
  std::ifstream f(a.input);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot read " + a.input);
  RecordDump dump = dump_from_json(json::parse(f));
  if (a.period_ns) dump.trigger.period_ns = *a.period_ns;
  if (a.phase_ns) dump.trigger.phase_ns = *a.phase_ns;
  if (a.tolerance_ns) dump.config.tolerance_ns = *a.tolerance_ns;
  std::stable_sort(dump.records.begin(), dump.records.end(),
                   [](const RawRecord& x, const RawRecord& y) { return raw_timestamp(x) < raw_timestamp(y); });
  const AssemblyResult result = assemble(std::move(dump.records), dump.trigger, dump.config);
  WriteSummary written;
  {
    std::ofstream sink = open_output(a.output);
    written = write_dataset(dump.meta, result.frames, sink);
  }
  if (as_json) {
    json j = report_to_json(result.report);
    j["output"] = a.output;
    j["bytes_written"] = written.bytes_written;
    emit_json(out, j);
  } else {
    const AssemblyReport& r = result.report;
    out << "frames_built: " << r.frames_built << '\n'
        << "records: " << r.total_records << " (" << r.assigned << " assigned)\n"
        << "orphans: " << r.orphans.size() << '\n'
        << "duplicates: " << r.duplicates.size() << '\n'
        << "incomplete_frames: " << r.incomplete_frames.size() << '\n';
    for (const auto& o : r.orphans) out << "  orphan " << to_string(o.sensor) << " @" << o.timestamp << ": " << o.reason << '\n';
    for (const auto& [id, ppm] : r.drift_ppm) out << "  drift " << to_string(id) << ": " << ppm << " ppm\n";
    out << "wrote " << a.output << " (" << written.bytes_written << " bytes)\n";
  }
  return kExitOk;
}

struct SensorStats {
  std::uint64_t records = 0;
  std::uint64_t points = 0;
  std::uint64_t pixel_bytes = 0;
  std::uint64_t samples = 0;
  Timestamp first = std::numeric_limits<Timestamp>::max();
  Timestamp last = 0;
};

int cmd_stats(const std::string& path, bool as_json, std::ostream& out) {
  const DatasetReader reader = DatasetReader::open(path);
  std::map<SensorId, SensorStats> stats;
  std::uint64_t frames = 0;
  std::uint64_t incomplete = 0;
  FrameStream stream = reader.stream_frames();
  while (auto frame = stream.next()) {
    ++frames;
    if (std::any_of(frame->completeness.begin(), frame->completeness.end(), [](const auto& kv) { return !kv.second; })) {
      ++incomplete;
    }
    for (const auto& [id, rec] : frame->records) {
      SensorStats& s = stats[id];
      ++s.records;
      if (const auto* img = std::get_if<CameraImage>(&rec)) {
        s.pixel_bytes += img->pixels.size();
      } else if (const auto* cloud = std::get_if<PointCloud>(&rec)) {
        s.points += cloud->points.size();
      } else {
        s.samples += std::get<InsBlock>(rec).records.size();
      }
      const Timestamp t = record_timestamp(rec);
      s.first = std::min(s.first, t);
      s.last = std::max(s.last, t);
    }
  }
  if (as_json) {
    json j;
    j["frames"] = frames;
    j["incomplete_frames"] = incomplete;
    json sensors = json::object();
    for (const auto& [id, s] : stats) {
      sensors[to_string(id)] = {{"records", s.records},         {"points", s.points},
                                {"pixel_bytes", s.pixel_bytes}, {"samples", s.samples},
                                {"first_timestamp_ns", s.first}, {"last_timestamp_ns", s.last}};
    }
    j["sensors"] = std::move(sensors);
    emit_json(out, j);
  } else {
    out << "frames: " << frames << " (" << incomplete << " incomplete)\n";
    for (const auto& [id, s] : stats) {
      out << "  " << to_string(id) << ": " << s.records << " records";
      if (s.points) out << ", " << s.points << " points";
      if (s.pixel_bytes) out << ", " << s.pixel_bytes << " pixel bytes";
      if (s.samples) out << ", " << s.samples << " samples";
      out << '\n';
    }
  }
  return kExitOk;
}

}  // namespace

// ---------------------------------------------------------------------------
// Record dump.

namespace {

SensorId dump_sensor(const DatasetMeta& meta, const json& r) {
  const std::string key = r.at("sensor").get<std::string>();
  const auto id = parse_sensor_id(key);
  const SensorSpec* spec = id ? meta.find_sensor(id->agent, id->name) : nullptr;
  if (spec == nullptr) throw Error(ErrorCode::UnregisteredSensor, "dump record for unknown sensor " + key);
  return spec->id;
}

template <std::size_t N>
std::array<double, N> fixed(const json& j) {
  if (!j.is_array() || j.size() != N) throw Error(ErrorCode::MalformedRecord, "expected array of " + std::to_string(N));
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = j[i].get<double>();
  return out;
}

std::set<SensorId> sensor_set(const DatasetMeta& meta, const json& arr) {
  std::set<SensorId> out;
  for (const auto& s : arr) out.insert(dump_sensor(meta, json{{"sensor", s}}));
  return out;
}

}  // namespace

RecordDump dump_from_json(const json& j) {
  RecordDump d;
  d.meta = meta_from_json(j.at("meta"));
  validate(d.meta);
  if (j.contains("trigger")) {
    const json& t = j["trigger"];
    d.trigger.period_ns = t.value("period_ns", d.trigger.period_ns);
    d.trigger.phase_ns = t.value("phase_ns", d.trigger.phase_ns);
    d.trigger.duty_cycle = t.value("duty_cycle", d.trigger.duty_cycle);
  }
  if (j.contains("config")) {
    const json& c = j["config"];
    d.config.tolerance_ns = c.value("tolerance_ns", d.config.tolerance_ns);
    if (c.contains("free_running")) d.config.free_running = sensor_set(d.meta, c["free_running"]);
    if (c.contains("required")) d.config.required = sensor_set(d.meta, c["required"]);
  }
  for (const auto& r : j.at("records")) {
    const std::string type = r.at("type").get<std::string>();
    const SensorId id = dump_sensor(d.meta, r);
    const Timestamp ts = r.at("timestamp").get<Timestamp>();
    if (type == "image") {
      CameraImage img;
      img.sensor = id;
      img.timestamp = ts;
      img.width = r.at("width").get<std::uint32_t>();
      img.height = r.at("height").get<std::uint32_t>();
      const auto enc = parse_encoding(r.value("encoding", std::string("rgb8")));
      if (!enc) throw Error(ErrorCode::UnsupportedEncoding, r.value("encoding", std::string()));
      img.encoding = *enc;
      img.exposure_us = r.value("exposure_us", 0u);
      const std::size_t n = std::size_t{img.width} * img.height * channels(img.encoding);
      if (r.contains("pixels")) {
        img.pixels = r["pixels"].get<std::vector<std::uint8_t>>();
      } else {
        img.pixels.assign(n, r.value("fill", std::uint8_t{0}));
      }
      validate(img);
      d.records.emplace_back(std::move(img));
    } else if (type == "pointcloud") {
      PointCloud cloud;
      cloud.sensor = id;
      cloud.frame_timestamp = ts;
      for (const auto& p : r.at("points")) {
        if (!p.is_array() || p.size() < 3 || p.size() > 6) {
          throw Error(ErrorCode::MalformedRecord, "point must be [x, y, z, intensity?, dt_ns?, channel?]");
        }
        Point pt;
        pt.x = p[0].get<float>();
        pt.y = p[1].get<float>();
        pt.z = p[2].get<float>();
        if (p.size() > 3) pt.intensity = p[3].get<float>();
        if (p.size() > 4) pt.dt_ns = p[4].get<std::uint32_t>();
        if (p.size() > 5) pt.channel = p[5].get<std::uint16_t>();
        cloud.points.push_back(pt);
      }
      d.records.emplace_back(std::move(cloud));
    } else if (type == "ins") {
      InsRecord rec;
      rec.timestamp = ts;
      rec.latitude_deg = r.value("latitude_deg", 0.0);
      rec.longitude_deg = r.value("longitude_deg", 0.0);
      rec.altitude_m = r.value("altitude_m", 0.0);
      if (r.contains("orientation_wxyz")) rec.orientation = fixed<4>(r["orientation_wxyz"]);
      if (r.contains("velocity")) rec.velocity = fixed<3>(r["velocity"]);
      if (r.contains("angular_rate")) rec.angular_rate = fixed<3>(r["angular_rate"]);
      validate(rec);
      d.records.emplace_back(InsSample{id, rec});
    } else {
      throw Error(ErrorCode::MalformedRecord, "unknown record type \"" + type + "\"");
    }
  }
  return d;
}

json dump_to_json(const RecordDump& d) {
  json j;
  j["meta"] = meta_to_json(d.meta);
  j["trigger"] = {{"period_ns", d.trigger.period_ns}, {"phase_ns", d.trigger.phase_ns}, {"duty_cycle", d.trigger.duty_cycle}};
  json free_running = json::array();
  for (const auto& s : d.config.free_running) free_running.push_back(to_string(s));
  json required = json::array();
  for (const auto& s : d.config.required) required.push_back(to_string(s));
  j["config"] = {{"tolerance_ns", d.config.tolerance_ns}, {"free_running", free_running}, {"required", required}};
  json records = json::array();
  for (const auto& rec : d.records) {
    json r;
    r["sensor"] = to_string(raw_sensor(rec));
    r["timestamp"] = raw_timestamp(rec);
    if (const auto* img = std::get_if<CameraImage>(&rec)) {
      r["type"] = "image";
      r["width"] = img->width;
      r["height"] = img->height;
      r["encoding"] = to_string(img->encoding);
      r["exposure_us"] = img->exposure_us;
      r["pixels"] = img->pixels;
    } else if (const auto* cloud = std::get_if<PointCloud>(&rec)) {
      r["type"] = "pointcloud";
      json pts = json::array();
      for (const auto& p : cloud->points) pts.push_back({p.x, p.y, p.z, p.intensity, p.dt_ns, p.channel});
      r["points"] = std::move(pts);
    } else {
      const InsRecord& s = std::get<InsSample>(rec).sample;
      r["type"] = "ins";
      r["latitude_deg"] = s.latitude_deg;
      r["longitude_deg"] = s.longitude_deg;
      r["altitude_m"] = s.altitude_m;
      r["orientation_wxyz"] = s.orientation;
      r["velocity"] = s.velocity;
      r["angular_rate"] = s.angular_rate;
    }
    records.push_back(std::move(r));
  }
  j["records"] = std::move(records);
  return j;
}

// ---------------------------------------------------------------------------

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Inspect, validate, render and export .4mse datasets", "fmse"};
  app.require_subcommand(1);
  bool as_json = false;
  app.add_flag("--json", as_json, "Canonical JSON output");

  std::string info_path;
  auto* info = app.add_subcommand("info", "Summarize a dataset");
  info->add_option("file", info_path, "Input .4mse file")->required()->check(CLI::ExistingFile);

  std::string validate_path;
  auto* val = app.add_subcommand("validate", "Recompute every checksum");
  val->add_option("file", validate_path, "Input .4mse file")->required()->check(CLI::ExistingFile);

  ProjectArgs pa;
  auto* proj = app.add_subcommand("project", "Render LiDAR points over a camera image (PPM)");
  proj->add_option("file", pa.input, "Input .4mse file")->required()->check(CLI::ExistingFile);
  proj->add_option("--frame", pa.frame, "Frame index")->required();
  proj->add_option("--camera", pa.camera, "Camera, NAME or AGENT/NAME")->required();
  proj->add_option("--lidar", pa.lidars, "LiDAR(s) to merge; default: all of the camera's agent");
  proj->add_option("-o,--out", pa.output, "Output PPM path")->required();
  proj->add_flag("--distort", pa.distort, "Apply lens distortion to projected points");
  proj->add_option("--point-radius", pa.point_radius, "Drawn point half-size in pixels")->check(CLI::Range(0, 16));
  proj->add_option("--depth-min", pa.depth_min, "Depth mapped to the near color (m)");
  proj->add_option("--depth-max", pa.depth_max, "Depth mapped to the far color (m)");

  ExportArgs ea;
  auto* exp = app.add_subcommand("export", "Export to a rosbag v2.0 file");
  exp->add_option("file", ea.input, "Input .4mse file")->required()->check(CLI::ExistingFile);
  exp->add_option("--bag", ea.bag, "Output bag path")->required();
  exp->add_option("--topics", ea.topics, "JSON topic map {\"AGENT/NAME\": \"/topic\"}")->check(CLI::ExistingFile);
  exp->add_flag("--no-calibration", ea.no_calibration, "Skip the latched calibration transforms");

  AssembleArgs aa;
  auto* asmb = app.add_subcommand("assemble", "Assemble a JSON record dump into a .4mse file");
  asmb->add_option("dump", aa.input, "Record dump (JSON)")->required()->check(CLI::ExistingFile);
  asmb->add_option("-o,--out", aa.output, "Output .4mse path")->required();
  asmb->add_option("--period-ns", aa.period_ns, "Trigger period override");
  asmb->add_option("--phase-ns", aa.phase_ns, "Trigger phase override");
  asmb->add_option("--tolerance-ns", aa.tolerance_ns, "Assignment tolerance override");

  std::string stats_path;
  auto* st = app.add_subcommand("stats", "Per-sensor record statistics");
  st->add_option("file", stats_path, "Input .4mse file")->required()->check(CLI::ExistingFile);

  for (auto* sub : {info, val, proj, exp, asmb, st}) sub->add_flag("--json", as_json, "Canonical JSON output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  auto log = make_logger(err);
  try {
    if (*info) return cmd_info(info_path, as_json, out);
    if (*val) return cmd_validate(validate_path, as_json, out);
    if (*proj) return cmd_project(pa, as_json, out, *log);
    if (*exp) return cmd_export(ea, as_json, out);
    if (*asmb) return cmd_assemble(aa, as_json, out);
    if (*st) return cmd_stats(stats_path, as_json, out);
  } catch (const Error& e) {
    err << "error: " << describe(e) << '\n';
    return exit_code_for(e.code());
  } catch (const json::exception& e) {
    err << "error: invalid JSON: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace fmse::cli
