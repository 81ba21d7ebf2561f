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

#include "fmse/assembler.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <optional>

#include "fmse/error.hpp"

namespace fmse {

namespace {

struct Nearest {
  std::int64_t k = 0;
  std::int64_t delta = 0;
};

/// Nearest trigger to `t`; an exact midpoint goes to the earlier trigger.
Nearest nearest_trigger(Timestamp t, const TriggerModel& trig) {
  const auto period = static_cast<std::int64_t>(trig.period_ns);
  const std::int64_t rel = static_cast<std::int64_t>(t) - static_cast<std::int64_t>(trig.phase_ns);
  std::int64_t q = rel / period;
  std::int64_t r = rel % period;
  if (r < 0) {
    r += period;
    --q;
  }
  if (2 * r <= period) return {q, r};
  return {q + 1, r - period};
}

void check(const TriggerModel& trig, const AssemblyConfig& cfg) {
  if (trig.period_ns == 0 || trig.period_ns > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max() / 4)) {
    throw Error(ErrorCode::InvalidArgument, "trigger period must be positive");
  }
  if (!(trig.duty_cycle > 0.0 && trig.duty_cycle < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "duty cycle must lie in (0, 1)");
  }
  if (2 * cfg.tolerance_ns >= trig.period_ns) {
    throw Error(ErrorCode::InvalidArgument, "tolerance must be below half the trigger period");
  }
}

bool is_block_modality(Modality m) { return m == Modality::Ins || m == Modality::Gnss; }

Record to_record(RawRecord&& r) {
  if (auto* img = std::get_if<CameraImage>(&r)) return std::move(*img);
  return std::move(std::get<PointCloud>(r));
}

}  // namespace

const SensorId& raw_sensor(const RawRecord& r) {
  return std::visit([](const auto& v) -> const SensorId& { return v.sensor; }, r);
}

Timestamp raw_timestamp(const RawRecord& r) {
  if (const auto* img = std::get_if<CameraImage>(&r)) return img->timestamp;
  if (const auto* pc = std::get_if<PointCloud>(&r)) return pc->frame_timestamp;
  return std::get<InsSample>(r).sample.timestamp;
}

AssemblyResult assemble(std::vector<RawRecord> records, const TriggerModel& trigger, const AssemblyConfig& config) {
  check(trigger, config);
  AssemblyResult result;
  AssemblyReport& report = result.report;
  report.total_records = records.size();

  std::map<SensorId, Timestamp> last_seen;
  for (const auto& r : records) {
    const auto& id = raw_sensor(r);
    const Timestamp t = raw_timestamp(r);
    auto [it, inserted] = last_seen.try_emplace(id, t);
    if (!inserted) {
      if (t < it->second) {
        throw Error(ErrorCode::UnsortedInput, to_string(id) + " goes back in time at " + std::to_string(t));
      }
      it->second = t;
    }
  }

  const auto tol = static_cast<std::int64_t>(config.tolerance_ns);
  struct Slot {
    std::size_t record = 0;
    std::int64_t delta = 0;
  };
  // (trigger, sensor) -> winning record
  std::map<std::int64_t, std::map<SensorId, Slot>> slots;
  std::vector<std::size_t> block_samples;

  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& id = raw_sensor(records[i]);
    const Timestamp t = raw_timestamp(records[i]);
    if (is_block_modality(id.modality)) {
      block_samples.push_back(i);
      continue;
    }
    Nearest n = nearest_trigger(t, trigger);
    const bool free = config.free_running.contains(id);
    if (free) {
      if (n.k < 0) n = {0, static_cast<std::int64_t>(t) - static_cast<std::int64_t>(trigger.phase_ns)};
    } else if (n.k < 0) {
      report.orphans.push_back({id, t, "before first trigger"});
      continue;
    } else if (std::llabs(n.delta) > tol) {
      report.orphans.push_back({id, t, "outside tolerance"});
      continue;
    }
    auto& per_sensor = slots[n.k];
    auto [it, inserted] = per_sensor.try_emplace(id, Slot{i, n.delta});
    if (inserted) continue;
    // Input is sorted per sensor, so the incumbent is the earlier record and
    // keeps the slot on a tie.
    if (std::llabs(n.delta) < std::llabs(it->second.delta)) {
      report.duplicates.push_back({id, raw_timestamp(records[it->second.record]), static_cast<std::uint64_t>(n.k), t});
      it->second = Slot{i, n.delta};
    } else {
      report.duplicates.push_back(
          {id, t, static_cast<std::uint64_t>(n.k), raw_timestamp(records[it->second.record])});
    }
  }

  std::map<std::int64_t, std::size_t> frame_of_trigger;
  std::map<SensorId, std::vector<Timestamp>> assigned_times;
  for (auto& [k, per_sensor] : slots) {
    Frame f;
    f.index = static_cast<std::uint64_t>(k);
    f.reference_timestamp = trigger.instant(f.index);
    for (auto& [id, slot] : per_sensor) {
      const Timestamp t = raw_timestamp(records[slot.record]);
      if (config.free_running.contains(id)) {
        report.free_running_offsets.push_back({id, f.index, slot.delta});
      } else {
        assigned_times[id].push_back(t);
      }
      f.records.emplace(id, to_record(std::move(records[slot.record])));
      ++report.assigned;
    }
    frame_of_trigger[k] = result.frames.size();
    result.frames.push_back(std::move(f));
  }

  // INS/GNSS samples fill [reference - period/2, reference + period/2).
  const auto period = static_cast<std::int64_t>(trigger.period_ns);
  for (std::size_t i : block_samples) {
    auto& s = std::get<InsSample>(records[i]);
    const std::int64_t rel =
        static_cast<std::int64_t>(s.sample.timestamp) - static_cast<std::int64_t>(trigger.phase_ns) + period / 2;
    std::int64_t k = rel / period;
    if (rel % period < 0) --k;
    const auto it = frame_of_trigger.find(k);
    if (rel < 0 || it == frame_of_trigger.end()) {
      report.orphans.push_back({s.sensor, s.sample.timestamp, "no frame for sample"});
      continue;
    }
    Frame& f = result.frames[it->second];
    auto [rit, inserted] = f.records.try_emplace(s.sensor, InsBlock{s.sensor, {}});
    std::get<InsBlock>(rit->second).records.push_back(s.sample);
    ++report.assigned;
  }

  for (auto& f : result.frames) {
    IncompleteFrame gap{f.index, {}};
    for (const auto& id : config.required) {
      const bool present = f.records.contains(id);
      f.completeness[id] = present;
      if (!present) gap.missing.push_back(id);
    }
    if (!gap.missing.empty()) report.incomplete_frames.push_back(std::move(gap));
  }
  report.frames_built = result.frames.size();

  for (const auto& [id, times] : assigned_times) {
    if (times.size() < 10) continue;
    try {
      report.drift_ppm[id] = drift_ppm(times, trigger);
    } catch (const Error&) {
      // Fewer than two distinct triggers; no slope to report.
    }
  }
  return result;
}

double drift_ppm(std::span<const Timestamp> timestamps, const TriggerModel& trigger) {
  if (timestamps.size() < 10) {
    throw Error(ErrorCode::InsufficientSamples, "drift estimate needs at least 10 samples");
  }
  if (trigger.period_ns == 0) throw Error(ErrorCode::InvalidArgument, "trigger period must be positive");
  // Center on the first sample to keep the sums well conditioned.
  const Nearest first = nearest_trigger(timestamps.front(), trigger);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(timestamps.size());
  for (Timestamp t : timestamps) {
    const Nearest e = nearest_trigger(t, trigger);
    const double x = static_cast<double>(e.k - first.k);
    const double y = static_cast<double>(e.delta);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double var = sxx - sx * sx / n;
  if (!(var > 0.0)) throw Error(ErrorCode::InsufficientSamples, "samples cover a single trigger");
  const double slope = (sxy - sx * sy / n) / var;
  return slope / static_cast<double>(trigger.period_ns) * 1e6;
}

std::map<SensorId, double> drift_report(const std::map<SensorId, std::vector<Timestamp>>& series,
                                        const TriggerModel& trigger) {
  std::map<SensorId, double> out;
  for (const auto& [id, ts] : series) out[id] = drift_ppm(ts, trigger);
  return out;
}

nlohmann::json report_to_json(const AssemblyReport& report) {
  using nlohmann::json;
  json orphans = json::array();
  for (const auto& o : report.orphans) {
    orphans.push_back({{"sensor", to_string(o.sensor)}, {"timestamp_ns", o.timestamp}, {"reason", o.reason}});
  }
  json dups = json::array();
  for (const auto& d : report.duplicates) {
    dups.push_back({{"sensor", to_string(d.sensor)},
                    {"timestamp_ns", d.timestamp},
                    {"frame_index", d.frame_index},
                    {"kept_timestamp_ns", d.kept_timestamp}});
  }
  json incomplete = json::array();
  for (const auto& f : report.incomplete_frames) {
    json missing = json::array();
    for (const auto& id : f.missing) missing.push_back(to_string(id));
    incomplete.push_back({{"frame_index", f.frame_index}, {"missing", missing}});
  }
  json offsets = json::array();
  for (const auto& o : report.free_running_offsets) {
    offsets.push_back({{"sensor", to_string(o.sensor)}, {"frame_index", o.frame_index}, {"delta_ns", o.delta_ns}});
  }
  json drift = json::object();
  for (const auto& [id, ppm] : report.drift_ppm) drift[to_string(id)] = ppm;
  return json{{"frames_built", report.frames_built},
              {"total_records", report.total_records},
              {"assigned", report.assigned},
              {"orphans", orphans},
              {"duplicates", dups},
              {"incomplete_frames", incomplete},
              {"free_running_offsets", offsets},
              {"drift_ppm", drift}};
}

}  // namespace fmse
