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
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "fmse/types.hpp"

namespace fmse {

/// Trigger instants phase + k * period, k >= 0 (scan-start of the TOP LiDAR).
struct TriggerModel {
  std::uint64_t period_ns = 100'000'000;
  Timestamp phase_ns = 0;
  /// Informational only.
  double duty_cycle = 0.5;

  Timestamp instant(std::uint64_t k) const { return phase_ns + k * period_ns; }
};

struct AssemblyConfig {
  std::uint64_t tolerance_ns = 10'000'000;
  /// Sensors that cannot be triggered; attached to the nearest trigger
  /// regardless of tolerance.
  std::set<SensorId> free_running;
  std::set<SensorId> required;
};

/// One INS/GNSS sample as it arrives from the sensor.
struct InsSample {
  SensorId sensor;
  InsRecord sample;
};

using RawRecord = std::variant<CameraImage, PointCloud, InsSample>;

const SensorId& raw_sensor(const RawRecord& r);
Timestamp raw_timestamp(const RawRecord& r);

struct Orphan {
  SensorId sensor;
  Timestamp timestamp = 0;
  std::string reason;
};

struct Duplicate {
  SensorId sensor;
  Timestamp timestamp = 0;
  std::uint64_t frame_index = 0;
  /// Timestamp of the record that won the slot.
  Timestamp kept_timestamp = 0;
};

struct IncompleteFrame {
  std::uint64_t frame_index = 0;
  std::vector<SensorId> missing;
};

struct FreeRunningOffset {
  SensorId sensor;
  std::uint64_t frame_index = 0;
  std::int64_t delta_ns = 0;
};

struct AssemblyReport {
  std::uint64_t frames_built = 0;
  std::uint64_t total_records = 0;
  std::uint64_t assigned = 0;
  std::vector<Orphan> orphans;
  std::vector<Duplicate> duplicates;
  std::vector<IncompleteFrame> incomplete_frames;
  std::vector<FreeRunningOffset> free_running_offsets;
  /// Triggered sensors with at least 10 assigned records.
  std::map<SensorId, double> drift_ppm;
};

struct AssemblyResult {
  std::vector<Frame> frames;
  AssemblyReport report;
};

/// Groups raw records into trigger-aligned frames. Records of one sensor must
/// arrive in nondecreasing timestamp order (UNSORTED_INPUT otherwise);
/// sensors may interleave freely. Frame indices are trigger numbers.
AssemblyResult assemble(std::vector<RawRecord> records, const TriggerModel& trigger, const AssemblyConfig& config);

/// Least-squares slope of (timestamp - nearest trigger) against trigger
/// index, in ppm of the period. Needs >= 10 samples spanning >= 2 triggers.
double drift_ppm(std::span<const Timestamp> timestamps, const TriggerModel& trigger);
std::map<SensorId, double> drift_report(const std::map<SensorId, std::vector<Timestamp>>& series,
                                        const TriggerModel& trigger);

nlohmann::json report_to_json(const AssemblyReport& report);

}  // namespace fmse
