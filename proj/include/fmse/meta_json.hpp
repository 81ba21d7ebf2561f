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

#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "fmse/types.hpp"

namespace fmse {

/// Canonical text form: sorted keys, no insignificant whitespace, UTF-8.
std::string canonical_dump(const nlohmann::json& j);

nlohmann::json meta_to_json(const DatasetMeta& meta);
/// Unknown keys are ignored. Throws Error(MalformedRecord) on schema errors.
DatasetMeta meta_from_json(const nlohmann::json& j);

nlohmann::json sensor_to_json(const SensorSpec& spec);
nlohmann::json intrinsics_to_json(const CameraIntrinsics& intr);
CameraIntrinsics intrinsics_from_json(const nlohmann::json& j);

/// Calibration entries as a JSON array of {sensor, modality, rotation_wxyz,
/// translation_m}. Rotations cross this boundary as unit quaternions.
nlohmann::json calibration_to_json(const std::map<SensorId, RigidTransform>& calibration);
std::map<SensorId, RigidTransform> calibration_from_json(const nlohmann::json& j);

/// Meta equality with transforms compared elementwise within `tolerance`
/// (quaternion storage is not bit-exact for matrices).
bool equivalent(const DatasetMeta& a, const DatasetMeta& b, double tolerance = 1e-12);

}  // namespace fmse
