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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "fmse/codec.hpp"
#include "fmse/transform.hpp"
#include "fmse/types.hpp"

namespace fmse::testing {

using Rng = std::mt19937_64;

/// Full vehicle and tower registry with the published camera and LiDAR
/// characteristics, intrinsics for every camera and synthetic extrinsics.
DatasetMeta realistic_meta();

/// Vehicle: LIDAR_TOP, FRONT_LEFT, INS. Tower: TOWER_LIDAR_TOP, TOWER_CAM_1.
/// Small intrinsics (64x40) so image payloads stay tiny.
DatasetMeta small_meta();

RigidTransform random_transform(Rng& rng, double max_translation = 5.0);
Eigen::Vector3d random_unit(Rng& rng);

CameraImage random_image(Rng& rng, const SensorId& id, Timestamp t, std::uint32_t w, std::uint32_t h,
                         PixelEncoding enc = PixelEncoding::Rgb8);
PointCloud random_cloud(Rng& rng, const SensorId& id, Timestamp t, std::size_t n);
InsRecord random_ins(Rng& rng, Timestamp t);
InsBlock random_ins_block(Rng& rng, const SensorId& id, Timestamp first, std::size_t n, std::uint64_t step_ns);

struct FrameShape {
  std::size_t max_points = 200;
  std::uint32_t image_width = 8;
  std::uint32_t image_height = 6;
  std::size_t ins_samples = 3;
  /// Probability that a registered sensor is missing from a frame.
  double drop_probability = 0.0;
};

/// One record per registered sensor (subject to drops) around `reference`.
Frame random_frame(Rng& rng, const DatasetMeta& meta, std::uint64_t index, Timestamp reference,
                   const FrameShape& shape = {});
std::vector<Frame> random_frames(Rng& rng, const DatasetMeta& meta, std::size_t count, const FrameShape& shape = {});

std::vector<std::byte> write_bytes(const DatasetMeta& meta, std::span<const Frame> frames);
DatasetReader open_bytes(std::vector<std::byte> bytes, bool seekable = true);

/// One record as located by walking the documented byte layout.
struct RecordSpan {
  std::size_t offset = 0;
  std::uint8_t kind = 0;
  std::uint16_t sensor = 0;
  std::size_t payload_offset = 0;
  std::size_t payload_length = 0;
};

/// Walks a pristine file record by record (independent of the reader).
std::vector<RecordSpan> layout_records(std::span<const std::byte> file);

/// Fresh path under the build's temporary directory.
std::filesystem::path temp_path(const std::string& name);
void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes);
std::vector<std::byte> read_file(const std::filesystem::path& path);

}  // namespace fmse::testing
