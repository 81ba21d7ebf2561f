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
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fmse/checksum.hpp"
#include "fmse/error.hpp"
#include "fmse/types.hpp"

namespace fmse {

// ---------------------------------------------------------------------------
// On-disk layout (see FORMAT.md). All integers little-endian.

inline constexpr std::array<std::uint8_t, 4> kMagic{0x34, 0x4D, 0x53, 0x45};  // "4MSE"
inline constexpr FormatVersion kCurrentVersion{1, 0};

inline constexpr std::size_t kFileHeaderSize = 20;
inline constexpr std::size_t kRecordHeaderSize = 32;
inline constexpr std::size_t kImageSubHeaderSize = 16;
inline constexpr std::size_t kPointStride = 24;
inline constexpr std::size_t kInsStride = 112;
inline constexpr std::size_t kFrameStartFixedSize = 16;
inline constexpr std::size_t kCompletenessEntrySize = 4;
inline constexpr std::size_t kFrameEndSize = 8;
inline constexpr std::size_t kIndexEntrySize = 24;
inline constexpr std::size_t kFooterPayloadSize = 48;
inline constexpr std::size_t kFooterRecordSize = kRecordHeaderSize + kFooterPayloadSize;
inline constexpr std::uint16_t kNoSensor = 0xFFFF;
inline constexpr std::uint64_t kMaxPayloadLength = std::uint64_t{1} << 32;

enum class RecordKind : std::uint8_t { FrameStart = 1, SensorPayload = 2, FrameEnd = 3, Index = 4, Footer = 5 };
enum class PayloadType : std::uint8_t { None = 0, Image = 1, PointCloud = 2, InsBlock = 3 };

std::string_view to_string(RecordKind k);

struct FileHeader {
  FormatVersion version;
  std::uint64_t meta_length = 0;
  std::uint32_t meta_checksum = 0;
};

struct RecordHeader {
  RecordKind kind = RecordKind::FrameStart;
  PayloadType payload_type = PayloadType::None;
  std::uint8_t flags = 0;
  std::uint16_t sensor = kNoSensor;
  Timestamp timestamp = 0;
  std::uint64_t payload_length = 0;
  std::uint32_t payload_checksum = 0;
  std::uint32_t header_checksum = 0;
};

std::array<std::byte, kRecordHeaderSize> encode_record_header(const RecordHeader& h);
/// Decodes without judging the header checksum; see header_checksum_ok().
RecordHeader decode_record_header(std::span<const std::byte, kRecordHeaderSize> bytes);
std::uint32_t compute_header_checksum(std::span<const std::byte, kRecordHeaderSize> bytes);

struct IndexEntry {
  std::uint64_t frame_index = 0;
  /// Offset of the frame's FRAME_START record.
  std::uint64_t byte_offset = 0;
  Timestamp reference_timestamp = 0;

  bool operator==(const IndexEntry&) const = default;
};

struct IntegrityFailure {
  std::optional<std::uint64_t> frame_index;
  /// Unset for structural records (frame markers, index, footer, file digest).
  std::optional<SensorId> sensor;
  std::string record;
  std::uint64_t byte_offset = 0;
  std::string expected_checksum;
  std::string actual_checksum;
};

struct IntegrityReport {
  bool ok = true;
  std::uint64_t frames_checked = 0;
  std::vector<IntegrityFailure> failures;
  bool file_digest_checked = false;
  bool file_digest_match = false;
};

/// Thrown by frame reads when a record inside one frame fails its checksum.
class FrameChecksumError : public Error {
 public:
  FrameChecksumError(std::uint64_t frame_index, std::optional<SensorId> sensor, const std::string& message)
      : Error(ErrorCode::ChecksumMismatch, message), frame_index_(frame_index), sensor_(std::move(sensor)) {}
  std::uint64_t frame_index() const { return frame_index_; }
  const std::optional<SensorId>& sensor() const { return sensor_; }

 private:
  std::uint64_t frame_index_;
  std::optional<SensorId> sensor_;
};

// ---------------------------------------------------------------------------
// Byte sources.

class ByteSource {
 public:
  virtual ~ByteSource() = default;
  virtual bool seekable() const = 0;
  virtual std::optional<std::uint64_t> size() const = 0;
  /// Sequential read from the source's own cursor. Short count means EOF.
  virtual std::size_t read(std::span<std::byte> out) = 0;
  /// Positional read; safe to call concurrently. Seekable sources only.
  virtual std::size_t read_at(std::uint64_t offset, std::span<std::byte> out) const = 0;
};

std::unique_ptr<ByteSource> file_source(const std::filesystem::path& path);
/// Seekable iff the stream supports tellg/seekg. The stream must outlive the source.
std::unique_ptr<ByteSource> stream_source(std::istream& in);
std::unique_ptr<ByteSource> memory_source(std::vector<std::byte> bytes);
/// Wraps `inner` and hides seeking; used to model pipes.
std::unique_ptr<ByteSource> non_seekable(std::unique_ptr<ByteSource> inner);

// ---------------------------------------------------------------------------
// Writing.

struct WriteSummary {
  std::uint64_t frames_written = 0;
  std::uint64_t bytes_written = 0;
};

struct WriterOptions {
  FormatVersion version = kCurrentVersion;
  /// JSON object merged into the metadata document; lets newer writers add keys.
  std::string extra_meta_json;
};

/// Streams a dataset into `sink` one frame at a time.
class DatasetWriter {
 public:
  DatasetWriter(std::ostream& sink, const DatasetMeta& meta, WriterOptions options = {});
  ~DatasetWriter();
  DatasetWriter(const DatasetWriter&) = delete;
  DatasetWriter& operator=(const DatasetWriter&) = delete;

  void add_frame(const Frame& frame);
  /// Writes the index and footer. Further add_frame calls are rejected.
  WriteSummary finish();

 private:
  void emit(std::span<const std::byte> bytes);
  void emit_record(RecordHeader h, std::span<const std::byte> payload);
  void emit_record(RecordHeader h, std::span<const std::span<const std::byte>> parts);

  std::ostream& sink_;
  DatasetMeta meta_;
  Sha256 digest_;
  std::vector<IndexEntry> index_;
  std::uint64_t offset_ = 0;
  bool finished_ = false;
};

WriteSummary write_dataset(const DatasetMeta& meta, std::span<const Frame> frames, std::ostream& sink,
                           WriterOptions options = {});

// ---------------------------------------------------------------------------
// Reading.

class DatasetReader;
namespace detail {
struct Cursor;
}

/// Single-consumer forward iterator over frames.
class FrameStream {
 public:
  /// Next frame, or nullopt once exhausted. A corrupt frame throws
  /// FrameChecksumError; the stream stays positioned on the following
  /// frame, so calling next() again continues.
  std::optional<Frame> next();
  bool exhausted() const { return done_; }

 private:
  friend class DatasetReader;
  FrameStream(const DatasetReader& reader, std::unique_ptr<detail::Cursor> cursor);

  const DatasetReader* reader_;
  std::shared_ptr<detail::Cursor> cursor_;
  std::uint64_t position_ = 0;
  bool done_ = false;
};

class DatasetReader {
 public:
  /// Parses and verifies the header and metadata. On seekable sources the
  /// footer index is loaded as well.
  static DatasetReader open(std::unique_ptr<ByteSource> source);
  static DatasetReader open(const std::filesystem::path& path);

  DatasetReader(DatasetReader&&) noexcept;
  DatasetReader& operator=(DatasetReader&&) noexcept;
  ~DatasetReader();

  const DatasetMeta& meta() const { return meta_; }
  FormatVersion version() const { return header_.version; }
  bool seekable() const;
  /// Unknown on non-seekable sources.
  std::optional<std::uint64_t> frame_count() const;
  const std::vector<IndexEntry>& index() const { return index_; }

  /// On seekable sources every call starts a fresh stream at frame 0;
  /// non-seekable sources allow exactly one stream.
  FrameStream stream_frames() const;
  /// Frame at `position` in file order. Safe to call concurrently.
  Frame get_frame(std::uint64_t position) const;
  /// Recomputes every checksum. On non-seekable sources this consumes the
  /// stream and must be the first read after open().
  IntegrityReport validate() const;

 private:
  DatasetReader() = default;
  friend class FrameStream;

  std::unique_ptr<ByteSource> source_;
  FileHeader header_;
  DatasetMeta meta_;
  std::uint64_t data_offset_ = 0;
  std::vector<IndexEntry> index_;
  std::uint64_t index_offset_ = 0;
  bool has_index_ = false;
  mutable bool sequential_taken_ = false;
  /// Hash of header + meta for non-seekable validation.
  std::shared_ptr<Sha256> prefix_digest_;
};

/// Convenience for tests and tools: every frame in order.
std::vector<Frame> read_all_frames(const DatasetReader& reader);

}  // namespace fmse
