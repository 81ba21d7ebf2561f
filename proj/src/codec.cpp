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

#include "fmse/codec.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <mutex>

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "fmse/meta_json.hpp"

namespace fmse {

// Point payloads are copied straight between memory and disk.
static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");

namespace {

using Bytes = std::vector<std::byte>;

template <typename T>
void put(Bytes& buf, T v) {
  const auto* p = reinterpret_cast<const std::byte*>(&v);
  buf.insert(buf.end(), p, p + sizeof(T));
}

template <typename T>
void put_at(std::byte* dst, T v) {
  std::memcpy(dst, &v, sizeof(T));
}

template <typename T>
T get(const std::byte* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

std::span<const std::byte> as_span(const Bytes& b) { return {b.data(), b.size()}; }

[[noreturn]] void truncated(const std::string& what) { throw Error(ErrorCode::Truncated, what); }
[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::MalformedRecord, what); }

// ----------------------------------------------------------------------------
// Sources

class FileSource final : public ByteSource {
 public:
  explicit FileSource(const std::filesystem::path& path) {
    fd_ = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
    if (fd_ < 0) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    struct stat st {};
    if (::fstat(fd_, &st) != 0) {
      ::close(fd_);
      throw Error(ErrorCode::IoFailure, "cannot stat " + path.string());
    }
    size_ = static_cast<std::uint64_t>(st.st_size);
  }
  ~FileSource() override { ::close(fd_); }

  bool seekable() const override { return true; }
  std::optional<std::uint64_t> size() const override { return size_; }

  std::size_t read(std::span<std::byte> out) override {
    const std::size_t n = read_at(cursor_, out);
    cursor_ += n;
    return n;
  }

  std::size_t read_at(std::uint64_t offset, std::span<std::byte> out) const override {
    std::size_t done = 0;
    while (done < out.size()) {
      const ssize_t n = ::pread(fd_, out.data() + done, out.size() - done, static_cast<off_t>(offset + done));
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorCode::IoFailure, "read failed");
      }
      if (n == 0) break;
      done += static_cast<std::size_t>(n);
    }
    return done;
  }

 private:
  int fd_ = -1;
  std::uint64_t size_ = 0;
  std::uint64_t cursor_ = 0;
};

class StreamSource final : public ByteSource {
 public:
  explicit StreamSource(std::istream& in) : in_(in) {
    const auto start = in_.tellg();
    if (start != std::istream::pos_type(-1) && in_.seekg(0, std::ios::end)) {
      const auto end = in_.tellg();
      in_.seekg(start);
      if (end != std::istream::pos_type(-1) && in_) {
        seekable_ = true;
        base_ = static_cast<std::uint64_t>(start);
        size_ = static_cast<std::uint64_t>(end) - base_;
      }
    }
    in_.clear();
  }

  bool seekable() const override { return seekable_; }
  std::optional<std::uint64_t> size() const override {
    return seekable_ ? std::optional<std::uint64_t>(size_) : std::nullopt;
  }

  std::size_t read(std::span<std::byte> out) override {
    if (seekable_) {
      const std::size_t n = read_at(cursor_, out);
      cursor_ += n;
      return n;
    }
    in_.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size()));
    const auto n = static_cast<std::size_t>(in_.gcount());
    if (in_.bad()) throw Error(ErrorCode::IoFailure, "stream read failed");
    return n;
  }

  std::size_t read_at(std::uint64_t offset, std::span<std::byte> out) const override {
    if (!seekable_) throw Error(ErrorCode::NotSeekable, "source does not support random access");
    std::lock_guard lock(mutex_);
    in_.clear();
    in_.seekg(static_cast<std::streamoff>(base_ + offset));
    in_.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size()));
    const auto n = static_cast<std::size_t>(in_.gcount());
    if (in_.bad()) throw Error(ErrorCode::IoFailure, "stream read failed");
    in_.clear();
    return n;
  }

 private:
  std::istream& in_;
  mutable std::mutex mutex_;
  bool seekable_ = false;
  std::uint64_t base_ = 0;
  std::uint64_t size_ = 0;
  std::uint64_t cursor_ = 0;
};

class MemorySource final : public ByteSource {
 public:
  explicit MemorySource(Bytes bytes) : bytes_(std::move(bytes)) {}

  bool seekable() const override { return true; }
  std::optional<std::uint64_t> size() const override { return bytes_.size(); }

  std::size_t read(std::span<std::byte> out) override {
    const std::size_t n = read_at(cursor_, out);
    cursor_ += n;
    return n;
  }

  std::size_t read_at(std::uint64_t offset, std::span<std::byte> out) const override {
    if (offset >= bytes_.size()) return 0;
    const std::size_t n = std::min<std::uint64_t>(out.size(), bytes_.size() - offset);
    std::memcpy(out.data(), bytes_.data() + offset, n);
    return n;
  }

 private:
  Bytes bytes_;
  std::uint64_t cursor_ = 0;
};

class NonSeekableSource final : public ByteSource {
 public:
  explicit NonSeekableSource(std::unique_ptr<ByteSource> inner) : inner_(std::move(inner)) {}
  bool seekable() const override { return false; }
  std::optional<std::uint64_t> size() const override { return std::nullopt; }
  std::size_t read(std::span<std::byte> out) override { return inner_->read(out); }
  std::size_t read_at(std::uint64_t, std::span<std::byte>) const override {
    throw Error(ErrorCode::NotSeekable, "source does not support random access");
  }

 private:
  std::unique_ptr<ByteSource> inner_;
};

}  // namespace

std::unique_ptr<ByteSource> file_source(const std::filesystem::path& path) {
  return std::make_unique<FileSource>(path);
}
std::unique_ptr<ByteSource> stream_source(std::istream& in) { return std::make_unique<StreamSource>(in); }
std::unique_ptr<ByteSource> memory_source(std::vector<std::byte> bytes) {
  return std::make_unique<MemorySource>(std::move(bytes));
}
std::unique_ptr<ByteSource> non_seekable(std::unique_ptr<ByteSource> inner) {
  return std::make_unique<NonSeekableSource>(std::move(inner));
}

// ----------------------------------------------------------------------------
// Record headers

std::string_view to_string(RecordKind k) {
  switch (k) {
    case RecordKind::FrameStart: return "FRAME_START";
    case RecordKind::SensorPayload: return "SENSOR_PAYLOAD";
    case RecordKind::FrameEnd: return "FRAME_END";
    case RecordKind::Index: return "INDEX";
    case RecordKind::Footer: return "FOOTER";
  }
  return "UNKNOWN";
}

std::uint32_t compute_header_checksum(std::span<const std::byte, kRecordHeaderSize> bytes) {
  return crc32c(bytes.first<kRecordHeaderSize - 4>());
}

std::array<std::byte, kRecordHeaderSize> encode_record_header(const RecordHeader& h) {
  std::array<std::byte, kRecordHeaderSize> b{};
  b[0] = static_cast<std::byte>(h.kind);
  b[1] = static_cast<std::byte>(h.payload_type);
  b[2] = static_cast<std::byte>(h.flags);
  put_at(b.data() + 4, h.sensor);
  put_at(b.data() + 8, h.timestamp);
  put_at(b.data() + 16, h.payload_length);
  put_at(b.data() + 24, h.payload_checksum);
  put_at(b.data() + 28, compute_header_checksum(b));
  return b;
}

RecordHeader decode_record_header(std::span<const std::byte, kRecordHeaderSize> b) {
  RecordHeader h;
  h.kind = static_cast<RecordKind>(b[0]);
  h.payload_type = static_cast<PayloadType>(b[1]);
  h.flags = static_cast<std::uint8_t>(b[2]);
  h.sensor = get<std::uint16_t>(b.data() + 4);
  h.timestamp = get<Timestamp>(b.data() + 8);
  h.payload_length = get<std::uint64_t>(b.data() + 16);
  h.payload_checksum = get<std::uint32_t>(b.data() + 24);
  h.header_checksum = get<std::uint32_t>(b.data() + 28);
  return h;
}

namespace {

std::string hex32(std::uint32_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s = "0x00000000";
  for (int i = 9; i >= 2; --i, v >>= 4) s[i] = kDigits[v & 0xF];
  return s;
}

PayloadType payload_type_for(const Record& r) {
  switch (r.index()) {
    case 0: return PayloadType::Image;
    case 1: return PayloadType::PointCloud;
    default: return PayloadType::InsBlock;
  }
}

bool modality_accepts(Modality m, PayloadType t) {
  switch (m) {
    case Modality::Camera: return t == PayloadType::Image;
    case Modality::Lidar: return t == PayloadType::PointCloud;
    case Modality::Ins:
    case Modality::Gnss: return t == PayloadType::InsBlock;
  }
  return false;
}

void encode_ins(Bytes& out, const InsRecord& r) {
  put(out, r.timestamp);
  put(out, r.latitude_deg);
  put(out, r.longitude_deg);
  put(out, r.altitude_m);
  for (double v : r.orientation) put(out, v);
  for (double v : r.velocity) put(out, v);
  for (double v : r.angular_rate) put(out, v);
}

InsRecord decode_ins(const std::byte* p) {
  InsRecord r;
  r.timestamp = get<Timestamp>(p);
  r.latitude_deg = get<double>(p + 8);
  r.longitude_deg = get<double>(p + 16);
  r.altitude_m = get<double>(p + 24);
  for (int i = 0; i < 4; ++i) r.orientation[i] = get<double>(p + 32 + 8 * i);
  for (int i = 0; i < 3; ++i) r.velocity[i] = get<double>(p + 64 + 8 * i);
  for (int i = 0; i < 3; ++i) r.angular_rate[i] = get<double>(p + 88 + 8 * i);
  return r;
}

}  // namespace

// ----------------------------------------------------------------------------
// Writer

DatasetWriter::DatasetWriter(std::ostream& sink, const DatasetMeta& meta, WriterOptions options)
    : sink_(sink), meta_(meta) {
  validate(meta_);
  meta_.format_version = options.version;
  nlohmann::json doc = meta_to_json(meta_);
  if (!options.extra_meta_json.empty()) {
    const auto extra = nlohmann::json::parse(options.extra_meta_json);
    if (!extra.is_object()) throw Error(ErrorCode::InvalidArgument, "extra metadata must be a JSON object");
    for (const auto& [k, v] : extra.items()) doc[k] = v;
  }
  const std::string text = canonical_dump(doc);
  Bytes header;
  for (auto b : kMagic) header.push_back(static_cast<std::byte>(b));
  put(header, options.version.major);
  put(header, options.version.minor);
  put(header, static_cast<std::uint64_t>(text.size()));
  put(header, crc32c(text));
  emit(as_span(header));
  emit(std::as_bytes(std::span(text)));
}

DatasetWriter::~DatasetWriter() = default;

void DatasetWriter::emit(std::span<const std::byte> bytes) {
  sink_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!sink_) throw Error(ErrorCode::IoFailure, "write to sink failed");
  digest_.update(bytes);
  offset_ += bytes.size();
}

void DatasetWriter::emit_record(RecordHeader h, std::span<const std::byte> payload) {
  const std::span<const std::byte> parts[] = {payload};
  emit_record(h, parts);
}

void DatasetWriter::emit_record(RecordHeader h, std::span<const std::span<const std::byte>> parts) {
  Crc32c crc;
  std::uint64_t length = 0;
  for (const auto& p : parts) {
    crc.update(p);
    length += p.size();
  }
  if (length >= kMaxPayloadLength) throw Error(ErrorCode::InvalidArgument, "record payload exceeds 4 GiB");
  h.payload_length = length;
  h.payload_checksum = crc.value();
  const auto head = encode_record_header(h);
  emit(head);
  for (const auto& p : parts) emit(p);
}

void DatasetWriter::add_frame(const Frame& frame) {
  if (finished_) throw Error(ErrorCode::InvalidArgument, "writer already finished");
  if (!index_.empty() && frame.index <= index_.back().frame_index) {
    throw Error(ErrorCode::OrderViolation, "frame " + std::to_string(frame.index) + " follows frame " +
                                               std::to_string(index_.back().frame_index));
  }
  std::vector<std::uint16_t> slots;
  for (const auto& [id, rec] : frame.records) {
    const auto slot = meta_.registry_index(id);
    if (!slot) throw Error(ErrorCode::RegistryViolation, "frame references unknown sensor " + to_string(id));
    if (record_sensor(rec) != id) {
      throw Error(ErrorCode::RegistryViolation, "record keyed by " + to_string(id) + " names sensor " +
                                                    to_string(record_sensor(rec)));
    }
    if (!modality_accepts(id.modality, payload_type_for(rec))) {
      throw Error(ErrorCode::RegistryViolation, "record type does not match modality of " + to_string(id));
    }
    if (const auto* img = std::get_if<CameraImage>(&rec)) validate(*img);
    if (const auto* pc = std::get_if<PointCloud>(&rec)) validate(*pc);
    slots.push_back(static_cast<std::uint16_t>(*slot));
  }
  for (const auto& [id, present] : frame.completeness) {
    if (!meta_.registry_index(id)) {
      throw Error(ErrorCode::RegistryViolation, "completeness references unknown sensor " + to_string(id));
    }
  }

  index_.push_back({frame.index, offset_, frame.reference_timestamp});

  Bytes start;
  put(start, frame.index);
  put(start, static_cast<std::uint32_t>(frame.records.size()));
  put(start, static_cast<std::uint32_t>(frame.completeness.size()));
  for (const auto& [id, present] : frame.completeness) {
    put(start, static_cast<std::uint16_t>(*meta_.registry_index(id)));
    put(start, static_cast<std::uint8_t>(present ? 1 : 0));
    put(start, std::uint8_t{0});
  }
  emit_record({.kind = RecordKind::FrameStart, .timestamp = frame.reference_timestamp}, as_span(start));

  std::size_t i = 0;
  for (const auto& [id, rec] : frame.records) {
    RecordHeader h{.kind = RecordKind::SensorPayload,
                   .payload_type = payload_type_for(rec),
                   .sensor = slots[i++],
                   .timestamp = record_timestamp(rec)};
    if (const auto* img = std::get_if<CameraImage>(&rec)) {
      Bytes sub;
      put(sub, img->width);
      put(sub, img->height);
      put(sub, static_cast<std::uint8_t>(img->encoding));
      sub.resize(sub.size() + 3);
      put(sub, img->exposure_us);
      const std::span<const std::byte> parts[] = {as_span(sub), std::as_bytes(std::span(img->pixels))};
      emit_record(h, parts);
    } else if (const auto* pc = std::get_if<PointCloud>(&rec)) {
      emit_record(h, std::as_bytes(std::span(pc->points)));
    } else {
      const auto& block = std::get<InsBlock>(rec);
      Bytes buf;
      buf.reserve(block.records.size() * kInsStride);
      for (const auto& r : block.records) encode_ins(buf, r);
      emit_record(h, as_span(buf));
    }
  }

  Bytes end;
  put(end, frame.index);
  emit_record({.kind = RecordKind::FrameEnd, .timestamp = frame.reference_timestamp}, as_span(end));
}

WriteSummary DatasetWriter::finish() {
  if (finished_) throw Error(ErrorCode::InvalidArgument, "writer already finished");
  finished_ = true;
  const std::uint64_t index_offset = offset_;
  Bytes idx;
  put(idx, static_cast<std::uint64_t>(index_.size()));
  for (const auto& e : index_) {
    put(idx, e.frame_index);
    put(idx, e.byte_offset);
    put(idx, e.reference_timestamp);
  }
  emit_record({.kind = RecordKind::Index}, as_span(idx));

  const auto digest = digest_.finish();
  Bytes footer;
  put(footer, index_offset);
  put(footer, static_cast<std::uint64_t>(index_.size()));
  for (auto b : digest) footer.push_back(static_cast<std::byte>(b));
  emit_record({.kind = RecordKind::Footer}, as_span(footer));
  sink_.flush();
  if (!sink_) throw Error(ErrorCode::IoFailure, "flush failed");
  return {index_.size(), offset_};
}

WriteSummary write_dataset(const DatasetMeta& meta, std::span<const Frame> frames, std::ostream& sink,
                           WriterOptions options) {
  DatasetWriter writer(sink, meta, std::move(options));
  for (const auto& f : frames) writer.add_frame(f);
  return writer.finish();
}

// ----------------------------------------------------------------------------
// Reading

namespace detail {
struct Cursor;
}

struct detail::Cursor {
  ByteSource* source = nullptr;
  bool positional = true;
  std::uint64_t offset = 0;
  Sha256* digest = nullptr;

  std::size_t read_some(std::span<std::byte> out) {
    const std::size_t n = positional ? source->read_at(offset, out) : source->read(out);
    offset += n;
    if (digest) digest->update(out.first(n));
    return n;
  }

  void read_exact(std::span<std::byte> out) {
    if (read_some(out) != out.size()) truncated("unexpected end of data at offset " + std::to_string(offset));
  }

  void skip(std::uint64_t n) {
    if (positional && !digest) {
      const auto size = source->size();
      if (size && offset + n > *size) truncated("record extends past end of file");
      offset += n;
      return;
    }
    std::array<std::byte, 64 * 1024> scratch;
    while (n > 0) {
      const auto step = static_cast<std::size_t>(std::min<std::uint64_t>(n, scratch.size()));
      read_exact(std::span(scratch).first(step));
      n -= step;
    }
  }

  /// Streams `n` payload bytes through a CRC without retaining them.
  std::uint32_t checksum(std::uint64_t n) {
    Crc32c crc;
    std::vector<std::byte> buf(static_cast<std::size_t>(std::min<std::uint64_t>(n, 1 << 20)));
    while (n > 0) {
      const auto step = static_cast<std::size_t>(std::min<std::uint64_t>(n, buf.size()));
      read_exact(std::span(buf).first(step));
      crc.update(std::span(buf).first(step));
      n -= step;
    }
    return crc.value();
  }

  RecordHeader read_header(bool& header_ok) {
    std::array<std::byte, kRecordHeaderSize> b;
    read_exact(b);
    const RecordHeader h = decode_record_header(b);
    header_ok = compute_header_checksum(b) == h.header_checksum;
    return h;
  }

  void check_length(const RecordHeader& h) const {
    if (h.payload_length >= kMaxPayloadLength) malformed("record payload length out of range");
    if (const auto size = source->size(); size && positional && offset + h.payload_length > *size) {
      truncated("record at offset " + std::to_string(offset - kRecordHeaderSize) + " extends past end of file");
    }
  }
};

namespace {

using detail::Cursor;

struct FrameReadResult {
  std::optional<Frame> frame;
  std::optional<std::string> failure;
  std::optional<SensorId> failed_sensor;
};

const SensorId& sensor_at(const DatasetMeta& meta, std::uint16_t slot) {
  if (slot >= meta.sensor_registry.size()) malformed("record references sensor slot " + std::to_string(slot));
  return meta.sensor_registry[slot].id;
}

Record decode_payload(const DatasetMeta& meta, const RecordHeader& h, Cursor& cur, bool& crc_ok) {
  const SensorId& id = sensor_at(meta, h.sensor);
  Crc32c crc;
  switch (h.payload_type) {
    case PayloadType::Image: {
      if (h.payload_length < kImageSubHeaderSize) malformed("image payload shorter than its sub-header");
      std::array<std::byte, kImageSubHeaderSize> sub;
      cur.read_exact(sub);
      crc.update(sub);
      CameraImage img;
      img.sensor = id;
      img.timestamp = h.timestamp;
      img.width = get<std::uint32_t>(sub.data());
      img.height = get<std::uint32_t>(sub.data() + 4);
      img.encoding = static_cast<PixelEncoding>(sub[8]);
      img.exposure_us = get<std::uint32_t>(sub.data() + 12);
      img.pixels.resize(static_cast<std::size_t>(h.payload_length - kImageSubHeaderSize));
      cur.read_exact(std::as_writable_bytes(std::span(img.pixels)));
      crc.update(std::as_bytes(std::span(img.pixels)));
      crc_ok = crc.value() == h.payload_checksum;
      return img;
    }
    case PayloadType::PointCloud: {
      if (h.payload_length % kPointStride != 0) malformed("point cloud payload is not a whole number of points");
      PointCloud pc;
      pc.sensor = id;
      pc.frame_timestamp = h.timestamp;
      pc.points.resize(static_cast<std::size_t>(h.payload_length / kPointStride));
      cur.read_exact(std::as_writable_bytes(std::span(pc.points)));
      crc_ok = crc32c(std::as_bytes(std::span(pc.points))) == h.payload_checksum;
      return pc;
    }
    case PayloadType::InsBlock: {
      if (h.payload_length % kInsStride != 0) malformed("INS payload is not a whole number of samples");
      Bytes buf(static_cast<std::size_t>(h.payload_length));
      cur.read_exact(buf);
      crc_ok = crc32c(as_span(buf)) == h.payload_checksum;
      InsBlock block;
      block.sensor = id;
      for (std::size_t off = 0; off < buf.size(); off += kInsStride) block.records.push_back(decode_ins(buf.data() + off));
      return block;
    }
    case PayloadType::None: break;
  }
  malformed("unknown payload type " + std::to_string(static_cast<int>(h.payload_type)));
}

/// Reads one frame group. Returns an empty frame once the INDEX/FOOTER
/// section is reached. The cursor always ends after FRAME_END, so a payload
/// checksum failure leaves the caller positioned on the next frame.
FrameReadResult read_frame(const DatasetMeta& meta, Cursor& cur) {
  FrameReadResult out;
  bool header_ok = false;
  const std::uint64_t start_offset = cur.offset;
  RecordHeader h = cur.read_header(header_ok);
  if (!header_ok) {
    throw Error(ErrorCode::ChecksumMismatch, "record header damaged at offset " + std::to_string(start_offset));
  }
  if (h.kind == RecordKind::Index || h.kind == RecordKind::Footer) return out;
  if (h.kind != RecordKind::FrameStart) malformed("expected FRAME_START at offset " + std::to_string(start_offset));
  if (h.flags != 0) malformed("reserved record flags set");
  cur.check_length(h);
  if (h.payload_length < kFrameStartFixedSize) malformed("FRAME_START payload too short");

  Bytes start(static_cast<std::size_t>(h.payload_length));
  cur.read_exact(start);
  Frame frame;
  frame.index = get<std::uint64_t>(start.data());
  frame.reference_timestamp = h.timestamp;
  const bool start_ok = crc32c(as_span(start)) == h.payload_checksum;
  if (!start_ok) out.failure = "FRAME_START payload checksum mismatch";
  if (start_ok) {
    const auto flag_count = get<std::uint32_t>(start.data() + 12);
    if (start.size() != kFrameStartFixedSize + std::size_t{flag_count} * kCompletenessEntrySize) {
      malformed("FRAME_START completeness table size mismatch");
    }
    for (std::uint32_t i = 0; i < flag_count; ++i) {
      const std::byte* e = start.data() + kFrameStartFixedSize + i * kCompletenessEntrySize;
      frame.completeness[sensor_at(meta, get<std::uint16_t>(e))] = get<std::uint8_t>(e + 2) != 0;
    }
  }

  for (;;) {
    const std::uint64_t rec_offset = cur.offset;
    h = cur.read_header(header_ok);
    if (!header_ok) {
      throw Error(ErrorCode::ChecksumMismatch, "record header damaged at offset " + std::to_string(rec_offset));
    }
    if (h.flags != 0) malformed("reserved record flags set");
    cur.check_length(h);
    if (h.kind == RecordKind::FrameEnd) {
      Bytes end(static_cast<std::size_t>(h.payload_length));
      cur.read_exact(end);
      if (crc32c(as_span(end)) != h.payload_checksum && !out.failure) out.failure = "FRAME_END payload checksum mismatch";
      break;
    }
    if (h.kind != RecordKind::SensorPayload) malformed("unexpected record inside frame at offset " + std::to_string(rec_offset));
    bool crc_ok = false;
    Record rec = decode_payload(meta, h, cur, crc_ok);
    const SensorId id = record_sensor(rec);
    if (!crc_ok) {
      if (!out.failure) {
        out.failure = "payload checksum mismatch for " + to_string(id);
        out.failed_sensor = id;
      }
      continue;
    }
    frame.records.emplace(id, std::move(rec));
  }
  out.frame = std::move(frame);
  return out;
}

Frame unwrap(FrameReadResult r, std::uint64_t expected_index) {
  if (r.failure) {
    const std::uint64_t idx = r.frame ? r.frame->index : expected_index;
    throw FrameChecksumError(idx, r.failed_sensor, "frame " + std::to_string(idx) + ": " + *r.failure);
  }
  return std::move(*r.frame);
}

std::vector<IndexEntry> parse_index(std::span<const std::byte> payload) {
  if (payload.size() < 8) malformed("INDEX payload too short");
  const auto count = get<std::uint64_t>(payload.data());
  if (payload.size() != 8 + count * kIndexEntrySize) malformed("INDEX payload size mismatch");
  std::vector<IndexEntry> entries;
  entries.reserve(static_cast<std::size_t>(count));
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::byte* p = payload.data() + 8 + i * kIndexEntrySize;
    IndexEntry e{get<std::uint64_t>(p), get<std::uint64_t>(p + 8), get<Timestamp>(p + 16)};
    if (!entries.empty() &&
        (e.frame_index <= entries.back().frame_index || e.byte_offset <= entries.back().byte_offset)) {
      malformed("INDEX entries are not strictly increasing");
    }
    entries.push_back(e);
  }
  return entries;
}

}  // namespace

FrameStream::FrameStream(const DatasetReader& reader, std::unique_ptr<Cursor> cursor)
    : reader_(&reader), cursor_(std::move(cursor)) {}

std::optional<Frame> FrameStream::next() {
  if (done_) return std::nullopt;
  const std::uint64_t offset = cursor_->offset;
  FrameReadResult r;
  try {
    r = read_frame(reader_->meta_, *cursor_);
  } catch (const FrameChecksumError&) {
    throw;
  } catch (const Error& e) {
    // A damaged record header leaves the cursor unaligned; resynchronize on
    // the next indexed frame when an index is available.
    const auto& idx = reader_->index_;
    if (e.code() == ErrorCode::ChecksumMismatch && cursor_->positional && reader_->has_index_) {
      const auto it = std::upper_bound(idx.begin(), idx.end(), offset,
                                       [](std::uint64_t off, const IndexEntry& en) { return off < en.byte_offset; });
      if (it != idx.end()) {
        cursor_->offset = it->byte_offset;
        const std::uint64_t frame_index = position_ < idx.size() ? idx[position_].frame_index : position_;
        position_ = static_cast<std::uint64_t>(it - idx.begin());
        throw FrameChecksumError(frame_index, std::nullopt, e.what());
      }
    }
    done_ = true;
    throw;
  }
  if (!r.frame && !r.failure) {
    done_ = true;
    return std::nullopt;
  }
  ++position_;
  return unwrap(std::move(r), position_ - 1);
}

DatasetReader::DatasetReader(DatasetReader&&) noexcept = default;
DatasetReader& DatasetReader::operator=(DatasetReader&&) noexcept = default;
DatasetReader::~DatasetReader() = default;

DatasetReader DatasetReader::open(const std::filesystem::path& path) { return open(file_source(path)); }

DatasetReader DatasetReader::open(std::unique_ptr<ByteSource> source) {
  DatasetReader r;
  r.source_ = std::move(source);
  const bool seekable = r.source_->seekable();
  r.prefix_digest_ = std::make_shared<Sha256>();
  Cursor cur{r.source_.get(), seekable, 0, seekable ? nullptr : r.prefix_digest_.get()};

  std::array<std::byte, kFileHeaderSize> hb;
  if (cur.read_some(hb) != hb.size()) truncated("file shorter than its header");
  if (std::memcmp(hb.data(), kMagic.data(), kMagic.size()) != 0) throw Error(ErrorCode::BadMagic, "bad magic");
  r.header_.version = {get<std::uint16_t>(hb.data() + 4), get<std::uint16_t>(hb.data() + 6)};
  r.header_.meta_length = get<std::uint64_t>(hb.data() + 8);
  r.header_.meta_checksum = get<std::uint32_t>(hb.data() + 16);
  if (r.header_.version.major != kCurrentVersion.major) {
    throw Error(ErrorCode::UnsupportedMajorVersion,
                "format version " + std::to_string(r.header_.version.major) + "." +
                    std::to_string(r.header_.version.minor) + " is not supported");
  }
  const auto size = r.source_->size();
  if ((size && r.header_.meta_length > *size - kFileHeaderSize) || r.header_.meta_length >= kMaxPayloadLength) {
    truncated("metadata block extends past end of file");
  }
  std::string text(static_cast<std::size_t>(r.header_.meta_length), '\0');
  cur.read_exact(std::as_writable_bytes(std::span(text)));
  if (crc32c(text) != r.header_.meta_checksum) throw Error(ErrorCode::MetaChecksumMismatch, "metadata checksum mismatch");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    malformed(std::string("metadata is not valid JSON: ") + e.what());
  }
  r.meta_ = meta_from_json(doc);
  r.meta_.format_version = r.header_.version;
  r.data_offset_ = cur.offset;
  if (!seekable) return r;

  // Footer -> index. Fall back to a header scan if either is damaged.
  if (*size < r.data_offset_ + kFooterRecordSize) truncated("file too short to hold a footer");
  bool footer_ok = false;
  try {
    std::array<std::byte, kFooterRecordSize> fb;
    if (r.source_->read_at(*size - kFooterRecordSize, fb) == fb.size()) {
      const auto fh = decode_record_header(std::span(fb).first<kRecordHeaderSize>());
      const auto payload = std::span(fb).subspan(kRecordHeaderSize);
      if (fh.kind == RecordKind::Footer && compute_header_checksum(std::span(fb).first<kRecordHeaderSize>()) == fh.header_checksum &&
          fh.payload_length == kFooterPayloadSize && crc32c(payload) == fh.payload_checksum) {
        r.index_offset_ = get<std::uint64_t>(payload.data());
        Cursor ic{r.source_.get(), true, r.index_offset_, nullptr};
        bool ok = false;
        const auto ih = ic.read_header(ok);
        if (ok && ih.kind == RecordKind::Index) {
          ic.check_length(ih);
          Bytes ip(static_cast<std::size_t>(ih.payload_length));
          ic.read_exact(ip);
          if (crc32c(as_span(ip)) == ih.payload_checksum) {
            r.index_ = parse_index(ip);
            footer_ok = r.index_.size() == get<std::uint64_t>(payload.data() + 8);
          }
        }
      }
    }
  } catch (const Error&) {
    footer_ok = false;
  }
  if (footer_ok) {
    r.has_index_ = true;
    return r;
  }

  // Scan record headers, skipping payloads.
  r.index_.clear();
  Cursor sc{r.source_.get(), true, r.data_offset_, nullptr};
  for (;;) {
    const std::uint64_t at = sc.offset;
    bool ok = false;
    const auto h = sc.read_header(ok);
    if (!ok) break;
    sc.check_length(h);
    if (h.kind == RecordKind::Index) {
      if (*size < sc.offset + h.payload_length + kFooterRecordSize) truncated("file ends before its footer");
      r.index_offset_ = at;
      r.has_index_ = true;
      break;
    }
    if (h.kind == RecordKind::Footer) truncated("footer found without an index");
    if (h.kind == RecordKind::FrameStart) {
      if (h.payload_length < 8) malformed("FRAME_START payload too short");
      std::array<std::byte, 8> fi;
      sc.read_exact(fi);
      r.index_.push_back({get<std::uint64_t>(fi.data()), at, h.timestamp});
      sc.skip(h.payload_length - 8);
    } else {
      sc.skip(h.payload_length);
    }
  }
  return r;
}

bool DatasetReader::seekable() const { return source_->seekable(); }

std::optional<std::uint64_t> DatasetReader::frame_count() const {
  if (!has_index_) return std::nullopt;
  return index_.size();
}

FrameStream DatasetReader::stream_frames() const {
  if (source_->seekable()) {
    return FrameStream(*this, std::make_unique<Cursor>(Cursor{source_.get(), true, data_offset_, nullptr}));
  }
  if (sequential_taken_) throw Error(ErrorCode::NotSeekable, "a non-seekable source can be streamed only once");
  sequential_taken_ = true;
  return FrameStream(*this, std::make_unique<Cursor>(Cursor{source_.get(), false, data_offset_, nullptr}));
}

Frame DatasetReader::get_frame(std::uint64_t position) const {
  if (!source_->seekable()) throw Error(ErrorCode::NotSeekable, "random access needs a seekable source");
  if (position >= index_.size()) {
    throw Error(ErrorCode::OutOfRange, "frame " + std::to_string(position) + " requested, dataset has " +
                                           std::to_string(index_.size()));
  }
  Cursor cur{source_.get(), true, index_[position].byte_offset, nullptr};
  auto r = read_frame(meta_, cur);
  if (!r.frame && !r.failure) malformed("index points past the last frame");
  return unwrap(std::move(r), index_[position].frame_index);
}

IntegrityReport DatasetReader::validate() const {
  IntegrityReport report;
  Sha256 local_digest;
  std::unique_ptr<Cursor> cur;
  if (source_->seekable()) {
    cur = std::make_unique<Cursor>(Cursor{source_.get(), true, 0, &local_digest});
    cur->skip(data_offset_);
  } else {
    if (sequential_taken_) throw Error(ErrorCode::NotSeekable, "a non-seekable source can be read only once");
    sequential_taken_ = true;
    cur = std::make_unique<Cursor>(Cursor{source_.get(), false, data_offset_, prefix_digest_.get()});
  }
  Sha256& digest = *cur->digest;

  auto fail = [&](std::optional<std::uint64_t> frame, std::optional<SensorId> sensor, std::string record,
                  std::uint64_t offset, std::uint32_t expected, std::uint32_t actual) {
    report.failures.push_back({frame, std::move(sensor), std::move(record), offset, hex32(expected), hex32(actual)});
  };
  std::string stored_digest;
  std::string computed_digest;
  std::uint64_t footer_offset = 0;
  auto indexed_frame = [&](std::uint64_t offset) -> std::optional<std::uint64_t> {
    for (const auto& e : index_) {
      if (e.byte_offset == offset) return e.frame_index;
    }
    return std::nullopt;
  };

  std::optional<std::uint64_t> current_frame;
  std::vector<IndexEntry> seen;
  bool footer_seen = false;
  for (;;) {
    const std::uint64_t at = cur->offset;
    // The file digest covers everything before the footer record, so the
    // header is hashed only once its kind is known.
    std::array<std::byte, kRecordHeaderSize> hb;
    Sha256* hashing = cur->digest;
    cur->digest = nullptr;
    cur->read_exact(hb);
    cur->digest = hashing;
    const auto h = decode_record_header(hb);
    if (h.kind != RecordKind::Footer && cur->digest) cur->digest->update(hb);
    const auto actual_header = compute_header_checksum(hb);
    if (actual_header != h.header_checksum) {
      fail(current_frame, std::nullopt, "record header", at, h.header_checksum, actual_header);
      // Cannot trust the length; resume at the next indexed frame if possible.
      const auto it = std::find_if(index_.begin(), index_.end(), [&](const IndexEntry& e) { return e.byte_offset > at; });
      if (!source_->seekable() || it == index_.end()) break;
      cur->digest = nullptr;
      cur->offset = it->byte_offset;
      continue;
    }
    cur->check_length(h);

    if (h.kind == RecordKind::Footer) {
      const auto expected_digest = digest.finish();
      Bytes fp(static_cast<std::size_t>(h.payload_length));
      cur->read_exact(fp);
      const auto actual = crc32c(as_span(fp));
      footer_seen = true;
      footer_offset = at;
      if (actual != h.payload_checksum) {
        fail(std::nullopt, std::nullopt, "FOOTER", at, h.payload_checksum, actual);
      } else if (cur->digest && fp.size() == kFooterPayloadSize) {
        report.file_digest_checked = true;
        stored_digest = to_hex(std::span(reinterpret_cast<const std::uint8_t*>(fp.data() + 16), 32));
        computed_digest = to_hex(expected_digest);
        report.file_digest_match = stored_digest == computed_digest;
      }
      break;
    }

    std::optional<SensorId> sensor;
    std::string name(to_string(h.kind));
    if (h.kind == RecordKind::SensorPayload) {
      sensor = sensor_at(meta_, h.sensor);
      name = to_string(*sensor);
    }
    if (h.kind == RecordKind::FrameStart) {
      Bytes sp(static_cast<std::size_t>(h.payload_length));
      cur->read_exact(sp);
      const auto actual = crc32c(as_span(sp));
      current_frame = indexed_frame(at);
      if (actual == h.payload_checksum && sp.size() >= 8) {
        current_frame = get<std::uint64_t>(sp.data());
      } else if (actual != h.payload_checksum) {
        if (!current_frame) current_frame = seen.empty() ? 0 : seen.back().frame_index + 1;
        fail(current_frame, std::nullopt, name, at, h.payload_checksum, actual);
      }
      seen.push_back({current_frame.value_or(0), at, h.timestamp});
      ++report.frames_checked;
      continue;
    }
    if (h.kind == RecordKind::Index) {
      Bytes ip(static_cast<std::size_t>(h.payload_length));
      cur->read_exact(ip);
      const auto actual = crc32c(as_span(ip));
      if (actual != h.payload_checksum) {
        fail(std::nullopt, std::nullopt, name, at, h.payload_checksum, actual);
      } else {
        bool consistent = false;
        try {
          consistent = parse_index(ip) == seen;
        } catch (const Error&) {
        }
        if (!consistent) fail(std::nullopt, std::nullopt, "INDEX contents", at, h.payload_checksum, actual);
      }
      current_frame.reset();
      continue;
    }
    const auto actual = cur->checksum(h.payload_length);
    if (actual != h.payload_checksum) fail(current_frame, sensor, name, at, h.payload_checksum, actual);
    if (h.kind == RecordKind::FrameEnd) current_frame.reset();
  }

  if (!footer_seen && report.failures.empty()) {
    truncated("no footer record found");
  }
  if (report.file_digest_checked && !report.file_digest_match && report.failures.empty()) {
    report.failures.push_back({std::nullopt, std::nullopt, "file digest", footer_offset, stored_digest, computed_digest});
  }
  report.ok = report.failures.empty();
  return report;
}

std::vector<Frame> read_all_frames(const DatasetReader& reader) {
  std::vector<Frame> frames;
  auto stream = reader.stream_frames();
  while (auto f = stream.next()) frames.push_back(std::move(*f));
  return frames;
}

}  // namespace fmse
