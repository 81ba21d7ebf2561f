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

#include "bag_reader.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <openssl/evp.h>

namespace fmse::testing::bag {

namespace {

class Cursor {
 public:
  Cursor(const std::uint8_t* p, std::size_t n) : p_(p), n_(n) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, p_ + at_, sizeof(T));
    at_ += sizeof(T);
    return v;
  }
  std::string str() {
    const auto len = get<std::uint32_t>();
    need(len);
    std::string s(reinterpret_cast<const char*>(p_ + at_), len);
    at_ += len;
    return s;
  }
  std::vector<std::uint8_t> bytes(std::size_t len) {
    need(len);
    std::vector<std::uint8_t> v(p_ + at_, p_ + at_ + len);
    at_ += len;
    return v;
  }
  std::vector<std::uint8_t> blob() { return bytes(get<std::uint32_t>()); }
  Header header() {
    Header h;
    h.seq = get<std::uint32_t>();
    h.sec = get<std::uint32_t>();
    h.nsec = get<std::uint32_t>();
    h.frame_id = str();
    return h;
  }
  std::size_t pos() const { return at_; }
  void seek(std::size_t at) {
    if (at > n_) throw std::runtime_error("seek past end");
    at_ = at;
  }
  bool done() const { return at_ == n_; }
  void expect_end() const {
    if (at_ != n_) throw std::runtime_error("trailing bytes: " + std::to_string(n_ - at_));
  }

 private:
  void need(std::size_t k) const {
    if (n_ - at_ < k) throw std::runtime_error("unexpected end of data");
  }
  const std::uint8_t* p_;
  std::size_t n_;
  std::size_t at_ = 0;
};

using FieldMap = std::map<std::string, std::vector<std::uint8_t>>;

struct RawRecord {
  FieldMap fields;
  std::vector<std::uint8_t> data;
};

RawRecord read_record(Cursor& c) {
  RawRecord r;
  const auto header = c.blob();
  Cursor h(header.data(), header.size());
  while (!h.done()) {
    const auto field = h.blob();
    const auto eq = std::find(field.begin(), field.end(), '=');
    if (eq == field.end()) throw std::runtime_error("header field without '='");
    std::string name(field.begin(), eq);
    if (!r.fields.emplace(name, std::vector<std::uint8_t>(eq + 1, field.end())).second) {
      throw std::runtime_error("duplicate header field " + name);
    }
  }
  r.data = c.blob();
  return r;
}

const std::vector<std::uint8_t>& field(const RawRecord& r, const std::string& name) {
  auto it = r.fields.find(name);
  if (it == r.fields.end()) throw std::runtime_error("missing header field " + name);
  return it->second;
}

template <typename T>
T scalar(const RawRecord& r, const std::string& name) {
  const auto& v = field(r, name);
  if (v.size() != sizeof(T)) throw std::runtime_error("field " + name + " has wrong size");
  T out;
  std::memcpy(&out, v.data(), sizeof(T));
  return out;
}

std::string text(const std::vector<std::uint8_t>& v) { return std::string(v.begin(), v.end()); }

std::uint8_t op(const RawRecord& r) { return scalar<std::uint8_t>(r, "op"); }

Connection connection_from(const RawRecord& r) {
  Connection c;
  c.id = scalar<std::uint32_t>(r, "conn");
  c.topic = text(field(r, "topic"));
  Cursor d(r.data.data(), r.data.size());
  FieldMap f;
  while (!d.done()) {
    const auto raw = d.blob();
    const auto eq = std::find(raw.begin(), raw.end(), '=');
    if (eq == raw.end()) throw std::runtime_error("connection field without '='");
    f[std::string(raw.begin(), eq)] = std::vector<std::uint8_t>(eq + 1, raw.end());
  }
  if (text(f.at("topic")) != c.topic) throw std::runtime_error("connection topic mismatch");
  c.type = text(f.at("type"));
  c.md5sum = text(f.at("md5sum"));
  c.definition = text(f.at("message_definition"));
  c.latching = f.count("latching") && text(f.at("latching")) == "1";
  return c;
}

}  // namespace

std::vector<std::uint8_t> slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

Bag parse(const std::vector<std::uint8_t>& file) {
  static const std::string kMagic = "#ROSBAG V2.0\n";
  if (file.size() < kMagic.size() || std::memcmp(file.data(), kMagic.data(), kMagic.size()) != 0) {
    throw std::runtime_error("missing version line");
  }
  Bag bag;
  Cursor c(file.data(), file.size());
  c.seek(kMagic.size());
  const RawRecord head = read_record(c);
  if (op(head) != 0x03) throw std::runtime_error("first record is not a bag header");
  bag.header_record_size = c.pos() - kMagic.size();
  bag.index_pos = scalar<std::uint64_t>(head, "index_pos");
  bag.conn_count = scalar<std::uint32_t>(head, "conn_count");
  bag.chunk_count = scalar<std::uint32_t>(head, "chunk_count");
  if (bag.index_pos > file.size()) throw std::runtime_error("index_pos beyond end of file");

  // Data section: chunks each followed by their index records.
  std::map<std::uint32_t, Connection> inline_connections;
  while (c.pos() < bag.index_pos) {
    const std::size_t record_pos = c.pos();
    const RawRecord r = read_record(c);
    if (op(r) == 0x05) {
      if (text(field(r, "compression")) != "none") throw std::runtime_error("compressed chunk");
      if (scalar<std::uint32_t>(r, "size") != r.data.size()) throw std::runtime_error("chunk size mismatch");
      bag.chunk_positions.push_back(record_pos);
      bag.chunk_index.emplace_back();
      Cursor inner(r.data.data(), r.data.size());
      while (!inner.done()) {
        const auto offset = static_cast<std::uint32_t>(inner.pos());
        const RawRecord m = read_record(inner);
        if (op(m) == 0x07) {
          const Connection conn = connection_from(m);
          inline_connections[conn.id] = conn;
        } else if (op(m) == 0x02) {
          Message msg;
          msg.conn = scalar<std::uint32_t>(m, "conn");
          const auto& t = field(m, "time");
          if (t.size() != 8) throw std::runtime_error("bad time field");
          std::memcpy(&msg.sec, t.data(), 4);
          std::memcpy(&msg.nsec, t.data() + 4, 4);
          msg.data = m.data;
          msg.chunk = bag.chunk_positions.size() - 1;
          msg.offset = offset;
          bag.messages.push_back(std::move(msg));
        } else {
          throw std::runtime_error("unexpected record inside chunk");
        }
      }
    } else if (op(r) == 0x04) {
      if (bag.chunk_index.empty()) throw std::runtime_error("index record before any chunk");
      if (scalar<std::uint32_t>(r, "ver") != 1) throw std::runtime_error("index version");
      const auto conn = scalar<std::uint32_t>(r, "conn");
      const auto count = scalar<std::uint32_t>(r, "count");
      Cursor d(r.data.data(), r.data.size());
      auto& entries = bag.chunk_index.back()[conn];
      for (std::uint32_t i = 0; i < count; ++i) {
        IndexEntry e;
        e.sec = d.get<std::uint32_t>();
        e.nsec = d.get<std::uint32_t>();
        e.offset = d.get<std::uint32_t>();
        entries.push_back(e);
      }
      d.expect_end();
    } else {
      throw std::runtime_error("unexpected record in data section, op " + std::to_string(op(r)));
    }
  }
  if (c.pos() != bag.index_pos) throw std::runtime_error("data section overruns index_pos");

  for (std::uint32_t i = 0; i < bag.conn_count; ++i) {
    const RawRecord r = read_record(c);
    if (op(r) != 0x07) throw std::runtime_error("expected connection record in index section");
    const Connection conn = connection_from(r);
    if (!bag.connections.emplace(conn.id, conn).second) throw std::runtime_error("duplicate connection id");
  }
  for (std::uint32_t i = 0; i < bag.chunk_count; ++i) {
    const RawRecord r = read_record(c);
    if (op(r) != 0x06) throw std::runtime_error("expected chunk info record");
    if (scalar<std::uint32_t>(r, "ver") != 1) throw std::runtime_error("chunk info version");
    ChunkInfo ci;
    ci.chunk_pos = scalar<std::uint64_t>(r, "chunk_pos");
    auto time_of = [&](const char* name) {
      const auto& t = field(r, name);
      std::uint32_t s, ns;
      std::memcpy(&s, t.data(), 4);
      std::memcpy(&ns, t.data() + 4, 4);
      return (std::uint64_t{s} << 32) | ns;
    };
    ci.start = time_of("start_time");
    ci.end = time_of("end_time");
    const auto count = scalar<std::uint32_t>(r, "count");
    Cursor d(r.data.data(), r.data.size());
    for (std::uint32_t k = 0; k < count; ++k) {
      const auto conn = d.get<std::uint32_t>();
      ci.counts[conn] = d.get<std::uint32_t>();
    }
    d.expect_end();
    bag.chunk_infos.push_back(ci);
  }
  c.expect_end();

  if (bag.chunk_positions.size() != bag.chunk_count) throw std::runtime_error("chunk_count mismatch");
  for (const auto& [id, conn] : inline_connections) {
    auto it = bag.connections.find(id);
    if (it == bag.connections.end() || it->second.topic != conn.topic || it->second.type != conn.type) {
      throw std::runtime_error("inline connection disagrees with index section");
    }
  }
  for (const auto& m : bag.messages) {
    if (!bag.connections.count(m.conn)) throw std::runtime_error("message on unknown connection");
  }
  return bag;
}

namespace {

double f64(Cursor& c) { return c.get<double>(); }

template <std::size_t N>
std::array<double, N> f64s(Cursor& c) {
  std::array<double, N> a{};
  for (auto& v : a) v = c.get<double>();
  return a;
}

}  // namespace

Image decode_image(const std::vector<std::uint8_t>& b) {
  Cursor c(b.data(), b.size());
  Image m;
  m.header = c.header();
  m.height = c.get<std::uint32_t>();
  m.width = c.get<std::uint32_t>();
  m.encoding = c.str();
  m.is_bigendian = c.get<std::uint8_t>();
  m.step = c.get<std::uint32_t>();
  m.data = c.blob();
  c.expect_end();
  return m;
}

PointCloud2 decode_pointcloud2(const std::vector<std::uint8_t>& b) {
  Cursor c(b.data(), b.size());
  PointCloud2 m;
  m.header = c.header();
  m.height = c.get<std::uint32_t>();
  m.width = c.get<std::uint32_t>();
  const auto nfields = c.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < nfields; ++i) {
    PointField f;
    f.name = c.str();
    f.offset = c.get<std::uint32_t>();
    f.datatype = c.get<std::uint8_t>();
    f.count = c.get<std::uint32_t>();
    m.fields.push_back(f);
  }
  m.is_bigendian = c.get<std::uint8_t>() != 0;
  m.point_step = c.get<std::uint32_t>();
  m.row_step = c.get<std::uint32_t>();
  m.data = c.blob();
  m.is_dense = c.get<std::uint8_t>() != 0;
  c.expect_end();
  return m;
}

Odometry decode_odometry(const std::vector<std::uint8_t>& b) {
  Cursor c(b.data(), b.size());
  Odometry m;
  m.header = c.header();
  m.child_frame_id = c.str();
  m.position = f64s<3>(c);
  m.orientation_xyzw = f64s<4>(c);
  m.pose_covariance = f64s<36>(c);
  m.linear = f64s<3>(c);
  m.angular = f64s<3>(c);
  m.twist_covariance = f64s<36>(c);
  c.expect_end();
  return m;
}

NavSatFix decode_navsatfix(const std::vector<std::uint8_t>& b) {
  Cursor c(b.data(), b.size());
  NavSatFix m;
  m.header = c.header();
  m.status = c.get<std::int8_t>();
  m.service = c.get<std::uint16_t>();
  m.latitude = f64(c);
  m.longitude = f64(c);
  m.altitude = f64(c);
  m.covariance = f64s<9>(c);
  m.covariance_type = c.get<std::uint8_t>();
  c.expect_end();
  return m;
}

std::vector<Transform> decode_tf(const std::vector<std::uint8_t>& b) {
  Cursor c(b.data(), b.size());
  std::vector<Transform> out(c.get<std::uint32_t>());
  for (auto& t : out) {
    t.header = c.header();
    t.child_frame_id = c.str();
    t.translation = f64s<3>(c);
    t.rotation_xyzw = f64s<4>(c);
  }
  c.expect_end();
  return out;
}

namespace {

std::string md5_hex(const std::string& s) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(s.data(), s.size(), digest, &len, EVP_md5(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

const std::set<std::string> kBuiltins{"bool",   "int8",   "uint8",   "int16",   "uint16", "int32", "uint32", "int64",
                                      "uint64", "float32", "float64", "string", "time",   "duration", "char", "byte"};

std::string md5_text(const std::string& body, const std::string& package,
                     const std::map<std::string, std::string>& deps);

std::string md5_of(const std::string& full_type, const std::map<std::string, std::string>& deps) {
  const auto it = deps.find(full_type);
  if (it == deps.end()) throw std::runtime_error("missing dependency " + full_type);
  return md5_hex(md5_text(it->second, full_type.substr(0, full_type.find('/')), deps));
}

std::string md5_text(const std::string& body, const std::string& package,
                     const std::map<std::string, std::string>& deps) {
  std::vector<std::string> constants;
  std::vector<std::string> fields;
  std::istringstream in(body);
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto sp = line.find_first_of(" \t");
    const std::string type = line.substr(0, sp);
    const std::string rest = trim(line.substr(sp));
    if (const auto eq = rest.find('='); eq != std::string::npos) {
      constants.push_back(type + " " + trim(rest.substr(0, eq)) + "=" + trim(rest.substr(eq + 1)));
      continue;
    }
    const std::string base = type.substr(0, type.find('['));
    if (kBuiltins.count(base)) {
      fields.push_back(type + " " + rest);
    } else {
      std::string full = base;
      if (base == "Header") full = "std_msgs/Header";
      else if (base.find('/') == std::string::npos) full = package + "/" + base;
      fields.push_back(md5_of(full, deps) + " " + rest);
    }
  }
  std::string out;
  for (const auto& l : constants) out += (out.empty() ? "" : "\n") + l;
  for (const auto& l : fields) out += (out.empty() ? "" : "\n") + l;
  return out;
}

}  // namespace

std::string md5_of_definition(const std::string& type, const std::string& full_definition) {
  std::map<std::string, std::string> deps;
  std::string main;
  std::string current;
  std::string* sink = &main;
  std::istringstream in(full_definition);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of('=') == std::string::npos && line.size() >= 10) continue;
    if (line.rfind("MSG: ", 0) == 0) {
      current = trim(line.substr(5));
      sink = &deps[current];
      continue;
    }
    *sink += line + "\n";
  }
  return md5_hex(md5_text(main, type.substr(0, type.find('/')), deps));
}

}  // namespace fmse::testing::bag
