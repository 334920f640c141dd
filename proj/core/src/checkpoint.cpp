#include "span/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <vector>

#include "span/config.hpp"
#include "span/error.hpp"

namespace span {
namespace {

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) {
      throw Error(ErrorKind::kIo, "cannot open " + path + " for writing");
    }
  }

  void bytes(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u16(std::uint16_t v) {
    const std::uint8_t b[2] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8)};
    bytes(b, 2);
  }
  void u32(std::uint32_t v) {
    std::uint8_t b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    bytes(b, 4);
  }
  void f64(double v) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    std::uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(bits >> (8 * i));
    bytes(b, 8);
  }

  void finish() {
    out_.flush();
    if (!out_) {
      throw Error(ErrorKind::kIo, "write failed for " + path_);
    }
  }

 private:
  std::ofstream out_;
  std::string path_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) {
      throw Error(ErrorKind::kIo, "cannot open " + path);
    }
  }

  long long offset() const { return offset_; }

  void bytes(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n)) {
      throw Error(ErrorKind::kCorrupt, path_ + ": truncated at offset " + std::to_string(offset_),
                  offset_);
    }
    offset_ += static_cast<long long>(n);
  }
  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }
  std::uint16_t u16() {
    std::uint8_t b[2];
    bytes(b, 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }
  std::uint32_t u32() {
    std::uint8_t b[4];
    bytes(b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() {
    std::uint8_t b[8];
    bytes(b, 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(bits);
  }

  bool at_eof() {
    in_.peek();
    return in_.eof();
  }

  [[noreturn]] void corrupt(const std::string& what, long long at) const {
    throw Error(ErrorKind::kCorrupt, path_ + ": " + what + " at offset " + std::to_string(at), at);
  }

 private:
  std::ifstream in_;
  std::string path_;
  long long offset_ = 0;
};

}  // namespace

void save_checkpoint(const std::string& path, const SpanModel& model) {
  Writer w(path);
  w.bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.u16(kCheckpointVersion);

  const std::string config = serialize_model_section(model.config);
  w.u32(static_cast<std::uint32_t>(config.size()));
  w.bytes(config.data(), config.size());

  const auto params = model.parameters();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const ParamTensor* p : params) {
    w.u16(static_cast<std::uint16_t>(p->name.size()));
    w.bytes(p->name.data(), p->name.size());
    w.u8(static_cast<std::uint8_t>(p->shape.size()));
    for (int d : p->shape) w.u32(static_cast<std::uint32_t>(d));
    for (double v : p->value) w.f64(v);
  }
  w.finish();
}

SpanModel load_checkpoint(const std::string& path) {
  Reader r(path);

  char magic[sizeof(kCheckpointMagic)];
  r.bytes(magic, sizeof(magic));
  for (std::size_t i = 0; i < sizeof(magic); ++i) {
    if (magic[i] != kCheckpointMagic[i]) {
      r.corrupt("expected magic SPAN1", 0);
    }
  }
  const std::uint16_t version = r.u16();
  if (version != kCheckpointVersion) {
    r.corrupt("unsupported format version " + std::to_string(version), r.offset() - 2);
  }

  const std::uint32_t config_len = r.u32();
  std::string config(config_len, '\0');
  r.bytes(config.data(), config_len);

  ModelConfig model_cfg;
  try {
    model_cfg = parse_config_text(config).model;
  } catch (const Error& e) {
    r.corrupt(std::string("bad embedded config (") + e.what() + ")", 7);
  }
  SpanModel model = SpanModel::create(model_cfg, 0);
  auto params = model.parameters();

  const std::uint32_t count = r.u32();
  if (count != params.size()) {
    r.corrupt("expected " + std::to_string(params.size()) + " parameter records, found " +
                  std::to_string(count),
              r.offset() - 4);
  }
  for (ParamTensor* p : params) {
    const long long record_at = r.offset();
    const std::uint16_t name_len = r.u16();
    std::string name(name_len, '\0');
    r.bytes(name.data(), name_len);
    if (name != p->name) {
      r.corrupt("expected parameter '" + p->name + "', found '" + name + "'", record_at);
    }
    const std::uint8_t rank = r.u8();
    if (rank != p->shape.size()) {
      r.corrupt("rank mismatch for " + name, record_at);
    }
    for (int d : p->shape) {
      const std::uint32_t dim = r.u32();
      if (dim != static_cast<std::uint32_t>(d)) {
        r.corrupt("shape mismatch for " + name, record_at);
      }
    }
    for (double& v : p->value) v = r.f64();
  }
  if (!r.at_eof()) {
    r.corrupt("trailing bytes after last record", r.offset());
  }
  return model;
}

}  // namespace span
