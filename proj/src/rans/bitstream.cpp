#include "iat/rans/bitstream.hpp"

#include <algorithm>
#include <cstdint>

namespace iat::rans {

namespace {

constexpr std::uint8_t kMagic[4] = {'I', 'A', 'T', 'B'};

class Writer {
 public:
  void u8(std::uint8_t v) { out.push_back(v); }
  void u16(std::uint16_t v) { be(v, 2); }
  void u32(std::uint32_t v) { be(v, 4); }
  void u64(std::uint64_t v) { be(v, 8); }
  void bytes(std::span<const std::uint8_t> b) { out.insert(out.end(), b.begin(), b.end()); }

  std::vector<std::uint8_t> out;

 private:
  void be(std::uint64_t v, int n) {
    for (int i = n - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : data_(b) {}

  std::uint8_t u8(const char* what) { return static_cast<std::uint8_t>(be(1, what)); }
  std::uint16_t u16(const char* what) { return static_cast<std::uint16_t>(be(2, what)); }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(be(4, what)); }
  std::uint64_t u64(const char* what) { return be(8, what); }

  std::vector<std::uint8_t> bytes(std::size_t n, const char* what) {
    need(n, what);
    std::vector<std::uint8_t> v(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                data_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return v;
  }

  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw BitstreamError(BitstreamFault::kTruncated, std::string(what) + " needs " + std::to_string(n) +
                                                           " bytes, " + std::to_string(remaining()) + " left");
    }
  }

  std::uint64_t be(int n, const char* what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v = (v << 8) | data_[pos_++];
    return v;
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

std::size_t level_bytes(bool uniform, std::uint16_t width, std::uint16_t height) {
  return uniform ? 1 : static_cast<std::size_t>(width) * height;
}

}  // namespace

std::string to_string(BitstreamFault fault) {
  switch (fault) {
    case BitstreamFault::kBadMagic: return "bad magic";
    case BitstreamFault::kBadVersion: return "unsupported version";
    case BitstreamFault::kUnknownFlags: return "unknown flags";
    case BitstreamFault::kTruncated: return "truncated";
    case BitstreamFault::kLengthMismatch: return "length mismatch";
    case BitstreamFault::kInvalidField: return "invalid field";
    case BitstreamFault::kModelMismatch: return "model mismatch";
  }
  return "unknown";
}

std::size_t Bitstream::header_size() const {
  return kFixedHeaderBytes + level_bytes(uniform_level, width, height) + 8;
}

std::vector<std::uint8_t> serialize(const Bitstream& s) {
  if (s.width == 0 || s.height == 0) throw BitstreamError(BitstreamFault::kInvalidField, "zero image dimension");
  if (s.levels.size() != level_bytes(s.uniform_level, s.width, s.height)) {
    throw BitstreamError(BitstreamFault::kLengthMismatch, "level field has " + std::to_string(s.levels.size()) +
                                                               " bytes for a " + std::to_string(s.width) + "x" +
                                                               std::to_string(s.height) + " image");
  }
  if (s.z_payload.size() > UINT32_MAX || s.y_payload.size() > UINT32_MAX) {
    throw BitstreamError(BitstreamFault::kInvalidField, "payload too large");
  }
  Writer w;
  w.bytes(kMagic);
  w.u8(kBitstreamVersion);
  w.u8(static_cast<std::uint8_t>((s.uniform_level ? kFlagUniformLevel : 0) | (s.padded ? kFlagPadded : 0)));
  w.u16(s.width);
  w.u16(s.height);
  w.u64(s.model_hash);
  w.bytes(s.levels);
  w.u32(static_cast<std::uint32_t>(s.z_payload.size()));
  w.u32(static_cast<std::uint32_t>(s.y_payload.size()));
  w.bytes(s.z_payload);
  w.bytes(s.y_payload);
  return std::move(w.out);
}

Bitstream parse(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.bytes(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), kMagic)) throw BitstreamError(BitstreamFault::kBadMagic, "expected IATB");
  const std::uint8_t version = r.u8("version");
  if (version != kBitstreamVersion) {
    throw BitstreamError(BitstreamFault::kBadVersion, "version " + std::to_string(version));
  }
  const std::uint8_t flags = r.u8("flags");
  if (flags & ~(kFlagUniformLevel | kFlagPadded)) {
    throw BitstreamError(BitstreamFault::kUnknownFlags, "flags byte " + std::to_string(flags));
  }
  Bitstream s;
  s.uniform_level = flags & kFlagUniformLevel;
  s.padded = flags & kFlagPadded;
  s.width = r.u16("width");
  s.height = r.u16("height");
  if (s.width == 0 || s.height == 0) throw BitstreamError(BitstreamFault::kInvalidField, "zero image dimension");
  s.model_hash = r.u64("model hash");
  s.levels = r.bytes(level_bytes(s.uniform_level, s.width, s.height), "level field");
  const std::uint32_t z_len = r.u32("z length");
  const std::uint32_t y_len = r.u32("y length");
  if (static_cast<std::uint64_t>(z_len) + y_len != r.remaining()) {
    throw BitstreamError(BitstreamFault::kLengthMismatch, "header declares " + std::to_string(z_len) + " + " +
                                                               std::to_string(y_len) + " payload bytes, found " +
                                                               std::to_string(r.remaining()));
  }
  s.z_payload = r.bytes(z_len, "z payload");
  s.y_payload = r.bytes(y_len, "y payload");
  return s;
}

}  // namespace iat::rans
