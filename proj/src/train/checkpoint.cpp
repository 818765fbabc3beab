#include "iat/train/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <map>

#include "iat/image.hpp"

namespace iat::train {

namespace {

enum Kind : std::uint8_t { kText = 0, kU64 = 1, kTensor = 2 };

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) { little(v, 2); }
  void u32(std::uint32_t v) { little(v, 4); }
  void u64(std::uint64_t v) { little(v, 8); }
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }

  void record(const std::string& name, Kind kind, const std::vector<std::uint8_t>& payload) {
    u16(static_cast<std::uint16_t>(name.size()));
    raw(name.data(), name.size());
    u8(kind);
    u64(payload.size());
    raw(payload.data(), payload.size());
  }

  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  void little(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size, std::string what) : data_(data), size_(size), what_(std::move(what)) {}

  std::uint64_t little(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{data_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  const std::uint8_t* take(std::size_t n) {
    need(n);
    const std::uint8_t* p = data_ + pos_;
    pos_ += n;
    return p;
  }
  bool done() const { return pos_ == size_; }

 private:
  void need(std::size_t n) const {
    if (size_ - pos_ < n) throw IoError(what_ + ": truncated checkpoint");
  }
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::string what_;
};

std::vector<std::uint8_t> text_payload(const std::string& s) { return {s.begin(), s.end()}; }

std::vector<std::uint8_t> u64_payload(std::uint64_t v) {
  Writer w;
  w.u64(v);
  return w.bytes();
}

std::vector<std::uint8_t> tensor_payload(const TensorF& t) {
  Writer w;
  w.u32(static_cast<std::uint32_t>(t.rank()));
  for (const auto d : t.shape()) w.u64(static_cast<std::uint64_t>(d));
  for (const float v : t.data()) w.u32(std::bit_cast<std::uint32_t>(v));
  return w.bytes();
}

struct Record {
  Kind kind;
  const std::uint8_t* data;
  std::size_t size;
};

}  // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  if (!checkpoint.model) throw ConfigError("checkpoint has no model");
  const auto& model = *checkpoint.model;
  Writer w;
  w.raw("IATW", 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(5 + model.parameters().items().size()));
  w.record("arch", kText, text_payload(model.config().to_key_values().to_text()));
  w.record("meta", kText, text_payload(checkpoint.metadata.to_text()));
  w.record("rng", kText, text_payload(checkpoint.rng_state));
  w.record("iteration", kU64, u64_payload(static_cast<std::uint64_t>(checkpoint.iteration)));
  w.record("hash", kU64, u64_payload(model.hash()));
  for (const auto& p : model.parameters().items()) w.record("param/" + p.name, kTensor, tensor_payload(p.tensor));
  write_file_atomic(path, w.bytes());
}

Checkpoint load_checkpoint(const std::string& path) {
  const auto bytes = read_file(path);
  Reader r(bytes.data(), bytes.size(), path);
  if (std::memcmp(r.take(4), "IATW", 4) != 0) throw IoError(path + ": not an .iatw checkpoint");
  const auto version = r.little(4);
  if (version != kCheckpointVersion) throw IoError(path + ": unsupported checkpoint version " + std::to_string(version));
  const auto count = r.little(4);
  std::map<std::string, Record> records;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = r.little(2);
    const auto* name = r.take(name_len);
    const auto kind = static_cast<Kind>(r.little(1));
    const auto size = r.little(8);
    const auto* data = r.take(size);
    if (kind > kTensor) throw IoError(path + ": unknown record kind");
    std::string key(reinterpret_cast<const char*>(name), name_len);
    if (!records.emplace(key, Record{kind, data, size}).second) throw IoError(path + ": duplicate record " + key);
  }
  if (!r.done()) throw IoError(path + ": trailing bytes after last record");

  const auto get = [&](const std::string& name, Kind kind) -> const Record& {
    auto it = records.find(name);
    if (it == records.end() || it->second.kind != kind) throw IoError(path + ": missing record " + name);
    return it->second;
  };
  const auto text = [&](const std::string& name) {
    const Record& rec = get(name, kText);
    return std::string(reinterpret_cast<const char*>(rec.data), rec.size);
  };
  const auto u64 = [&](const std::string& name) {
    const Record& rec = get(name, kU64);
    Reader rr(rec.data, rec.size, path);
    return rr.little(8);
  };

  Checkpoint ck;
  try {
    ck.model = std::make_unique<CodecModel<float>>(inn::ArchitectureConfig::from(KeyValues::parse(text("arch"))));
    ck.metadata = KeyValues::parse(text("meta"));
  } catch (const ConfigError& e) {
    throw IoError(path + ": " + e.what());
  }
  ck.rng_state = text("rng");
  ck.iteration = static_cast<std::int64_t>(u64("iteration"));

  std::size_t params = 0;
  for (const auto& p : ck.model->parameters().items()) {
    const Record& rec = get("param/" + p.name, kTensor);
    Reader rr(rec.data, rec.size, path);
    Shape shape(rr.little(4));
    for (auto& d : shape) d = static_cast<std::int64_t>(rr.little(8));
    if (shape != p.tensor.shape()) {
      throw IoError(path + ": parameter " + p.name + " has shape " + to_string(shape) + ", architecture expects " +
                    to_string(p.tensor.shape()));
    }
    auto values = TensorF(p.tensor).mutable_data();
    for (auto& v : values) v = std::bit_cast<float>(static_cast<std::uint32_t>(rr.little(4)));
    if (!rr.done()) throw IoError(path + ": oversized record for " + p.name);
    ++params;
  }
  if (records.size() != params + 5) throw IoError(path + ": unexpected records");
  if (u64("hash") != ck.model->hash()) throw IoError(path + ": stored model hash does not match the parameters");
  return ck;
}

}  // namespace iat::train
