#include "iat/rans/rans.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace iat::rans {

namespace {

// State lives in [kLower, 256 * kLower); the bound must be at least
// 2^precision for every table we accept.
constexpr std::uint64_t kLower = std::uint64_t{1} << 24;

class Encoder {
 public:
  void put(std::uint32_t start, std::uint32_t freq, int precision) {
    const std::uint64_t x_max = ((kLower >> precision) << 8) * freq;
    while (state_ >= x_max) {
      out_.push_back(static_cast<std::uint8_t>(state_ & 0xff));
      state_ >>= 8;
    }
    state_ = ((state_ / freq) << precision) + (state_ % freq) + start;
  }

  // Symbols were pushed in reverse, so flip the byte order to hand the
  // decoder a forward stream that starts with the final state.
  std::vector<std::uint8_t> finish() {
    for (int i = 0; i < 4; ++i) {
      out_.push_back(static_cast<std::uint8_t>(state_ & 0xff));
      state_ >>= 8;
    }
    std::reverse(out_.begin(), out_.end());
    return std::move(out_);
  }

 private:
  std::uint64_t state_ = kLower;
  std::vector<std::uint8_t> out_;
};

class Decoder {
 public:
  explicit Decoder(std::span<const std::uint8_t> bytes) : bytes_(bytes) {
    if (bytes.size() < 4) throw CorruptStream("rans stream truncated: " + std::to_string(bytes.size()) + " bytes");
    for (int i = 0; i < 4; ++i) state_ = (state_ << 8) | bytes_[pos_++];
    if (state_ < kLower) throw CorruptStream("rans stream has an invalid initial state");
  }

  std::uint32_t peek(int precision) const {
    return static_cast<std::uint32_t>(state_ & ((std::uint64_t{1} << precision) - 1));
  }

  void advance(std::uint32_t start, std::uint32_t freq, int precision) {
    state_ = freq * (state_ >> precision) + peek(precision) - start;
    while (state_ < kLower) {
      if (pos_ >= bytes_.size()) throw CorruptStream("rans stream truncated");
      state_ = (state_ << 8) | bytes_[pos_++];
    }
  }

  void finish() const {
    if (state_ != kLower) throw CorruptStream("rans stream final state mismatch");
    if (pos_ != bytes_.size()) {
      throw CorruptStream("rans stream has " + std::to_string(bytes_.size() - pos_) + " trailing bytes");
    }
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::uint64_t state_ = 0;
};

void check_counts(std::size_t values, std::size_t tables) {
  if (values != tables) {
    throw ShapeError("rans: " + std::to_string(values) + " values but " + std::to_string(tables) + " tables");
  }
}

void check_escapable(const CdfTable& table, int value) {
  if (!table.has_escape()) throw NumericError("value " + std::to_string(value) + " outside table support");
  if (value < kEscapeMin || value > kEscapeMax) {
    throw NumericError("value " + std::to_string(value) + " exceeds the escape range");
  }
}

}  // namespace

std::vector<std::uint8_t> rans_encode(std::span<const int> values, std::span<const CdfTable* const> tables) {
  check_counts(values.size(), tables.size());
  Encoder enc;
  for (std::size_t i = values.size(); i-- > 0;) {
    const CdfTable& table = *tables[i];
    const int v = values[i];
    if (!table.in_support(v)) {
      check_escapable(table, v);
      // The raw field is decoded after the escape slot, so it goes in first.
      enc.put(static_cast<std::uint16_t>(static_cast<std::int16_t>(v)), 1, kEscapeBits);
    }
    const std::uint32_t slot = table.slot_of(v);
    enc.put(table.start(slot), table.frequency(slot), table.precision());
  }
  return enc.finish();
}

std::vector<int> rans_decode(std::span<const std::uint8_t> bytes, std::span<const CdfTable* const> tables) {
  Decoder dec(bytes);
  std::vector<int> values(tables.size());
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const CdfTable& table = *tables[i];
    const int p = table.precision();
    const std::uint32_t slot = table.find_slot(dec.peek(p));
    dec.advance(table.start(slot), table.frequency(slot), p);
    if (table.has_escape() && slot == table.escape_slot()) {
      const std::uint32_t raw = dec.peek(kEscapeBits);
      dec.advance(raw, 1, kEscapeBits);
      values[i] = static_cast<std::int16_t>(static_cast<std::uint16_t>(raw));
    } else {
      values[i] = table.k_min() + static_cast<int>(slot);
    }
  }
  dec.finish();
  return values;
}

double shannon_bits(std::span<const int> values, std::span<const CdfTable* const> tables) {
  check_counts(values.size(), tables.size());
  double bits = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const CdfTable& table = *tables[i];
    const std::uint32_t slot = table.slot_of(values[i]);
    bits += table.precision() - std::log2(static_cast<double>(table.frequency(slot)));
    if (!table.in_support(values[i])) bits += kEscapeBits;
  }
  return bits;
}

int residual_offset(double mean) {
  if (!std::isfinite(mean)) throw NumericError("non-finite latent mean");
  return static_cast<int>(std::clamp(std::round(mean), static_cast<double>(kEscapeMin), static_cast<double>(kEscapeMax)));
}

namespace {

struct ResidualPlan {
  std::vector<int> residuals;
  std::vector<const CdfTable*> tables;
};

ResidualPlan plan_residuals(std::span<const int> values, std::span<const double> means,
                            std::span<const double> scales, bool have_values) {
  if (means.size() != scales.size() || (have_values && values.size() != means.size())) {
    throw ShapeError("gaussian stream: values, means and scales differ in length");
  }
  const GaussianTableBank& bank = GaussianTableBank::standard();
  ResidualPlan plan;
  plan.tables.resize(means.size());
  if (have_values) plan.residuals.resize(means.size());
  for (std::size_t i = 0; i < means.size(); ++i) {
    plan.tables[i] = &bank.lookup(means[i], scales[i]);
    if (have_values) {
      const long r = static_cast<long>(values[i]) - residual_offset(means[i]);
      if (r < kEscapeMin || r > kEscapeMax) throw NumericError("latent residual exceeds the escape range");
      plan.residuals[i] = static_cast<int>(r);
    }
  }
  return plan;
}

}  // namespace

std::vector<std::uint8_t> encode_gaussian(std::span<const int> values, std::span<const double> means,
                                          std::span<const double> scales) {
  const ResidualPlan plan = plan_residuals(values, means, scales, true);
  return rans_encode(plan.residuals, plan.tables);
}

std::vector<int> decode_gaussian(std::span<const std::uint8_t> bytes, std::span<const double> means,
                                 std::span<const double> scales) {
  const ResidualPlan plan = plan_residuals({}, means, scales, false);
  std::vector<int> values = rans_decode(bytes, plan.tables);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += residual_offset(means[i]);
  return values;
}

double gaussian_shannon_bits(std::span<const int> values, std::span<const double> means,
                             std::span<const double> scales) {
  const ResidualPlan plan = plan_residuals(values, means, scales, true);
  return shannon_bits(plan.residuals, plan.tables);
}

}  // namespace iat::rans
