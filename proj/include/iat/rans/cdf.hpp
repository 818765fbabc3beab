#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace iat::rans {

inline constexpr int kDefaultPrecision = 16;

/// Quantized cumulative frequency table over integers [k_min, k_max], with
/// an optional trailing escape slot for values outside that range.
///
/// Invariants: every slot count >= 1, cumulative counts strictly
/// increasing, total exactly 2^precision.
class CdfTable {
 public:
  /// probabilities[i] is the mass of value k_min + i. When with_escape is
  /// set, escape_mass is the probability reserved for out-of-range values.
  static CdfTable from_probabilities(int k_min, std::span<const double> probabilities, int precision,
                                     bool with_escape = false, double escape_mass = 0.0);

  int precision() const { return precision_; }
  int k_min() const { return k_min_; }
  int k_max() const { return k_min_ + static_cast<int>(value_slots_) - 1; }
  bool has_escape() const { return has_escape_; }
  std::uint32_t slot_count() const { return static_cast<std::uint32_t>(cumulative_.size() - 1); }
  std::uint32_t escape_slot() const { return value_slots_; }

  bool in_support(int value) const { return value >= k_min_ && value <= k_max(); }
  /// Slot for a value; out-of-support values map to the escape slot.
  std::uint32_t slot_of(int value) const;
  std::uint32_t start(std::uint32_t slot) const { return cumulative_[slot]; }
  std::uint32_t frequency(std::uint32_t slot) const { return cumulative_[slot + 1] - cumulative_[slot]; }
  /// Slot whose [start, start + freq) contains cum.
  std::uint32_t find_slot(std::uint32_t cum) const;
  /// Quantized probability of a value (escape mass for out-of-support).
  double probability(int value) const;
  const std::vector<std::uint32_t>& cumulative() const { return cumulative_; }

 private:
  int precision_ = kDefaultPrecision;
  int k_min_ = 0;
  std::uint32_t value_slots_ = 0;
  bool has_escape_ = false;
  std::vector<std::uint32_t> cumulative_;
};

/// Table for N(mu, sigma^2) integer bins over [floor(mu - 8 sigma),
/// ceil(mu + 8 sigma)] with an escape slot for the tails.
/// Throws ConfigError for precision outside [8, 24].
CdfTable build_cdf(double mu, double sigma, int precision = kDefaultPrecision);

/// Tables for 64 log-spaced scales in [sigma_min, 256] times 33 mean
/// offsets in [-1/2, 1/2] (step 1/32). A value v under Gaussian (mu, sigma)
/// is coded as the residual v - round(mu) against the table whose offset is
/// nearest to mu - round(mu) and whose scale is nearest to sigma (in log
/// space). Both lookups are exact functions of the double inputs, so
/// encoder and decoder pick identical tables.
class GaussianTableBank {
 public:
  static constexpr int kScaleLevels = 64;
  static constexpr int kOffsetSteps = 32;
  static constexpr int kOffsetLevels = kOffsetSteps + 1;
  static constexpr double kMaxScale = 256.0;

  explicit GaussianTableBank(int precision = kDefaultPrecision);
  /// Shared default-precision bank.
  static const GaussianTableBank& standard();

  int scale_index(double sigma) const;
  int offset_index(double mean) const;
  double scale(int index) const { return scales_[static_cast<std::size_t>(index)]; }
  double offset(int index) const { return static_cast<double>(index - kOffsetSteps / 2) / kOffsetSteps; }
  const CdfTable& table(int scale_index, int offset_index) const {
    return tables_[static_cast<std::size_t>(scale_index * kOffsetLevels + offset_index)];
  }
  const CdfTable& lookup(double mean, double sigma) const { return table(scale_index(sigma), offset_index(mean)); }

 private:
  std::vector<double> scales_;
  std::vector<CdfTable> tables_;
};

}  // namespace iat::rans
