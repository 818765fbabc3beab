#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "iat/error.hpp"
#include "iat/rans/cdf.hpp"

namespace iat::rans {

/// Raised when a stream does not decode cleanly: truncated input, leftover
/// bytes, or a final state that does not match the encoder's initial state.
class CorruptStream : public Error {
 public:
  using Error::Error;
};

/// Escaped values are written as raw 16-bit two's complement fields.
inline constexpr int kEscapeBits = 16;
inline constexpr int kEscapeMin = -(1 << (kEscapeBits - 1));
inline constexpr int kEscapeMax = (1 << (kEscapeBits - 1)) - 1;

/// Encodes values[i] with tables[i]. Out-of-support values go through the
/// table's escape slot.
std::vector<std::uint8_t> rans_encode(std::span<const int> values, std::span<const CdfTable* const> tables);

/// Decodes exactly tables.size() values.
std::vector<int> rans_decode(std::span<const std::uint8_t> bytes, std::span<const CdfTable* const> tables);

/// Ideal code length in bits under the quantized tables, escapes included.
double shannon_bits(std::span<const int> values, std::span<const CdfTable* const> tables);

/// Integer latents under per-element Gaussians, coded as residuals
/// v - round(mu) against the shared GaussianTableBank.
std::vector<std::uint8_t> encode_gaussian(std::span<const int> values, std::span<const double> means,
                                          std::span<const double> scales);
std::vector<int> decode_gaussian(std::span<const std::uint8_t> bytes, std::span<const double> means,
                                 std::span<const double> scales);
double gaussian_shannon_bits(std::span<const int> values, std::span<const double> means,
                             std::span<const double> scales);

/// Residual used by the Gaussian stream: value - round(mean), with ties
/// rounded away from zero.
int residual_offset(double mean);

}  // namespace iat::rans
