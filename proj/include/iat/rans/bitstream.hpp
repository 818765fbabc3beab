#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "iat/error.hpp"

namespace iat::rans {

inline constexpr std::uint8_t kBitstreamVersion = 1;
inline constexpr std::uint8_t kFlagUniformLevel = 1u << 0;
inline constexpr std::uint8_t kFlagPadded = 1u << 1;
/// magic + version + flags + width + height + hash.
inline constexpr std::size_t kFixedHeaderBytes = 4 + 1 + 1 + 2 + 2 + 8;

enum class BitstreamFault {
  kBadMagic,
  kBadVersion,
  kUnknownFlags,
  kTruncated,
  kLengthMismatch,
  kInvalidField,
  kModelMismatch,
};

std::string to_string(BitstreamFault fault);

class BitstreamError : public Error {
 public:
  BitstreamError(BitstreamFault fault, const std::string& detail)
      : Error("bitstream: " + to_string(fault) + ": " + detail), fault_(fault) {}
  BitstreamFault fault() const { return fault_; }

 private:
  BitstreamFault fault_;
};

/// Everything a decoder needs besides the model. width and height are the
/// original image dimensions; padded marks that the coded latents cover a
/// reflect-padded canvas.
struct Bitstream {
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  bool padded = false;
  std::uint64_t model_hash = 0;
  /// One byte when uniform, otherwise width * height row-major levels.
  bool uniform_level = true;
  std::vector<std::uint8_t> levels;
  std::vector<std::uint8_t> z_payload;
  std::vector<std::uint8_t> y_payload;

  std::size_t header_size() const;
  bool operator==(const Bitstream&) const = default;
};

std::vector<std::uint8_t> serialize(const Bitstream& stream);
/// Rejects anything that is not exactly one well-formed container.
Bitstream parse(std::span<const std::uint8_t> bytes);

}  // namespace iat::rans
