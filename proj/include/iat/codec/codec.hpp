#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "iat/activation/quality_level.hpp"
#include "iat/image.hpp"
#include "iat/model.hpp"
#include "iat/rans/bitstream.hpp"

namespace iat::codec {

/// Encoder and decoder around one trained model. The model is held in
/// double precision whatever precision it was trained in.
class Codec {
 public:
  explicit Codec(const CodecModel<float>& trained);
  explicit Codec(const CodecModel<double>& model);

  /// Images are reflect-padded to a multiple of alignment() before the
  /// transform; the header keeps the original size and the level map.
  /// Throws ShapeError when the level map and image sizes differ or an
  /// image side exceeds 65535.
  std::vector<std::uint8_t> encode(const Image& image, const QualityLevel& level) const;

  /// Decodes with the level map stored in the stream. Throws BitstreamError
  /// on malformed input or when the stream was made by another model.
  Image decode(std::span<const std::uint8_t> bytes) const;

  /// Canvas multiple: 2^scales for the transform times 4 for the two
  /// stride-2 stages of the hyperprior.
  int alignment() const;
  std::uint64_t model_hash() const { return hash_; }
  const CodecModel<double>& model() const { return *model_; }

 private:
  std::unique_ptr<CodecModel<double>> model_;
  std::uint64_t hash_ = 0;
};

/// Decodes a stream file into an image file. Nothing is written unless
/// decoding succeeds, and the image itself is written atomically.
Image decode_file(const Codec& codec, const std::string& stream_path, const std::string& image_path);

/// Coded size of a stream in bits per original pixel.
double bits_per_pixel(std::span<const std::uint8_t> bytes, int width, int height);

}  // namespace iat::codec
