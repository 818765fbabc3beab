#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iat/tensor/tensor.hpp"

namespace iat {

/// 8-bit interleaved RGB raster.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, 3 bytes per pixel

  Image() = default;
  Image(int w, int h);

  std::uint8_t& at(int x, int y, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  std::uint8_t at(int x, int y, int c) const { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }

  /// Reflect-pads (without repeating the edge pixel) to at least w x h.
  Image padded_reflect(int w, int h) const;
  Image cropped(int w, int h) const;

  bool operator==(const Image&) const = default;
};

/// Loads PNG (8/16-bit, gray/RGB, alpha dropped) or binary PPM (P6, maxval 255).
Image load_image(const std::string& path);
/// Format chosen by extension: .png, otherwise PPM. Written through a
/// temporary file and renamed, so a failed write leaves nothing behind.
void save_image(const Image& image, const std::string& path);

/// 1 x 3 x H x W tensor in [0, 1].
template <class T>
Tensor<T> image_to_tensor(const Image& image);
/// Rounds [0, 1] values to 8 bits (clamping first). Batch index 0 only.
template <class T>
Image tensor_to_image(const Tensor<T>& tensor);

/// Writes bytes to path via a temporary sibling and an atomic rename.
void write_file_atomic(const std::string& path, const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_file(const std::string& path);

}  // namespace iat
