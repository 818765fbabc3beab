#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "iat/tensor/tensor.hpp"

namespace iat {

/// Per-pixel quality level on the 256-step grid {0, 1/255, ..., 1}.
///
/// Levels are stored as bytes, so every instance is canonical by
/// construction and encoder and decoder see the exact same values.
class QualityLevel {
 public:
  static constexpr int kSteps = 255;

  QualityLevel() = default;

  static QualityLevel uniform(double value, int width, int height);
  static QualityLevel from_levels(int width, int height, std::vector<std::uint8_t> levels);
  /// Canonicalizes real values (clamped to [0, 1], rounded to the grid).
  static QualityLevel from_values(int width, int height, std::span<const double> values);

  int width() const { return width_; }
  int height() const { return height_; }
  bool is_uniform() const;
  std::uint8_t level(int x, int y) const { return levels_[static_cast<std::size_t>(y) * width_ + x]; }
  double value(int x, int y) const { return level(x, y) / double(kSteps); }
  const std::vector<std::uint8_t>& levels() const { return levels_; }
  double mean() const;

  /// Reflect-pads (or crops) to the given extent, matching image padding.
  QualityLevel resized_reflect(int width, int height) const;

  /// 1 x 1 x H x W tensor of level values.
  template <class T>
  Tensor<T> to_tensor() const;

  bool operator==(const QualityLevel&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> levels_;
};

/// Nearest grid value of v clamped to [0, 1]. Idempotent.
double canonical_level(double v);
std::uint8_t level_byte(double v);

/// Stacks maps of identical extent into an N x 1 x H x W tensor.
template <class T>
Tensor<T> stack_quality_levels(std::span<const QualityLevel> levels);

}  // namespace iat
