#include "iat/activation/quality_level.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace iat {

double canonical_level(double v) { return level_byte(v) / double(QualityLevel::kSteps); }

std::uint8_t level_byte(double v) {
  if (std::isnan(v)) throw NumericError("quality level is NaN");
  const double clamped = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(clamped * QualityLevel::kSteps));
}

QualityLevel QualityLevel::uniform(double value, int width, int height) {
  if (width <= 0 || height <= 0) throw ShapeError("quality level needs positive extent");
  return from_levels(width, height,
                     std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, level_byte(value)));
}

QualityLevel QualityLevel::from_levels(int width, int height, std::vector<std::uint8_t> levels) {
  if (width <= 0 || height <= 0 || levels.size() != static_cast<std::size_t>(width) * height) {
    throw ShapeError("quality level map of " + std::to_string(levels.size()) + " entries for " +
                     std::to_string(width) + "x" + std::to_string(height));
  }
  QualityLevel q;
  q.width_ = width;
  q.height_ = height;
  q.levels_ = std::move(levels);
  return q;
}

QualityLevel QualityLevel::from_values(int width, int height, std::span<const double> values) {
  std::vector<std::uint8_t> levels(values.size());
  std::transform(values.begin(), values.end(), levels.begin(), level_byte);
  return from_levels(width, height, std::move(levels));
}

bool QualityLevel::is_uniform() const {
  return std::adjacent_find(levels_.begin(), levels_.end(), std::not_equal_to<>()) == levels_.end();
}

double QualityLevel::mean() const {
  double total = 0;
  for (auto l : levels_) total += l;
  return total / (static_cast<double>(levels_.size()) * kSteps);
}

namespace {

int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace

QualityLevel QualityLevel::resized_reflect(int width, int height) const {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) out[static_cast<std::size_t>(y) * width + x] = level(reflect(x, width_), reflect(y, height_));
  }
  return from_levels(width, height, std::move(out));
}

template <class T>
Tensor<T> QualityLevel::to_tensor() const {
  std::vector<T> values(levels_.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<T>(levels_[i]) / static_cast<T>(kSteps);
  return Tensor<T>::from({1, 1, height_, width_}, std::move(values));
}

template <class T>
Tensor<T> stack_quality_levels(std::span<const QualityLevel> levels) {
  if (levels.empty()) throw ShapeError("no quality levels to stack");
  const int w = levels.front().width();
  const int h = levels.front().height();
  std::vector<T> values;
  values.reserve(levels.size() * static_cast<std::size_t>(w) * h);
  for (const auto& q : levels) {
    if (q.width() != w || q.height() != h) throw ShapeError("quality levels differ in extent");
    for (auto l : q.levels()) values.push_back(static_cast<T>(l) / static_cast<T>(QualityLevel::kSteps));
  }
  return Tensor<T>::from({static_cast<std::int64_t>(levels.size()), 1, h, w}, std::move(values));
}

template Tensor<float> QualityLevel::to_tensor<float>() const;
template Tensor<double> QualityLevel::to_tensor<double>() const;
template Tensor<float> stack_quality_levels<float>(std::span<const QualityLevel>);
template Tensor<double> stack_quality_levels<double>(std::span<const QualityLevel>);

}  // namespace iat
