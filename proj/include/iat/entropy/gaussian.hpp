#pragma once

#include "iat/rng.hpp"
#include "iat/tensor/tensor.hpp"

namespace iat::entropy {

/// Smallest standard deviation used anywhere in the entropy model.
inline constexpr double kSigmaMin = 0.11;
/// Per-element cost cap; probabilities below 2^-50 are floored.
inline constexpr double kMaxBitsPerElement = 50.0;

enum class QuantMode {
  kNoise,  // training: y + U(-0.5, 0.5)
  kRound,  // test: nearest integer, ties away from zero
};

/// Noise mode draws one uniform offset per element from rng; the offset is
/// a constant, so gradients pass straight through. Round mode returns a
/// detached tensor.
template <class T>
Tensor<T> quantize(const Tensor<T>& y, QuantMode mode, Rng& rng);

/// Mass of the unit-width bin centred on v under N(mu, sigma^2).
double gaussian_bin_probability(double v, double mu, double sigma);

/// Element-wise -log2 of the bin mass, capped at kMaxBitsPerElement.
/// All three tensors share one shape; sigma must be >= kSigmaMin. The
/// result is differentiable in v, mu and sigma.
template <class T>
Tensor<T> gaussian_bits(const Tensor<T>& v, const Tensor<T>& mu, const Tensor<T>& sigma);

}  // namespace iat::entropy
