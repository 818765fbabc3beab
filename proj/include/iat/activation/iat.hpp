#pragma once

// Invertible activation transformation: e = s * beta + gamma and its exact
// inverse s = (e - gamma) / beta, with (beta, gamma) generated per element
// from the quality-level map.

#include <string>

#include "iat/nn/layers.hpp"
#include "iat/tensor/tensor.hpp"

namespace iat {

/// Lower bound on beta guaranteed by the exp(clamp(raw)) parameterization.
inline constexpr double kBetaFloor = 1e-3;
/// Bound on the raw log-scale; exp(-6.9) ~ 1.0078e-3 >= kBetaFloor.
inline constexpr double kRawBetaLimit = 6.9;

template <class T>
struct ActivationParams {
  Tensor<T> beta;   // N x c x h x w, >= kBetaFloor
  Tensor<T> gamma;  // N x c x h x w
};

/// How the quality level reaches the activation parameters.
enum class QLevelRepr {
  kTensor,  // per-pixel map through a conv stack (spatial feature transform)
  kScalar,  // mean level only; one gain/offset per channel (ablation)
};

std::string to_string(QLevelRepr repr);
QLevelRepr parse_qlevel_repr(const std::string& text);

/// Conditioning network for one IAT layer.
///
/// kTensor: pooled L -> conv3x3(1->hidden) -> leaky ReLU -> conv3x3(hidden->2c).
/// Both convs pad by edge replication, so a constant map yields spatially
/// constant parameters. The second conv starts at zero (identity IAT).
template <class T>
class Conditioner {
 public:
  Conditioner() = default;
  Conditioner(nn::ParameterStore<T>& store, const std::string& name, std::int64_t channels,
              std::int64_t hidden, QLevelRepr repr, Rng& rng);

  /// pooled_level: N x 1 x h x w, already at the feature's resolution.
  ActivationParams<T> operator()(const Tensor<T>& pooled_level) const;

  std::int64_t channels() const { return channels_; }

 private:
  std::int64_t channels_ = 0;
  QLevelRepr repr_ = QLevelRepr::kTensor;
  nn::Conv2d<T> first_;
  nn::Conv2d<T> second_;
};

/// e = s (.) beta (+) gamma
template <class T>
Tensor<T> iat_forward(const Tensor<T>& s, const ActivationParams<T>& p);

/// s = (e (-) gamma) (/) beta. Throws NumericError if beta < kBetaFloor.
template <class T>
Tensor<T> iat_inverse(const Tensor<T>& e, const ActivationParams<T>& p);

}  // namespace iat
