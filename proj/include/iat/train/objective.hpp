#pragma once

#include "iat/model.hpp"
#include "iat/rate/rate_control.hpp"

namespace iat::train {

template <class T>
struct Objective {
  rate::RdLoss<T> loss;
  Tensor<T> x_hat;  // unclamped reconstruction
  double bits = 0;  // sum of y and z bit estimates
};

/// Training forward pass under noise quantization: y and z get additive
/// U(-0.5, 0.5) noise from rng, rates come from the hyperprior and the
/// learned z prior, and distortion is weighted per pixel by V(L).
/// x: N x 3 x H x W in [0, 1]; level: N x 1 x H x W.
template <class T>
Objective<T> training_objective(const CodecModel<T>& model, const Tensor<T>& x, const Tensor<T>& level, Rng& rng,
                                const rate::RateControlConfig& rate_config = {},
                                const rate::LossScaling& scaling = {});

/// Bits per pixel and 8-bit pixel differences, for a batch of x's shape.
rate::LossScaling training_scaling(const Shape& x_shape);

}  // namespace iat::train
