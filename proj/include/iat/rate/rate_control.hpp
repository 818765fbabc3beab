#pragma once

#include "iat/activation/quality_level.hpp"
#include "iat/config.hpp"
#include "iat/rng.hpp"
#include "iat/tensor/tensor.hpp"

namespace iat::rate {

/// Lambda = theta * exp(tau * L). Keys: theta, tau.
struct RateControlConfig {
  double theta = 0.0012;
  double tau = 4.382;

  void validate() const;
  static RateControlConfig from(const KeyValues& kv);
};

/// V(L) for one level value.
double lambda_of(double level, const RateControlConfig& cfg = {});

/// Lambda tensor: N x channels x H x W, every channel a copy of V(level).
/// level: N x 1 x H x W. The result carries no gradient.
template <class T>
Tensor<T> lambda_map(const Tensor<T>& level, std::int64_t channels, const RateControlConfig& cfg = {});

template <class T>
Tensor<T> lambda_map(const QualityLevel& level, std::int64_t channels, const RateControlConfig& cfg = {});

/// Unit conventions for the loss terms. The defaults evaluate the formula
/// literally (total bits, differences as given). Training uses bits per
/// pixel and differences in 8-bit pixel units, the convention the lambda
/// range was tuned for.
struct LossScaling {
  double rate_scale = 1.0;   // multiplies sum(bits_y) + sum(bits_z)
  double pixel_scale = 1.0;  // multiplies (x - x_hat) before squaring
};

template <class T>
struct RdLoss {
  Tensor<T> total;
  Tensor<T> rate;        // scaled bits
  Tensor<T> distortion;  // sum(lambda * d^2) / T
};

/// Rate plus lambda-weighted mean squared error; T is the element count of x.
template <class T>
RdLoss<T> rd_loss(const Tensor<T>& x, const Tensor<T>& x_hat, const Tensor<T>& bits_y,
                  const Tensor<T>& bits_z, const Tensor<T>& lambda, const LossScaling& scaling = {});

/// Training-time level map. With probability uniform_probability a single
/// U(0,1) value fills the map; otherwise per-pixel U(0,1) noise is box
/// filtered (width smoothing), stretched to span [0, 1], and put on the grid.
QualityLevel sample_training_qlevel(Rng& rng, int height, int width, double uniform_probability = 0.5,
                                    int smoothing = 8);

}  // namespace iat::rate
