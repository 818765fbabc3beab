#pragma once

#include <vector>

#include "iat/inn/config.hpp"
#include "iat/nn/layers.hpp"
#include "iat/tensor/tensor.hpp"

namespace iat::entropy {

template <class T>
struct GaussianTensors {
  Tensor<T> mean;
  Tensor<T> scale;  // >= kSigmaMin
};

/// Plain-array Gaussian parameters for the entropy coder.
struct GaussianArrays {
  Shape shape;
  std::vector<double> mean;
  std::vector<double> scale;
};

/// Hyperprior: z = h_a(|y|) by two stride-2 convs; (mu, sigma) = h_s(z_hat)
/// by two conv + depth-to-space upsampling stages.
template <class T>
class HyperPrior {
 public:
  HyperPrior() = default;
  HyperPrior(nn::ParameterStore<T>& store, const inn::ArchitectureConfig& config, Rng& rng);

  Tensor<T> analysis(const Tensor<T>& y) const;
  GaussianTensors<T> synthesis(const Tensor<T>& z_hat) const;

  /// Same network evaluated with fixed-order double loops, independent of
  /// the GEMM backend. Encoder and decoder both derive coding tables from
  /// this path so they agree bit-for-bit. z_hat: C x h x w integers.
  GaussianArrays synthesis_reference(const std::vector<double>& z_hat, const Shape& z_shape) const;

 private:
  std::int64_t latent_channels_ = 0;
  nn::Conv2d<T> analysis0_, analysis1_, synthesis0_, synthesis1_;
};

/// Learned per-channel Gaussian (mu1, sigma1) for the side information.
template <class T>
class ZPrior {
 public:
  ZPrior() = default;
  ZPrior(nn::ParameterStore<T>& store, std::int64_t channels);

  /// Parameters broadcast to the shape of z_hat (N x C x h x w).
  GaussianTensors<T> params_like(const Tensor<T>& z_hat) const;
  double mean(std::int64_t channel) const;
  double scale(std::int64_t channel) const;

 private:
  Tensor<T> mean_;
  Tensor<T> log_scale_;
};

}  // namespace iat::entropy
