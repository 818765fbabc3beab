#pragma once

#include <vector>

#include "iat/activation/iat.hpp"
#include "iat/inn/blocks.hpp"
#include "iat/inn/config.hpp"

namespace iat::inn {

/// Analysis transform y = g_a(x, L) and synthesis x_hat = g_s(y_hat, L).
///
/// Encoder: dense enhancement, then per scale a space-to-depth followed by
/// coupling blocks, each with an IAT layer conditioned on L pooled to that
/// scale, then the attention channel squeeze. The synthesis runs the INN
/// section backwards; the dense block has no decoder-side counterpart.
template <class T>
class Transform {
 public:
  Transform() = default;
  Transform(nn::ParameterStore<T>& store, const ArchitectureConfig& config, Rng& rng);

  /// x: N x 3 x H x W, level: N x 1 x H x W (values on the level grid).
  Tensor<T> analysis(const Tensor<T>& x, const Tensor<T>& level) const;
  /// Output clamped to [0, 1].
  Tensor<T> synthesis(const Tensor<T>& y_hat, const Tensor<T>& level) const;
  /// Synthesis without the final clamp (used by the training loss).
  Tensor<T> synthesis_raw(const Tensor<T>& y_hat, const Tensor<T>& level) const;

  /// INN section only: u -> pre-squeeze latent, and its inverse.
  Tensor<T> inn_forward(const Tensor<T>& u, const Tensor<T>& level) const;
  Tensor<T> inn_inverse(const Tensor<T>& t, const Tensor<T>& level) const;

  const DenseBlock<T>& dense() const { return dense_; }
  const ChannelSqueeze<T>& channel_squeeze() const { return squeeze_; }
  const CouplingBlock<T>& coupling(int scale, int block) const { return stages_[scale][block].coupling; }
  const Conditioner<T>& conditioner(int scale, int block) const { return stages_[scale][block].condition; }
  /// L average-pooled to the resolution of scale index k (0-based).
  Tensor<T> pooled_level(const Tensor<T>& level, int scale) const;

 private:
  struct Stage {
    CouplingBlock<T> coupling;
    Conditioner<T> condition;
  };

  void check_level(const Tensor<T>& level, std::int64_t batch, std::int64_t h, std::int64_t w) const;

  ArchitectureConfig config_;
  DenseBlock<T> dense_;
  std::vector<std::vector<Stage>> stages_;
  ChannelSqueeze<T> squeeze_;
};

}  // namespace iat::inn
