#pragma once

#include <string>
#include <vector>

#include "iat/nn/layers.hpp"
#include "iat/tensor/tensor.hpp"

namespace iat::inn {

/// Residual dense block on the encoder input: u = x + f(x), where f is a
/// densely connected conv stack whose output layer starts at zero.
template <class T>
class DenseBlock {
 public:
  DenseBlock() = default;
  DenseBlock(nn::ParameterStore<T>& store, const std::string& name, int layers, int growth, Rng& rng);

  /// x: N x 3 x H x W in [0, 1].
  Tensor<T> enhance(const Tensor<T>& x) const;

 private:
  std::vector<nn::Conv2d<T>> layers_;
  nn::Conv2d<T> output_;
};

/// Affine coupling: the active channel half becomes
///   a * exp(smax * tanh(S(p))) + T(p)
/// where p is the passive half. S and T are two-layer conv nets whose last
/// layers start at zero, so a fresh block is the identity.
template <class T>
class CouplingBlock {
 public:
  CouplingBlock() = default;
  CouplingBlock(nn::ParameterStore<T>& store, const std::string& name, std::int64_t channels,
                std::int64_t hidden, double smax, bool passive_first, Rng& rng);

  Tensor<T> forward(const Tensor<T>& t) const;
  Tensor<T> inverse(const Tensor<T>& t) const;

  bool passive_first() const { return passive_first_; }
  double smax() const { return smax_; }

 private:
  struct Halves {
    Tensor<T> passive;
    Tensor<T> active;
  };
  Halves split(const Tensor<T>& t) const;
  Tensor<T> merge(const Tensor<T>& passive, const Tensor<T>& active) const;
  Tensor<T> log_scale(const Tensor<T>& passive) const;
  Tensor<T> shift(const Tensor<T>& passive) const;

  std::int64_t channels_ = 0;
  double smax_ = 2.0;
  bool passive_first_ = true;
  nn::Conv2d<T> scale0_, scale1_, shift0_, shift1_;
};

/// Space-to-depth by 2 (c x h x w -> 4c x h/2 x w/2); a pure permutation.
template <class T>
Tensor<T> squeeze2(const Tensor<T>& t);
template <class T>
Tensor<T> unsqueeze2(const Tensor<T>& t);

/// Attention channel squeeze: groups of r consecutive channels collapse to
/// their softmax-weighted average; unsqueeze replicates each channel r times.
template <class T>
class ChannelSqueeze {
 public:
  ChannelSqueeze() = default;
  ChannelSqueeze(nn::ParameterStore<T>& store, const std::string& name, std::int64_t channels,
                 std::int64_t groups);

  Tensor<T> squeeze(const Tensor<T>& t) const;
  Tensor<T> unsqueeze(const Tensor<T>& t) const;

  std::int64_t ratio() const { return ratio_; }
  /// Softmax weights inside each group, length = input channels.
  std::vector<double> weights() const;
  const Tensor<T>& logits() const { return logits_; }

 private:
  std::int64_t channels_ = 0;
  std::int64_t ratio_ = 1;
  Tensor<T> logits_;
};

/// Weighted sum over groups of r channels with softmax(logits) weights.
/// x: N x C x H x W, logits: C. Result: N x C/r x H x W.
template <class T>
Tensor<T> grouped_softmax_average(const Tensor<T>& x, const Tensor<T>& logits, std::int64_t ratio);

/// Channel c of the result is channel c / r of the input.
template <class T>
Tensor<T> replicate_channels(const Tensor<T>& x, std::int64_t ratio);

}  // namespace iat::inn
