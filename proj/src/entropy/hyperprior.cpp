#include "iat/entropy/hyperprior.hpp"

#include <algorithm>
#include <cmath>

#include "iat/entropy/gaussian.hpp"
#include "iat/tensor/conv.hpp"
#include "iat/tensor/ops.hpp"

namespace iat::entropy {

namespace {

constexpr double kSigmaMax = 1e6;

double softplus_ref(double x) { return x > 20.0 ? x : std::log1p(std::exp(x)); }

// Planar C x H x W buffer for the reference path.
struct Planes {
  std::int64_t channels = 0, height = 0, width = 0;
  std::vector<double> v;
};

// 3x3 (or any odd k) stride-1 zero-padded convolution, accumulated in a
// fixed order.
template <class T>
Planes conv_ref(const Planes& in, const nn::Conv2d<T>& layer) {
  const auto& shape = layer.weight.shape();
  const std::int64_t out_c = shape[0];
  const std::int64_t k = shape[2];
  const std::int64_t pad = k / 2;
  const auto w = layer.weight.data();
  const auto b = layer.bias.data();
  Planes out{out_c, in.height, in.width, std::vector<double>(static_cast<std::size_t>(out_c * in.height * in.width))};
  for (std::int64_t co = 0; co < out_c; ++co) {
    for (std::int64_t y = 0; y < in.height; ++y) {
      for (std::int64_t x = 0; x < in.width; ++x) {
        double acc = b[co];
        for (std::int64_t ci = 0; ci < in.channels; ++ci) {
          for (std::int64_t ky = 0; ky < k; ++ky) {
            const std::int64_t sy = y + ky - pad;
            if (sy < 0 || sy >= in.height) continue;
            for (std::int64_t kx = 0; kx < k; ++kx) {
              const std::int64_t sx = x + kx - pad;
              if (sx < 0 || sx >= in.width) continue;
              acc += static_cast<double>(w[((co * in.channels + ci) * k + ky) * k + kx]) *
                     in.v[(ci * in.height + sy) * in.width + sx];
            }
          }
        }
        out.v[(co * in.height + y) * in.width + x] = acc;
      }
    }
  }
  return out;
}

Planes depth_to_space_ref(const Planes& in) {
  Planes out{in.channels / 4, in.height * 2, in.width * 2, std::vector<double>(in.v.size())};
  for (std::int64_t c = 0; c < out.channels; ++c) {
    for (std::int64_t dy = 0; dy < 2; ++dy) {
      for (std::int64_t dx = 0; dx < 2; ++dx) {
        const std::int64_t ic = 4 * c + 2 * dy + dx;
        for (std::int64_t i = 0; i < in.height; ++i) {
          for (std::int64_t j = 0; j < in.width; ++j) {
            out.v[(c * out.height + 2 * i + dy) * out.width + 2 * j + dx] = in.v[(ic * in.height + i) * in.width + j];
          }
        }
      }
    }
  }
  return out;
}

}  // namespace

template <class T>
HyperPrior<T>::HyperPrior(nn::ParameterStore<T>& store, const inn::ArchitectureConfig& config, Rng& rng)
    : latent_channels_(config.latent_channels) {
  const std::int64_t m = config.latent_channels;
  const std::int64_t hidden = config.hyper_hidden;
  const std::int64_t z = config.hyper_channels;
  const ConvOptions down{2, 1, PadMode::kZeros};
  analysis0_ = nn::Conv2d<T>::create(store, "hyper.analysis0", m, hidden, 3, rng, nn::Init::kHeUniform, down);
  analysis1_ = nn::Conv2d<T>::create(store, "hyper.analysis1", hidden, z, 3, rng, nn::Init::kHeUniform, down);
  synthesis0_ = nn::Conv2d<T>::create(store, "hyper.synthesis0", z, 4 * hidden, 3, rng);
  synthesis1_ = nn::Conv2d<T>::create(store, "hyper.synthesis1", hidden, 4 * 2 * m, 3, rng);
}

template <class T>
Tensor<T> HyperPrior<T>::analysis(const Tensor<T>& y) const {
  if (y.rank() != 4 || y.dim(1) != latent_channels_) {
    throw ShapeError("hyper_analysis expects " + std::to_string(latent_channels_) + " channels, got " +
                     to_string(y.shape()));
  }
  return analysis1_(leaky_relu(analysis0_(abs(y))));
}

template <class T>
GaussianTensors<T> HyperPrior<T>::synthesis(const Tensor<T>& z_hat) const {
  Tensor<T> h = leaky_relu(depth_to_space(synthesis0_(z_hat)));
  Tensor<T> params = depth_to_space(synthesis1_(h));
  Tensor<T> mean = slice_channels(params, 0, latent_channels_);
  Tensor<T> scale = clamp(softplus(slice_channels(params, latent_channels_, 2 * latent_channels_)),
                          T(kSigmaMin), T(kSigmaMax));
  return {mean, scale};
}

template <class T>
GaussianArrays HyperPrior<T>::synthesis_reference(const std::vector<double>& z_hat, const Shape& z_shape) const {
  if (z_shape.size() != 3 || numel(z_shape) != static_cast<std::int64_t>(z_hat.size())) {
    throw ShapeError("synthesis_reference expects C x h x w side information, got " + to_string(z_shape));
  }
  Planes h{z_shape[0], z_shape[1], z_shape[2], z_hat};
  h = depth_to_space_ref(conv_ref(h, synthesis0_));
  for (auto& v : h.v) v = v > 0 ? v : kLeakySlope * v;
  const Planes p = depth_to_space_ref(conv_ref(h, synthesis1_));
  const std::size_t half = static_cast<std::size_t>(latent_channels_ * p.height * p.width);
  GaussianArrays out;
  out.shape = {latent_channels_, p.height, p.width};
  out.mean.assign(p.v.begin(), p.v.begin() + static_cast<std::ptrdiff_t>(half));
  out.scale.resize(half);
  for (std::size_t i = 0; i < half; ++i) out.scale[i] = std::clamp(softplus_ref(p.v[half + i]), kSigmaMin, kSigmaMax);
  return out;
}

template <class T>
ZPrior<T>::ZPrior(nn::ParameterStore<T>& store, std::int64_t channels) {
  mean_ = store.add("zprior.mean", {channels}, std::vector<T>(static_cast<std::size_t>(channels), T(0)));
  log_scale_ = store.add("zprior.log_scale", {channels}, std::vector<T>(static_cast<std::size_t>(channels), T(0)));
}

template <class T>
GaussianTensors<T> ZPrior<T>::params_like(const Tensor<T>& z_hat) const {
  const std::int64_t c = mean_.size();
  if (z_hat.rank() != 4 || z_hat.dim(1) != c) {
    throw ShapeError("z prior has " + std::to_string(c) + " channels, got " + to_string(z_hat.shape()));
  }
  Tensor<T> mean = broadcast_to(reshape(mean_, {1, c, 1, 1}), z_hat.shape());
  Tensor<T> scale = clamp(exp(log_scale_), T(kSigmaMin), T(kSigmaMax));
  scale = broadcast_to(reshape(scale, {1, c, 1, 1}), z_hat.shape());
  return {mean, scale};
}

template <class T>
double ZPrior<T>::mean(std::int64_t channel) const {
  return static_cast<double>(mean_.at(channel));
}

template <class T>
double ZPrior<T>::scale(std::int64_t channel) const {
  return std::clamp(std::exp(static_cast<double>(log_scale_.at(channel))), kSigmaMin, kSigmaMax);
}

template class HyperPrior<float>;
template class HyperPrior<double>;
template class ZPrior<float>;
template class ZPrior<double>;

}  // namespace iat::entropy
