#include "iat/inn/blocks.hpp"

#include <cmath>

#include "iat/tensor/conv.hpp"
#include "iat/tensor/ops.hpp"

namespace iat::inn {

template <class T>
DenseBlock<T>::DenseBlock(nn::ParameterStore<T>& store, const std::string& name, int layers, int growth,
                          Rng& rng) {
  std::int64_t channels = 3;
  for (int i = 0; i < layers; ++i) {
    layers_.push_back(nn::Conv2d<T>::create(store, name + ".layer" + std::to_string(i), channels, growth, 3, rng));
    channels += growth;
  }
  output_ = nn::Conv2d<T>::create(store, name + ".out", channels, 3, 3, rng, nn::Init::kZero);
}

template <class T>
Tensor<T> DenseBlock<T>::enhance(const Tensor<T>& x) const {
  if (x.rank() != 4 || x.dim(1) != 3) {
    throw ShapeError("dense_enhance expects N x 3 x H x W, got " + to_string(x.shape()));
  }
  std::vector<Tensor<T>> features{x};
  for (const auto& layer : layers_) features.push_back(leaky_relu(layer(concat_channels(features))));
  return add(x, output_(concat_channels(features)));
}

template <class T>
CouplingBlock<T>::CouplingBlock(nn::ParameterStore<T>& store, const std::string& name, std::int64_t channels,
                                std::int64_t hidden, double smax, bool passive_first, Rng& rng)
    : channels_(channels), smax_(smax), passive_first_(passive_first) {
  if (channels % 2 != 0) throw ShapeError("coupling block needs an even channel count");
  const std::int64_t half = channels / 2;
  scale0_ = nn::Conv2d<T>::create(store, name + ".scale0", half, hidden, 3, rng);
  scale1_ = nn::Conv2d<T>::create(store, name + ".scale1", hidden, half, 3, rng, nn::Init::kZero);
  shift0_ = nn::Conv2d<T>::create(store, name + ".shift0", half, hidden, 3, rng);
  shift1_ = nn::Conv2d<T>::create(store, name + ".shift1", hidden, half, 3, rng, nn::Init::kZero);
}

template <class T>
typename CouplingBlock<T>::Halves CouplingBlock<T>::split(const Tensor<T>& t) const {
  if (t.rank() != 4 || t.dim(1) % 2 != 0) {
    throw ShapeError("coupling expects N x C x H x W with even C, got " + to_string(t.shape()));
  }
  if (t.dim(1) != channels_) {
    throw ShapeError("coupling built for " + std::to_string(channels_) + " channels, got " + to_string(t.shape()));
  }
  const std::int64_t half = channels_ / 2;
  Tensor<T> first = slice_channels(t, 0, half);
  Tensor<T> second = slice_channels(t, half, channels_);
  return passive_first_ ? Halves{first, second} : Halves{second, first};
}

template <class T>
Tensor<T> CouplingBlock<T>::merge(const Tensor<T>& passive, const Tensor<T>& active) const {
  return passive_first_ ? concat_channels<T>({passive, active}) : concat_channels<T>({active, passive});
}

template <class T>
Tensor<T> CouplingBlock<T>::log_scale(const Tensor<T>& passive) const {
  return mul(tanh(scale1_(leaky_relu(scale0_(passive)))), static_cast<T>(smax_));
}

template <class T>
Tensor<T> CouplingBlock<T>::shift(const Tensor<T>& passive) const {
  return shift1_(leaky_relu(shift0_(passive)));
}

template <class T>
Tensor<T> CouplingBlock<T>::forward(const Tensor<T>& t) const {
  auto [passive, active] = split(t);
  Tensor<T> out = add(mul(active, exp(log_scale(passive))), shift(passive));
  return merge(passive, out);
}

template <class T>
Tensor<T> CouplingBlock<T>::inverse(const Tensor<T>& t) const {
  auto [passive, active] = split(t);
  Tensor<T> out = mul(sub(active, shift(passive)), exp(neg(log_scale(passive))));
  return merge(passive, out);
}

template <class T>
Tensor<T> squeeze2(const Tensor<T>& t) {
  return space_to_depth(t);
}

template <class T>
Tensor<T> unsqueeze2(const Tensor<T>& t) {
  return depth_to_space(t);
}

template <class T>
ChannelSqueeze<T>::ChannelSqueeze(nn::ParameterStore<T>& store, const std::string& name, std::int64_t channels,
                                  std::int64_t groups)
    : channels_(channels) {
  if (groups < 1 || channels % groups != 0) {
    throw ShapeError("channel squeeze: " + std::to_string(channels) + " channels not divisible by " +
                     std::to_string(groups));
  }
  ratio_ = channels / groups;
  if (ratio_ > 1) {
    logits_ = store.add(name + ".logits", {channels}, std::vector<T>(static_cast<std::size_t>(channels), T(0)));
  }
}

template <class T>
Tensor<T> ChannelSqueeze<T>::squeeze(const Tensor<T>& t) const {
  if (t.rank() != 4 || t.dim(1) != channels_) {
    throw ShapeError("channel squeeze expects " + std::to_string(channels_) + " channels, got " +
                     to_string(t.shape()));
  }
  if (ratio_ == 1) return t;
  return grouped_softmax_average(t, logits_, ratio_);
}

template <class T>
Tensor<T> ChannelSqueeze<T>::unsqueeze(const Tensor<T>& t) const {
  if (t.rank() != 4 || t.dim(1) * ratio_ != channels_) {
    throw ShapeError("channel unsqueeze expects " + std::to_string(channels_ / ratio_) + " channels, got " +
                     to_string(t.shape()));
  }
  if (ratio_ == 1) return t;
  return replicate_channels(t, ratio_);
}

namespace {

template <class T>
std::vector<double> group_softmax(std::span<const T> logits, std::int64_t ratio) {
  std::vector<double> w(logits.size());
  for (std::size_t g = 0; g < logits.size(); g += static_cast<std::size_t>(ratio)) {
    double top = logits[g];
    for (std::int64_t j = 1; j < ratio; ++j) top = std::max(top, static_cast<double>(logits[g + j]));
    double total = 0;
    for (std::int64_t j = 0; j < ratio; ++j) total += (w[g + j] = std::exp(logits[g + j] - top));
    for (std::int64_t j = 0; j < ratio; ++j) w[g + j] /= total;
  }
  return w;
}

}  // namespace

template <class T>
std::vector<double> ChannelSqueeze<T>::weights() const {
  if (ratio_ == 1) return std::vector<double>(static_cast<std::size_t>(channels_), 1.0);
  return group_softmax(logits_.data(), ratio_);
}

template <class T>
Tensor<T> grouped_softmax_average(const Tensor<T>& x, const Tensor<T>& logits, std::int64_t ratio) {
  if (x.rank() != 4 || ratio < 1 || x.dim(1) % ratio != 0 || logits.size() != x.dim(1)) {
    throw ShapeError("grouped_softmax_average: x " + to_string(x.shape()) + ", logits " +
                     to_string(logits.shape()) + ", ratio " + std::to_string(ratio));
  }
  const std::int64_t batch = x.dim(0);
  const std::int64_t channels = x.dim(1);
  const std::int64_t groups = channels / ratio;
  const std::int64_t plane = x.dim(2) * x.dim(3);
  const std::vector<double> w = group_softmax(logits.data(), ratio);
  const auto xd = x.data();
  std::vector<T> out(static_cast<std::size_t>(batch * groups * plane), T(0));
  for (std::int64_t n = 0; n < batch; ++n) {
    for (std::int64_t c = 0; c < channels; ++c) {
      const T wc = static_cast<T>(w[c]);
      T* dst = out.data() + (n * groups + c / ratio) * plane;
      const T* src = xd.data() + (n * channels + c) * plane;
      for (std::int64_t p = 0; p < plane; ++p) dst[p] += wc * src[p];
    }
  }
  return detail::make_result<T>(
      "grouped_softmax_average", {batch, groups, x.dim(2), x.dim(3)}, std::move(out), {x, logits},
      [=](detail::Node<T>& self) {
        auto& nx = *self.inputs[0];
        auto& nl = *self.inputs[1];
        // d out_g / d w_c = x_c summed over positions.
        std::vector<double> grad_w(static_cast<std::size_t>(channels), 0.0);
        for (std::int64_t n = 0; n < batch; ++n) {
          for (std::int64_t c = 0; c < channels; ++c) {
            const T* g = self.grad.data() + (n * groups + c / ratio) * plane;
            const T* src = nx.data.data() + (n * channels + c) * plane;
            double acc = 0;
            for (std::int64_t p = 0; p < plane; ++p) acc += static_cast<double>(g[p]) * src[p];
            grad_w[c] += acc;
            if (nx.requires_grad) {
              T* gx = nx.grad_buffer().data() + (n * channels + c) * plane;
              const T wc = static_cast<T>(w[c]);
              for (std::int64_t p = 0; p < plane; ++p) gx[p] += wc * g[p];
            }
          }
        }
        if (nl.requires_grad) {
          auto& gl = nl.grad_buffer();
          for (std::int64_t grp = 0; grp < groups; ++grp) {
            double dot = 0;
            for (std::int64_t j = 0; j < ratio; ++j) dot += w[grp * ratio + j] * grad_w[grp * ratio + j];
            for (std::int64_t j = 0; j < ratio; ++j) {
              const std::int64_t c = grp * ratio + j;
              gl[c] += static_cast<T>(w[c] * (grad_w[c] - dot));
            }
          }
        }
      });
}

template <class T>
Tensor<T> replicate_channels(const Tensor<T>& x, std::int64_t ratio) {
  const std::int64_t n = x.dim(0);
  const std::int64_t c = x.dim(1);
  const std::int64_t plane = x.dim(2) * x.dim(3);
  Tensor<T> grouped = reshape(x, {n, c, 1, plane});
  Tensor<T> repeated = broadcast_to(grouped, {n, c, ratio, plane});
  return reshape(repeated, {n, c * ratio, x.dim(2), x.dim(3)});
}

#define IAT_INSTANTIATE_BLOCKS(T)                                                          \
  template class DenseBlock<T>;                                                            \
  template class CouplingBlock<T>;                                                         \
  template class ChannelSqueeze<T>;                                                        \
  template Tensor<T> squeeze2(const Tensor<T>&);                                           \
  template Tensor<T> unsqueeze2(const Tensor<T>&);                                         \
  template Tensor<T> grouped_softmax_average(const Tensor<T>&, const Tensor<T>&, std::int64_t); \
  template Tensor<T> replicate_channels(const Tensor<T>&, std::int64_t);

IAT_INSTANTIATE_BLOCKS(float)
IAT_INSTANTIATE_BLOCKS(double)

#undef IAT_INSTANTIATE_BLOCKS

}  // namespace iat::inn
