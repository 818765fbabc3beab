#include "iat/inn/transform.hpp"

#include "iat/tensor/conv.hpp"
#include "iat/tensor/ops.hpp"

namespace iat::inn {

template <class T>
Transform<T>::Transform(nn::ParameterStore<T>& store, const ArchitectureConfig& config, Rng& rng)
    : config_(config) {
  config_.validate();
  dense_ = DenseBlock<T>(store, "dense", config.dense_layers, config.dense_growth, rng);
  std::int64_t channels = 3;
  for (int k = 0; k < config.scales; ++k) {
    channels *= 4;
    std::vector<Stage> stage;
    for (int b = 0; b < config.blocks_per_scale; ++b) {
      const std::string name = "inn.s" + std::to_string(k) + ".b" + std::to_string(b);
      Stage s;
      s.coupling = CouplingBlock<T>(store, name, channels, config.coupling_hidden, config.coupling_smax,
                                    b % 2 == 0, rng);
      s.condition = Conditioner<T>(store, name + ".iat", channels, config.condition_hidden, config.qlevel_repr, rng);
      stage.push_back(std::move(s));
    }
    stages_.push_back(std::move(stage));
  }
  squeeze_ = ChannelSqueeze<T>(store, "squeeze", channels, config.latent_channels);
}

template <class T>
void Transform<T>::check_level(const Tensor<T>& level, std::int64_t batch, std::int64_t h, std::int64_t w) const {
  if (level.rank() != 4 || level.dim(0) != batch || level.dim(1) != 1 || level.dim(2) != h || level.dim(3) != w) {
    throw ShapeError("quality level " + to_string(level.shape()) + " does not match image " +
                     std::to_string(batch) + "x" + std::to_string(h) + "x" + std::to_string(w));
  }
}

template <class T>
Tensor<T> Transform<T>::pooled_level(const Tensor<T>& level, int scale) const {
  return avg_pool2d(level, 1 << (scale + 1));
}

template <class T>
Tensor<T> Transform<T>::inn_forward(const Tensor<T>& u, const Tensor<T>& level) const {
  Tensor<T> t = u;
  for (int k = 0; k < config_.scales; ++k) {
    t = squeeze2(t);
    const Tensor<T> pooled = pooled_level(level, k);
    for (const auto& stage : stages_[k]) {
      t = stage.coupling.forward(t);
      t = iat_forward(t, stage.condition(pooled));
    }
  }
  return t;
}

template <class T>
Tensor<T> Transform<T>::inn_inverse(const Tensor<T>& t_in, const Tensor<T>& level) const {
  Tensor<T> t = t_in;
  for (int k = config_.scales - 1; k >= 0; --k) {
    const Tensor<T> pooled = pooled_level(level, k);
    for (auto it = stages_[k].rbegin(); it != stages_[k].rend(); ++it) {
      t = iat_inverse(t, it->condition(pooled));
      t = it->coupling.inverse(t);
    }
    t = unsqueeze2(t);
  }
  return t;
}

template <class T>
Tensor<T> Transform<T>::analysis(const Tensor<T>& x, const Tensor<T>& level) const {
  if (x.rank() != 4 || x.dim(1) != 3) throw ShapeError("analysis expects N x 3 x H x W, got " + to_string(x.shape()));
  const std::int64_t f = config_.downscale();
  if (x.dim(2) % f != 0 || x.dim(3) % f != 0) {
    throw ShapeError("image " + to_string(x.shape()) + " not divisible by " + std::to_string(f));
  }
  check_level(level, x.dim(0), x.dim(2), x.dim(3));
  return squeeze_.squeeze(inn_forward(dense_.enhance(x), level));
}

template <class T>
Tensor<T> Transform<T>::synthesis_raw(const Tensor<T>& y_hat, const Tensor<T>& level) const {
  const std::int64_t f = config_.downscale();
  if (y_hat.rank() != 4 || y_hat.dim(1) != config_.latent_channels) {
    throw ShapeError("latent " + to_string(y_hat.shape()) + " inconsistent with " +
                     std::to_string(config_.latent_channels) + " latent channels");
  }
  check_level(level, y_hat.dim(0), y_hat.dim(2) * f, y_hat.dim(3) * f);
  return inn_inverse(squeeze_.unsqueeze(y_hat), level);
}

template <class T>
Tensor<T> Transform<T>::synthesis(const Tensor<T>& y_hat, const Tensor<T>& level) const {
  return clamp(synthesis_raw(y_hat, level), T(0), T(1));
}

template class Transform<float>;
template class Transform<double>;

}  // namespace iat::inn
