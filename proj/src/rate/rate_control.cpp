#include "iat/rate/rate_control.hpp"

#include <algorithm>
#include <cmath>

#include "iat/tensor/ops.hpp"

namespace iat::rate {

void RateControlConfig::validate() const {
  if (!(theta > 0) || !(tau > 0)) throw ConfigError("rate control: theta and tau must be positive");
}

RateControlConfig RateControlConfig::from(const KeyValues& kv) {
  RateControlConfig cfg;
  cfg.theta = kv.get_double("theta", cfg.theta);
  cfg.tau = kv.get_double("tau", cfg.tau);
  cfg.validate();
  return cfg;
}

double lambda_of(double level, const RateControlConfig& cfg) { return cfg.theta * std::exp(cfg.tau * level); }

template <class T>
Tensor<T> lambda_map(const Tensor<T>& level, std::int64_t channels, const RateControlConfig& cfg) {
  if (level.rank() != 4 || level.dim(1) != 1) {
    throw ShapeError("lambda_map expects N x 1 x H x W levels, got " + to_string(level.shape()));
  }
  const std::int64_t batch = level.dim(0);
  const std::int64_t plane = level.dim(2) * level.dim(3);
  const auto ld = level.data();
  std::vector<T> out(static_cast<std::size_t>(batch * channels * plane));
  for (std::int64_t n = 0; n < batch; ++n) {
    for (std::int64_t p = 0; p < plane; ++p) {
      const T v = static_cast<T>(lambda_of(static_cast<double>(ld[n * plane + p]), cfg));
      for (std::int64_t c = 0; c < channels; ++c) out[(n * channels + c) * plane + p] = v;
    }
  }
  return Tensor<T>::from({batch, channels, level.dim(2), level.dim(3)}, std::move(out));
}

template <class T>
Tensor<T> lambda_map(const QualityLevel& level, std::int64_t channels, const RateControlConfig& cfg) {
  return lambda_map(level.to_tensor<T>(), channels, cfg);
}

template <class T>
RdLoss<T> rd_loss(const Tensor<T>& x, const Tensor<T>& x_hat, const Tensor<T>& bits_y, const Tensor<T>& bits_z,
                  const Tensor<T>& lambda, const LossScaling& scaling) {
  if (x.shape() != x_hat.shape() || x.shape() != lambda.shape()) {
    throw ShapeError("rd_loss: x " + to_string(x.shape()) + ", x_hat " + to_string(x_hat.shape()) +
                     ", lambda " + to_string(lambda.shape()));
  }
  for (const Tensor<T>* t : {&x, &x_hat, &bits_y, &bits_z, &lambda}) detail::check_finite<T>("rd_loss input", t->data());
  Tensor<T> rate = mul(add(sum(bits_y), sum(bits_z)), static_cast<T>(scaling.rate_scale));
  Tensor<T> diff = mul(sub(x, x_hat), static_cast<T>(scaling.pixel_scale));
  Tensor<T> distortion = mul(sum(mul(lambda, square(diff))), T(1) / static_cast<T>(x.size()));
  return {add(rate, distortion), rate, distortion};
}

namespace {

// Moving average of width w along rows then columns, edges clamped.
std::vector<double> box_filter(const std::vector<double>& in, int height, int width, int w) {
  const int before = w / 2;
  auto pass = [&](const std::vector<double>& src, bool horizontal) {
    std::vector<double> dst(src.size());
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        double total = 0;
        for (int k = -before; k < w - before; ++k) {
          const int xx = horizontal ? std::clamp(x + k, 0, width - 1) : x;
          const int yy = horizontal ? y : std::clamp(y + k, 0, height - 1);
          total += src[static_cast<std::size_t>(yy) * width + xx];
        }
        dst[static_cast<std::size_t>(y) * width + x] = total / w;
      }
    }
    return dst;
  };
  return pass(pass(in, true), false);
}

}  // namespace

QualityLevel sample_training_qlevel(Rng& rng, int height, int width, double uniform_probability, int smoothing) {
  if (rng.uniform() < uniform_probability) return QualityLevel::uniform(rng.uniform(), width, height);
  std::vector<double> noise(static_cast<std::size_t>(height) * width);
  for (auto& v : noise) v = rng.uniform();
  std::vector<double> smooth = box_filter(noise, height, width, std::max(1, smoothing));
  const auto [lo, hi] = std::minmax_element(smooth.begin(), smooth.end());
  const double low = *lo;
  const double range = *hi - *lo;
  if (range <= 0) return QualityLevel::uniform(rng.uniform(), width, height);
  for (auto& v : smooth) v = (v - low) / range;
  return QualityLevel::from_values(width, height, smooth);
}

#define IAT_INSTANTIATE_RATE(T)                                                                        \
  template Tensor<T> lambda_map(const Tensor<T>&, std::int64_t, const RateControlConfig&);             \
  template Tensor<T> lambda_map<T>(const QualityLevel&, std::int64_t, const RateControlConfig&);       \
  template RdLoss<T> rd_loss(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
                             const Tensor<T>&, const LossScaling&);

IAT_INSTANTIATE_RATE(float)
IAT_INSTANTIATE_RATE(double)

#undef IAT_INSTANTIATE_RATE

}  // namespace iat::rate
