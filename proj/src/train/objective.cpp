#include "iat/train/objective.hpp"

#include "iat/entropy/gaussian.hpp"
#include "iat/tensor/ops.hpp"

namespace iat::train {

template <class T>
Objective<T> training_objective(const CodecModel<T>& model, const Tensor<T>& x, const Tensor<T>& level, Rng& rng,
                                const rate::RateControlConfig& rate_config, const rate::LossScaling& scaling) {
  using entropy::QuantMode;
  const Tensor<T> y = model.transform().analysis(x, level);
  const Tensor<T> z = model.hyper().analysis(y);
  const Tensor<T> z_tilde = entropy::quantize(z, QuantMode::kNoise, rng);
  const auto py = model.hyper().synthesis(z_tilde);
  const auto pz = model.zprior().params_like(z_tilde);
  const Tensor<T> y_tilde = entropy::quantize(y, QuantMode::kNoise, rng);
  const Tensor<T> bits_y = entropy::gaussian_bits(y_tilde, py.mean, py.scale);
  const Tensor<T> bits_z = entropy::gaussian_bits(z_tilde, pz.mean, pz.scale);
  Tensor<T> x_hat = model.transform().synthesis_raw(y_tilde, level);
  const Tensor<T> lambda = rate::lambda_map(level, x.dim(1), rate_config);
  Objective<T> out{rate::rd_loss(x, x_hat, bits_y, bits_z, lambda, scaling), x_hat, 0.0};
  for (const T b : bits_y.data()) out.bits += static_cast<double>(b);
  for (const T b : bits_z.data()) out.bits += static_cast<double>(b);
  return out;
}

rate::LossScaling training_scaling(const Shape& x_shape) {
  if (x_shape.size() != 4) throw ShapeError("training_scaling expects N x C x H x W");
  return {1.0 / static_cast<double>(x_shape[0] * x_shape[2] * x_shape[3]), 255.0};
}

template Objective<float> training_objective(const CodecModel<float>&, const TensorF&, const TensorF&, Rng&,
                                             const rate::RateControlConfig&, const rate::LossScaling&);
template Objective<double> training_objective(const CodecModel<double>&, const TensorD&, const TensorD&, Rng&,
                                              const rate::RateControlConfig&, const rate::LossScaling&);

}  // namespace iat::train
