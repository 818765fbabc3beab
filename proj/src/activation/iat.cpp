#include "iat/activation/iat.hpp"

#include "iat/tensor/ops.hpp"

namespace iat {

std::string to_string(QLevelRepr repr) { return repr == QLevelRepr::kTensor ? "tensor" : "scalar"; }

QLevelRepr parse_qlevel_repr(const std::string& text) {
  if (text == "tensor") return QLevelRepr::kTensor;
  if (text == "scalar") return QLevelRepr::kScalar;
  throw ConfigError("qlevel_repr must be 'tensor' or 'scalar', got '" + text + "'");
}

template <class T>
Conditioner<T>::Conditioner(nn::ParameterStore<T>& store, const std::string& name,
                            std::int64_t channels, std::int64_t hidden, QLevelRepr repr, Rng& rng)
    : channels_(channels), repr_(repr) {
  const int kernel = repr == QLevelRepr::kTensor ? 3 : 1;
  const ConvOptions opts{1, -1, PadMode::kReplicate};
  first_ = nn::Conv2d<T>::create(store, name + ".cond0", 1, hidden, kernel, rng, nn::Init::kHeUniform, opts);
  second_ = nn::Conv2d<T>::create(store, name + ".cond1", hidden, 2 * channels, kernel, rng, nn::Init::kZero, opts);
}

template <class T>
ActivationParams<T> Conditioner<T>::operator()(const Tensor<T>& pooled_level) const {
  Tensor<T> level = pooled_level;
  if (repr_ == QLevelRepr::kScalar) {
    level = spatial_mean(pooled_level);
  }
  Tensor<T> raw = second_(leaky_relu(first_(level)));
  if (repr_ == QLevelRepr::kScalar) {
    raw = broadcast_to(raw, {raw.dim(0), raw.dim(1), pooled_level.dim(2), pooled_level.dim(3)});
  }
  Tensor<T> raw_beta = slice_channels(raw, 0, channels_);
  Tensor<T> gamma = slice_channels(raw, channels_, 2 * channels_);
  Tensor<T> beta = exp(clamp(raw_beta, T(-kRawBetaLimit), T(kRawBetaLimit)));
  return {beta, gamma};
}

namespace {

template <class T>
void check_params(const Tensor<T>& x, const ActivationParams<T>& p, const char* op) {
  if (x.shape() != p.beta.shape() || x.shape() != p.gamma.shape()) {
    throw ShapeError(std::string(op) + ": feature " + to_string(x.shape()) + " vs beta " +
                     to_string(p.beta.shape()) + " / gamma " + to_string(p.gamma.shape()));
  }
}

}  // namespace

template <class T>
Tensor<T> iat_forward(const Tensor<T>& s, const ActivationParams<T>& p) {
  check_params(s, p, "iat_forward");
  return add(mul(s, p.beta), p.gamma);
}

template <class T>
Tensor<T> iat_inverse(const Tensor<T>& e, const ActivationParams<T>& p) {
  check_params(e, p, "iat_inverse");
  for (const T b : p.beta.data()) {
    if (!(b >= T(kBetaFloor))) throw NumericError("iat_inverse: beta below positivity floor");
  }
  return div(sub(e, p.gamma), p.beta);
}

template class Conditioner<float>;
template class Conditioner<double>;
template Tensor<float> iat_forward(const Tensor<float>&, const ActivationParams<float>&);
template Tensor<double> iat_forward(const Tensor<double>&, const ActivationParams<double>&);
template Tensor<float> iat_inverse(const Tensor<float>&, const ActivationParams<float>&);
template Tensor<double> iat_inverse(const Tensor<double>&, const ActivationParams<double>&);

}  // namespace iat
