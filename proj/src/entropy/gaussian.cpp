#include "iat/entropy/gaussian.hpp"

#include <cmath>

#include "iat/tensor/ops.hpp"

namespace iat::entropy {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
const double kMinProbability = std::exp2(-kMaxBitsPerElement);

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }
double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

// Bin mass computed on the side of the mean that keeps both CDF values in
// the lower tail, where erfc is accurate.
double bin_mass(double d, double sigma) {
  const double a = std::abs(d);
  return normal_cdf((0.5 - a) / sigma) - normal_cdf((-0.5 - a) / sigma);
}

}  // namespace

double gaussian_bin_probability(double v, double mu, double sigma) { return bin_mass(v - mu, sigma); }

template <class T>
Tensor<T> quantize(const Tensor<T>& y, QuantMode mode, Rng& rng) {
  if (mode == QuantMode::kRound) {
    std::vector<T> out(y.data().begin(), y.data().end());
    for (auto& v : out) v = std::round(v);
    return Tensor<T>::from(y.shape(), std::move(out));
  }
  std::vector<T> noise(static_cast<std::size_t>(y.size()));
  for (auto& v : noise) v = static_cast<T>(rng.uniform() - 0.5);
  return add(y, Tensor<T>::from(y.shape(), std::move(noise)));
}

template <class T>
Tensor<T> gaussian_bits(const Tensor<T>& v, const Tensor<T>& mu, const Tensor<T>& sigma) {
  if (v.shape() != mu.shape() || v.shape() != sigma.shape()) {
    throw ShapeError("gaussian_bits: v " + to_string(v.shape()) + ", mu " + to_string(mu.shape()) + ", sigma " +
                     to_string(sigma.shape()));
  }
  const auto vd = v.data();
  const auto md = mu.data();
  const auto sd = sigma.data();
  std::vector<T> bits(vd.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const double p = bin_mass(static_cast<double>(vd[i]) - md[i], sd[i]);
    bits[i] = static_cast<T>(p > kMinProbability ? -std::log2(p) : kMaxBitsPerElement);
  }
  return detail::make_result<T>(
      "gaussian_bits", v.shape(), std::move(bits), {v, mu, sigma}, [](detail::Node<T>& self) {
        auto& nv = *self.inputs[0];
        auto& nm = *self.inputs[1];
        auto& ns = *self.inputs[2];
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          const double s = ns.data[i];
          const double d = static_cast<double>(nv.data[i]) - nm.data[i];
          const double p = bin_mass(d, s);
          if (!(p > kMinProbability)) continue;
          const double upper = (d + 0.5) / s;
          const double lower = (d - 0.5) / s;
          const double pu = normal_pdf(upper);
          const double pl = normal_pdf(lower);
          // bits = -log2 p;  d bits / d p = -1 / (p ln 2)
          const double outer = -static_cast<double>(self.grad[i]) / (p * M_LN2);
          const double dp_dd = (pu - pl) / s;
          const double dp_ds = -(upper * pu - lower * pl) / s;
          if (nv.requires_grad) nv.grad_buffer()[i] += static_cast<T>(outer * dp_dd);
          if (nm.requires_grad) nm.grad_buffer()[i] -= static_cast<T>(outer * dp_dd);
          if (ns.requires_grad) ns.grad_buffer()[i] += static_cast<T>(outer * dp_ds);
        }
      });
}

template Tensor<float> quantize(const Tensor<float>&, QuantMode, Rng&);
template Tensor<double> quantize(const Tensor<double>&, QuantMode, Rng&);
template Tensor<float> gaussian_bits(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&);
template Tensor<double> gaussian_bits(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&);

}  // namespace iat::entropy
