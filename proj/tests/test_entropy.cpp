#include <doctest.h>

#include <cmath>

#include "iat/entropy/gaussian.hpp"
#include "iat/entropy/hyperprior.hpp"
#include "iat/error.hpp"
#include "iat/rans/rans.hpp"
#include "iat/tensor/ops.hpp"
#include "support.hpp"

using namespace iat;
using namespace iat::entropy;
using iat::testing::check_gradients;
using iat::testing::perturb_zero_parameters;
using iat::testing::random_tensor;

TEST_CASE("rounding quantizer") {
  Rng rng(1);
  const TensorD y = TensorD::from({5}, {0.49, 0.5, -1.5, -0.49, 2.51});
  CHECK(quantize(y, QuantMode::kRound, rng).to_vector() == std::vector<double>{0, 1, -2, -0, 3});
  TensorD p = TensorD::parameter({1}, {0.3});
  CHECK_FALSE(quantize(p, QuantMode::kRound, rng).requires_grad());
}

TEST_CASE("noise quantizer") {
  Rng rng(2);
  const TensorD y = random_tensor({1000000}, rng, -10, 10);
  const TensorD q = quantize(y, QuantMode::kNoise, rng);
  double total = 0, worst = 0;
  for (std::int64_t i = 0; i < y.size(); ++i) {
    const double d = q.at(i) - y.at(i);
    total += d;
    worst = std::max(worst, std::abs(d));
  }
  CHECK(worst < 0.5);
  CHECK(std::abs(total / static_cast<double>(y.size())) <= 0.002);
  TensorD p = TensorD::parameter({3}, {0.1, 0.2, 0.3});
  backward(sum(quantize(p, QuantMode::kNoise, rng)));
  CHECK(p.grad()[1] == 1.0);
}

TEST_CASE("gaussian bit cost") {
  // Phi(0.5) - Phi(-0.5) = erf(0.5 / sqrt 2)
  const double p = std::erf(0.5 / std::sqrt(2.0));
  CHECK(p == doctest::Approx(0.38292).epsilon(1e-5));
  CHECK(gaussian_bin_probability(0, 0, 1) == doctest::Approx(p).epsilon(1e-14));
  const TensorD bits = gaussian_bits(TensorD::zeros({1}), TensorD::zeros({1}), TensorD::full({1}, 1.0));
  CHECK(bits.item() == doctest::Approx(1.3849).epsilon(1e-4));

  for (auto [mu, sigma] : {std::pair{0.0, 1.0}, std::pair{0.3, 0.11}, std::pair{-7.6, 40.0}, std::pair{2.5, 3.0}}) {
    double total = 0;
    for (int k = -1000; k <= 1000; ++k) total += gaussian_bin_probability(k, mu, sigma);
    CHECK(std::abs(total - 1.0) <= 1e-9);
    const int peak = static_cast<int>(std::round(mu));
    for (int k = peak - 20; k <= peak + 20; ++k) {
      CHECK(gaussian_bin_probability(k, mu, sigma) <= gaussian_bin_probability(peak, mu, sigma));
    }
  }
  // Deep tail: capped, never infinite.
  const TensorD tail = gaussian_bits(TensorD::full({1}, 500.0), TensorD::zeros({1}), TensorD::full({1}, kSigmaMin));
  CHECK(tail.item() == kMaxBitsPerElement);
}

TEST_CASE("gaussian bit cost gradients") {
  Rng rng(3);
  TensorD v = iat::testing::random_parameter({40}, rng, -4, 4);
  TensorD mu = iat::testing::random_parameter({40}, rng, -2, 2);
  TensorD sigma = iat::testing::random_parameter({40}, rng, 0.2, 3);
  const auto r = check_gradients({{"v", v}, {"mu", mu}, {"sigma", sigma}}, [&] { return sum(gaussian_bits(v, mu, sigma)); });
  INFO(r.worst);
  CHECK(r.max_relative_error <= 1e-5);
}

TEST_CASE("hyperprior shapes and scale floor") {
  const inn::ArchitectureConfig config;
  nn::ParameterStore<double> store;
  Rng rng(4);
  const HyperPrior<double> hyper(store, config, rng);
  perturb_zero_parameters(store, rng, 0.5);
  const TensorD y = random_tensor({1, 24, 16, 16}, rng, -6, 6);
  const TensorD z = hyper.analysis(y);
  CHECK(z.shape() == Shape{1, 8, 4, 4});
  const TensorD z_hat = quantize(z, QuantMode::kRound, rng);
  const auto params = hyper.synthesis(z_hat);
  CHECK(params.mean.shape() == Shape{1, 24, 16, 16});
  CHECK(params.scale.shape() == Shape{1, 24, 16, 16});
  for (double s : params.scale.data()) CHECK(s >= kSigmaMin);
  CHECK_THROWS_AS(hyper.analysis(random_tensor({1, 12, 16, 16}, rng)), ShapeError);

  // The fixed-order reference path agrees with the GEMM path.
  const auto ref = hyper.synthesis_reference(z_hat.to_vector(), {8, 4, 4});
  CHECK(iat::testing::max_abs_diff(ref.mean, params.mean.data()) <= 1e-10);
  CHECK(iat::testing::max_abs_diff(ref.scale, params.scale.data()) <= 1e-10);
}

TEST_CASE("hyperprior and z prior gradients") {
  inn::ArchitectureConfig config;
  config.latent_channels = 4;
  config.hyper_channels = 2;
  config.hyper_hidden = 4;
  nn::ParameterStore<double> store;
  Rng rng(5);
  const HyperPrior<double> hyper(store, config, rng);
  const ZPrior<double> zprior(store, config.hyper_channels);
  perturb_zero_parameters(store, rng, 0.3);
  const TensorD y = random_tensor({1, 4, 8, 8}, rng, -3, 3);
  std::vector<std::pair<std::string, TensorD>> leaves;
  for (const auto& p : store.items()) leaves.emplace_back(p.name, p.tensor);
  const auto r = check_gradients(leaves, [&] {
    Rng noise(9);
    const TensorD z_tilde = quantize(hyper.analysis(y), QuantMode::kNoise, noise);
    const auto py = hyper.synthesis(z_tilde);
    const auto pz = zprior.params_like(z_tilde);
    const TensorD y_tilde = quantize(y, QuantMode::kNoise, noise);
    return sum(gaussian_bits(y_tilde, py.mean, py.scale)) + sum(gaussian_bits(z_tilde, pz.mean, pz.scale));
  });
  INFO(r.worst);
  CHECK(r.max_relative_error <= 1e-4);
}

TEST_CASE("z prior per-channel bits") {
  nn::ParameterStore<double> store;
  const ZPrior<double> zprior(store, 3);
  TensorD(store.find("zprior.mean")).mutable_data()[1] = 2.0;
  TensorD(store.find("zprior.log_scale")).mutable_data()[2] = std::log(4.0);
  CHECK(zprior.mean(1) == 2.0);
  CHECK(zprior.scale(2) == doctest::Approx(4.0));
  CHECK(zprior.scale(0) == 1.0);
  const TensorD z = TensorD::from({1, 3, 1, 1}, {0, 2, 0});
  const auto p = zprior.params_like(z);
  const TensorD bits = gaussian_bits(z, p.mean, p.scale);
  // Channels 0 and 1 sit on their means with sigma 1.
  CHECK(bits.at(0) == doctest::Approx(1.3849).epsilon(1e-4));
  CHECK(bits.at(1) == doctest::Approx(1.3849).epsilon(1e-4));
  CHECK(bits.at(2) == doctest::Approx(-std::log2(gaussian_bin_probability(0, 0, 4.0))));
  CHECK_THROWS_AS(zprior.params_like(TensorD::zeros({1, 2, 1, 1})), ShapeError);
}

TEST_CASE("rate estimate tracks the coder tables") {
  Rng rng(6);
  for (int stream = 0; stream < 200; ++stream) {
    const std::size_t n = 64 + rng.below(2000);
    const double typical_sigma = std::exp(rng.uniform(std::log(0.11), std::log(60.0)));
    std::vector<int> values(n);
    std::vector<double> means(n), scales(n);
    double estimate = 0;
    for (std::size_t i = 0; i < n; ++i) {
      means[i] = rng.uniform(-20, 20);
      scales[i] = std::max(kSigmaMin, typical_sigma * std::exp(rng.uniform(-1, 1)));
      values[i] = static_cast<int>(std::round(means[i] + scales[i] * rng.normal()));
      estimate += -std::log2(std::max(gaussian_bin_probability(values[i], means[i], scales[i]), std::exp2(-50.0)));
    }
    const double tables = rans::gaussian_shannon_bits(values, means, scales);
    CAPTURE(stream);
    CAPTURE(typical_sigma);
    CHECK(std::abs(tables - estimate) <= 0.01 * estimate + 16);
  }
}
