#include "iat/codec/selftest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "iat/gradcheck.hpp"
#include "iat/rans/rans.hpp"
#include "iat/train/objective.hpp"

namespace iat::codec {

namespace {

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

TensorD uniform_tensor(const Shape& shape, Rng& rng, double lo, double hi) {
  std::vector<double> v(static_cast<std::size_t>(numel(shape)));
  for (auto& e : v) e = rng.uniform(lo, hi);
  return TensorD::from(shape, std::move(v));
}

/// Half the maps are uniform, the rest independent per pixel.
QualityLevel random_level(Rng& rng, int side, bool uniform) {
  if (uniform) return QualityLevel::uniform(rng.uniform(), side, side);
  std::vector<double> v(static_cast<std::size_t>(side) * side);
  for (auto& e : v) e = rng.uniform();
  return QualityLevel::from_values(side, side, v);
}

double max_abs_diff(const TensorD& a, const TensorD& b) {
  double worst = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i) worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  return worst;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

SuiteResult bijectivity_suite(unsigned seed) {
  Stopwatch clock;
  SuiteResult r{"bijectivity", false, "", 0};
  inn::ArchitectureConfig config;
  config.latent_channels = static_cast<int>(config.inn_channels());
  CodecModel<double> model(config, seed);
  Rng rng(seed);
  // The dense block only runs in the encoder, so it must stay the identity
  // for the image round trip to be exact.
  perturb_zero_parameters(model.parameters(), rng, 0.05, "dense.");
  const auto& t = model.transform();

  NoGradGuard no_grad;
  constexpr int kSide = 64;
  double image_err = 0, iat_err = 0, coupling_err = 0;
  for (int pair = 0; pair < 20; ++pair) {
    const TensorD x = uniform_tensor({1, 3, kSide, kSide}, rng, 0, 1);
    const TensorD level = random_level(rng, kSide, pair % 2 == 0).to_tensor<double>();
    const TensorD y = t.analysis(x, level);
    image_err = std::max(image_err, max_abs_diff(t.synthesis_raw(y, level), x));

    for (int s = 0; s < config.scales; ++s) {
      const TensorD pooled = t.pooled_level(level, s);
      for (int b = 0; b < config.blocks_per_scale; ++b) {
        const auto params = t.conditioner(s, b)(pooled);
        const std::int64_t c = t.conditioner(s, b).channels();
        const TensorD e = uniform_tensor({1, c, pooled.dim(2), pooled.dim(3)}, rng, -4, 4);
        iat_err = std::max(iat_err, max_abs_diff(iat_inverse(iat_forward(e, params), params), e));
        const auto& block = t.coupling(s, b);
        coupling_err = std::max(coupling_err, max_abs_diff(block.inverse(block.forward(e)), e));
      }
    }
  }
  r.passed = image_err <= 1e-6 && iat_err <= 1e-11 && coupling_err <= 1e-9;
  r.detail = "image " + sci(image_err) + " (<= 1e-6), iat " + sci(iat_err) + " (<= 1e-11), coupling " +
             sci(coupling_err) + " (<= 1e-9)";
  r.seconds = clock.seconds();
  return r;
}

SuiteResult gradient_suite(unsigned seed) {
  Stopwatch clock;
  SuiteResult r{"gradient", false, "", 0};
  inn::ArchitectureConfig config;
  config.scales = 2;
  config.blocks_per_scale = 1;
  config.latent_channels = 12;
  config.dense_layers = 2;
  config.dense_growth = 4;
  config.coupling_hidden = 4;
  config.condition_hidden = 4;
  config.hyper_channels = 2;
  config.hyper_hidden = 4;
  CodecModel<double> model(config, seed);
  Rng rng(seed);
  perturb_zero_parameters(model.parameters(), rng, 0.2);

  const TensorD x = uniform_tensor({1, 3, 16, 16}, rng, 0, 1);
  const TensorD level = random_level(rng, 16, false).to_tensor<double>();
  std::vector<std::pair<std::string, TensorD>> leaves;
  for (const auto& p : model.parameters().items()) leaves.emplace_back(p.name, p.tensor);
  const auto loss = [&] {
    Rng noise(seed + 100);  // identical quantization noise for every evaluation
    return train::training_objective(model, x, level, noise).loss.total;
  };
  const GradCheckResult g = check_gradients(leaves, loss);
  r.passed = g.max_relative_error <= 1e-4;
  r.detail = std::to_string(g.checked) + " entries in " + std::to_string(leaves.size()) + " tensors, max relative error " +
             sci(g.max_relative_error) + " (<= 1e-4)" + (r.passed ? "" : ", worst " + g.worst);
  r.seconds = clock.seconds();
  return r;
}

SuiteResult coder_suite(unsigned seed) {
  Stopwatch clock;
  SuiteResult r{"coder", true, "", 0};
  Rng rng(seed);
  int failures = 0;
  double worst_ratio = 0;
  std::size_t symbols = 0;
  for (int stream = 0; stream < 1000; ++stream) {
    const std::size_t n = 1 + rng.below(2000);
    std::vector<int> values(n);
    std::vector<double> means(n), scales(n);
    for (std::size_t i = 0; i < n; ++i) {
      means[i] = rng.uniform(-50, 50);
      scales[i] = std::exp(rng.uniform(std::log(0.05), std::log(400.0)));
      // Mostly on-model values plus the occasional far outlier (escape path).
      const double spread = rng.uniform() < 0.01 ? 50 * scales[i] + 100 : 1.5 * scales[i];
      values[i] = static_cast<int>(std::clamp(std::round(means[i] + spread * rng.normal()), -30000.0, 30000.0));
    }
    symbols += n;
    const auto bytes = rans::encode_gaussian(values, means, scales);
    const double ideal = rans::gaussian_shannon_bits(values, means, scales);
    const double coded = 8.0 * static_cast<double>(bytes.size());
    worst_ratio = std::max(worst_ratio, (coded - 32) / ideal);
    if (rans::decode_gaussian(bytes, means, scales) != values || coded > ideal * 1.01 + 32) ++failures;
  }
  r.passed = failures == 0;
  r.detail = std::to_string(failures) + " of 1000 streams failed (" + std::to_string(symbols) +
             " symbols), worst (coded - 32) / ideal " + sci(worst_ratio) + " (<= 1.01)";
  r.seconds = clock.seconds();
  return r;
}

}  // namespace iat::codec
