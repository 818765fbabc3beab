#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "iat/gradcheck.hpp"
#include "iat/nn/layers.hpp"
#include "iat/rng.hpp"
#include "iat/tensor/tensor.hpp"

namespace iat::testing {

inline TensorD random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(static_cast<std::size_t>(numel(shape)));
  for (auto& e : v) e = rng.uniform(lo, hi);
  return TensorD::from(shape, std::move(v));
}

inline TensorD random_parameter(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  TensorD t = random_tensor(shape, rng, lo, hi);
  t.set_requires_grad(true);
  return t;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

using iat::check_gradients;
using iat::GradCheckResult;
using iat::perturb_zero_parameters;

}  // namespace iat::testing
