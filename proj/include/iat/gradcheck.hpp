#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "iat/nn/layers.hpp"
#include "iat/rng.hpp"
#include "iat/tensor/tensor.hpp"

namespace iat {

/// Gives every all-zero parameter (the zero-initialized output layers)
/// U(-scale, scale) values so the network is no longer the identity.
/// Parameters whose name starts with keep_prefix are left untouched.
template <class T>
void perturb_zero_parameters(nn::ParameterStore<T>& store, Rng& rng, double scale,
                             const std::string& keep_prefix = "\x01");

struct GradCheckResult {
  double max_relative_error = 0;
  std::string worst;
  int checked = 0;
};

/// Central-difference check of d loss / d tensor for each named leaf.
/// Relative error is |analytic - numeric| / max(|analytic|, |numeric|, floor);
/// the floor keeps round-off on near-zero entries from dominating.
/// samples_per_tensor < 0 checks every entry.
GradCheckResult check_gradients(const std::vector<std::pair<std::string, TensorD>>& leaves,
                                const std::function<TensorD()>& loss_fn, int samples_per_tensor = -1,
                                double h = 1e-5, double floor = 1e-3, std::uint64_t seed = 7);

}  // namespace iat
