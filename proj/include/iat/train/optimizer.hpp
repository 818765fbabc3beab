#pragma once

#include <cstdint>
#include <vector>

#include "iat/nn/layers.hpp"

namespace iat::train {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam over every tensor of a parameter store. Moments are kept in double.
class Adam {
 public:
  Adam(const nn::ParameterStore<float>& store, AdamConfig config = {});

  /// One bias-corrected update from the gradients currently accumulated on
  /// the parameters. Tensors without a gradient are left alone. With lr = 0
  /// the parameters are unchanged bit for bit.
  void step(double lr);
  std::int64_t steps() const { return steps_; }

 private:
  AdamConfig config_;
  std::vector<TensorF> params_;
  std::vector<std::vector<double>> m_, v_;
  std::int64_t steps_ = 0;
};

/// True when every accumulated gradient entry is finite.
bool gradients_finite(const nn::ParameterStore<float>& store);

}  // namespace iat::train
