#include "iat/train/optimizer.hpp"

#include <cmath>

namespace iat::train {

Adam::Adam(const nn::ParameterStore<float>& store, AdamConfig config) : config_(config) {
  for (const auto& p : store.items()) {
    params_.push_back(p.tensor);
    m_.emplace_back(static_cast<std::size_t>(p.tensor.size()), 0.0);
    v_.emplace_back(static_cast<std::size_t>(p.tensor.size()), 0.0);
  }
}

void Adam::step(double lr) {
  ++steps_;
  const double c1 = 1 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double c2 = 1 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto grad = params_[i].grad();
    if (grad.empty()) continue;
    auto values = params_[i].mutable_data();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double g = grad[j];
      m[j] = config_.beta1 * m[j] + (1 - config_.beta1) * g;
      v[j] = config_.beta2 * v[j] + (1 - config_.beta2) * g * g;
      const double update = lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + config_.epsilon);
      values[j] = static_cast<float>(values[j] - update);
    }
  }
}

bool gradients_finite(const nn::ParameterStore<float>& store) {
  for (const auto& p : store.items())
    for (const float g : p.tensor.grad())
      if (!std::isfinite(g)) return false;
  return true;
}

}  // namespace iat::train
