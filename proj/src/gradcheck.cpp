#include "iat/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace iat {

template <class T>
void perturb_zero_parameters(nn::ParameterStore<T>& store, Rng& rng, double scale, const std::string& keep_prefix) {
  for (const auto& p : store.items()) {
    if (p.name.rfind(keep_prefix, 0) == 0) continue;
    const auto values = p.tensor.data();
    if (std::any_of(values.begin(), values.end(), [](T v) { return v != T(0); })) continue;
    for (auto& v : Tensor<T>(p.tensor).mutable_data()) v = static_cast<T>(rng.uniform(-scale, scale));
  }
}

template void perturb_zero_parameters(nn::ParameterStore<float>&, Rng&, double, const std::string&);
template void perturb_zero_parameters(nn::ParameterStore<double>&, Rng&, double, const std::string&);

GradCheckResult check_gradients(const std::vector<std::pair<std::string, TensorD>>& leaves,
                                const std::function<TensorD()>& loss_fn, int samples_per_tensor, double h,
                                double floor, std::uint64_t seed) {
  for (const auto& [name, t] : leaves) TensorD(t).zero_grad();
  backward(loss_fn());
  GradCheckResult result;
  Rng pick(seed);
  for (const auto& [name, t] : leaves) {
    TensorD leaf = t;
    const std::vector<double> analytic(leaf.grad().begin(), leaf.grad().end());
    std::vector<std::size_t> idx;
    const auto n = static_cast<std::size_t>(leaf.size());
    if (samples_per_tensor < 0 || n <= static_cast<std::size_t>(samples_per_tensor)) {
      for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
    } else {
      for (int s = 0; s < samples_per_tensor; ++s) idx.push_back(pick.below(n));
    }
    for (std::size_t i : idx) {
      auto data = leaf.mutable_data();
      const double saved = data[i];
      double plus, minus;
      {
        NoGradGuard guard;
        data[i] = saved + h;
        plus = loss_fn().item();
        data[i] = saved - h;
        minus = loss_fn().item();
      }
      data[i] = saved;
      const double numeric = (plus - minus) / (2 * h);
      const double a = analytic.empty() ? 0.0 : analytic[i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++result.checked;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst = name + "[" + std::to_string(i) + "] analytic " + std::to_string(a) + " numeric " +
                       std::to_string(numeric);
      }
    }
  }
  return result;
}

}  // namespace iat
