#include "iat/nn/layers.hpp"

#include <cmath>

namespace iat::nn {

template <class T>
Tensor<T> ParameterStore<T>::add(std::string name, Shape shape, std::vector<T> values) {
  for (const auto& item : items_) {
    if (item.name == name) throw ConfigError("duplicate parameter name " + name);
  }
  Tensor<T> t = Tensor<T>::parameter(std::move(shape), std::move(values));
  items_.push_back({std::move(name), t});
  return t;
}

template <class T>
Tensor<T> ParameterStore<T>::find(const std::string& name) const {
  for (const auto& item : items_) {
    if (item.name == name) return item.tensor;
  }
  throw ConfigError("unknown parameter " + name);
}

template <class T>
void ParameterStore<T>::zero_grad() {
  for (auto& item : items_) item.tensor.zero_grad();
}

template <class T>
std::int64_t ParameterStore<T>::scalar_count() const {
  std::int64_t n = 0;
  for (const auto& item : items_) n += item.tensor.size();
  return n;
}

template <class T>
Conv2d<T> Conv2d<T>::create(ParameterStore<T>& store, const std::string& name,
                            std::int64_t in_channels, std::int64_t out_channels, int kernel,
                            Rng& rng, Init init, ConvOptions options) {
  const std::int64_t fan_in = in_channels * kernel * kernel;
  std::vector<T> w(static_cast<std::size_t>(out_channels * fan_in), T(0));
  if (init == Init::kHeUniform) {
    // He-uniform for a leaky ReLU with slope 0.2.
    const double bound = std::sqrt(6.0 / ((1.0 + 0.04) * static_cast<double>(fan_in)));
    for (auto& v : w) v = static_cast<T>(rng.uniform(-bound, bound));
  }
  Conv2d layer;
  layer.weight = store.add(name + ".weight", {out_channels, in_channels, kernel, kernel}, std::move(w));
  layer.bias = store.add(name + ".bias", {out_channels}, std::vector<T>(static_cast<std::size_t>(out_channels), T(0)));
  layer.options = options;
  return layer;
}

template class ParameterStore<float>;
template class ParameterStore<double>;
template struct Conv2d<float>;
template struct Conv2d<double>;

}  // namespace iat::nn
