#pragma once

#include <string>
#include <utility>
#include <vector>

#include "iat/rng.hpp"
#include "iat/tensor/conv.hpp"
#include "iat/tensor/tensor.hpp"

namespace iat::nn {

template <class T>
struct NamedParameter {
  std::string name;
  Tensor<T> tensor;
};

/// Ordered registry of trainable tensors, addressed by dotted names.
template <class T>
class ParameterStore {
 public:
  Tensor<T> add(std::string name, Shape shape, std::vector<T> values);

  const std::vector<NamedParameter<T>>& items() const { return items_; }
  /// Throws ConfigError for unknown names.
  Tensor<T> find(const std::string& name) const;
  /// Allocates zeroed grad buffers for every parameter.
  void zero_grad();
  std::int64_t scalar_count() const;

 private:
  std::vector<NamedParameter<T>> items_;
};

enum class Init { kHeUniform, kZero };

template <class T>
struct Conv2d {
  Tensor<T> weight;
  Tensor<T> bias;
  ConvOptions options;

  static Conv2d create(ParameterStore<T>& store, const std::string& name, std::int64_t in_channels,
                       std::int64_t out_channels, int kernel, Rng& rng, Init init = Init::kHeUniform,
                       ConvOptions options = {});

  Tensor<T> operator()(const Tensor<T>& x) const { return conv2d(x, weight, bias, options); }
};

}  // namespace iat::nn
