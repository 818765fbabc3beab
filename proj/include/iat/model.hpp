#pragma once

#include <cstdint>

#include "iat/entropy/hyperprior.hpp"
#include "iat/inn/transform.hpp"
#include "iat/nn/layers.hpp"

namespace iat {

/// Every trainable part of the codec behind one parameter registry.
template <class T>
class CodecModel {
 public:
  explicit CodecModel(const inn::ArchitectureConfig& config, std::uint64_t seed = 0);
  CodecModel(const CodecModel&) = delete;
  CodecModel& operator=(const CodecModel&) = delete;
  CodecModel(CodecModel&&) = default;
  CodecModel& operator=(CodecModel&&) = default;

  const inn::ArchitectureConfig& config() const { return config_; }
  nn::ParameterStore<T>& parameters() { return params_; }
  const nn::ParameterStore<T>& parameters() const { return params_; }
  const inn::Transform<T>& transform() const { return transform_; }
  const entropy::HyperPrior<T>& hyper() const { return hyper_; }
  const entropy::ZPrior<T>& zprior() const { return zprior_; }

  /// 64-bit FNV-1a over the architecture and every parameter value (as
  /// float32), so float and double copies of one checkpoint agree.
  std::uint64_t hash() const;

  /// Redraws every parameter, zero-initialized ones included, from U(-scale, scale).
  void randomize(Rng& rng, double scale);

  /// Copies values from another model with identical names and shapes.
  template <class U>
  void copy_from(const CodecModel<U>& other);

 private:
  inn::ArchitectureConfig config_;
  nn::ParameterStore<T> params_;
  inn::Transform<T> transform_;
  entropy::HyperPrior<T> hyper_;
  entropy::ZPrior<T> zprior_;
};

/// FNV-1a, 64-bit.
class Fnv1a {
 public:
  void update(const void* data, std::size_t size);
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace iat
