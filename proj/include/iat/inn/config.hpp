#pragma once

#include <cstdint>
#include <string>

#include "iat/activation/iat.hpp"
#include "iat/config.hpp"

namespace iat::inn {

/// Topology of the analysis/synthesis transform and hyperprior.
///
/// Config keys (all optional):
///   scales, blocks_per_scale, latent_channels, dense_layers, dense_growth,
///   coupling_hidden, coupling_smax, condition_hidden, hyper_channels,
///   hyper_hidden, qlevel_repr (tensor | scalar)
struct ArchitectureConfig {
  int scales = 2;
  int blocks_per_scale = 2;
  int latent_channels = 24;  // M, after the attention channel squeeze
  int dense_layers = 3;
  int dense_growth = 16;
  int coupling_hidden = 32;
  double coupling_smax = 2.0;
  int condition_hidden = 16;
  int hyper_channels = 8;
  int hyper_hidden = 32;
  QLevelRepr qlevel_repr = QLevelRepr::kTensor;

  /// Channels after the last space-to-depth: 3 * 4^scales.
  std::int64_t inn_channels() const { return std::int64_t{3} << (2 * scales); }
  std::int64_t squeeze_ratio() const { return inn_channels() / latent_channels; }
  std::int64_t downscale() const { return std::int64_t{1} << scales; }

  /// Throws ConfigError on an inconsistent topology.
  void validate() const;

  static ArchitectureConfig from(const KeyValues& kv);
  KeyValues to_key_values() const;

  bool operator==(const ArchitectureConfig&) const = default;
};

}  // namespace iat::inn
