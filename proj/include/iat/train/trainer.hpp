#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "iat/config.hpp"
#include "iat/inn/config.hpp"
#include "iat/rate/rate_control.hpp"
#include "iat/train/checkpoint.hpp"
#include "iat/train/dataset.hpp"
#include "iat/train/optimizer.hpp"

namespace iat::train {

/// Training settings. Config keys (all optional):
///   iterations, batch, patch, lr_values, lr_boundaries, seed,
///   adam_beta1, adam_beta2, adam_epsilon, dataset, synthetic,
///   synthetic_images, synthetic_size, min_size, uniform_level_probability,
///   level_smoothing, log_every, checkpoint_every
struct TrainConfig {
  int iterations = 20000;
  int batch = 8;
  int patch = 48;
  std::vector<double> lr_values{1e-4, 5e-5, 1e-5};
  std::vector<double> lr_boundaries{12500, 16250};  // iteration at which stage i + 1 starts
  std::uint64_t seed = 1;
  AdamConfig adam;
  std::string dataset;  // directory of PNG/PPM files; used when synthetic is false
  bool synthetic = true;
  int synthetic_images = 256;
  int synthetic_size = 96;
  int min_size = 64;
  double uniform_level_probability = 0.5;
  int level_smoothing = 8;
  int log_every = 100;
  int checkpoint_every = 0;  // 0: only the final checkpoint

  /// Throws ConfigError: boundaries must be strictly increasing and one
  /// fewer than the values; every LR must be positive.
  void validate() const;
  static TrainConfig from(const KeyValues& kv);
  KeyValues to_key_values() const;

  /// LR in effect at a 0-based iteration.
  double learning_rate(std::int64_t iteration) const;
};

struct Batch {
  TensorF x;      // N x 3 x P x P
  TensorF level;  // N x 1 x P x P
};

/// Crops from the sampler plus one training level map per crop.
Batch make_batch(const PatchSampler& sampler, Rng& data_rng, Rng& level_rng, const TrainConfig& config);

struct StepStats {
  double loss = 0;
  double bpp = 0;
  double mse = 0;      // on [0, 1] pixels, unclamped reconstruction
  bool skipped = false;  // gradients were non-finite; no update applied
};

/// One Adam update on the rate-distortion loss of a batch. Throws
/// NumericError (with the loss terms in the message) when the loss itself is
/// non-finite; skips the update when only the gradients are.
StepStats train_step(CodecModel<float>& model, const Batch& batch, Adam& optimizer, double lr, Rng& noise_rng,
                     const rate::RateControlConfig& rate_config = {});

/// Full training run from a fresh model seeded by config.seed. When
/// checkpoint_path is non-empty the final model (and periodic snapshots if
/// checkpoint_every > 0) are written there.
Checkpoint run_training(const TrainConfig& config, const inn::ArchitectureConfig& arch,
                        const rate::RateControlConfig& rate_config = {}, const std::string& checkpoint_path = "",
                        std::ostream* log = nullptr);

}  // namespace iat::train
