#include "iat/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "iat/train/objective.hpp"

namespace iat::train {

namespace {

std::string join(const std::vector<double>& values) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < values.size(); ++i) out << (i ? ", " : "") << values[i];
  return out.str();
}

}  // namespace

void TrainConfig::validate() const {
  if (iterations < 0) throw ConfigError("iterations must be non-negative");
  if (batch <= 0 || patch <= 0) throw ConfigError("batch and patch must be positive");
  if (lr_values.empty() || lr_values.size() != lr_boundaries.size() + 1) {
    throw ConfigError("lr_values needs exactly one more entry than lr_boundaries");
  }
  for (double lr : lr_values)
    if (!(lr > 0) || !std::isfinite(lr)) throw ConfigError("learning rates must be positive");
  for (std::size_t i = 0; i < lr_boundaries.size(); ++i) {
    if (!(lr_boundaries[i] > 0) || lr_boundaries[i] != std::floor(lr_boundaries[i])) {
      throw ConfigError("lr_boundaries must be positive integers");
    }
    if (i > 0 && !(lr_boundaries[i] > lr_boundaries[i - 1])) throw ConfigError("lr_boundaries must be strictly increasing");
  }
  if (!(adam.beta1 >= 0 && adam.beta1 < 1) || !(adam.beta2 >= 0 && adam.beta2 < 1) || !(adam.epsilon > 0)) {
    throw ConfigError("adam: betas must lie in [0, 1) and epsilon must be positive");
  }
  if (!synthetic && dataset.empty()) throw ConfigError("dataset path required when synthetic = false");
  if (synthetic && (synthetic_images <= 0 || synthetic_size < patch)) {
    throw ConfigError("synthetic_images must be positive and synthetic_size at least the patch size");
  }
  if (!(uniform_level_probability >= 0 && uniform_level_probability <= 1)) {
    throw ConfigError("uniform_level_probability must lie in [0, 1]");
  }
  if (level_smoothing <= 0 || log_every < 0 || checkpoint_every < 0 || min_size < 0) {
    throw ConfigError("level_smoothing must be positive; log_every, checkpoint_every, min_size non-negative");
  }
}

TrainConfig TrainConfig::from(const KeyValues& kv) {
  TrainConfig c;
  c.iterations = kv.get_int("iterations", c.iterations);
  c.batch = kv.get_int("batch", c.batch);
  c.patch = kv.get_int("patch", c.patch);
  c.lr_values = kv.get_doubles("lr_values", c.lr_values);
  c.lr_boundaries = kv.get_doubles("lr_boundaries", c.lr_boundaries);
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<int>(c.seed)));
  c.adam.beta1 = kv.get_double("adam_beta1", c.adam.beta1);
  c.adam.beta2 = kv.get_double("adam_beta2", c.adam.beta2);
  c.adam.epsilon = kv.get_double("adam_epsilon", c.adam.epsilon);
  c.dataset = kv.get("dataset", c.dataset);
  c.synthetic = kv.get_bool("synthetic", c.dataset.empty());
  c.synthetic_images = kv.get_int("synthetic_images", c.synthetic_images);
  c.synthetic_size = kv.get_int("synthetic_size", c.synthetic_size);
  c.min_size = kv.get_int("min_size", c.min_size);
  c.uniform_level_probability = kv.get_double("uniform_level_probability", c.uniform_level_probability);
  c.level_smoothing = kv.get_int("level_smoothing", c.level_smoothing);
  c.log_every = kv.get_int("log_every", c.log_every);
  c.checkpoint_every = kv.get_int("checkpoint_every", c.checkpoint_every);
  c.validate();
  return c;
}

KeyValues TrainConfig::to_key_values() const {
  KeyValues kv;
  kv.set("iterations", std::to_string(iterations));
  kv.set("batch", std::to_string(batch));
  kv.set("patch", std::to_string(patch));
  kv.set("lr_values", join(lr_values));
  kv.set("lr_boundaries", join(lr_boundaries));
  kv.set("seed", std::to_string(seed));
  kv.set("adam_beta1", join({adam.beta1}));
  kv.set("adam_beta2", join({adam.beta2}));
  kv.set("adam_epsilon", join({adam.epsilon}));
  if (!dataset.empty()) kv.set("dataset", dataset);
  kv.set("synthetic", synthetic ? "true" : "false");
  kv.set("synthetic_images", std::to_string(synthetic_images));
  kv.set("synthetic_size", std::to_string(synthetic_size));
  kv.set("min_size", std::to_string(min_size));
  kv.set("uniform_level_probability", join({uniform_level_probability}));
  kv.set("level_smoothing", std::to_string(level_smoothing));
  kv.set("log_every", std::to_string(log_every));
  kv.set("checkpoint_every", std::to_string(checkpoint_every));
  return kv;
}

double TrainConfig::learning_rate(std::int64_t iteration) const {
  std::size_t stage = 0;
  while (stage < lr_boundaries.size() && static_cast<double>(iteration) >= lr_boundaries[stage]) ++stage;
  return lr_values[stage];
}

Batch make_batch(const PatchSampler& sampler, Rng& data_rng, Rng& level_rng, const TrainConfig& config) {
  Batch b;
  b.x = sampler.sample_batch(data_rng, config.batch);
  std::vector<QualityLevel> levels;
  for (int n = 0; n < config.batch; ++n) {
    levels.push_back(rate::sample_training_qlevel(level_rng, sampler.patch(), sampler.patch(),
                                                  config.uniform_level_probability, config.level_smoothing));
  }
  b.level = stack_quality_levels<float>(levels);
  return b;
}

StepStats train_step(CodecModel<float>& model, const Batch& batch, Adam& optimizer, double lr, Rng& noise_rng,
                     const rate::RateControlConfig& rate_config) {
  auto& params = model.parameters();
  params.zero_grad();
  const auto scaling = training_scaling(batch.x.shape());
  const Objective<float> obj = training_objective(model, batch.x, batch.level, noise_rng, rate_config, scaling);

  StepStats stats;
  stats.loss = obj.loss.total.item();
  stats.bpp = obj.loss.rate.item();
  double se = 0;
  const auto x = batch.x.data();
  const auto xh = obj.x_hat.data();
  for (std::size_t i = 0; i < x.size(); ++i) se += (double(x[i]) - xh[i]) * (double(x[i]) - xh[i]);
  stats.mse = se / static_cast<double>(x.size());
  if (!std::isfinite(stats.loss)) {
    std::ostringstream msg;
    msg << "non-finite training loss: total " << stats.loss << ", rate " << stats.bpp << " bpp, distortion "
        << obj.loss.distortion.item() << ", lr " << lr;
    throw NumericError(msg.str());
  }

  backward(obj.loss.total);
  if (!gradients_finite(params)) {
    stats.skipped = true;
    return stats;
  }
  optimizer.step(lr);
  return stats;
}

Checkpoint run_training(const TrainConfig& config, const inn::ArchitectureConfig& arch,
                        const rate::RateControlConfig& rate_config, const std::string& checkpoint_path,
                        std::ostream* log) {
  config.validate();
  rate_config.validate();
  const PatchSampler sampler =
      config.synthetic ? PatchSampler::synthetic(config.synthetic_images, config.synthetic_size, config.patch, config.seed)
                       : PatchSampler::from_directory(config.dataset, config.min_size, config.patch, log);

  Checkpoint ck;
  ck.model = std::make_unique<CodecModel<float>>(arch, config.seed);
  Adam optimizer(ck.model->parameters(), config.adam);
  Rng data_rng(config.seed * 4 + 1), level_rng(config.seed * 4 + 2), noise_rng(config.seed * 4 + 3);

  const auto start = std::chrono::steady_clock::now();
  std::int64_t skipped = 0;
  double window_loss = 0, window_bpp = 0, window_mse = 0;
  int window = 0;
  StepStats last;

  const auto snapshot = [&](std::int64_t iteration) {
    ck.iteration = iteration;
    ck.rng_state = data_rng.state() + "\n" + level_rng.state() + "\n" + noise_rng.state();
    ck.metadata = config.to_key_values();
    ck.metadata.set("rate_theta", join({rate_config.theta}));
    ck.metadata.set("rate_tau", join({rate_config.tau}));
    ck.metadata.set("skipped_steps", std::to_string(skipped));
    ck.metadata.set("final_loss", join({last.loss}));
    if (!checkpoint_path.empty()) save_checkpoint(ck, checkpoint_path);
  };

  for (std::int64_t it = 0; it < config.iterations; ++it) {
    const Batch batch = make_batch(sampler, data_rng, level_rng, config);
    const double lr = config.learning_rate(it);
    last = train_step(*ck.model, batch, optimizer, lr, noise_rng, rate_config);
    if (last.skipped) {
      ++skipped;
      if (log) *log << "iter " << it + 1 << ": non-finite gradient, update skipped\n";
    }
    window_loss += last.loss;
    window_bpp += last.bpp;
    window_mse += last.mse;
    ++window;
    if (log && config.log_every > 0 && ((it + 1) % config.log_every == 0 || it + 1 == config.iterations)) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      char line[200];
      std::snprintf(line, sizeof line, "iter %lld lr %.1e loss %.4f bpp %.4f psnr %.2f skipped %lld %.1fs\n",
                    static_cast<long long>(it + 1), lr, window_loss / window, window_bpp / window,
                    10 * std::log10(1.0 / (window_mse / window)), static_cast<long long>(skipped), secs);
      *log << line << std::flush;
      window_loss = window_bpp = window_mse = 0;
      window = 0;
    }
    if (config.checkpoint_every > 0 && (it + 1) % config.checkpoint_every == 0 && it + 1 < config.iterations) {
      snapshot(it + 1);
    }
  }
  snapshot(config.iterations);
  return ck;
}

}  // namespace iat::train
