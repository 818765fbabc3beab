#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <set>
#include <sstream>

#include "iat/tensor/ops.hpp"
#include "iat/train/checkpoint.hpp"
#include "iat/train/objective.hpp"
#include "iat/train/trainer.hpp"

using namespace iat;
using namespace iat::train;

namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("iat_train_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

inn::ArchitectureConfig small_arch() {
  inn::ArchitectureConfig a;
  a.latent_channels = 12;
  a.dense_growth = 8;
  a.coupling_hidden = 16;
  a.condition_hidden = 8;
  a.hyper_channels = 4;
  a.hyper_hidden = 16;
  return a;
}

std::vector<std::vector<float>> snapshot(const CodecModel<float>& model) {
  std::vector<std::vector<float>> out;
  for (const auto& p : model.parameters().items()) out.push_back(p.tensor.to_vector());
  return out;
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.batch = 2;
  c.patch = 32;
  c.synthetic_images = 4;
  c.synthetic_size = 64;
  return c;
}

}  // namespace

TEST_CASE("learning rate schedule") {
  const TrainConfig c;
  CHECK(c.learning_rate(0) == 1e-4);
  CHECK(c.learning_rate(12499) == 1e-4);
  CHECK(c.learning_rate(12500) == 5e-5);
  CHECK(c.learning_rate(12501) == 5e-5);
  CHECK(c.learning_rate(16250) == 1e-5);
  CHECK(c.learning_rate(19999) == 1e-5);

  TrainConfig bad;
  bad.lr_boundaries = {100, 100};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = TrainConfig{};
  bad.lr_values = {1e-4, 0.0, 1e-5};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = TrainConfig{};
  bad.lr_values = {1e-4};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(TrainConfig::from(KeyValues::parse("lr_values = 1e-3, -1\nlr_boundaries = 5\n")), ConfigError);

  const TrainConfig parsed = TrainConfig::from(KeyValues::parse("iterations = 50\nlr_values = 1e-3, 1e-4\nlr_boundaries = 20\n"));
  CHECK(parsed.iterations == 50);
  CHECK(parsed.learning_rate(19) == 1e-3);
  CHECK(parsed.learning_rate(20) == 1e-4);
  const TrainConfig again = TrainConfig::from(parsed.to_key_values());
  CHECK(again.lr_values == parsed.lr_values);
  CHECK(again.lr_boundaries == parsed.lr_boundaries);
  CHECK(again.to_key_values().to_text() == parsed.to_key_values().to_text());
}

TEST_CASE("patch sampling") {
  SUBCASE("synthetic sets are deterministic") {
    const PatchSampler a = PatchSampler::synthetic(4, 64, 32, 9);
    const PatchSampler b = PatchSampler::synthetic(4, 64, 32, 9);
    Rng ra(1), rb(1);
    for (int i = 0; i < 10; ++i) CHECK(a.sample(ra) == b.sample(rb));
    const TensorF batch = a.sample_batch(ra, 3);
    CHECK(batch.shape() == Shape{3, 3, 32, 32});
    for (float v : batch.data()) CHECK((v >= 0.0f && v <= 1.0f));
  }
  SUBCASE("synthetic images have structure") {
    Rng rng(2);
    const Image im = synthetic_image(rng, 64, 64);
    std::set<std::uint8_t> distinct(im.pixels.begin(), im.pixels.end());
    CHECK(distinct.size() > 32);
  }
  SUBCASE("directory ingestion skips small images") {
    const fs::path dir = scratch_dir("ingest");
    Rng rng(3);
    save_image(synthetic_image(rng, 80, 70), (dir / "a.png").string());
    save_image(synthetic_image(rng, 20, 90), (dir / "b.ppm").string());
    save_image(synthetic_image(rng, 64, 64), (dir / "c.png").string());
    std::ostringstream log;
    const PatchSampler s = PatchSampler::from_directory(dir.string(), 64, 48, &log);
    CHECK(s.image_count() == 2);
    CHECK(s.skipped() == 1);
    CHECK(log.str().find("1 skipped") != std::string::npos);
    Rng r1(4), r2(4);
    CHECK(s.sample(r1) == s.sample(r2));
    fs::remove_all(dir);
  }
  SUBCASE("nothing usable is an error") {
    const fs::path dir = scratch_dir("small");
    Rng rng(5);
    for (int i = 0; i < 3; ++i) save_image(synthetic_image(rng, 30, 30), (dir / ("s" + std::to_string(i) + ".png")).string());
    try {
      PatchSampler::from_directory(dir.string(), 64, 48);
      FAIL("expected an error");
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find("3 skipped") != std::string::npos);
    }
    CHECK_THROWS_AS(PatchSampler::from_directory((dir / "none").string(), 64, 48), IoError);
    fs::remove_all(dir);
  }
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  CodecModel<float> model(small_arch(), 1);
  const auto before = snapshot(model);
  const TrainConfig cfg = tiny_config();
  const PatchSampler sampler = PatchSampler::synthetic(cfg.synthetic_images, cfg.synthetic_size, cfg.patch, 2);
  Rng data(3), level(4), noise(5);
  Adam adam(model.parameters());
  for (int i = 0; i < 3; ++i) {
    const StepStats s = train_step(model, make_batch(sampler, data, level, cfg), adam, 0.0, noise);
    CHECK(std::isfinite(s.loss));
  }
  const auto after = snapshot(model);
  REQUIRE(after.size() == before.size());
  for (std::size_t i = 0; i < after.size(); ++i) CHECK(std::memcmp(after[i].data(), before[i].data(), after[i].size() * 4) == 0);
}

TEST_CASE("a training step is reproducible") {
  const TrainConfig cfg = tiny_config();
  const PatchSampler sampler = PatchSampler::synthetic(cfg.synthetic_images, cfg.synthetic_size, cfg.patch, 2);
  std::vector<std::vector<std::vector<float>>> results;
  std::vector<double> losses;
  for (int run = 0; run < 2; ++run) {
    CodecModel<float> model(small_arch(), 7);
    Rng data(3), level(4), noise(5);
    Adam adam(model.parameters());
    losses.push_back(train_step(model, make_batch(sampler, data, level, cfg), adam, 1e-3, noise).loss);
    results.push_back(snapshot(model));
  }
  CHECK(losses[0] == losses[1]);
  CHECK(results[0] == results[1]);
  CodecModel<float> fresh(small_arch(), 7);
  CHECK(snapshot(fresh) != results[0]);
}

TEST_CASE("non-finite losses abort and non-finite gradients are detected") {
  CodecModel<float> model(small_arch(), 1);
  const TrainConfig cfg = tiny_config();
  const PatchSampler sampler = PatchSampler::synthetic(cfg.synthetic_images, cfg.synthetic_size, cfg.patch, 2);
  Rng data(3), level(4), noise(5);
  Adam adam(model.parameters());
  const Batch batch = make_batch(sampler, data, level, cfg);

  model.parameters().zero_grad();
  CHECK(gradients_finite(model.parameters()));
  model.parameters().items()[0].tensor.node()->grad_buffer()[0] = std::nanf("");
  CHECK_FALSE(gradients_finite(model.parameters()));

  TensorF(model.parameters().find("dense.layer0.bias")).mutable_data()[0] = std::nanf("");
  try {
    train_step(model, batch, adam, 1e-4, noise);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("non-finite") != std::string::npos);
  }
}

TEST_CASE("training reduces the loss") {
  // 200 steps on a 4-image synthetic set; mean of the last 20 losses must
  // fall below the first.
  TrainConfig cfg = tiny_config();
  cfg.iterations = 200;
  cfg.lr_values = {1e-3};
  cfg.lr_boundaries = {};
  const PatchSampler sampler = PatchSampler::synthetic(cfg.synthetic_images, cfg.synthetic_size, cfg.patch, 11);
  CodecModel<float> model(small_arch(), 12);
  Adam adam(model.parameters());
  Rng data(13), level(14), noise(15);
  double first = 0, tail = 0;
  for (int it = 0; it < cfg.iterations; ++it) {
    const StepStats s = train_step(model, make_batch(sampler, data, level, cfg), adam, cfg.learning_rate(it), noise);
    REQUIRE_FALSE(s.skipped);
    if (it == 0) first = s.loss;
    if (it >= cfg.iterations - 20) tail += s.loss / 20;
  }
  INFO("first " << first << " tail " << tail);
  CHECK(tail < first);
}

TEST_CASE("checkpoints") {
  const fs::path dir = scratch_dir("ckpt");
  TrainConfig cfg = tiny_config();
  cfg.iterations = 3;
  cfg.log_every = 0;
  const std::string path = (dir / "m.iatw").string();
  const Checkpoint ck = run_training(cfg, small_arch(), {}, path);
  CHECK(ck.iteration == 3);
  CHECK(fs::exists(path));
  for (const auto& e : fs::directory_iterator(dir)) CHECK(e.path().filename() == "m.iatw");

  SUBCASE("load reproduces the model exactly") {
    const Checkpoint loaded = load_checkpoint(path);
    CHECK(loaded.iteration == 3);
    CHECK(loaded.rng_state == ck.rng_state);
    CHECK(loaded.metadata.to_text() == ck.metadata.to_text());
    CHECK(loaded.model->config() == ck.model->config());
    CHECK(loaded.model_hash() == ck.model_hash());
    CHECK(snapshot(*loaded.model) == snapshot(*ck.model));
    Rng rng(1);
    const TensorF x = PatchSampler::synthetic(1, 32, 32, 3).sample_batch(rng, 1);
    const TensorF level = QualityLevel::uniform(0.4, 32, 32).to_tensor<float>();
    NoGradGuard guard;
    CHECK(ck.model->transform().analysis(x, level).to_vector() == loaded.model->transform().analysis(x, level).to_vector());
  }
  SUBCASE("damaged files are rejected") {
    auto bytes = read_file(path);
    auto flipped = bytes;
    flipped[flipped.size() - 2] ^= 0x10;  // inside the last parameter tensor
    write_file_atomic(path, flipped);
    CHECK_THROWS_AS(load_checkpoint(path), IoError);
    write_file_atomic(path, std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + static_cast<long>(bytes.size() / 2)));
    CHECK_THROWS_AS(load_checkpoint(path), IoError);
    auto magic = bytes;
    magic[0] = 'X';
    write_file_atomic(path, magic);
    CHECK_THROWS_AS(load_checkpoint(path), IoError);
    auto version = bytes;
    version[4] = 9;
    write_file_atomic(path, version);
    CHECK_THROWS_AS(load_checkpoint(path), IoError);
  }
  SUBCASE("unwritable destination leaves nothing") {
    const std::string bad = (dir / "no" / "m.iatw").string();
    CHECK_THROWS_AS(save_checkpoint(ck, bad), IoError);
    CHECK_FALSE(fs::exists(bad));
  }
  fs::remove_all(dir);
}

TEST_CASE("model hash reacts to every parameter") {
  // Hash collision probe: nudging any single value by one float ulp, in any
  // parameter tensor, must change the hash, and no two probes may collide.
  CodecModel<float> model(small_arch(), 3);
  const std::uint64_t base = model.hash();
  std::set<std::uint64_t> seen{base};
  Rng rng(4);
  for (const auto& p : model.parameters().items()) {
    auto values = TensorF(p.tensor).mutable_data();
    const std::size_t i = rng.below(values.size());
    const float old = values[i];
    values[i] = std::nextafter(old, 1e30f);
    const std::uint64_t h = model.hash();
    CHECK(h != base);
    CHECK(seen.insert(h).second);
    values[i] = old;
  }
  CHECK(model.hash() == base);
  inn::ArchitectureConfig other = small_arch();
  other.coupling_smax = 2.5;
  CHECK(CodecModel<float>(other, 3).hash() != base);
}
