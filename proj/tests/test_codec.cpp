#include <doctest.h>

#include <cmath>
#include <sstream>

#include "iat/codec/experiments.hpp"
#include "iat/gradcheck.hpp"
#include "iat/train/dataset.hpp"

using namespace iat;
using namespace iat::codec;

namespace {

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

CodecModel<float> random_model(std::uint64_t seed) {
  CodecModel<float> m(small_arch(), seed);
  Rng rng(seed);
  perturb_zero_parameters(m.parameters(), rng, 0.05);
  return m;
}

const Codec& shared_codec() {
  static const Codec codec(random_model(1));
  return codec;
}

Image test_image(int w, int h, std::uint64_t seed = 5) {
  Rng rng(seed);
  return train::synthetic_image(rng, w, h);
}

Image constant_image(int w, int h, std::uint8_t v) {
  Image im(w, h);
  for (auto& p : im.pixels) p = v;
  return im;
}

}  // namespace

TEST_CASE("psnr") {
  const Image a = constant_image(16, 8, 100);
  Image b = a;
  CHECK(psnr(a, b) == kMaxDecibels);
  for (std::size_t i = 0; i < b.pixels.size(); ++i) b.pixels[i] = static_cast<std::uint8_t>(i % 2 ? 101 : 99);
  CHECK(std::abs(psnr(a, b) - 48.1308) <= 1e-4);
  CHECK(psnr_from_mse(255.0 * 255.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(psnr(a, constant_image(8, 16, 0)), ShapeError);
}

TEST_CASE("ms-ssim") {
  CHECK(msssim_to_db(0.99) == doctest::Approx(20.0));
  CHECK(msssim_to_db(1.0) == kMaxDecibels);
  const Image a = test_image(192, 176);
  CHECK(msssim(a, a) == doctest::Approx(1.0));
  CHECK(msssim_db(a, a) == kMaxDecibels);
  // More noise, lower score; small images fall back to fewer scales.
  double previous = 1.0;
  for (int amplitude : {2, 8, 32}) {
    Image b = a;
    Rng rng(static_cast<std::uint64_t>(amplitude));
    for (auto& p : b.pixels) p = static_cast<std::uint8_t>(std::clamp(p + static_cast<int>(rng.below(2 * amplitude + 1)) - amplitude, 0, 255));
    const double m = msssim(a, b);
    CHECK(m < previous);
    CHECK(m > 0);
    previous = m;
    const Image sa = a.cropped(40, 24), sb = b.cropped(40, 24);
    CHECK(msssim(sa, sb) < 1.0);
    CHECK(std::isfinite(msssim(sa.cropped(7, 5), sb.cropped(7, 5))));
  }
}

TEST_CASE("area under the curve") {
  CHECK(auc({{0, 0}, {1, 1}}) == 0.5);
  CHECK(auc({{1, 1}, {0, 0}, {0.5, 0.5}}) == 0.5);
  CHECK(auc_between({{0, 0}, {2, 2}}, 0.5, 1.5) == doctest::Approx(1.0));
  const auto [a, b] = auc_on_common_range({{0, 1}, {2, 1}}, {{1, 3}, {3, 3}});
  CHECK(a == doctest::Approx(1.0));
  CHECK(b == doctest::Approx(3.0));
  CHECK_THROWS_AS(auc_on_common_range({{0, 1}, {1, 1}}, {{2, 1}, {3, 1}}), ConfigError);
  CHECK_THROWS_AS(auc_between({{0, 0}, {1, 1}}, -1, 0.5), ConfigError);
}

TEST_CASE("spearman") {
  const std::vector<double> up{1, 2, 3, 4}, down{9, 7, 5, 1}, tied{1, 2, 2, 3};
  CHECK(spearman(up, up) == doctest::Approx(1.0));
  CHECK(spearman(up, down) == doctest::Approx(-1.0));
  // Ranks 1, 2.5, 2.5, 4 against 1, 2, 3, 4.
  CHECK(spearman(tied, up) == doctest::Approx(0.948683).epsilon(1e-6));
  CHECK_THROWS_AS(spearman(up, std::vector<double>{1, 2}), ConfigError);
}

TEST_CASE("encode and decode") {
  const Codec& codec = shared_codec();
  CHECK(codec.alignment() == 16);
  SUBCASE("aligned and padded sizes") {
    for (const auto& [w, h] : {std::pair{32, 48}, std::pair{37, 21}, std::pair{1, 1}}) {
      CAPTURE(w);
      CAPTURE(h);
      const Image im = test_image(w, h);
      const auto bytes = codec.encode(im, QualityLevel::uniform(0.5, w, h));
      const rans::Bitstream s = rans::parse(bytes);
      CHECK(s.width == w);
      CHECK(s.height == h);
      CHECK(s.padded == (w % 16 != 0 || h % 16 != 0));
      const Image rec = codec.decode(bytes);
      CHECK(rec.width == w);
      CHECK(rec.height == h);
      CHECK(std::isfinite(psnr(im, rec)));
      CHECK(bits_per_pixel(bytes, w, h) == 8.0 * bytes.size() / (w * h));
    }
  }
  SUBCASE("deterministic") {
    const Image im = test_image(48, 32);
    const auto level = QualityLevel::uniform(0.3, 48, 32);
    const auto bytes = codec.encode(im, level);
    CHECK(codec.encode(im, level) == bytes);
    CHECK(codec.decode(bytes) == codec.decode(bytes));
    // A second codec built from the same weights agrees byte for byte.
    const Codec again(random_model(1));
    CHECK(again.encode(im, level) == bytes);
  }
  SUBCASE("the level map travels in the header") {
    const Image im = test_image(40, 24);
    std::vector<double> v(40 * 24);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = (i % 40) / 39.0;
    const QualityLevel ramp = QualityLevel::from_values(40, 24, v);
    const auto bytes = codec.encode(im, ramp);
    const rans::Bitstream s = rans::parse(bytes);
    CHECK_FALSE(s.uniform_level);
    CHECK(s.levels == ramp.levels());
    // Decoding the same latents under another map gives another image, so
    // the decoder cannot be ignoring the stored one.
    rans::Bitstream flat = s;
    flat.uniform_level = true;
    flat.levels = {0};
    CHECK(codec.decode(rans::serialize(flat)) != codec.decode(bytes));
  }
  SUBCASE("level map must match the image") {
    CHECK_THROWS_AS(codec.encode(test_image(32, 32), QualityLevel::uniform(0.5, 16, 32)), ShapeError);
  }
}

TEST_CASE("decoder refusals") {
  const Codec& codec = shared_codec();
  const auto bytes = codec.encode(test_image(32, 32), QualityLevel::uniform(0.7, 32, 32));
  const auto fault = [&](std::vector<std::uint8_t> b) {
    try {
      codec.decode(b);
    } catch (const rans::BitstreamError& e) {
      return e.fault();
    }
    FAIL("decode accepted a damaged stream");
    return rans::BitstreamFault::kInvalidField;
  };
  SUBCASE("other model") {
    const Codec other(random_model(2));
    REQUIRE(other.model_hash() != codec.model_hash());
    try {
      other.decode(bytes);
      FAIL("decoded with the wrong model");
    } catch (const rans::BitstreamError& e) {
      CHECK(e.fault() == rans::BitstreamFault::kModelMismatch);
      CHECK(std::string(e.what()).find("model") != std::string::npos);
    }
  }
  SUBCASE("truncation") {
    for (std::size_t keep : {std::size_t{0}, std::size_t{3}, std::size_t{12}, bytes.size() / 2, bytes.size() - 1}) {
      CAPTURE(keep);
      auto cut = bytes;
      cut.resize(keep);
      const auto f = fault(cut);
      CHECK((f == rans::BitstreamFault::kTruncated || f == rans::BitstreamFault::kLengthMismatch ||
             f == rans::BitstreamFault::kBadMagic));
    }
  }
  SUBCASE("padded flag must agree with the size") {
    auto s = rans::parse(bytes);
    s.padded = true;
    CHECK(fault(rans::serialize(s)) == rans::BitstreamFault::kInvalidField);
  }
  SUBCASE("payload damage") {
    // Flipping payload bytes either decodes to some image or is refused;
    // nothing else may escape.
    Rng rng(9);
    const auto header = rans::parse(bytes).header_size();
    for (int trial = 0; trial < 50; ++trial) {
      auto b = bytes;
      b[header + rng.below(b.size() - header)] ^= static_cast<std::uint8_t>(1 + rng.below(255));
      try {
        const Image rec = codec.decode(b);
        CHECK(rec.width == 32);
      } catch (const rans::BitstreamError&) {
      }
    }
  }
}

TEST_CASE("re-encoding chain") {
  const Codec& codec = shared_codec();
  const Image im = test_image(32, 32, 11);
  const auto chain = reencode_chain(codec, im, {0.4}, 3);
  REQUIRE(chain.size() == 3);
  const auto bytes = codec.encode(im, QualityLevel::uniform(0.4, 32, 32));
  const Image rec = codec.decode(bytes);
  CHECK(chain[0].step == 1);
  CHECK(chain[0].bpp == bits_per_pixel(bytes, 32, 32));
  CHECK(chain[0].psnr == psnr(im, rec));
  CHECK(chain[0].msssim_db == msssim_db(im, rec));
  CHECK(chain[0].psnr_prev == chain[0].psnr);
  CHECK(chain[1].psnr == psnr(im, codec.decode(codec.encode(rec, QualityLevel::uniform(0.4, 32, 32)))));

  const auto varying = reencode_chain(codec, im, {0.9, 0.6, 0.3}, 3);
  CHECK(varying[2].level == canonical_level(0.3));
  CHECK_THROWS_AS(reencode_chain(codec, im, {0.9, 0.6}, 3), ConfigError);
  CHECK_THROWS_AS(reencode_chain(codec, im, {0.5}, 0), ConfigError);

  std::ostringstream csv;
  write_chain_csv(csv, chain);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "step,qlevel,bpp,psnr,msssim_db,psnr_prev");
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 5);
  }
  CHECK(rows == 3);
}

TEST_CASE("rate-distortion sweep") {
  const Codec& codec = shared_codec();
  CHECK(uniform_grid(3) == std::vector<double>{0, 0.5, 1});
  CHECK_THROWS_AS(uniform_grid(1), ConfigError);
  const std::vector<Image> images{test_image(32, 32, 1), test_image(48, 16, 2)};
  const auto points = rd_sweep(codec, images, uniform_grid(4));
  REQUIRE(points.size() == 4);
  const auto again = rd_sweep(codec, images, uniform_grid(4));
  for (std::size_t i = 0; i < points.size(); ++i) {
    CHECK(points[i].bpp == again[i].bpp);
    CHECK(points[i].psnr == again[i].psnr);
    CHECK(points[i].msssim_db == again[i].msssim_db);
  }
  double bits = 0;
  for (const auto& im : images) bits += 8.0 * codec.encode(im, QualityLevel::uniform(1.0, im.width, im.height)).size();
  CHECK(points[3].bpp == bits / (32 * 32 + 48 * 16));
  CHECK_THROWS_AS(rd_sweep(codec, {}, uniform_grid(4)), ConfigError);
  CHECK_THROWS_AS(rd_sweep(codec, images, {0.5}), ConfigError);
}
