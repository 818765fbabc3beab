#include "iat/codec/codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "iat/rans/rans.hpp"

namespace iat::codec {

namespace {

using rans::BitstreamError;
using rans::BitstreamFault;

int round_up(int v, int multiple) { return (v + multiple - 1) / multiple * multiple; }

std::vector<int> rounded_latents(const TensorD& t) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(t.size()));
  for (const double v : t.data()) {
    if (!std::isfinite(v)) throw NumericError("non-finite latent");
    out.push_back(static_cast<int>(std::clamp(std::round(v), double(rans::kEscapeMin), double(rans::kEscapeMax))));
  }
  return out;
}

TensorD to_tensor(const std::vector<int>& values, const Shape& shape) {
  return TensorD::from(shape, std::vector<double>(values.begin(), values.end()));
}

struct ZParams {
  std::vector<double> mean, scale;
};

ZParams z_params(const CodecModel<double>& model, const Shape& z_shape) {
  ZParams p;
  const std::int64_t plane = z_shape[2] * z_shape[3];
  for (std::int64_t c = 0; c < z_shape[1]; ++c) {
    p.mean.insert(p.mean.end(), static_cast<std::size_t>(plane), model.zprior().mean(c));
    p.scale.insert(p.scale.end(), static_cast<std::size_t>(plane), model.zprior().scale(c));
  }
  return p;
}

Shape latent_shape(const inn::ArchitectureConfig& config, int width, int height) {
  const std::int64_t d = config.downscale();
  return {1, config.latent_channels, height / d, width / d};
}

Shape side_shape(const inn::ArchitectureConfig& config, int width, int height) {
  const std::int64_t d = config.downscale() * 4;
  return {1, config.hyper_channels, height / d, width / d};
}

}  // namespace

Codec::Codec(const CodecModel<float>& trained)
    : model_(std::make_unique<CodecModel<double>>(trained.config())), hash_(trained.hash()) {
  model_->copy_from(trained);
}

Codec::Codec(const CodecModel<double>& model)
    : model_(std::make_unique<CodecModel<double>>(model.config())), hash_(model.hash()) {
  model_->copy_from(model);
}

int Codec::alignment() const { return static_cast<int>(model_->config().downscale() * 4); }

std::vector<std::uint8_t> Codec::encode(const Image& image, const QualityLevel& level) const {
  if (level.width() != image.width || level.height() != image.height) {
    throw ShapeError("level map is " + std::to_string(level.width()) + "x" + std::to_string(level.height()) +
                     ", image is " + std::to_string(image.width) + "x" + std::to_string(image.height));
  }
  if (image.width > 0xffff || image.height > 0xffff) throw ShapeError("image sides are limited to 65535 pixels");
  const int a = alignment();
  const int pw = round_up(image.width, a), ph = round_up(image.height, a);
  const bool padded = pw != image.width || ph != image.height;

  const TensorD x = image_to_tensor<double>(padded ? image.padded_reflect(pw, ph) : image);
  const TensorD l = (padded ? level.resized_reflect(pw, ph) : level).to_tensor<double>();
  NoGradGuard no_grad;
  const TensorD y = model_->transform().analysis(x, l);
  const TensorD z = model_->hyper().analysis(y);

  const std::vector<int> z_hat = rounded_latents(z);
  const ZParams pz = z_params(*model_, z.shape());
  const Shape zs{z.dim(1), z.dim(2), z.dim(3)};
  const auto py = model_->hyper().synthesis_reference(std::vector<double>(z_hat.begin(), z_hat.end()), zs);
  const std::vector<int> y_hat = rounded_latents(y);

  rans::Bitstream s;
  s.width = static_cast<std::uint16_t>(image.width);
  s.height = static_cast<std::uint16_t>(image.height);
  s.padded = padded;
  s.model_hash = hash_;
  s.uniform_level = level.is_uniform();
  s.levels = s.uniform_level ? std::vector<std::uint8_t>{level.level(0, 0)} : level.levels();
  s.z_payload = rans::encode_gaussian(z_hat, pz.mean, pz.scale);
  s.y_payload = rans::encode_gaussian(y_hat, py.mean, py.scale);
  return rans::serialize(s);
}

Image Codec::decode(std::span<const std::uint8_t> bytes) const {
  const rans::Bitstream s = rans::parse(bytes);
  if (s.model_hash != hash_) {
    char msg[96];
    std::snprintf(msg, sizeof msg, "stream made by model %016llx, decoder has %016llx",
                  static_cast<unsigned long long>(s.model_hash), static_cast<unsigned long long>(hash_));
    throw BitstreamError(BitstreamFault::kModelMismatch, msg);
  }
  const int a = alignment();
  const int pw = round_up(s.width, a), ph = round_up(s.height, a);
  if ((pw != s.width || ph != s.height) != s.padded) {
    throw BitstreamError(BitstreamFault::kInvalidField, "padded flag disagrees with the image size");
  }
  const QualityLevel level = s.uniform_level
                                 ? QualityLevel::from_levels(s.width, s.height,
                                                             std::vector<std::uint8_t>(std::size_t{s.width} * s.height,
                                                                                       s.levels.at(0)))
                                 : QualityLevel::from_levels(s.width, s.height, s.levels);

  const auto& config = model_->config();
  const Shape zs4 = side_shape(config, pw, ph);
  const ZParams pz = z_params(*model_, zs4);
  std::vector<int> z_hat, y_hat;
  try {
    z_hat = rans::decode_gaussian(s.z_payload, pz.mean, pz.scale);
  } catch (const Error& e) {
    throw BitstreamError(BitstreamFault::kInvalidField, std::string("side information: ") + e.what());
  }
  const auto py =
      model_->hyper().synthesis_reference(std::vector<double>(z_hat.begin(), z_hat.end()), {zs4[1], zs4[2], zs4[3]});
  try {
    y_hat = rans::decode_gaussian(s.y_payload, py.mean, py.scale);
  } catch (const Error& e) {
    throw BitstreamError(BitstreamFault::kInvalidField, std::string("latents: ") + e.what());
  }

  NoGradGuard no_grad;
  const TensorD l = (s.padded ? level.resized_reflect(pw, ph) : level).to_tensor<double>();
  const TensorD x_hat = model_->transform().synthesis(to_tensor(y_hat, latent_shape(config, pw, ph)), l);
  for (const double v : x_hat.data())
    if (!std::isfinite(v)) throw BitstreamError(BitstreamFault::kInvalidField, "latents decode to non-finite pixels");
  const Image out = tensor_to_image(x_hat);
  return s.padded ? out.cropped(s.width, s.height) : out;
}

Image decode_file(const Codec& codec, const std::string& stream_path, const std::string& image_path) {
  Image image = codec.decode(read_file(stream_path));
  save_image(image, image_path);
  return image;
}

double bits_per_pixel(std::span<const std::uint8_t> bytes, int width, int height) {
  return static_cast<double>(bytes.size()) * 8.0 / (static_cast<double>(width) * height);
}

}  // namespace iat::codec
