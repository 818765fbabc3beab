#include "iat/train/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>

namespace iat::train {

namespace {

using Rgb = std::array<double, 3>;

Rgb random_colour(Rng& rng) { return {rng.uniform(0, 255), rng.uniform(0, 255), rng.uniform(0, 255)}; }

struct Canvas {
  int width, height;
  std::vector<Rgb> px;

  Rgb& at(int x, int y) { return px[static_cast<std::size_t>(y) * width + x]; }

  void blend(int x, int y, const Rgb& c, double alpha) {
    Rgb& p = at(x, y);
    for (int k = 0; k < 3; ++k) p[k] += alpha * (c[k] - p[k]);
  }
};

// Smooth random field: a coarse lattice of uniform values, bilinearly
// interpolated. cell is the lattice spacing in pixels.
std::vector<double> value_noise(Rng& rng, int width, int height, double cell) {
  const int gw = static_cast<int>(std::ceil(width / cell)) + 2;
  const int gh = static_cast<int>(std::ceil(height / cell)) + 2;
  std::vector<double> grid(static_cast<std::size_t>(gw) * gh);
  for (auto& g : grid) g = rng.uniform(-1, 1);
  std::vector<double> out(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double gx = x / cell, gy = y / cell;
      const int ix = static_cast<int>(gx), iy = static_cast<int>(gy);
      const double fx = gx - ix, fy = gy - iy;
      const auto g = [&](int i, int j) { return grid[static_cast<std::size_t>(j) * gw + i]; };
      const double top = g(ix, iy) * (1 - fx) + g(ix + 1, iy) * fx;
      const double bottom = g(ix, iy + 1) * (1 - fx) + g(ix + 1, iy + 1) * fx;
      out[static_cast<std::size_t>(y) * width + x] = top * (1 - fy) + bottom * fy;
    }
  }
  return out;
}

}  // namespace

Image synthetic_image(Rng& rng, int width, int height) {
  Canvas canvas{width, height, std::vector<Rgb>(static_cast<std::size_t>(width) * height)};

  // Background gradient.
  const Rgb c0 = random_colour(rng), c1 = random_colour(rng);
  const double angle = rng.uniform(0, 2 * M_PI);
  const double dx = std::cos(angle), dy = std::sin(angle);
  const double span = std::abs(dx) * width + std::abs(dy) * height;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double t = ((x - width / 2.0) * dx + (y - height / 2.0) * dy) / span + 0.5;
      t = std::clamp(t, 0.0, 1.0);
      for (int k = 0; k < 3; ++k) canvas.at(x, y)[k] = c0[k] + t * (c1[k] - c0[k]);
    }

  // Soft blobs.
  const int blobs = 2 + static_cast<int>(rng.below(5));
  for (int b = 0; b < blobs; ++b) {
    const Rgb c = random_colour(rng);
    const double cx = rng.uniform(0, width), cy = rng.uniform(0, height);
    const double r = rng.uniform(0.05, 0.35) * std::min(width, height);
    const double strength = rng.uniform(0.4, 1.0);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const double d2 = ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (r * r);
        if (d2 < 9) canvas.blend(x, y, c, strength * std::exp(-0.5 * d2));
      }
  }

  // Hard-edged shapes, some filled with stripes.
  const int shapes = 1 + static_cast<int>(rng.below(5));
  for (int s = 0; s < shapes; ++s) {
    const Rgb c = random_colour(rng), c2 = random_colour(rng);
    const bool disc = rng.below(2) == 1;
    const bool striped = rng.below(3) == 0;
    const double period = rng.uniform(3, 12);
    const double stripe_angle = rng.uniform(0, M_PI);
    const double cx = rng.uniform(0, width), cy = rng.uniform(0, height);
    const double rx = rng.uniform(0.05, 0.3) * width, ry = rng.uniform(0.05, 0.3) * height;
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const double u = (x - cx) / rx, v = (y - cy) / ry;
        const bool inside = disc ? u * u + v * v <= 1 : std::abs(u) <= 1 && std::abs(v) <= 1;
        if (!inside) continue;
        Rgb fill = c;
        if (striped) {
          const double phase = (x * std::cos(stripe_angle) + y * std::sin(stripe_angle)) / period;
          const double w = 0.5 + 0.5 * std::sin(2 * M_PI * phase);
          for (int k = 0; k < 3; ++k) fill[k] = c[k] + w * (c2[k] - c[k]);
        }
        canvas.blend(x, y, fill, 1.0);
      }
  }

  // Texture: medium-scale luminance noise plus fine grain.
  const double texture = rng.uniform(0, 30);
  const double cell = rng.uniform(2, 8);
  const std::vector<double> field = value_noise(rng, width, height, cell);
  const double grain = rng.uniform(0, 4);

  Image image(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double t = texture * field[static_cast<std::size_t>(y) * width + x];
      for (int k = 0; k < 3; ++k) {
        const double v = canvas.at(x, y)[k] + t + grain * rng.uniform(-1, 1);
        image.at(x, y, k) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  return image;
}

PatchSampler PatchSampler::synthetic(int image_count, int image_size, int patch, std::uint64_t seed) {
  if (image_count <= 0) throw ConfigError("synthetic dataset needs at least one image");
  if (image_size < patch) throw ConfigError("synthetic image size below patch size");
  Rng rng(seed);
  std::vector<Image> images;
  for (int i = 0; i < image_count; ++i) images.push_back(synthetic_image(rng, image_size, image_size));
  return from_images(std::move(images), patch);
}

PatchSampler PatchSampler::from_directory(const std::string& dir, int min_size, int patch, std::ostream* log) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("dataset directory not found: " + dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".png" || ext == ".ppm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  const int floor = std::max(min_size, patch);
  PatchSampler sampler;
  sampler.patch_ = patch;
  for (const auto& f : files) {
    Image image = load_image(f.string());
    if (image.width < floor || image.height < floor) {
      ++sampler.skipped_;
      continue;
    }
    sampler.images_.push_back(std::move(image));
  }
  if (log) *log << "dataset " << dir << ": " << sampler.images_.size() << " images, " << sampler.skipped_
                << " skipped below " << floor << " px\n";
  if (sampler.images_.empty()) {
    throw IoError("no usable images in " + dir + " (" + std::to_string(files.size()) + " found, " +
                  std::to_string(sampler.skipped_) + " skipped below " + std::to_string(floor) + " px)");
  }
  return sampler;
}

PatchSampler PatchSampler::from_images(std::vector<Image> images, int patch) {
  if (patch <= 0) throw ConfigError("patch size must be positive");
  PatchSampler sampler;
  sampler.patch_ = patch;
  for (auto& image : images) {
    if (image.width < patch || image.height < patch) {
      ++sampler.skipped_;
      continue;
    }
    sampler.images_.push_back(std::move(image));
  }
  if (sampler.images_.empty()) throw IoError("no images of at least " + std::to_string(patch) + " px");
  return sampler;
}

Image PatchSampler::sample(Rng& rng) const {
  const Image& src = images_[rng.below(images_.size())];
  const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(src.width - patch_ + 1)));
  const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(src.height - patch_ + 1)));
  Image out(patch_, patch_);
  for (int y = 0; y < patch_; ++y) {
    std::copy_n(src.pixels.begin() + (static_cast<std::ptrdiff_t>(y0 + y) * src.width + x0) * 3, patch_ * 3,
                out.pixels.begin() + static_cast<std::ptrdiff_t>(y) * patch_ * 3);
  }
  return out;
}

TensorF PatchSampler::sample_batch(Rng& rng, int batch) const {
  const std::int64_t plane = static_cast<std::int64_t>(patch_) * patch_;
  std::vector<float> values;
  values.reserve(static_cast<std::size_t>(batch * 3 * plane));
  for (int n = 0; n < batch; ++n) {
    const TensorF one = image_to_tensor<float>(sample(rng));
    values.insert(values.end(), one.data().begin(), one.data().end());
  }
  return TensorF::from({batch, 3, patch_, patch_}, std::move(values));
}

}  // namespace iat::train
