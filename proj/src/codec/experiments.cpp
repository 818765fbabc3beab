#include "iat/codec/experiments.hpp"

#include <cstdio>

namespace iat::codec {

namespace {

std::string format(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::vector<double> uniform_grid(int k) {
  if (k < 2) throw ConfigError("a level grid needs at least two points");
  std::vector<double> levels;
  for (int i = 0; i < k; ++i) levels.push_back(static_cast<double>(i) / (k - 1));
  return levels;
}

std::vector<RDPoint> rd_sweep(const Codec& codec, const std::vector<Image>& images, const std::vector<double>& levels) {
  if (images.empty()) throw ConfigError("rd_sweep needs at least one image");
  if (levels.size() < 2) throw ConfigError("rd_sweep needs at least two levels");
  double pixels = 0;
  for (const auto& im : images) pixels += static_cast<double>(im.width) * im.height;
  std::vector<RDPoint> out;
  for (const double level : levels) {
    RDPoint p;
    p.level = canonical_level(level);
    double bits = 0;
    for (const auto& im : images) {
      const auto bytes = codec.encode(im, QualityLevel::uniform(level, im.width, im.height));
      const Image rec = codec.decode(bytes);
      bits += 8.0 * static_cast<double>(bytes.size());
      p.psnr += psnr(im, rec) / static_cast<double>(images.size());
      p.msssim_db += msssim_db(im, rec) / static_cast<double>(images.size());
    }
    p.bpp = bits / pixels;
    out.push_back(p);
  }
  return out;
}

std::vector<CurvePoint> psnr_curve(const std::vector<RDPoint>& points) {
  std::vector<CurvePoint> c;
  for (const auto& p : points) c.push_back({p.bpp, p.psnr});
  return c;
}

std::vector<CurvePoint> msssim_curve(const std::vector<RDPoint>& points) {
  std::vector<CurvePoint> c;
  for (const auto& p : points) c.push_back({p.bpp, p.msssim_db});
  return c;
}

void write_sweep_csv(std::ostream& out, const std::vector<RDPoint>& points) {
  out << "level,bpp,psnr,msssim_db\n";
  for (const auto& p : points)
    out << format(p.level) << ',' << format(p.bpp) << ',' << format(p.psnr) << ',' << format(p.msssim_db) << '\n';
}

std::vector<ChainStep> reencode_chain(const Codec& codec, const Image& image, const std::vector<double>& schedule,
                                      int steps) {
  if (steps < 1) throw ConfigError("a re-encoding chain needs at least one step");
  if (schedule.empty() || (schedule.size() > 1 && schedule.size() < static_cast<std::size_t>(steps))) {
    throw ConfigError("level schedule has " + std::to_string(schedule.size()) + " entries for " +
                      std::to_string(steps) + " steps");
  }
  std::vector<ChainStep> out;
  Image previous = image;
  for (int i = 0; i < steps; ++i) {
    const double level = schedule.size() == 1 ? schedule[0] : schedule[static_cast<std::size_t>(i)];
    const auto bytes = codec.encode(previous, QualityLevel::uniform(level, image.width, image.height));
    Image rec = codec.decode(bytes);
    ChainStep s;
    s.step = i + 1;
    s.level = canonical_level(level);
    s.bpp = bits_per_pixel(bytes, image.width, image.height);
    s.psnr = psnr(image, rec);
    s.msssim_db = msssim_db(image, rec);
    s.psnr_prev = psnr(previous, rec);
    out.push_back(s);
    previous = std::move(rec);
  }
  return out;
}

void write_chain_csv(std::ostream& out, const std::vector<ChainStep>& steps) {
  out << kChainCsvHeader << '\n';
  for (const auto& s : steps) {
    out << s.step << ',' << format(s.level) << ',' << format(s.bpp) << ',' << format(s.psnr) << ','
        << format(s.msssim_db) << ',' << format(s.psnr_prev) << '\n';
  }
}

}  // namespace iat::codec
