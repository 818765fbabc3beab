// iatc: train, encode, decode and evaluate the variable-rate codec.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include "iat/codec/experiments.hpp"
#include "iat/codec/selftest.hpp"
#include "iat/train/trainer.hpp"

using namespace iat;
namespace fs = std::filesystem;

namespace {

// Training allocates and frees the same large activation buffers every
// step. Keeping them in the heap instead of returning them to the kernel
// saves about a fifth of the step time.
void keep_freed_memory() {
#ifdef __GLIBC__
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

KeyValues load_config(const std::string& path) { return path.empty() ? KeyValues{} : KeyValues::load(path); }

codec::Codec load_codec(const std::string& checkpoint) {
  const train::Checkpoint ck = train::load_checkpoint(checkpoint);
  return codec::Codec(*ck.model);
}

/// "0.35" is a uniform level; anything else names an image whose first
/// channel holds the levels (0..255).
QualityLevel parse_level(const std::string& spec, int width, int height) {
  char* end = nullptr;
  const double v = std::strtod(spec.c_str(), &end);
  if (end != spec.c_str() && *end == '\0') {
    if (!(v >= 0 && v <= 1)) throw ConfigError("--qlevel must lie in [0, 1], got " + spec);
    return QualityLevel::uniform(v, width, height);
  }
  const Image map = load_image(spec);
  if (map.width != width || map.height != height) {
    throw ShapeError("level map " + spec + " is " + std::to_string(map.width) + "x" + std::to_string(map.height) +
                     ", image is " + std::to_string(width) + "x" + std::to_string(height));
  }
  std::vector<std::uint8_t> levels(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) levels[static_cast<std::size_t>(y) * width + x] = map.at(x, y, 0);
  return QualityLevel::from_levels(width, height, std::move(levels));
}

std::vector<double> parse_schedule(const std::string& spec) {
  std::vector<double> out;
  std::stringstream in(spec);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || !(v >= 0 && v <= 1)) throw ConfigError("bad level in schedule: '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty level schedule");
  return out;
}

std::vector<Image> collect_images(const std::vector<std::string>& paths) {
  std::vector<std::string> files;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      std::vector<std::string> found;
      for (const auto& e : fs::directory_iterator(p)) {
        const auto ext = e.path().extension().string();
        if (e.is_regular_file() && (ext == ".png" || ext == ".ppm")) found.push_back(e.path().string());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(p);
    }
  }
  std::vector<Image> images;
  for (const auto& f : files) images.push_back(load_image(f));
  return images;
}

/// Writes through a temporary so a failed run leaves no half file.
template <class Fn>
void write_text(const std::string& path, Fn&& fill) {
  std::ostringstream out;
  fill(out);
  const std::string s = out.str();
  write_file_atomic(path, std::vector<std::uint8_t>(s.begin(), s.end()));
}

void print_sweep(const std::vector<codec::RDPoint>& points) {
  std::printf("%8s %9s %9s %10s\n", "level", "bpp", "psnr", "msssim_db");
  for (const auto& p : points) std::printf("%8.4f %9.4f %9.3f %10.3f\n", p.level, p.bpp, p.psnr, p.msssim_db);
}

std::vector<codec::CurvePoint> read_curve(const std::string& path, bool msssim) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line != "level,bpp,psnr,msssim_db") throw IoError(path + ": not a sweep CSV");
  std::vector<codec::CurvePoint> c;
  while (std::getline(in, line)) {
    double level, bpp, psnr, ms;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &level, &bpp, &psnr, &ms) != 4) {
      throw IoError(path + ": malformed row '" + line + "'");
    }
    c.push_back({bpp, msssim ? ms : psnr});
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"iatc: variable-rate learned image codec"};
  app.require_subcommand(1);

  std::string config_path, checkpoint, input, output, qlevel = "0.5", out_csv, out_dat;
  std::vector<std::string> inputs, curves;
  long long seed = -1;
  int steps = -1, grid = 100, synthetic = 0;

  auto* train = app.add_subcommand("train", "train a model and write a .iatw checkpoint");
  train->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  train->add_option("--checkpoint", checkpoint, "output checkpoint")->required();
  train->add_option("--seed", seed, "overrides the config seed");
  train->add_option("--steps", steps, "overrides the iteration count");

  auto* encode = app.add_subcommand("encode", "compress a PNG/PPM image to .iatb");
  encode->add_option("input", input, "image")->required()->check(CLI::ExistingFile);
  encode->add_option("-o,--output", output, "bitstream")->required();
  encode->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  encode->add_option("--qlevel", qlevel, "uniform level in [0, 1] or a level-map image");

  auto* decode = app.add_subcommand("decode", "decompress a .iatb stream");
  decode->add_option("input", input, "bitstream")->required()->check(CLI::ExistingFile);
  decode->add_option("-o,--output", output, "image (.png or .ppm)")->required();
  decode->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);

  auto* reencode = app.add_subcommand("reencode", "successive re-encoding of one image");
  reencode->add_option("input", input, "image")->required()->check(CLI::ExistingFile);
  reencode->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  reencode->add_option("--qlevel", qlevel, "one level, or a comma list giving the level of each step");
  reencode->add_option("--steps", steps, "number of generations")->required();
  reencode->add_option("--out-csv", out_csv, "report: step,qlevel,bpp,psnr,msssim_db,psnr_prev");

  auto* sweep = app.add_subcommand("sweep", "rate-distortion sweep over uniform levels");
  sweep->add_option("inputs", inputs, "images or directories");
  sweep->add_option("--synthetic", synthetic, "add N synthetic 128x128 images drawn from --seed");
  sweep->add_option("--seed", seed, "seed for --synthetic (default 1001)");
  sweep->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  sweep->add_option("--grid", grid, "number of levels, evenly spaced over [0, 1]");
  sweep->add_option("--out-csv", out_csv, "columns: level,bpp,psnr,msssim_db");
  sweep->add_option("--out-dat", out_dat, "same columns, whitespace separated, for gnuplot");

  auto* metrics = app.add_subcommand("metrics", "PSNR / MS-SSIM of two images, or AUC of sweep CSVs");
  metrics->add_option("images", inputs, "reference and distorted image");
  metrics->add_option("--auc", curves, "one sweep CSV, or two to compare over their common bpp range");

  auto* selftest = app.add_subcommand("selftest", "bijectivity, gradient and coder exactness suites");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      keep_freed_memory();
      KeyValues kv = load_config(config_path);
      if (seed >= 0) kv.set("seed", std::to_string(seed));
      if (steps >= 0) kv.set("iterations", std::to_string(steps));
      const auto cfg = train::TrainConfig::from(kv);
      const auto arch = inn::ArchitectureConfig::from(kv);
      const auto rate_cfg = rate::RateControlConfig::from(kv);
      const auto ck = train::run_training(cfg, arch, rate_cfg, checkpoint, &std::cerr);
      std::printf("wrote %s (%lld iterations, model hash %016llx)\n", checkpoint.c_str(),
                  static_cast<long long>(ck.iteration), static_cast<unsigned long long>(ck.model_hash()));
    } else if (*encode) {
      const codec::Codec c = load_codec(checkpoint);
      const Image image = load_image(input);
      const auto bytes = c.encode(image, parse_level(qlevel, image.width, image.height));
      write_file_atomic(output, bytes);
      std::printf("%s: %zu bytes, %.4f bpp\n", output.c_str(), bytes.size(),
                  codec::bits_per_pixel(bytes, image.width, image.height));
    } else if (*decode) {
      const codec::Codec c = load_codec(checkpoint);
      const Image image = codec::decode_file(c, input, output);
      std::printf("%s: %dx%d\n", output.c_str(), image.width, image.height);
    } else if (*reencode) {
      const codec::Codec c = load_codec(checkpoint);
      const auto chain = codec::reencode_chain(c, load_image(input), parse_schedule(qlevel), steps);
      codec::write_chain_csv(std::cout, chain);
      if (!out_csv.empty()) write_text(out_csv, [&](std::ostream& o) { codec::write_chain_csv(o, chain); });
    } else if (*sweep) {
      const codec::Codec c = load_codec(checkpoint);
      std::vector<Image> images = collect_images(inputs);
      Rng rng(seed >= 0 ? static_cast<std::uint64_t>(seed) : 1001);
      for (int i = 0; i < synthetic; ++i) images.push_back(train::synthetic_image(rng, 128, 128));
      const auto points = codec::rd_sweep(c, images, codec::uniform_grid(grid));
      print_sweep(points);
      std::printf("AUC psnr %.4f  msssim_db %.4f over bpp [%.4f, %.4f], %zu images\n", codec::auc(codec::psnr_curve(points)),
                  codec::auc(codec::msssim_curve(points)), points.front().bpp, points.back().bpp, images.size());
      if (!out_csv.empty()) write_text(out_csv, [&](std::ostream& o) { codec::write_sweep_csv(o, points); });
      if (!out_dat.empty()) {
        write_text(out_dat, [&](std::ostream& o) {
          o << "# level bpp psnr msssim_db\n";
          for (const auto& p : points) o << p.level << ' ' << p.bpp << ' ' << p.psnr << ' ' << p.msssim_db << '\n';
        });
      }
    } else if (*metrics) {
      if (!curves.empty()) {
        if (curves.size() > 2) throw ConfigError("--auc takes one or two sweep CSVs");
        for (const bool ms : {false, true}) {
          const char* name = ms ? "msssim_db" : "psnr";
          if (curves.size() == 1) {
            std::printf("AUC %s %.4f\n", name, codec::auc(read_curve(curves[0], ms)));
          } else {
            const auto [a, b] = codec::auc_on_common_range(read_curve(curves[0], ms), read_curve(curves[1], ms));
            std::printf("AUC %s %.4f vs %.4f on the common bpp range\n", name, a, b);
          }
        }
      } else {
        if (inputs.size() != 2) throw ConfigError("metrics needs two images (or --auc)");
        const Image a = load_image(inputs[0]), b = load_image(inputs[1]);
        const double m = codec::msssim(a, b);
        std::printf("psnr %.4f dB  msssim %.6f  msssim_db %.4f dB\n", codec::psnr(a, b), m, codec::msssim_to_db(m));
      }
    } else if (*selftest) {
      bool ok = true;
      for (int suite = 0; suite < 3; ++suite) {
        const codec::SuiteResult r = suite == 0   ? codec::bijectivity_suite()
                                     : suite == 1 ? codec::gradient_suite()
                                                  : codec::coder_suite();
        std::printf("%s %-12s %s [%.1fs]\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str(), r.seconds);
        std::fflush(stdout);
        ok = ok && r.passed;
      }
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "iatc: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
