// Acceptance run: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "iat/codec/experiments.hpp"
#include "iat/codec/selftest.hpp"
#include "iat/rate/rate_control.hpp"
#include "iat/train/checkpoint.hpp"
#include "iat/train/dataset.hpp"

using namespace iat;
using namespace iat::codec;
namespace fs = std::filesystem;

namespace {

const fs::path kData = IAT_TEST_DATA;

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

/// The desk model, loaded once.
const train::Checkpoint& desk() {
  static const train::Checkpoint ck = train::load_checkpoint((kData / "desk.iatw").string());
  return ck;
}

const Codec& desk_codec() {
  static const Codec codec(*desk().model);
  return codec;
}

/// Held-out evaluation set: synthetic images from a seed the training set
/// never used.
const std::vector<Image>& eval_images() {
  static const std::vector<Image> images = [] {
    Rng rng(1001);
    std::vector<Image> out;
    for (int i = 0; i < 4; ++i) out.push_back(train::synthetic_image(rng, 128, 128));
    return out;
  }();
  return images;
}

Outcome from_suite(const SuiteResult& r, double limit_seconds) {
  const bool fast = r.seconds < limit_seconds;
  return {r.passed && fast, r.detail + ", " + fmt("%.1f s", r.seconds) + fmt(" (< %.0f s)", limit_seconds)};
}

Outcome rate_constants() {
  const double v0 = rate::lambda_of(0), v1 = rate::lambda_of(1), vh = rate::lambda_of(0.5);
  // Uniform maps reduce the tensor loss to R + lambda * MSE.
  Rng rng(4);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const double level = rng.below(256) / 255.0;
    std::vector<double> xv(3 * 8 * 8), hv(xv.size()), yb(24), zb(6);
    for (auto& v : xv) v = rng.uniform();
    for (auto& v : hv) v = rng.uniform();
    for (auto& v : yb) v = rng.uniform(0, 5);
    for (auto& v : zb) v = rng.uniform(0, 5);
    const TensorD x = TensorD::from({1, 3, 8, 8}, xv), xh = TensorD::from({1, 3, 8, 8}, hv);
    const auto loss = rate::rd_loss(x, xh, TensorD::from({1, 24, 1, 1}, yb), TensorD::from({1, 6, 1, 1}, zb),
                                    rate::lambda_map<double>(QualityLevel::uniform(level, 8, 8), 3));
    double r = 0, mse = 0;
    for (double b : yb) r += b;
    for (double b : zb) r += b;
    for (std::size_t i = 0; i < xv.size(); ++i) mse += (xv[i] - hv[i]) * (xv[i] - hv[i]);
    mse /= static_cast<double>(xv.size());
    worst = std::max(worst, std::abs(loss.total.item() - (r + rate::lambda_of(level) * mse)));
  }
  const bool ok = v0 == 0.0012 && std::abs(v1 - 0.09600) <= 1e-5 && std::abs(vh - 0.010733) <= 1e-5 && worst <= 1e-10;
  return {ok, fmt("V(0) %.10g", v0) + fmt(", V(1) %.7f", v1) + fmt(", V(0.5) %.7f", vh) +
                  fmt(", uniform-map loss gap %.2e (<= 1e-10)", worst)};
}

/// Wall time of the run that produced desk.iatw, from its log.
double training_seconds() {
  std::ifstream log(kData / "desk_train.log");
  std::string line, last;
  while (std::getline(log, line))
    if (line.rfind("iter ", 0) == 0) last = line;
  const auto s = last.find_last_of(' ');
  if (last.empty() || s == std::string::npos) return NAN;
  return std::stod(last.substr(s + 1));
}

Outcome desk_sweep() {
  const auto& meta = desk().metadata;
  const bool regime = desk().iteration == 20000 && meta.get_int("batch", 0) == 8 && meta.get_int("patch", 0) == 48;
  const double secs = training_seconds();
  const auto points = rd_sweep(desk_codec(), eval_images(), uniform_grid(100));
  std::set<double> distinct;
  std::vector<double> levels, bpp, psnr;
  for (const auto& p : points) {
    distinct.insert(p.bpp);
    levels.push_back(p.level);
    bpp.push_back(p.bpp);
    psnr.push_back(p.psnr);
  }
  const double rho_rate = spearman(levels, bpp), rho_quality = spearman(bpp, psnr);
  const bool ok = regime && secs <= 3600 && distinct.size() >= 100 && rho_rate >= 0.99 && rho_quality >= 0.99;
  std::ostringstream d;
  d << (regime ? "" : "checkpoint is not the 20k x 8 x 48 desk run; ") << "training " << fmt("%.0f s", secs)
    << " (<= 3600), " << distinct.size() << " distinct bpp (>= 100), rho(L, bpp) " << fmt("%.4f", rho_rate)
    << ", rho(bpp, PSNR) " << fmt("%.4f", rho_quality) << " (>= 0.99); bpp " << fmt("%.3f", bpp.front()) << ".."
    << fmt("%.3f", bpp.back()) << ", PSNR " << fmt("%.2f", psnr.front()) << ".." << fmt("%.2f", psnr.back())
    << ", AUC " << fmt("%.3f", auc(psnr_curve(points)));
  return {ok, d.str()};
}

Outcome reencoding() {
  constexpr int kSteps = 10;
  constexpr double kLevel = 0.5;
  const Codec& codec = desk_codec();
  std::vector<double> mean_psnr(kSteps, 0.0);
  bool schema = true, base_case = true;
  for (const auto& im : eval_images()) {
    const auto chain = reencode_chain(codec, im, {kLevel}, kSteps);
    for (int i = 0; i < kSteps; ++i) mean_psnr[static_cast<std::size_t>(i)] += chain[static_cast<std::size_t>(i)].psnr / 4;
    const auto bytes = codec.encode(im, QualityLevel::uniform(kLevel, im.width, im.height));
    const Image rec = codec.decode(bytes);
    base_case = base_case && chain[0].psnr == codec::psnr(im, rec) && chain[0].msssim_db == msssim_db(im, rec) &&
                chain[0].bpp == bits_per_pixel(bytes, im.width, im.height);
    std::ostringstream csv;
    write_chain_csv(csv, chain);
    std::istringstream rows(csv.str());
    std::string line;
    std::getline(rows, line);
    schema = schema && line == kChainCsvHeader;
    int n = 0;
    while (std::getline(rows, line)) {
      ++n;
      schema = schema && std::count(line.begin(), line.end(), ',') == 5 && line.rfind(std::to_string(n) + ",", 0) == 0;
    }
    schema = schema && n == kSteps;
  }
  // Determinism: one stream decoded twice.
  const auto bytes = codec.encode(eval_images()[0], QualityLevel::uniform(kLevel, 128, 128));
  const bool deterministic = codec.decode(bytes) == codec.decode(bytes);

  bool monotone = true, saturating = true;
  const double first_drop = mean_psnr[0] - mean_psnr[1];
  double worst_ratio = 0;
  for (int i = 1; i < kSteps; ++i) monotone = monotone && mean_psnr[static_cast<std::size_t>(i)] <= mean_psnr[static_cast<std::size_t>(i - 1)];
  for (int i = 1; i + 1 < kSteps; ++i) {
    const double drop = mean_psnr[static_cast<std::size_t>(i)] - mean_psnr[static_cast<std::size_t>(i + 1)];
    saturating = saturating && drop <= 1.5 * first_drop;
    if (first_drop > 0) worst_ratio = std::max(worst_ratio, drop / first_drop);
  }
  std::ostringstream d;
  d << "mean PSNR at L=0.5:";
  for (double p : mean_psnr) d << ' ' << fmt("%.3f", p);
  d << "; non-increasing " << (monotone ? "yes" : "no") << ", max later drop / first drop " << fmt("%.3f", worst_ratio)
    << " (<= 1.5), deterministic decode " << (deterministic ? "yes" : "no") << ", CSV schema "
    << (schema ? "ok" : "bad") << ", step 1 = single pass " << (base_case ? "yes" : "no");
  return {monotone && saturating && deterministic && schema && base_case, d.str()};
}

Outcome bitstream_conformance() {
  const auto golden = read_file((kData / "golden.iatb").string());
  const Image reference = load_image((kData / "golden_rec.png").string());
  const bool exact = desk_codec().decode(golden) == reference;

  const fs::path out = fs::temp_directory_path() / "iat_acceptance_fuzz.png";
  int cases = 0, structured = 0, wrong_fault = 0, leaked = 0, other = 0;
  const auto attempt = [&](const std::vector<std::uint8_t>& bytes, int expect) {
    ++cases;
    const fs::path in = fs::temp_directory_path() / "iat_acceptance_fuzz.iatb";
    write_file_atomic(in.string(), bytes);
    fs::remove(out);
    try {
      decode_file(desk_codec(), in.string(), out.string());
      // Some header bytes (level values) legitimately decode.
      if (expect >= 0) ++wrong_fault;
    } catch (const rans::BitstreamError& e) {
      ++structured;
      if (expect >= 0 && static_cast<int>(e.fault()) != expect) ++wrong_fault;
      if (fs::exists(out)) ++leaked;
    } catch (...) {
      ++other;
    }
    fs::remove(in);
  };
  using F = rans::BitstreamFault;
  for (int i = 0; i < 4; ++i) {
    auto b = golden;
    b[static_cast<std::size_t>(i)] ^= 0x20;
    attempt(b, static_cast<int>(F::kBadMagic));
  }
  for (const std::uint8_t v : {0, 2, 7, 255}) {
    auto b = golden;
    b[4] = v;
    attempt(b, static_cast<int>(F::kBadVersion));
  }
  {
    auto b = golden;
    b[5] |= 0x80;
    attempt(b, static_cast<int>(F::kUnknownFlags));
  }
  // The two payload length fields sit right before the payloads.
  const auto header = rans::parse(golden).header_size();
  for (std::size_t field = header - 8; field < header; ++field) {
    for (const std::uint8_t delta : {1, 16, 128}) {
      auto b = golden;
      b[field] = static_cast<std::uint8_t>(b[field] + delta);
      attempt(b, static_cast<int>(F::kLengthMismatch));
    }
  }
  for (std::size_t keep = 0; keep < golden.size(); keep += 1 + keep / 4) {
    attempt(std::vector<std::uint8_t>(golden.begin(), golden.begin() + static_cast<std::ptrdiff_t>(keep)), -1);
  }
  // Random damage to the fixed fields and length words, then anywhere in
  // the header (mostly the level map, which may decode legitimately).
  Rng rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    auto b = golden;
    const std::size_t fixed = rans::kFixedHeaderBytes;
    const std::size_t at = trial < 200 ? (trial % 2 ? rng.below(fixed) : header - 8 + rng.below(8)) : rng.below(header);
    b[at] ^= static_cast<std::uint8_t>(1 + rng.below(255));
    attempt(b, -1);
  }
  fs::remove(out);
  std::ostringstream d;
  d << "golden decode " << (exact ? "bit-exact" : "DIFFERS") << "; " << cases << " corrupted headers: " << structured
    << " structured errors, " << wrong_fault << " wrong or missing fault, " << other << " other exceptions, " << leaked
    << " partial outputs";
  return {exact && wrong_fault == 0 && other == 0 && leaked == 0, d.str()};
}

Outcome metric_oracles() {
  Image a(32, 32), b(32, 32);
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    a.pixels[i] = static_cast<std::uint8_t>(i % 200 + 20);
    b.pixels[i] = static_cast<std::uint8_t>(a.pixels[i] + (i % 3 ? 1 : -1));
  }
  const double p = psnr(a, b), db = msssim_to_db(0.99), area = auc({{0, 0}, {1, 1}});
  const bool ok = std::abs(p - 48.1308) <= 1e-4 && std::abs(db - 20) <= 1e-12 && area == 0.5;
  return {ok, fmt("off-by-one PSNR %.6f dB", p) + fmt(", MS-SSIM 0.99 -> %.6f dB", db) + fmt(", AUC %.6f", area)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"bijectivity", [] { return from_suite(bijectivity_suite(), 60); }},
      {"gradients", [] { return from_suite(gradient_suite(), 300); }},
      {"coder exactness", [] { return from_suite(coder_suite(), 60); }},
      {"rate-control constants", rate_constants},
      {"desk training and fine-rate sweep", desk_sweep},
      {"re-encoding fidelity", reencoding},
      {"bitstream conformance", bitstream_conformance},
      {"metrics", metric_oracles},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %zu %s: %s [%.1fs]\n", o.passed ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.passed;
  }
  return failed;
}
