#pragma once

#include <ostream>
#include <vector>

#include "iat/codec/codec.hpp"
#include "iat/codec/metrics.hpp"

namespace iat::codec {

struct RDPoint {
  double level = 0;
  double bpp = 0;  // total coded bits / total pixels over the set
  double psnr = 0;       // mean over images
  double msssim_db = 0;  // mean over images
};

/// levels[i] = i / (k - 1). Throws ConfigError for k < 2.
std::vector<double> uniform_grid(int k);

/// One point per uniform level, aggregated over the image set.
std::vector<RDPoint> rd_sweep(const Codec& codec, const std::vector<Image>& images, const std::vector<double>& levels);

std::vector<CurvePoint> psnr_curve(const std::vector<RDPoint>& points);
std::vector<CurvePoint> msssim_curve(const std::vector<RDPoint>& points);

/// Columns: level,bpp,psnr,msssim_db
void write_sweep_csv(std::ostream& out, const std::vector<RDPoint>& points);

struct ChainStep {
  int step = 0;  // 1-based
  double level = 0;
  double bpp = 0;
  double psnr = 0;        // against the original
  double msssim_db = 0;   // against the original
  double psnr_prev = 0;   // against the previous reconstruction (the original at step 1)
};

/// Step i encodes the reconstruction of step i - 1 at a uniform level.
/// A schedule of one level is used at every step; otherwise it must hold
/// at least `steps` levels (ConfigError).
std::vector<ChainStep> reencode_chain(const Codec& codec, const Image& image, const std::vector<double>& schedule,
                                      int steps);

/// Columns: step,qlevel,bpp,psnr,msssim_db,psnr_prev
void write_chain_csv(std::ostream& out, const std::vector<ChainStep>& steps);
/// Header row of write_chain_csv.
inline constexpr const char* kChainCsvHeader = "step,qlevel,bpp,psnr,msssim_db,psnr_prev";

}  // namespace iat::codec
