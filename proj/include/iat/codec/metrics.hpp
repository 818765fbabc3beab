#pragma once

#include <span>
#include <utility>
#include <vector>

#include "iat/image.hpp"

namespace iat::codec {

/// Value reported for identical images by psnr and msssim_db.
inline constexpr double kMaxDecibels = 100.0;

double psnr_from_mse(double mse, double peak = 255.0);
/// 8-bit PSNR over all channels. Throws ShapeError on a size mismatch.
double psnr(const Image& a, const Image& b);

/// Multi-scale SSIM on 8-bit RGB, averaged over channels. Images too small
/// for five scales use fewer (the smallest scale must be at least 11 px);
/// below 11 px the window shrinks to the image.
double msssim(const Image& a, const Image& b);
/// -10 log10(1 - m), capped at kMaxDecibels.
double msssim_to_db(double m);
double msssim_db(const Image& a, const Image& b);

struct CurvePoint {
  double x = 0;  // bpp
  double y = 0;  // quality
};

/// Trapezoid area under a curve sorted by x (points are sorted here).
double auc(std::vector<CurvePoint> curve);
/// Area under the curve restricted to [lo, hi], interpolating linearly at
/// the ends. Throws ConfigError unless the curve covers the interval.
double auc_between(std::vector<CurvePoint> curve, double lo, double hi);

/// Areas of two curves over the bpp interval both cover. Throws
/// ConfigError when the intervals do not overlap.
std::pair<double, double> auc_on_common_range(const std::vector<CurvePoint>& a, const std::vector<CurvePoint>& b);

/// Spearman rank correlation with tied values given their average rank.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace iat::codec
