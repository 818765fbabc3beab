#include "iat/codec/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace iat::codec {

namespace {

void check_same_size(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) {
    throw ShapeError("images differ in size: " + std::to_string(a.width) + "x" + std::to_string(a.height) + " vs " +
                     std::to_string(b.width) + "x" + std::to_string(b.height));
  }
}

struct Plane {
  int w = 0, h = 0;
  std::vector<double> v;
  double at(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

Plane channel(const Image& im, int c) {
  Plane p{im.width, im.height, std::vector<double>(static_cast<std::size_t>(im.width) * im.height)};
  for (int y = 0; y < im.height; ++y)
    for (int x = 0; x < im.width; ++x) p.v[static_cast<std::size_t>(y) * p.w + x] = im.at(x, y, c);
  return p;
}

Plane downsample(const Plane& p) {
  Plane out{p.w / 2, p.h / 2, {}};
  out.v.resize(static_cast<std::size_t>(out.w) * out.h);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x) {
      out.v[static_cast<std::size_t>(y) * out.w + x] =
          (p.at(2 * x, 2 * y) + p.at(2 * x + 1, 2 * y) + p.at(2 * x, 2 * y + 1) + p.at(2 * x + 1, 2 * y + 1)) / 4;
    }
  return out;
}

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> g(static_cast<std::size_t>(size));
  const double c = (size - 1) / 2.0;
  for (int i = 0; i < size; ++i) g[static_cast<std::size_t>(i)] = std::exp(-(i - c) * (i - c) / (2 * sigma * sigma));
  const double total = std::accumulate(g.begin(), g.end(), 0.0);
  for (auto& v : g) v /= total;
  return g;
}

/// Separable valid-mode filtering.
Plane filter(const Plane& p, const std::vector<double>& g) {
  const int k = static_cast<int>(g.size());
  Plane rows{p.w - k + 1, p.h, {}};
  rows.v.assign(static_cast<std::size_t>(rows.w) * rows.h, 0.0);
  for (int y = 0; y < rows.h; ++y)
    for (int x = 0; x < rows.w; ++x) {
      double s = 0;
      for (int i = 0; i < k; ++i) s += g[static_cast<std::size_t>(i)] * p.at(x + i, y);
      rows.v[static_cast<std::size_t>(y) * rows.w + x] = s;
    }
  Plane out{rows.w, p.h - k + 1, {}};
  out.v.assign(static_cast<std::size_t>(out.w) * out.h, 0.0);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x) {
      double s = 0;
      for (int i = 0; i < k; ++i) s += g[static_cast<std::size_t>(i)] * rows.at(x, y + i);
      out.v[static_cast<std::size_t>(y) * out.w + x] = s;
    }
  return out;
}

Plane product(const Plane& a, const Plane& b) {
  Plane out{a.w, a.h, a.v};
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] *= b.v[i];
  return out;
}

/// Mean SSIM and mean contrast-structure term of one scale.
std::pair<double, double> ssim_terms(const Plane& a, const Plane& b, const std::vector<double>& g) {
  constexpr double c1 = (0.01 * 255) * (0.01 * 255), c2 = (0.03 * 255) * (0.03 * 255);
  const Plane ma = filter(a, g), mb = filter(b, g);
  const Plane saa = filter(product(a, a), g), sbb = filter(product(b, b), g), sab = filter(product(a, b), g);
  double ssim = 0, cs = 0;
  for (std::size_t i = 0; i < ma.v.size(); ++i) {
    const double mu_a = ma.v[i], mu_b = mb.v[i];
    const double va = saa.v[i] - mu_a * mu_a, vb = sbb.v[i] - mu_b * mu_b, cov = sab.v[i] - mu_a * mu_b;
    const double contrast = (2 * cov + c2) / (va + vb + c2);
    cs += contrast;
    ssim += (2 * mu_a * mu_b + c1) / (mu_a * mu_a + mu_b * mu_b + c1) * contrast;
  }
  const double n = static_cast<double>(ma.v.size());
  return {ssim / n, cs / n};
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2 + 1;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
    i = j + 1;
  }
  return rank;
}

void sort_by_x(std::vector<CurvePoint>& curve) {
  for (const auto& p : curve)
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw NumericError("curve has non-finite points");
  std::stable_sort(curve.begin(), curve.end(), [](const CurvePoint& a, const CurvePoint& b) { return a.x < b.x; });
}

double y_at(const std::vector<CurvePoint>& curve, double x) {
  auto hi = std::lower_bound(curve.begin(), curve.end(), x, [](const CurvePoint& p, double v) { return p.x < v; });
  if (hi == curve.begin()) return hi->y;
  auto lo = hi - 1;
  if (hi == curve.end()) return lo->y;
  if (hi->x == lo->x) return hi->y;
  return lo->y + (hi->y - lo->y) * (x - lo->x) / (hi->x - lo->x);
}

}  // namespace

double psnr_from_mse(double mse, double peak) {
  if (mse <= 0) return kMaxDecibels;
  return std::min(kMaxDecibels, 10 * std::log10(peak * peak / mse));
}

double psnr(const Image& a, const Image& b) {
  check_same_size(a, b);
  double se = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = double(a.pixels[i]) - b.pixels[i];
    se += d * d;
  }
  return psnr_from_mse(se / static_cast<double>(a.pixels.size()));
}

double msssim(const Image& a, const Image& b) {
  check_same_size(a, b);
  static constexpr std::array<double, 5> kWeights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  const int side = std::min(a.width, a.height);
  int scales = 1;
  while (scales < 5 && (side >> scales) >= 11) ++scales;
  const int window = side >= 11 ? 11 : (side % 2 ? side : side - 1);
  const auto g = gaussian_window(window, 1.5);
  double weight_total = 0;
  for (int s = 0; s < scales; ++s) weight_total += kWeights[static_cast<std::size_t>(s)];

  double mean = 0;
  for (int c = 0; c < 3; ++c) {
    Plane pa = channel(a, c), pb = channel(b, c);
    double log_m = 0;
    for (int s = 0; s < scales; ++s) {
      const auto [ssim, cs] = ssim_terms(pa, pb, g);
      const double w = kWeights[static_cast<std::size_t>(s)] / weight_total;
      const double term = std::max(s + 1 == scales ? ssim : cs, 0.0);
      if (term == 0) {
        log_m = -INFINITY;
        break;
      }
      log_m += w * std::log(term);
      if (s + 1 < scales) {
        pa = downsample(pa);
        pb = downsample(pb);
      }
    }
    mean += std::exp(log_m) / 3;
  }
  return mean;
}

double msssim_to_db(double m) {
  if (m >= 1) return kMaxDecibels;
  return std::min(kMaxDecibels, -10 * std::log10(1 - m));
}

double msssim_db(const Image& a, const Image& b) { return msssim_to_db(msssim(a, b)); }

double auc(std::vector<CurvePoint> curve) {
  sort_by_x(curve);
  double area = 0;
  for (std::size_t i = 1; i < curve.size(); ++i) area += (curve[i].x - curve[i - 1].x) * (curve[i].y + curve[i - 1].y) / 2;
  return area;
}

double auc_between(std::vector<CurvePoint> curve, double lo, double hi) {
  sort_by_x(curve);
  if (curve.size() < 2 || lo < curve.front().x || hi > curve.back().x || !(lo <= hi)) {
    throw ConfigError("curve does not cover the requested bpp interval");
  }
  std::vector<CurvePoint> inside{{lo, y_at(curve, lo)}};
  for (const auto& p : curve)
    if (p.x > lo && p.x < hi) inside.push_back(p);
  inside.push_back({hi, y_at(curve, hi)});
  return auc(std::move(inside));
}

std::pair<double, double> auc_on_common_range(const std::vector<CurvePoint>& a, const std::vector<CurvePoint>& b) {
  const auto range = [](const std::vector<CurvePoint>& c) {
    if (c.size() < 2) throw ConfigError("a curve needs at least two points");
    const auto [lo, hi] =
        std::minmax_element(c.begin(), c.end(), [](const CurvePoint& p, const CurvePoint& q) { return p.x < q.x; });
    return std::pair{lo->x, hi->x};
  };
  const auto [alo, ahi] = range(a);
  const auto [blo, bhi] = range(b);
  const double lo = std::max(alo, blo), hi = std::min(ahi, bhi);
  if (!(lo < hi)) throw ConfigError("the two curves share no bpp interval");
  return {auc_between(a, lo, hi), auc_between(b, lo, hi)};
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw ConfigError("spearman needs two equally long series of length >= 2");
  const auto ra = average_ranks(a), rb = average_ranks(b);
  const double mean = (static_cast<double>(a.size()) + 1) / 2;
  double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - mean) * (rb[i] - mean);
    va += (ra[i] - mean) * (ra[i] - mean);
    vb += (rb[i] - mean) * (rb[i] - mean);
  }
  if (va == 0 || vb == 0) return 0;
  return cov / std::sqrt(va * vb);
}

}  // namespace iat::codec
