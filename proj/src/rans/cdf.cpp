#include "iat/rans/cdf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "iat/entropy/gaussian.hpp"
#include "iat/error.hpp"

namespace iat::rans {

namespace {

void check_precision(int precision) {
  if (precision < 8 || precision > 24) {
    throw ConfigError("cdf precision must be in [8, 24], got " + std::to_string(precision));
  }
}

}  // namespace

CdfTable CdfTable::from_probabilities(int k_min, std::span<const double> probabilities, int precision,
                                      bool with_escape, double escape_mass) {
  check_precision(precision);
  std::vector<double> mass(probabilities.begin(), probabilities.end());
  if (with_escape) mass.push_back(escape_mass);
  const std::uint64_t total = std::uint64_t{1} << precision;
  if (mass.empty() || mass.size() > total) {
    throw ConfigError("cdf table needs between 1 and 2^precision slots, got " + std::to_string(mass.size()));
  }
  double mass_total = 0;
  for (double m : mass) {
    if (!(m >= 0) || !std::isfinite(m)) throw NumericError("cdf table: invalid probability");
    mass_total += m;
  }
  if (!(mass_total > 0)) throw NumericError("cdf table: probabilities sum to zero");

  // Every slot gets one count; the remaining 2^p - n counts are shared in
  // proportion to the mass, rounding by largest remainder (ties to the
  // lower slot), so the total is exact and the table deterministic.
  const std::uint64_t spare = total - mass.size();
  std::vector<std::uint64_t> counts(mass.size());
  std::vector<double> remainder(mass.size());
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    const double share = mass[i] / mass_total * static_cast<double>(spare);
    const double whole = std::floor(share);
    counts[i] = 1 + static_cast<std::uint64_t>(whole);
    remainder[i] = share - whole;
    assigned += static_cast<std::uint64_t>(whole);
  }
  std::vector<std::size_t> order(mass.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t r = 0; assigned < spare; ++r, ++assigned) ++counts[order[r % order.size()]];
  // Floating-point shares can overshoot by a count; take it from the peak.
  while (assigned > spare) {
    --*std::max_element(counts.begin(), counts.end());
    --assigned;
  }

  CdfTable table;
  table.precision_ = precision;
  table.k_min_ = k_min;
  table.value_slots_ = static_cast<std::uint32_t>(probabilities.size());
  table.has_escape_ = with_escape;
  table.cumulative_.resize(mass.size() + 1, 0);
  for (std::size_t i = 0; i < mass.size(); ++i) {
    table.cumulative_[i + 1] = table.cumulative_[i] + static_cast<std::uint32_t>(counts[i]);
  }
  return table;
}

std::uint32_t CdfTable::slot_of(int value) const {
  if (in_support(value)) return static_cast<std::uint32_t>(value - k_min_);
  if (!has_escape_) throw NumericError("value " + std::to_string(value) + " outside table support");
  return escape_slot();
}

std::uint32_t CdfTable::find_slot(std::uint32_t cum) const {
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), cum);
  return static_cast<std::uint32_t>(it - cumulative_.begin() - 1);
}

double CdfTable::probability(int value) const {
  if (!in_support(value) && !has_escape_) return 0.0;
  return frequency(slot_of(value)) / static_cast<double>(std::uint64_t{1} << precision_);
}

CdfTable build_cdf(double mu, double sigma, int precision) {
  check_precision(precision);
  if (!(sigma >= entropy::kSigmaMin * (1 - 1e-12))) {
    throw NumericError("build_cdf: sigma below " + std::to_string(entropy::kSigmaMin));
  }
  const int lo = static_cast<int>(std::floor(mu - 8.0 * sigma));
  const int hi = static_cast<int>(std::ceil(mu + 8.0 * sigma));
  std::vector<double> probs(static_cast<std::size_t>(hi - lo + 1));
  double inside = 0;
  for (int k = lo; k <= hi; ++k) inside += (probs[static_cast<std::size_t>(k - lo)] = entropy::gaussian_bin_probability(k, mu, sigma));
  return CdfTable::from_probabilities(lo, probs, precision, true, std::max(0.0, 1.0 - inside));
}

GaussianTableBank::GaussianTableBank(int precision) {
  const double ratio = std::log(kMaxScale / entropy::kSigmaMin);
  for (int i = 0; i < kScaleLevels; ++i) {
    scales_.push_back(entropy::kSigmaMin * std::exp(ratio * i / (kScaleLevels - 1)));
  }
  scales_.back() = kMaxScale;
  for (int i = 0; i < kScaleLevels; ++i) {
    for (int j = 0; j < kOffsetLevels; ++j) tables_.push_back(build_cdf(offset(j), scales_[static_cast<std::size_t>(i)], precision));
  }
}

const GaussianTableBank& GaussianTableBank::standard() {
  static const GaussianTableBank bank;
  return bank;
}

int GaussianTableBank::scale_index(double sigma) const {
  if (!(sigma > entropy::kSigmaMin)) return 0;
  const double position =
      std::log(sigma / entropy::kSigmaMin) / std::log(kMaxScale / entropy::kSigmaMin) * (kScaleLevels - 1);
  return static_cast<int>(std::min<long>(std::lround(position), kScaleLevels - 1));
}

int GaussianTableBank::offset_index(double mean) const {
  const double frac = mean - std::round(mean);
  return static_cast<int>(std::clamp<long>(std::lround(frac * kOffsetSteps) + kOffsetSteps / 2, 0, kOffsetSteps));
}

}  // namespace iat::rans
