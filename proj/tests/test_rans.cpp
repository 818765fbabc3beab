#include <doctest.h>

#include <cmath>
#include <numeric>

#include "iat/entropy/gaussian.hpp"
#include "iat/error.hpp"
#include "iat/rans/bitstream.hpp"
#include "iat/rans/cdf.hpp"
#include "iat/rans/rans.hpp"
#include "iat/rng.hpp"

using namespace iat;
using namespace iat::rans;

namespace {

std::vector<const CdfTable*> same_table(const CdfTable& t, std::size_t n) { return std::vector<const CdfTable*>(n, &t); }

void check_contract(const CdfTable& t) {
  const auto& c = t.cumulative();
  CHECK(c.front() == 0);
  CHECK(c.back() == (1u << t.precision()));
  for (std::size_t i = 1; i < c.size(); ++i) CHECK(c[i] > c[i - 1]);
}

}  // namespace

TEST_CASE("cdf construction contract") {
  for (double sigma : {0.11, 0.5, 1.0, 7.3, 256.0}) {
    for (double mu : {0.0, 0.37, -3.5}) {
      const CdfTable t = build_cdf(mu, sigma);
      check_contract(t);
      CHECK(t.k_min() <= mu - 8 * sigma);
      CHECK(t.k_max() >= mu + 8 * sigma);
      CHECK(t.has_escape());
      // Quantized probabilities stay close to the exact bins.
      double worst = 0;
      for (int k = t.k_min(); k <= t.k_max(); ++k) {
        worst = std::max(worst, std::abs(t.probability(k) - entropy::gaussian_bin_probability(k, mu, sigma)));
      }
      const double slack = static_cast<double>(t.slot_count()) / 65536.0;
      CHECK(worst <= std::exp2(-15) + slack);
    }
  }
}

TEST_CASE("wide tables approach uniform") {
  const double sigma = 2000;
  const CdfTable t = build_cdf(0, sigma, 24);
  check_contract(t);
  std::uint32_t lo = UINT32_MAX, hi = 0;
  for (int k = -static_cast<int>(sigma / 10); k <= static_cast<int>(sigma / 10); ++k) {
    lo = std::min(lo, t.frequency(t.slot_of(k)));
    hi = std::max(hi, t.frequency(t.slot_of(k)));
  }
  CHECK(hi <= 1.01 * lo);
}

TEST_CASE("precision limits") {
  CHECK_THROWS_AS(build_cdf(0, 1, 7), ConfigError);
  CHECK_THROWS_AS(build_cdf(0, 1, 25), ConfigError);
  for (int p : {8, 12, 24}) check_contract(build_cdf(0, 1, p));
  CHECK_THROWS_AS(build_cdf(0, 0.01), NumericError);
}

TEST_CASE("small alphabet round trip") {
  const std::vector<double> quarter{0.25, 0.25, 0.25, 0.25};
  const CdfTable t = CdfTable::from_probabilities(0, quarter, 16);
  const std::vector<int> symbols{0, 1, 2, 1, 0};
  const auto tables = same_table(t, symbols.size());
  const auto bytes = rans_encode(symbols, tables);
  CHECK(rans_decode(bytes, tables) == symbols);
  CHECK_THROWS_AS(rans_encode(std::vector<int>{5}, same_table(t, 1)), NumericError);
}

TEST_CASE("empty stream") {
  const auto bytes = rans_encode({}, {});
  CHECK(bytes.size() == 4);
  CHECK(rans_decode(bytes, {}).empty());
}

TEST_CASE("coded length near entropy") {
  const std::vector<double> p{0.5, 0.25, 0.25};
  const CdfTable t = CdfTable::from_probabilities(0, p, 16);
  Rng rng(1);
  std::vector<int> symbols(10000);
  for (auto& s : symbols) {
    const double u = rng.uniform();
    s = u < 0.5 ? 0 : (u < 0.75 ? 1 : 2);
  }
  const auto tables = same_table(t, symbols.size());
  const auto bytes = rans_encode(symbols, tables);
  CHECK(rans_decode(bytes, tables) == symbols);
  // 1.5 bits per symbol on average.
  const double ideal = shannon_bits(symbols, tables);
  CHECK(std::abs(ideal - 15000) <= 0.01 * 15000 + 100);
  CHECK(bytes.size() * 8.0 <= ideal * 1.01 + 32);
}

TEST_CASE("escapes") {
  const CdfTable t = build_cdf(0, 0.5);
  const std::vector<int> symbols{0, 1, -40, 32767, -32768, 0, 900};
  const auto tables = same_table(t, symbols.size());
  const auto bytes = rans_encode(symbols, tables);
  CHECK(rans_decode(bytes, tables) == symbols);
  CHECK(shannon_bits(symbols, tables) > 4 * 16);
  CHECK_THROWS_AS(rans_encode(std::vector<int>{40000}, same_table(t, 1)), NumericError);
}

TEST_CASE("mixed precisions in one stream") {
  const CdfTable a = build_cdf(0.2, 1.3, 8);
  const CdfTable b = build_cdf(-1, 4, 24);
  const CdfTable c = build_cdf(3, 0.2, 16);
  Rng rng(2);
  std::vector<int> symbols;
  std::vector<const CdfTable*> tables;
  for (int i = 0; i < 3000; ++i) {
    const CdfTable* t = i % 3 == 0 ? &a : (i % 3 == 1 ? &b : &c);
    tables.push_back(t);
    symbols.push_back(t->k_min() + static_cast<int>(rng.below(static_cast<std::uint64_t>(t->k_max() - t->k_min() + 1))));
  }
  CHECK(rans_decode(rans_encode(symbols, tables), tables) == symbols);
}

TEST_CASE("decoder rejects damaged streams") {
  const CdfTable t = build_cdf(0, 3);
  Rng rng(3);
  std::vector<int> symbols(500);
  for (auto& s : symbols) s = static_cast<int>(std::round(3 * rng.normal()));
  const auto tables = same_table(t, symbols.size());
  const auto bytes = rans_encode(symbols, tables);
  auto shorter = bytes;
  shorter.pop_back();
  CHECK_THROWS_AS(rans_decode(shorter, tables), CorruptStream);
  auto longer = bytes;
  longer.push_back(0);
  CHECK_THROWS_AS(rans_decode(longer, tables), CorruptStream);
  CHECK_THROWS_AS(rans_decode(std::vector<std::uint8_t>{1, 2}, tables), CorruptStream);
  CHECK_THROWS_AS(rans_encode(symbols, same_table(t, 3)), ShapeError);
  // Flipped bits either fail the final-state check or decode other symbols;
  // they never crash.
  for (int trial = 0; trial < 200; ++trial) {
    auto broken = bytes;
    broken[rng.below(broken.size())] ^= static_cast<std::uint8_t>(1u << rng.below(8));
    bool rejected_or_different = true;
    try {
      rejected_or_different = rans_decode(broken, tables) != symbols;
    } catch (const CorruptStream&) {
    }
    CHECK(rejected_or_different);
  }
}

TEST_CASE("gaussian streams round trip") {
  Rng rng(4);
  const GaussianTableBank& bank = GaussianTableBank::standard();
  CHECK(bank.scale(0) == entropy::kSigmaMin);
  CHECK(bank.scale(GaussianTableBank::kScaleLevels - 1) == 256.0);
  CHECK(bank.scale_index(0.11) == 0);
  CHECK(bank.scale_index(1e6) == GaussianTableBank::kScaleLevels - 1);
  CHECK(bank.offset_index(3.0) == GaussianTableBank::kOffsetSteps / 2);
  CHECK(bank.offset_index(2.5) == 0);  // rounds to 3, offset -1/2
  for (int stream = 0; stream < 50; ++stream) {
    const std::size_t n = rng.below(3000);
    std::vector<int> values(n);
    std::vector<double> means(n), scales(n);
    for (std::size_t i = 0; i < n; ++i) {
      means[i] = rng.uniform(-100, 100);
      scales[i] = std::exp(rng.uniform(std::log(0.11), std::log(300.0)));
      values[i] = static_cast<int>(std::round(means[i] + 2 * scales[i] * rng.normal()));
    }
    const auto bytes = encode_gaussian(values, means, scales);
    CHECK(decode_gaussian(bytes, means, scales) == values);
    CHECK(bytes.size() * 8.0 <= gaussian_shannon_bits(values, means, scales) * 1.01 + 32);
  }
}

TEST_CASE("bitstream container") {
  Bitstream s;
  s.width = 64;
  s.height = 48;
  s.model_hash = 0x0123456789abcdefULL;
  s.levels = {200};
  s.z_payload = {1, 2, 3};
  s.y_payload = {9, 8, 7, 6};
  const auto bytes = serialize(s);
  SUBCASE("uniform header is 27 bytes") {
    // 4 magic + 1 version + 1 flags + 2 + 2 dims + 8 hash + 1 level + 4 + 4 lengths
    CHECK(s.header_size() == 27);
    CHECK(bytes.size() == 27 + 7);
    CHECK(bytes[0] == 'I');
    CHECK(bytes[4] == 1);
    CHECK(bytes[5] == kFlagUniformLevel);
    CHECK(bytes[6] == 0);
    CHECK(bytes[7] == 64);
    CHECK(bytes[10] == 0x01);
    CHECK(bytes[17] == 0xef);
    CHECK(bytes[18] == 200);
  }
  SUBCASE("round trip of random headers") {
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
      Bitstream r;
      r.width = static_cast<std::uint16_t>(1 + rng.below(40));
      r.height = static_cast<std::uint16_t>(1 + rng.below(40));
      r.padded = rng.below(2);
      r.model_hash = rng.next();
      r.uniform_level = rng.below(2);
      r.levels.resize(r.uniform_level ? 1 : static_cast<std::size_t>(r.width) * r.height);
      for (auto& l : r.levels) l = static_cast<std::uint8_t>(rng.below(256));
      r.z_payload.resize(rng.below(50));
      r.y_payload.resize(rng.below(500));
      for (auto& b : r.y_payload) b = static_cast<std::uint8_t>(rng.below(256));
      const auto wire = serialize(r);
      CHECK(parse(wire) == r);
      CHECK(serialize(parse(wire)) == wire);
    }
  }
  SUBCASE("structured parse errors") {
    const auto fault_of = [](std::vector<std::uint8_t> b) {
      try {
        parse(b);
      } catch (const BitstreamError& e) {
        return e.fault();
      }
      FAIL("parse accepted a damaged stream");
      return BitstreamFault::kInvalidField;
    };
    auto magic = bytes;
    magic[1] = 'X';
    CHECK(fault_of(magic) == BitstreamFault::kBadMagic);
    auto version = bytes;
    version[4] = 2;
    CHECK(fault_of(version) == BitstreamFault::kBadVersion);
    auto flags = bytes;
    flags[5] |= 0x80;
    CHECK(fault_of(flags) == BitstreamFault::kUnknownFlags);
    CHECK(fault_of(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 20)) == BitstreamFault::kTruncated);
    auto length = bytes;
    length.push_back(0);
    CHECK(fault_of(length) == BitstreamFault::kLengthMismatch);
    auto declared = bytes;
    declared[22] = 9;  // z length low byte
    CHECK(fault_of(declared) == BitstreamFault::kLengthMismatch);
    CHECK(fault_of({}) == BitstreamFault::kTruncated);
  }
  SUBCASE("serialize validates fields") {
    Bitstream bad = s;
    bad.uniform_level = false;
    CHECK_THROWS_AS(serialize(bad), BitstreamError);
    bad = s;
    bad.width = 0;
    CHECK_THROWS_AS(serialize(bad), BitstreamError);
  }
}
