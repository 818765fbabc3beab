#pragma once

#include <string>

namespace iat::codec {

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;  // measured values against their limits
  double seconds = 0;
};

/// Random-weight float64 model, 2 scales x 2 blocks, no channel squeeze,
/// no quantization: 20 random 64x64 (image, level) pairs must reconstruct
/// within 1e-6, every IAT layer within 1e-11 and every coupling block
/// within 1e-9.
SuiteResult bijectivity_suite(unsigned seed = 1);

/// Central differences (h = 1e-5) on the training loss of a tiny float64
/// model for every parameter entry; max relative error must be <= 1e-4.
SuiteResult gradient_suite(unsigned seed = 2);

/// 1000 random Gaussian streams round-trip exactly and stay within 1% + 32
/// bits of the ideal length under the quantized tables.
SuiteResult coder_suite(unsigned seed = 3);

}  // namespace iat::codec
