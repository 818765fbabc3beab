#pragma once

#include "iat/tensor/tensor.hpp"

namespace iat {

enum class PadMode {
  kZeros,
  kReplicate,  // edge pixels extended; a constant input stays constant
};

struct ConvOptions {
  int stride = 1;
  int padding = -1;  // -1: kernel/2, i.e. "same" output for stride 1
  PadMode pad_mode = PadMode::kZeros;
};

/// 2-D cross-correlation. input: N x Cin x H x W (or Cin x H x W),
/// weight: Cout x Cin x k x k with k odd, bias: Cout or undefined.
template <class T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 ConvOptions options = {});

/// Non-overlapping k x k mean pooling; H and W must be multiples of k.
template <class T>
Tensor<T> avg_pool2d(const Tensor<T>& input, int k);

/// Space-to-depth by 2: C x H x W -> 4C x H/2 x W/2. Output channel
/// 4c + 2dy + dx holds input channel c at offset (dy, dx) of each 2x2 cell.
template <class T>
Tensor<T> space_to_depth(const Tensor<T>& input);

/// Exact inverse of space_to_depth.
template <class T>
Tensor<T> depth_to_space(const Tensor<T>& input);

}  // namespace iat
