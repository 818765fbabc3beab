#include "iat/tensor/conv.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <memory>

namespace iat {

namespace {

template <class T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <class T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

struct ConvGeometry {
  std::int64_t batch, in_channels, height, width;
  std::int64_t out_channels, kernel, stride, pad;
  std::int64_t out_height, out_width;
  PadMode mode;

  std::int64_t rows() const { return in_channels * kernel * kernel; }
  std::int64_t cols() const { return batch * out_height * out_width; }
};

// Source coordinate for every (kernel tap, output position) along one axis,
// or -1 where the tap falls into zero padding.
std::vector<std::int64_t> source_table(const ConvGeometry& g, std::int64_t extent, std::int64_t out_extent) {
  std::vector<std::int64_t> table(static_cast<std::size_t>(g.kernel * out_extent));
  for (std::int64_t t = 0; t < g.kernel; ++t) {
    for (std::int64_t o = 0; o < out_extent; ++o) {
      std::int64_t i = o * g.stride - g.pad + t;
      if (i < 0 || i >= extent) i = g.mode == PadMode::kZeros ? -1 : std::clamp<std::int64_t>(i, 0, extent - 1);
      table[static_cast<std::size_t>(t * out_extent + o)] = i;
    }
  }
  return table;
}

// Walks sample n's im2col block (rows x out_plane) one output row at a
// time. row_op(dst, src_row, xrow, offset) receives the block row start,
// the source image row start, the tap's x table and, for stride 1, the
// shift kx - pad between output and source columns.
template <class F>
void for_each_row(const ConvGeometry& g, const std::vector<std::int64_t>& ys, const std::vector<std::int64_t>& xs,
                  std::int64_t n, F&& row_op) {
  const std::int64_t plane = g.height * g.width;
  const std::int64_t out_plane = g.out_height * g.out_width;
  for (std::int64_t c = 0; c < g.in_channels; ++c) {
    const std::int64_t src_base = (n * g.in_channels + c) * plane;
    for (std::int64_t ky = 0; ky < g.kernel; ++ky) {
      const std::int64_t* yrow = ys.data() + ky * g.out_height;
      for (std::int64_t kx = 0; kx < g.kernel; ++kx) {
        const std::int64_t* xrow = xs.data() + kx * g.out_width;
        const std::int64_t row = (c * g.kernel + ky) * g.kernel + kx;
        for (std::int64_t oy = 0; oy < g.out_height; ++oy) {
          const std::int64_t sy = yrow[oy];
          if (sy < 0) continue;
          row_op(row * out_plane + oy * g.out_width, src_base + sy * g.width, xrow, kx - g.pad);
        }
      }
    }
  }
}

template <class T>
void im2col(const ConvGeometry& g, const std::vector<std::int64_t>& ys, const std::vector<std::int64_t>& xs,
            std::int64_t n, const T* in, T* col) {
  const std::int64_t ow = g.out_width;
  if (g.stride != 1) {
    for_each_row(g, ys, xs, n, [&](std::int64_t dst, std::int64_t src, const std::int64_t* xrow, std::int64_t) {
      for (std::int64_t ox = 0; ox < ow; ++ox)
        if (xrow[ox] >= 0) col[dst + ox] = in[src + xrow[ox]];
    });
    return;
  }
  for_each_row(g, ys, xs, n, [&](std::int64_t dst, std::int64_t src, const std::int64_t* xrow, std::int64_t offset) {
    // Stride 1: xrow[ox] = ox + offset inside the image, clamped or -1 at the edges.
    const std::int64_t lo = std::max<std::int64_t>(0, -offset);
    const std::int64_t hi = std::max(lo, std::min<std::int64_t>(ow, g.width - offset));
    for (std::int64_t ox = 0; ox < lo; ++ox)
      if (xrow[ox] >= 0) col[dst + ox] = in[src + xrow[ox]];
    std::copy(in + src + lo + offset, in + src + hi + offset, col + dst + lo);
    for (std::int64_t ox = hi; ox < ow; ++ox)
      if (xrow[ox] >= 0) col[dst + ox] = in[src + xrow[ox]];
  });
}

template <class T>
void col2im(const ConvGeometry& g, const std::vector<std::int64_t>& ys, const std::vector<std::int64_t>& xs,
            std::int64_t n, const T* col, T* gi) {
  const std::int64_t ow = g.out_width;
  if (g.stride != 1) {
    for_each_row(g, ys, xs, n, [&](std::int64_t dst, std::int64_t src, const std::int64_t* xrow, std::int64_t) {
      for (std::int64_t ox = 0; ox < ow; ++ox)
        if (xrow[ox] >= 0) gi[src + xrow[ox]] += col[dst + ox];
    });
    return;
  }
  for_each_row(g, ys, xs, n, [&](std::int64_t dst, std::int64_t src, const std::int64_t* xrow, std::int64_t offset) {
    const std::int64_t lo = std::max<std::int64_t>(0, -offset);
    const std::int64_t hi = std::max(lo, std::min<std::int64_t>(ow, g.width - offset));
    for (std::int64_t ox = 0; ox < lo; ++ox)
      if (xrow[ox] >= 0) gi[src + xrow[ox]] += col[dst + ox];
    T* out = gi + src + offset;
    const T* c = col + dst;
    for (std::int64_t ox = lo; ox < hi; ++ox) out[ox] += c[ox];
    for (std::int64_t ox = hi; ox < ow; ++ox)
      if (xrow[ox] >= 0) gi[src + xrow[ox]] += col[dst + ox];
  });
}

}  // namespace

template <class T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 ConvOptions options) {
  const bool unbatched = input.rank() == 3;
  if (!unbatched && input.rank() != 4) {
    throw ShapeError("conv2d: input must be C x H x W or N x C x H x W, got " + to_string(input.shape()));
  }
  if (weight.rank() != 4 || weight.dim(2) != weight.dim(3)) {
    throw ShapeError("conv2d: weight must be Cout x Cin x k x k, got " + to_string(weight.shape()));
  }
  ConvGeometry g{};
  g.batch = unbatched ? 1 : input.dim(0);
  g.in_channels = input.dim(-3);
  g.height = input.dim(-2);
  g.width = input.dim(-1);
  g.out_channels = weight.dim(0);
  g.kernel = weight.dim(2);
  g.stride = options.stride;
  g.pad = options.padding < 0 ? g.kernel / 2 : options.padding;
  g.mode = options.pad_mode;
  if (g.kernel % 2 == 0) throw ShapeError("conv2d: kernel size must be odd");
  if (weight.dim(1) != g.in_channels) {
    throw ShapeError("conv2d: channel mismatch, input " + to_string(input.shape()) + " weight " +
                     to_string(weight.shape()));
  }
  if (g.stride < 1) throw ShapeError("conv2d: stride must be positive");
  if (bias.defined() && bias.size() != g.out_channels) {
    throw ShapeError("conv2d: bias has " + std::to_string(bias.size()) + " entries for " +
                     std::to_string(g.out_channels) + " output channels");
  }
  const std::int64_t span_h = g.height + 2 * g.pad - g.kernel;
  const std::int64_t span_w = g.width + 2 * g.pad - g.kernel;
  if (span_h < 0 || span_w < 0) throw ShapeError("conv2d: non-positive output size");
  g.out_height = span_h / g.stride + 1;
  g.out_width = span_w / g.stride + 1;

  // im2col blocks, one rows x out_plane matrix per sample. Replicate
  // padding writes every entry, so only zero padding needs a cleared buffer.
  const std::int64_t out_plane = g.out_height * g.out_width;
  const std::int64_t block = g.rows() * out_plane;
  const auto ys = std::make_shared<std::vector<std::int64_t>>(source_table(g, g.height, g.out_height));
  const auto xs = std::make_shared<std::vector<std::int64_t>>(source_table(g, g.width, g.out_width));
  const std::shared_ptr<T[]> cols(new T[static_cast<std::size_t>(g.batch * block)]);
  if (g.mode == PadMode::kZeros && g.pad > 0) std::fill_n(cols.get(), g.batch * block, T(0));
  const auto in = input.data();
  const ConstMatrixMap<T> w(weight.data().data(), g.out_channels, g.rows());
  std::vector<T> out(static_cast<std::size_t>(g.batch * g.out_channels * out_plane));
  const auto bd = bias.defined() ? bias.data() : std::span<const T>{};
  for (std::int64_t n = 0; n < g.batch; ++n) {
    T* col = cols.get() + n * block;
    im2col(g, *ys, *xs, n, in.data(), col);
    MatrixMap<T> o(out.data() + n * g.out_channels * out_plane, g.out_channels, out_plane);
    o.noalias() = w * ConstMatrixMap<T>(col, g.rows(), out_plane);
    if (!bd.empty()) {
      for (std::int64_t co = 0; co < g.out_channels; ++co) o.row(co).array() += bd[co];
    }
  }

  Shape out_shape = unbatched ? Shape{g.out_channels, g.out_height, g.out_width}
                              : Shape{g.batch, g.out_channels, g.out_height, g.out_width};
  std::vector<Tensor<T>> inputs{input, weight};
  if (bias.defined()) inputs.push_back(bias);
  return detail::make_result<T>(
      "conv2d", std::move(out_shape), std::move(out), std::move(inputs),
      [g, cols, ys, xs](detail::Node<T>& self) {
        auto& nin = *self.inputs[0];
        auto& nw = *self.inputs[1];
        const std::int64_t plane = g.out_height * g.out_width;
        const std::int64_t blk = g.rows() * plane;
        const bool want_bias = self.inputs.size() > 2 && self.inputs[2]->requires_grad;
        const ConstMatrixMap<T> w(nw.data.data(), g.out_channels, g.rows());
        RowMatrix<T> grad_cols;
        for (std::int64_t n = 0; n < g.batch; ++n) {
          const ConstMatrixMap<T> grad_out(self.grad.data() + n * g.out_channels * plane, g.out_channels, plane);
          const ConstMatrixMap<T> col(cols.get() + n * blk, g.rows(), plane);
          if (want_bias) {
            auto& gb = self.inputs[2]->grad_buffer();
            for (std::int64_t co = 0; co < g.out_channels; ++co) gb[co] += grad_out.row(co).sum();
          }
          if (nw.requires_grad) {
            MatrixMap<T>(nw.grad_buffer().data(), g.out_channels, g.rows()).noalias() += grad_out * col.transpose();
          }
          if (nin.requires_grad) {
            grad_cols.noalias() = w.transpose() * grad_out;
            auto& gi = nin.grad_buffer();
            col2im(g, *ys, *xs, n, grad_cols.data(), gi.data());
          }
        }
      });
}

template <class T>
Tensor<T> avg_pool2d(const Tensor<T>& input, int k) {
  if (input.rank() != 4) throw ShapeError("avg_pool2d expects N x C x H x W");
  if (k < 1 || input.dim(2) % k != 0 || input.dim(3) % k != 0) {
    throw ShapeError("avg_pool2d: " + to_string(input.shape()) + " not divisible by " + std::to_string(k));
  }
  const std::int64_t planes = input.dim(0) * input.dim(1);
  const std::int64_t h = input.dim(2);
  const std::int64_t w = input.dim(3);
  const std::int64_t oh = h / k;
  const std::int64_t ow = w / k;
  const T scale = T(1) / static_cast<T>(k * k);
  std::vector<T> out(static_cast<std::size_t>(planes * oh * ow), T(0));
  const auto in = input.data();
  for (std::int64_t p = 0; p < planes; ++p) {
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t x = 0; x < w; ++x) out[(p * oh + y / k) * ow + x / k] += in[(p * h + y) * w + x];
    }
  }
  for (auto& v : out) v *= scale;
  return detail::make_result<T>(
      "avg_pool2d", {input.dim(0), input.dim(1), oh, ow}, std::move(out), {input},
      [planes, h, w, oh, ow, k, scale](detail::Node<T>& self) {
        auto& gi = self.inputs[0]->grad_buffer();
        for (std::int64_t p = 0; p < planes; ++p) {
          for (std::int64_t y = 0; y < h; ++y) {
            for (std::int64_t x = 0; x < w; ++x) {
              gi[(p * h + y) * w + x] += scale * self.grad[(p * oh + y / k) * ow + x / k];
            }
          }
        }
      });
}

namespace {

// Flat index pairs (depth layout, space layout) for a 2x2 space-to-depth.
template <class F>
void for_each_s2d(std::int64_t batch, std::int64_t channels, std::int64_t h, std::int64_t w, F&& f) {
  const std::int64_t oh = h / 2;
  const std::int64_t ow = w / 2;
  for (std::int64_t n = 0; n < batch; ++n) {
    for (std::int64_t c = 0; c < channels; ++c) {
      for (std::int64_t dy = 0; dy < 2; ++dy) {
        for (std::int64_t dx = 0; dx < 2; ++dx) {
          const std::int64_t oc = 4 * c + 2 * dy + dx;
          for (std::int64_t i = 0; i < oh; ++i) {
            const std::int64_t depth_row = ((n * 4 * channels + oc) * oh + i) * ow;
            const std::int64_t space_row = ((n * channels + c) * h + 2 * i + dy) * w + dx;
            for (std::int64_t j = 0; j < ow; ++j) f(depth_row + j, space_row + 2 * j);
          }
        }
      }
    }
  }
}

}  // namespace

template <class T>
Tensor<T> space_to_depth(const Tensor<T>& input) {
  const bool unbatched = input.rank() == 3;
  if (!unbatched && input.rank() != 4) throw ShapeError("space_to_depth expects rank 3 or 4");
  const std::int64_t n = unbatched ? 1 : input.dim(0);
  const std::int64_t c = input.dim(-3);
  const std::int64_t h = input.dim(-2);
  const std::int64_t w = input.dim(-1);
  if (h % 2 != 0 || w % 2 != 0) {
    throw ShapeError("space_to_depth: odd spatial extent in " + to_string(input.shape()));
  }
  std::vector<T> out(input.data().size());
  const auto in = input.data();
  for_each_s2d(n, c, h, w, [&](std::int64_t d, std::int64_t s) { out[d] = in[s]; });
  Shape shape = unbatched ? Shape{4 * c, h / 2, w / 2} : Shape{n, 4 * c, h / 2, w / 2};
  return detail::make_result<T>("space_to_depth", std::move(shape), std::move(out), {input},
                                [n, c, h, w](detail::Node<T>& self) {
                                  auto& gi = self.inputs[0]->grad_buffer();
                                  for_each_s2d(n, c, h, w, [&](std::int64_t d, std::int64_t s) {
                                    gi[s] += self.grad[d];
                                  });
                                });
}

template <class T>
Tensor<T> depth_to_space(const Tensor<T>& input) {
  const bool unbatched = input.rank() == 3;
  if (!unbatched && input.rank() != 4) throw ShapeError("depth_to_space expects rank 3 or 4");
  const std::int64_t n = unbatched ? 1 : input.dim(0);
  const std::int64_t c4 = input.dim(-3);
  if (c4 % 4 != 0) throw ShapeError("depth_to_space: channels not divisible by 4 in " + to_string(input.shape()));
  const std::int64_t c = c4 / 4;
  const std::int64_t h = input.dim(-2) * 2;
  const std::int64_t w = input.dim(-1) * 2;
  std::vector<T> out(input.data().size());
  const auto in = input.data();
  for_each_s2d(n, c, h, w, [&](std::int64_t d, std::int64_t s) { out[s] = in[d]; });
  Shape shape = unbatched ? Shape{c, h, w} : Shape{n, c, h, w};
  return detail::make_result<T>("depth_to_space", std::move(shape), std::move(out), {input},
                                [n, c, h, w](detail::Node<T>& self) {
                                  auto& gi = self.inputs[0]->grad_buffer();
                                  for_each_s2d(n, c, h, w, [&](std::int64_t d, std::int64_t s) {
                                    gi[d] += self.grad[s];
                                  });
                                });
}

#define IAT_INSTANTIATE_CONV(T)                                                                   \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, ConvOptions); \
  template Tensor<T> avg_pool2d(const Tensor<T>&, int);                                          \
  template Tensor<T> space_to_depth(const Tensor<T>&);                                           \
  template Tensor<T> depth_to_space(const Tensor<T>&);

IAT_INSTANTIATE_CONV(float)
IAT_INSTANTIATE_CONV(double)

#undef IAT_INSTANTIATE_CONV

}  // namespace iat
