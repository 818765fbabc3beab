#include "iat/tensor/ops.hpp"

#include <array>
#include <cmath>

namespace iat {

namespace {

constexpr int kMaxRank = 6;

struct BroadcastPlan {
  int rank = 1;
  std::int64_t total = 1;
  std::array<std::int64_t, kMaxRank> dims{};
  std::array<std::int64_t, kMaxRank> stride_a{};
  std::array<std::int64_t, kMaxRank> stride_b{};
};

Shape padded(const Shape& s, std::size_t rank) {
  Shape out(rank - s.size(), 1);
  out.insert(out.end(), s.begin(), s.end());
  return out;
}

std::array<std::int64_t, kMaxRank> broadcast_strides(const Shape& in, const Shape& out) {
  std::array<std::int64_t, kMaxRank> strides{};
  std::int64_t running = 1;
  for (int d = static_cast<int>(in.size()) - 1; d >= 0; --d) {
    strides[d] = (in[d] == 1 && out[d] != 1) ? 0 : running;
    running *= in[d];
  }
  return strides;
}

BroadcastPlan make_plan(const Shape& a, const Shape& b, const Shape& out) {
  BroadcastPlan plan;
  Shape o = out.empty() ? Shape{1} : out;
  if (o.size() > kMaxRank) throw ShapeError("rank above 6 is not supported: " + to_string(out));
  plan.rank = static_cast<int>(o.size());
  const Shape pa = padded(a, o.size());
  const Shape pb = padded(b, o.size());
  for (int d = 0; d < plan.rank; ++d) plan.dims[d] = o[d];
  plan.stride_a = broadcast_strides(pa, o);
  plan.stride_b = broadcast_strides(pb, o);
  plan.total = numel(o);
  return plan;
}

// Calls f(out_index, a_index, b_index) over the broadcast output.
template <class F>
void for_each_broadcast(const BroadcastPlan& p, F&& f) {
  if (p.total == 0) return;
  const int last = p.rank - 1;
  const std::int64_t inner = p.dims[last];
  const std::int64_t sa = p.stride_a[last];
  const std::int64_t sb = p.stride_b[last];
  std::array<std::int64_t, kMaxRank> idx{};
  std::int64_t ia = 0;
  std::int64_t ib = 0;
  for (std::int64_t o = 0; o < p.total; o += inner) {
    for (std::int64_t j = 0; j < inner; ++j) f(o + j, ia + j * sa, ib + j * sb);
    for (int d = last - 1; d >= 0; --d) {
      ++idx[d];
      ia += p.stride_a[d];
      ib += p.stride_b[d];
      if (idx[d] < p.dims[d]) break;
      ia -= p.stride_a[d] * p.dims[d];
      ib -= p.stride_b[d] * p.dims[d];
      idx[d] = 0;
    }
  }
}

// Generic binary op. grad_a(g, a, b) / grad_b(g, a, b) give the local
// contributions for one output element.
template <class T, class Fwd, class GradA, class GradB>
Tensor<T> binary(const char* name, const Tensor<T>& a, const Tensor<T>& b, Fwd fwd, GradA grad_a,
                 GradB grad_b) {
  const auto ad = a.data();
  const auto bd = b.data();
  if (a.shape() == b.shape()) {
    std::vector<T> out(ad.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(ad[i], bd[i]);
    return detail::make_result<T>(
        name, a.shape(), std::move(out), {a, b}, [grad_a, grad_b](detail::Node<T>& self) {
          auto& na = *self.inputs[0];
          auto& nb = *self.inputs[1];
          const auto& g = self.grad;
          if (na.requires_grad) {
            auto& ga = na.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += grad_a(g[i], na.data[i], nb.data[i]);
          }
          if (nb.requires_grad) {
            auto& gb = nb.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += grad_b(g[i], na.data[i], nb.data[i]);
          }
        });
  }
  Shape out_shape = broadcast_shape(a.shape(), b.shape());
  const BroadcastPlan plan = make_plan(a.shape(), b.shape(), out_shape);
  std::vector<T> out(static_cast<std::size_t>(plan.total));
  for_each_broadcast(plan, [&](std::int64_t o, std::int64_t i, std::int64_t j) { out[o] = fwd(ad[i], bd[j]); });
  return detail::make_result<T>(
      name, std::move(out_shape), std::move(out), {a, b},
      [plan, grad_a, grad_b](detail::Node<T>& self) {
        auto& na = *self.inputs[0];
        auto& nb = *self.inputs[1];
        const auto& g = self.grad;
        if (na.requires_grad) {
          auto& ga = na.grad_buffer();
          for_each_broadcast(plan, [&](std::int64_t o, std::int64_t i, std::int64_t j) {
            ga[i] += grad_a(g[o], na.data[i], nb.data[j]);
          });
        }
        if (nb.requires_grad) {
          auto& gb = nb.grad_buffer();
          for_each_broadcast(plan, [&](std::int64_t o, std::int64_t i, std::int64_t j) {
            gb[j] += grad_b(g[o], na.data[i], nb.data[j]);
          });
        }
      });
}

// Generic unary op; deriv(x, y) is dy/dx at one element.
template <class T, class Fwd, class Deriv>
Tensor<T> unary(const char* name, const Tensor<T>& a, Fwd fwd, Deriv deriv) {
  const auto ad = a.data();
  std::vector<T> out(ad.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(ad[i]);
  return detail::make_result<T>(name, a.shape(), std::move(out), {a}, [deriv](detail::Node<T>& self) {
    auto& na = *self.inputs[0];
    auto& ga = na.grad_buffer();
    const auto& g = self.grad;
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * deriv(na.data[i], self.data[i]);
  });
}

}  // namespace

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  const Shape pa = padded(a, rank);
  const Shape pb = padded(b, rank);
  Shape out(rank);
  for (std::size_t d = 0; d < rank; ++d) {
    if (pa[d] == pb[d] || pb[d] == 1) {
      out[d] = pa[d];
    } else if (pa[d] == 1) {
      out[d] = pb[d];
    } else {
      throw ShapeError("shapes " + to_string(a) + " and " + to_string(b) + " do not broadcast");
    }
  }
  return out;
}

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary<T>(
      "add", a, b, [](T x, T y) { return x + y; }, [](T g, T, T) { return g; },
      [](T g, T, T) { return g; });
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary<T>(
      "sub", a, b, [](T x, T y) { return x - y; }, [](T g, T, T) { return g; },
      [](T g, T, T) { return -g; });
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary<T>(
      "mul", a, b, [](T x, T y) { return x * y; }, [](T g, T, T y) { return g * y; },
      [](T g, T x, T) { return g * x; });
}

template <class T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b) {
  for (const T v : b.data()) {
    if (!(std::abs(v) >= T(1e-30))) throw NumericError("div: denominator element with |b| < 1e-30");
  }
  return binary<T>(
      "div", a, b, [](T x, T y) { return x / y; }, [](T g, T, T y) { return g / y; },
      [](T g, T x, T y) { return -g * x / (y * y); });
}

template <class T>
Tensor<T> add(const Tensor<T>& a, T b) {
  return unary<T>("add_scalar", a, [b](T x) { return x + b; }, [](T, T) { return T(1); });
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, T b) {
  return unary<T>("mul_scalar", a, [b](T x) { return x * b; }, [b](T, T) { return b; });
}

template <class T>
Tensor<T> neg(const Tensor<T>& a) {
  return unary<T>("neg", a, [](T x) { return -x; }, [](T, T) { return T(-1); });
}

template <class T>
Tensor<T> exp(const Tensor<T>& a) {
  return unary<T>("exp", a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <class T>
Tensor<T> log(const Tensor<T>& a) {
  return unary<T>("log", a, [](T x) { return std::log(x); }, [](T x, T) { return T(1) / x; });
}

template <class T>
Tensor<T> tanh(const Tensor<T>& a) {
  return unary<T>("tanh", a, [](T x) { return std::tanh(x); }, [](T, T y) { return T(1) - y * y; });
}

template <class T>
Tensor<T> leaky_relu(const Tensor<T>& a, T slope) {
  return unary<T>(
      "leaky_relu", a, [slope](T x) { return x > T(0) ? x : slope * x; },
      [slope](T x, T) { return x > T(0) ? T(1) : slope; });
}

template <class T>
Tensor<T> abs(const Tensor<T>& a) {
  return unary<T>(
      "abs", a, [](T x) { return std::abs(x); },
      [](T x, T) { return x > T(0) ? T(1) : (x < T(0) ? T(-1) : T(0)); });
}

template <class T>
Tensor<T> square(const Tensor<T>& a) {
  return unary<T>("square", a, [](T x) { return x * x; }, [](T x, T) { return T(2) * x; });
}

template <class T>
Tensor<T> softplus(const Tensor<T>& a) {
  return unary<T>(
      "softplus", a, [](T x) { return x > T(20) ? x : std::log1p(std::exp(x)); },
      [](T x, T) { return T(1) / (T(1) + std::exp(-x)); });
}

template <class T>
Tensor<T> clamp(const Tensor<T>& a, T lo, T hi) {
  return unary<T>(
      "clamp", a, [lo, hi](T x) { return x < lo ? lo : (x > hi ? hi : x); },
      [lo, hi](T x, T) { return (x > lo && x < hi) ? T(1) : T(0); });
}

template <class T>
Tensor<T> sum(const Tensor<T>& a) {
  T total = 0;
  for (const T v : a.data()) total += v;
  return detail::make_result<T>("sum", {}, {total}, {a}, [](detail::Node<T>& self) {
    auto& na = *self.inputs[0];
    auto& ga = na.grad_buffer();
    const T g = self.grad[0];
    for (auto& v : ga) v += g;
  });
}

template <class T>
Tensor<T> mean(const Tensor<T>& a) {
  if (a.size() == 0) throw ShapeError("mean of an empty tensor");
  return mul(sum(a), T(1) / static_cast<T>(a.size()));
}

template <class T>
Tensor<T> spatial_mean(const Tensor<T>& a) {
  if (a.rank() != 4) throw ShapeError("spatial_mean expects N x C x H x W, got " + to_string(a.shape()));
  const std::int64_t planes = a.dim(0) * a.dim(1);
  const std::int64_t plane = a.dim(2) * a.dim(3);
  const T scale = T(1) / static_cast<T>(plane);
  std::vector<T> out(static_cast<std::size_t>(planes), T(0));
  const auto ad = a.data();
  for (std::int64_t p = 0; p < planes; ++p) {
    T total = 0;
    for (std::int64_t i = 0; i < plane; ++i) total += ad[p * plane + i];
    out[p] = total * scale;
  }
  return detail::make_result<T>(
      "spatial_mean", {a.dim(0), a.dim(1), 1, 1}, std::move(out), {a}, [planes, plane, scale](detail::Node<T>& self) {
        auto& ga = self.inputs[0]->grad_buffer();
        for (std::int64_t p = 0; p < planes; ++p) {
          const T g = self.grad[p] * scale;
          for (std::int64_t i = 0; i < plane; ++i) ga[p * plane + i] += g;
        }
      });
}

template <class T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (numel(shape) != a.size()) {
    throw ShapeError("reshape " + to_string(a.shape()) + " -> " + to_string(shape));
  }
  std::vector<T> out(a.data().begin(), a.data().end());
  return detail::make_result<T>("reshape", std::move(shape), std::move(out), {a}, [](detail::Node<T>& self) {
    auto& ga = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
  });
}

template <class T>
Tensor<T> broadcast_to(const Tensor<T>& a, const Shape& shape) {
  if (broadcast_shape(a.shape(), shape) != shape) {
    throw ShapeError("cannot broadcast " + to_string(a.shape()) + " to " + to_string(shape));
  }
  const BroadcastPlan plan = make_plan(a.shape(), shape, shape);
  const auto ad = a.data();
  std::vector<T> out(static_cast<std::size_t>(plan.total));
  for_each_broadcast(plan, [&](std::int64_t o, std::int64_t i, std::int64_t) { out[o] = ad[i]; });
  return detail::make_result<T>("broadcast_to", shape, std::move(out), {a}, [plan](detail::Node<T>& self) {
    auto& ga = self.inputs[0]->grad_buffer();
    for_each_broadcast(plan, [&](std::int64_t o, std::int64_t i, std::int64_t) { ga[i] += self.grad[o]; });
  });
}

template <class T>
Tensor<T> slice_channels(const Tensor<T>& a, std::int64_t begin, std::int64_t end) {
  if (a.rank() < 2) throw ShapeError("slice_channels needs rank >= 2, got " + to_string(a.shape()));
  const std::int64_t channels = a.dim(1);
  if (begin < 0 || end > channels || begin >= end) {
    throw ShapeError("slice_channels [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of range for " + to_string(a.shape()));
  }
  const std::int64_t outer = a.dim(0);
  const std::int64_t inner = a.size() / (outer * channels);
  const std::int64_t width = end - begin;
  Shape out_shape = a.shape();
  out_shape[1] = width;
  std::vector<T> out(static_cast<std::size_t>(outer * width * inner));
  const auto ad = a.data();
  for (std::int64_t n = 0; n < outer; ++n) {
    const T* src = ad.data() + (n * channels + begin) * inner;
    std::copy(src, src + width * inner, out.begin() + n * width * inner);
  }
  return detail::make_result<T>(
      "slice_channels", std::move(out_shape), std::move(out), {a},
      [outer, channels, inner, begin, width](detail::Node<T>& self) {
        auto& ga = self.inputs[0]->grad_buffer();
        for (std::int64_t n = 0; n < outer; ++n) {
          T* dst = ga.data() + (n * channels + begin) * inner;
          const T* src = self.grad.data() + n * width * inner;
          for (std::int64_t i = 0; i < width * inner; ++i) dst[i] += src[i];
        }
      });
}

template <class T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels of zero tensors");
  const Shape& first = parts.front().shape();
  if (first.size() < 2) throw ShapeError("concat_channels needs rank >= 2");
  const std::int64_t outer = first[0];
  const std::int64_t inner = numel(first) / (first[0] * first[1]);
  std::int64_t channels = 0;
  std::vector<std::int64_t> offsets;
  for (const auto& p : parts) {
    Shape s = p.shape();
    if (s.size() != first.size() || s[0] != outer || numel(s) / (s[0] * s[1]) != inner) {
      throw ShapeError("concat_channels: incompatible " + to_string(s) + " vs " + to_string(first));
    }
    for (std::size_t d = 2; d < s.size(); ++d) {
      if (s[d] != first[d]) throw ShapeError("concat_channels: spatial mismatch " + to_string(s));
    }
    offsets.push_back(channels);
    channels += s[1];
  }
  Shape out_shape = first;
  out_shape[1] = channels;
  std::vector<T> out(static_cast<std::size_t>(outer * channels * inner));
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto pd = parts[k].data();
    const std::int64_t c = parts[k].dim(1);
    for (std::int64_t n = 0; n < outer; ++n) {
      std::copy(pd.begin() + n * c * inner, pd.begin() + (n + 1) * c * inner,
                out.begin() + (n * channels + offsets[k]) * inner);
    }
  }
  return detail::make_result<T>(
      "concat_channels", std::move(out_shape), std::move(out), parts,
      [outer, channels, inner, offsets](detail::Node<T>& self) {
        for (std::size_t k = 0; k < self.inputs.size(); ++k) {
          auto& in = *self.inputs[k];
          if (!in.requires_grad) continue;
          auto& g = in.grad_buffer();
          const std::int64_t c = in.shape[1];
          for (std::int64_t n = 0; n < outer; ++n) {
            const T* src = self.grad.data() + (n * channels + offsets[k]) * inner;
            T* dst = g.data() + n * c * inner;
            for (std::int64_t i = 0; i < c * inner; ++i) dst[i] += src[i];
          }
        }
      });
}

#define IAT_INSTANTIATE_OPS(T)                                                           \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> div(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> add(const Tensor<T>&, T);                                          \
  template Tensor<T> mul(const Tensor<T>&, T);                                          \
  template Tensor<T> neg(const Tensor<T>&);                                             \
  template Tensor<T> exp(const Tensor<T>&);                                             \
  template Tensor<T> log(const Tensor<T>&);                                             \
  template Tensor<T> tanh(const Tensor<T>&);                                            \
  template Tensor<T> leaky_relu(const Tensor<T>&, T);                                   \
  template Tensor<T> abs(const Tensor<T>&);                                             \
  template Tensor<T> square(const Tensor<T>&);                                          \
  template Tensor<T> softplus(const Tensor<T>&);                                        \
  template Tensor<T> clamp(const Tensor<T>&, T, T);                                     \
  template Tensor<T> sum(const Tensor<T>&);                                             \
  template Tensor<T> mean(const Tensor<T>&);                                            \
  template Tensor<T> spatial_mean(const Tensor<T>&);                                    \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                  \
  template Tensor<T> broadcast_to(const Tensor<T>&, const Shape&);                      \
  template Tensor<T> slice_channels(const Tensor<T>&, std::int64_t, std::int64_t);      \
  template Tensor<T> concat_channels(const std::vector<Tensor<T>>&);

IAT_INSTANTIATE_OPS(float)
IAT_INSTANTIATE_OPS(double)

#undef IAT_INSTANTIATE_OPS

}  // namespace iat
