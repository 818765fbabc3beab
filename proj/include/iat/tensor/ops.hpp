#pragma once

#include <vector>

#include "iat/tensor/tensor.hpp"

namespace iat {

/// Slope of every leaky ReLU in the codec networks.
inline constexpr double kLeakySlope = 0.2;

// Binary ops broadcast over singleton extents (numpy rules, rank <= 6).
template <class T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <class T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <class T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
/// Throws NumericError if any |b| < 1e-30.
template <class T> Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b);

template <class T> Tensor<T> add(const Tensor<T>& a, T b);
template <class T> Tensor<T> mul(const Tensor<T>& a, T b);

template <class T> Tensor<T> neg(const Tensor<T>& a);
template <class T> Tensor<T> exp(const Tensor<T>& a);
template <class T> Tensor<T> log(const Tensor<T>& a);
template <class T> Tensor<T> tanh(const Tensor<T>& a);
template <class T> Tensor<T> leaky_relu(const Tensor<T>& a, T slope = T(kLeakySlope));
template <class T> Tensor<T> abs(const Tensor<T>& a);
template <class T> Tensor<T> square(const Tensor<T>& a);
template <class T> Tensor<T> softplus(const Tensor<T>& a);
/// Gradient is passed only where lo < a < hi.
template <class T> Tensor<T> clamp(const Tensor<T>& a, T lo, T hi);

template <class T> Tensor<T> sum(const Tensor<T>& a);
template <class T> Tensor<T> mean(const Tensor<T>& a);
/// Mean over H x W of an N x C x H x W tensor, giving N x C x 1 x 1.
template <class T> Tensor<T> spatial_mean(const Tensor<T>& a);

template <class T> Tensor<T> reshape(const Tensor<T>& a, Shape shape);
template <class T> Tensor<T> broadcast_to(const Tensor<T>& a, const Shape& shape);
/// Channels [begin, end) of an N x C x H x W tensor.
template <class T> Tensor<T> slice_channels(const Tensor<T>& a, std::int64_t begin, std::int64_t end);
template <class T> Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts);

template <class T> Tensor<T> operator+(const Tensor<T>& a, const Tensor<T>& b) { return add(a, b); }
template <class T> Tensor<T> operator-(const Tensor<T>& a, const Tensor<T>& b) { return sub(a, b); }
template <class T> Tensor<T> operator*(const Tensor<T>& a, const Tensor<T>& b) { return mul(a, b); }
template <class T> Tensor<T> operator/(const Tensor<T>& a, const Tensor<T>& b) { return div(a, b); }
template <class T> Tensor<T> operator-(const Tensor<T>& a) { return neg(a); }

/// Shape two operands broadcast to; throws ShapeError when incompatible.
Shape broadcast_shape(const Shape& a, const Shape& b);

}  // namespace iat
