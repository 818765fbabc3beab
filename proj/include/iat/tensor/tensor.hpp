#pragma once

// Dense row-major tensors with tape-based reverse-mode differentiation.
//
// A Tensor is a cheap handle onto a shared graph node. Ops create new nodes;
// when gradient recording is enabled and any operand requires a gradient,
// the result keeps its operands alive together with a closure that pushes
// the result's gradient back into them. backward() walks that graph once.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "iat/error.hpp"

namespace iat {

using Shape = std::vector<std::int64_t>;

std::int64_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

/// True while the current thread records graphs (default: true).
bool grad_enabled();

/// Disables graph recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Eager NaN/Inf detection on every op output. On by default in debug builds.
bool finite_checks_enabled();
void set_finite_checks(bool enabled);

namespace detail {

template <class T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until something accumulates into it
  bool requires_grad = false;
  bool consumed = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  std::vector<T>& grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), T(0));
    return grad;
  }
};

}  // namespace detail

template <class T>
class Tensor {
 public:
  using value_type = T;
  using NodePtr = std::shared_ptr<detail::Node<T>>;

  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, T value);
  static Tensor from(Shape shape, std::vector<T> values);
  static Tensor scalar(T value);
  /// Leaf that accumulates gradients.
  static Tensor parameter(Shape shape, std::vector<T> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  std::int64_t dim(int axis) const;
  std::int64_t size() const { return static_cast<std::int64_t>(node_->data.size()); }

  std::span<const T> data() const { return node_->data; }
  /// Writable storage; only valid on leaves (parameters, constants).
  std::span<T> mutable_data();
  T item() const;
  T at(std::int64_t flat_index) const { return node_->data.at(static_cast<std::size_t>(flat_index)); }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool flag);
  /// Accumulated gradient; empty when nothing has flowed into this tensor.
  std::span<const T> grad() const { return node_->grad; }
  void zero_grad();

  /// Copy of the values without any graph history.
  Tensor detach() const;
  std::vector<T> to_vector() const { return node_->data; }

  detail::Node<T>* node() const { return node_.get(); }
  const NodePtr& node_ptr() const { return node_; }

 private:
  NodePtr node_;
};

/// Reverse sweep from a scalar loss. Every reachable tensor that requires a
/// gradient receives d(loss)/d(tensor) added to its grad buffer. The graph
/// is released afterwards; a second call on the same loss is an error.
template <class T>
void backward(const Tensor<T>& loss);

namespace detail {

/// Builds an op result. The backward closure is only kept when recording is
/// on and some input requires a gradient.
template <class T>
Tensor<T> make_result(const char* op, Shape shape, std::vector<T> data,
                      std::vector<Tensor<T>> inputs,
                      std::function<void(Node<T>&)> backward);

template <class T>
void check_finite(const char* op, std::span<const T> values);

}  // namespace detail

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace iat
