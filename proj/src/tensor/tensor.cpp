#include "iat/tensor/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

namespace iat {

namespace {

thread_local bool t_grad_enabled = true;

#ifdef NDEBUG
bool g_finite_checks = false;
#else
bool g_finite_checks = true;
#endif

}  // namespace

std::int64_t numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto extent : shape) {
    if (extent < 0) throw ShapeError("negative extent in " + to_string(shape));
    n *= extent;
  }
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

bool finite_checks_enabled() { return g_finite_checks; }
void set_finite_checks(bool enabled) { g_finite_checks = enabled; }

template <class T>
Tensor<T> Tensor<T>::zeros(Shape shape) {
  return full(std::move(shape), T(0));
}

template <class T>
Tensor<T> Tensor<T>::full(Shape shape, T value) {
  auto node = std::make_shared<detail::Node<T>>();
  node->data.assign(static_cast<std::size_t>(numel(shape)), value);
  node->shape = std::move(shape);
  return Tensor(std::move(node));
}

template <class T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> values) {
  if (numel(shape) != static_cast<std::int64_t>(values.size())) {
    throw ShapeError("Tensor::from: " + std::to_string(values.size()) +
                     " values for shape " + to_string(shape));
  }
  auto node = std::make_shared<detail::Node<T>>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  return Tensor(std::move(node));
}

template <class T>
Tensor<T> Tensor<T>::scalar(T value) {
  return from({}, {value});
}

template <class T>
Tensor<T> Tensor<T>::parameter(Shape shape, std::vector<T> values) {
  Tensor t = from(std::move(shape), std::move(values));
  t.node_->requires_grad = true;
  return t;
}

template <class T>
std::int64_t Tensor<T>::dim(int axis) const {
  const int r = rank();
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " + to_string(shape()));
  }
  return node_->shape[static_cast<std::size_t>(axis)];
}

template <class T>
std::span<T> Tensor<T>::mutable_data() {
  if (node_->backward) throw GraphError("mutable_data on a non-leaf tensor");
  return node_->data;
}

template <class T>
T Tensor<T>::item() const {
  if (node_->data.size() != 1) {
    throw ShapeError("item() on tensor of shape " + to_string(shape()));
  }
  return node_->data[0];
}

template <class T>
void Tensor<T>::set_requires_grad(bool flag) {
  if (node_->backward) throw GraphError("set_requires_grad on a non-leaf tensor");
  node_->requires_grad = flag;
}

template <class T>
void Tensor<T>::zero_grad() {
  node_->grad.assign(node_->data.size(), T(0));
}

template <class T>
Tensor<T> Tensor<T>::detach() const {
  return from(node_->shape, node_->data);
}

template <class T>
void backward(const Tensor<T>& loss) {
  auto* root = loss.node();
  if (root == nullptr) throw GraphError("backward on an undefined tensor");
  if (root->data.size() != 1) {
    throw GraphError("backward requires a scalar loss, got " + to_string(root->shape));
  }
  if (root->consumed) throw GraphError("graph already consumed by a previous backward()");
  if (!root->requires_grad) throw GraphError("loss does not depend on any tracked tensor");

  // Iterative post-order DFS gives a topological order without recursion
  // depth limits on long graphs.
  std::vector<detail::Node<T>*> order;
  std::unordered_set<detail::Node<T>*> seen;
  std::vector<std::pair<detail::Node<T>*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  seen.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      auto* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->grad_buffer()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    auto* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
  for (auto* node : order) {
    if (node->backward) {
      node->backward = nullptr;
      node->inputs.clear();
      node->consumed = true;
    }
  }
}

namespace detail {

template <class T>
void check_finite(const char* op, std::span<const T> values) {
  for (const T v : values) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite value produced by ") + op);
  }
}

template <class T>
Tensor<T> make_result(const char* op, Shape shape, std::vector<T> data,
                      std::vector<Tensor<T>> inputs, std::function<void(Node<T>&)> backward) {
  if (finite_checks_enabled()) check_finite<T>(op, data);
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->op = op;
  bool track = false;
  if (grad_enabled()) {
    for (const auto& in : inputs) track = track || (in.defined() && in.requires_grad());
  }
  if (track) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(in.node_ptr());
    node->backward = std::move(backward);
  }
  return Tensor<T>(std::move(node));
}

template Tensor<float> make_result(const char*, Shape, std::vector<float>,
                                   std::vector<Tensor<float>>, std::function<void(Node<float>&)>);
template Tensor<double> make_result(const char*, Shape, std::vector<double>,
                                    std::vector<Tensor<double>>,
                                    std::function<void(Node<double>&)>);
template void check_finite(const char*, std::span<const float>);
template void check_finite(const char*, std::span<const double>);

}  // namespace detail

template class Tensor<float>;
template class Tensor<double>;
template void backward(const Tensor<float>&);
template void backward(const Tensor<double>&);

}  // namespace iat
