#include "mam/ad/tensor.hpp"

#include <algorithm>
#include <unordered_set>
#include <utility>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "mam/errors.hpp"

namespace mam::ad {

namespace {
thread_local bool g_grad_mode = true;
}

bool grad_mode_enabled() { return g_grad_mode; }

NoGradGuard::NoGradGuard() : previous_(g_grad_mode) { g_grad_mode = false; }
NoGradGuard::~NoGradGuard() { g_grad_mode = previous_; }

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError(fmt::format("negative extent in shape [{}]", fmt::join(shape, ", ")));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const Shape& shape) { return fmt::format("[{}]", fmt::join(shape, "x")); }

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values, bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw ShapeError(fmt::format("tensor shape {} holds {} values, got {}", shape_str(shape),
                                 shape_numel(shape), values.size()));
  }
  node_ = std::make_shared<detail::Node<T>>();
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  const auto n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<T>(n, value), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return Tensor(Shape{1}, std::vector<T>{value}, requires_grad);
}

template <typename T>
int Tensor<T>::dim(int i) const {
  const int r = rank();
  if (i < 0) i += r;
  if (i < 0 || i >= r) {
    throw ShapeError(fmt::format("dim {} out of range for shape {}", i, shape_str(shape())));
  }
  return node_->shape[static_cast<std::size_t>(i)];
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) {
    throw ContractError(fmt::format("item() on tensor of shape {}", shape_str(shape())));
  }
  return node_->value[0];
}

template <typename T>
void Tensor<T>::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return Tensor(node_->shape, node_->value, false);
}

template <typename T>
Tensor<T> Tensor<T>::reshape(Shape shape) const {
  if (shape_numel(shape) != numel()) {
    throw ShapeError(fmt::format("cannot reshape {} to {}", shape_str(this->shape()), shape_str(shape)));
  }
  auto parent = node_;
  return make_result<T>(std::move(shape), node_->value, {*this}, [parent](detail::Node<T>& self) {
    parent->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) parent->grad[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> values, const std::vector<Tensor<T>>& parents,
                      std::function<void(detail::Node<T>&)> backward) {
  Tensor<T> out(std::move(shape), std::move(values), false);
  if (!grad_mode_enabled()) return out;
  bool any = false;
  for (const auto& p : parents) any = any || (p.defined() && p.requires_grad());
  if (!any) return out;
  auto& node = *out.node();
  node.requires_grad = true;
  for (const auto& p : parents) {
    if (p.defined()) node.parents.push_back(p.node());
  }
  node.backward = std::move(backward);
  return out;
}

template <typename T>
void backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractError(fmt::format("backward() requires a scalar loss, got shape {}",
                                    loss.defined() ? shape_str(loss.shape()) : "<undefined>"));
  }
  if (!loss.requires_grad()) return;

  using NodePtr = detail::Node<T>*;
  std::vector<NodePtr> order;
  std::unordered_set<NodePtr> visited;
  std::vector<std::pair<NodePtr, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      NodePtr parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (NodePtr n : order) {
    if (n->backward) n->grad.assign(n->value.size(), T(0));
  }
  NodePtr root = loss.node().get();
  root->ensure_grad();
  root->grad[0] += T(1);

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward(**it);
  }
}

template class Tensor<float>;
template class Tensor<double>;

template Tensor<float> make_result<float>(Shape, std::vector<float>, const std::vector<Tensor<float>>&,
                                          std::function<void(detail::Node<float>&)>);
template Tensor<double> make_result<double>(Shape, std::vector<double>,
                                            const std::vector<Tensor<double>>&,
                                            std::function<void(detail::Node<double>&)>);
template void backward<float>(const Tensor<float>&);
template void backward<double>(const Tensor<double>&);

}  // namespace mam::ad
