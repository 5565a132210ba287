#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mam::ad {

using Shape = std::vector<int>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
  }
};

}  // namespace detail

// Graph recording is on by default; NoGradGuard turns it off for the current
// thread (inference paths).
bool grad_mode_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Shared handle to a dense row-major array plus its autodiff record. Copies
/// alias the same storage, like parameters referenced from several layers.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  [[nodiscard]] bool defined() const { return node_ != nullptr; }
  [[nodiscard]] const Shape& shape() const { return node_->shape; }
  [[nodiscard]] int rank() const { return static_cast<int>(node_->shape.size()); }
  [[nodiscard]] int dim(int i) const;
  [[nodiscard]] std::size_t numel() const { return node_->value.size(); }

  [[nodiscard]] std::span<const T> values() const { return node_->value; }
  [[nodiscard]] std::span<T> mutable_values() { return node_->value; }
  [[nodiscard]] T item() const;
  [[nodiscard]] T at(std::size_t flat_index) const { return node_->value.at(flat_index); }

  [[nodiscard]] bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  [[nodiscard]] bool has_grad() const { return !node_->grad.empty(); }
  [[nodiscard]] std::span<const T> grad() const { return node_->grad; }
  [[nodiscard]] std::span<T> mutable_grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  void zero_grad();
  void drop_grad() { node_->grad.clear(); }

  // Value copy with no graph history.
  [[nodiscard]] Tensor detach() const;
  // Differentiable reshape (copies values).
  [[nodiscard]] Tensor reshape(Shape shape) const;

  [[nodiscard]] const std::shared_ptr<detail::Node<T>>& node() const { return node_; }
  [[nodiscard]] bool same_storage(const Tensor& other) const { return node_ == other.node_; }

  static Tensor from_node(std::shared_ptr<detail::Node<T>> node) {
    Tensor t;
    t.node_ = std::move(node);
    return t;
  }

 private:
  std::shared_ptr<detail::Node<T>> node_;
};

/// Creates an op result. When grad mode is on and any parent requires grad,
/// the result records `backward` and its parents; otherwise it is a constant.
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> values, const std::vector<Tensor<T>>& parents,
                      std::function<void(detail::Node<T>&)> backward);

/// Reverse-mode sweep from a scalar. Each reachable node is visited exactly
/// once in reverse topological order. Leaf gradients accumulate across calls;
/// intermediate gradients are reset at the start of every sweep.
template <typename T>
void backward(const Tensor<T>& loss);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace mam::ad
