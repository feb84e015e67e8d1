#pragma once

// Dense row-major tensors with a tape-free reverse-mode autodiff graph.
//
// A Tensor is a cheap handle to a shared node. Nodes produced by recorded
// operations keep their inputs alive and carry a backward rule; leaves carry
// none. Values are not modified after creation except through
// mutable_data(), which the optimizer and initializers use on leaves.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace axh {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

template <class T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until something accumulates into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(const Node&)> backward;
  const char* op = "leaf";

  T* grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), T(0));
    return grad.data();
  }
};

template <class T>
class Tensor {
 public:
  using value_type = T;
  using NodePtr = std::shared_ptr<Node<T>>;

  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<T> values, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false) { return from({1}, {value}, requires_grad); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t ndim() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->data.size(); }

  std::span<const T> data() const { return node_->data; }
  std::span<T> mutable_data() { return node_->data; }
  T item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  bool is_leaf() const { return !node_->backward; }
  bool has_grad() const { return !node_->grad.empty(); }
  /// Empty span until the first backward pass reaches this tensor.
  std::span<const T> grad() const { return node_->grad; }
  void zero_grad() { node_->grad.clear(); }
  const char* op_name() const { return node_->op; }

  /// Same values under a new shape with equal element count; gradients pass through.
  Tensor reshape(Shape shape) const;
  /// Copy of the values with no graph history.
  Tensor detach() const;

  const NodePtr& node() const { return node_; }

 private:
  NodePtr node_;
};

/// Gradient recording is on by default; a NoGradGuard disables it for the
/// current thread until destroyed (evaluation, optimizer updates, benchmarks).
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Builds the output of a recorded operation. `rule` is attached only when
/// grad mode is on and at least one input requires grad.
template <class T>
Tensor<T> make_result(Shape shape, std::vector<T> values, std::initializer_list<Tensor<T>> inputs,
                      std::function<void(const Node<T>&)> rule, const char* op);
template <class T>
Tensor<T> make_result(Shape shape, std::vector<T> values, const std::vector<Tensor<T>>& inputs,
                      std::function<void(const Node<T>&)> rule, const char* op);

/// Topological order (inputs first) of every grad-requiring node reachable from `root`.
template <class T>
std::vector<Node<T>*> topological_order(const Tensor<T>& root);

/// Accumulates d(loss)/d(leaf) into every reachable leaf that requires grad.
/// Intermediate grads are reset first, so repeated calls on one graph add
/// exactly one more copy of the gradient to each leaf.
template <class T>
void backward(const Tensor<T>& loss);

}  // namespace axh
