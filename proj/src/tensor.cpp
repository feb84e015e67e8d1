#include "axh/tensor.hpp"

#include <sstream>
#include <unordered_set>

#include "axh/errors.hpp"

namespace axh {

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

namespace {
thread_local bool g_grad_enabled = true;

void check_shape(const Shape& shape) {
  if (shape.empty()) throw DimensionError("tensor shape must have at least one dimension");
  for (std::size_t d : shape)
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_str(shape));
}
}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <class T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <class T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  check_shape(shape);
  auto n = std::make_shared<Node<T>>();
  n->data.assign(shape_numel(shape), value);
  n->shape = std::move(shape);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

template <class T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> values, bool requires_grad) {
  check_shape(shape);
  if (shape_numel(shape) != values.size())
    throw DimensionError("shape " + shape_str(shape) + " does not hold " + std::to_string(values.size()) +
                         " values");
  auto n = std::make_shared<Node<T>>();
  n->shape = std::move(shape);
  n->data = std::move(values);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

template <class T>
T Tensor<T>::item() const {
  if (numel() != 1) throw ContractError("item() needs a single-element tensor, shape is " + shape_str(shape()));
  return node_->data[0];
}

template <class T>
Tensor<T> Tensor<T>::reshape(Shape shape) const {
  check_shape(shape);
  if (shape_numel(shape) != numel())
    throw DimensionError("cannot reshape " + shape_str(this->shape()) + " to " + shape_str(shape));
  auto src = node_;
  return make_result<T>(
      std::move(shape), node_->data, {*this},
      [src](const Node<T>& out) {
        T* g = src->grad_buffer();
        for (std::size_t i = 0; i < out.grad.size(); ++i) g[i] += out.grad[i];
      },
      "reshape");
}

template <class T>
Tensor<T> Tensor<T>::detach() const {
  return from(shape(), node_->data, false);
}

template <class T>
Tensor<T> make_result(Shape shape, std::vector<T> values, std::initializer_list<Tensor<T>> inputs,
                      std::function<void(const Node<T>&)> rule, const char* op) {
  return make_result<T>(std::move(shape), std::move(values), std::vector<Tensor<T>>(inputs), std::move(rule), op);
}

template <class T>
Tensor<T> make_result(Shape shape, std::vector<T> values, const std::vector<Tensor<T>>& inputs,
                      std::function<void(const Node<T>&)> rule, const char* op) {
  auto n = std::make_shared<Node<T>>();
  n->shape = std::move(shape);
  n->data = std::move(values);
  n->op = op;
  if (grad_enabled()) {
    bool any = false;
    for (const auto& in : inputs) any = any || (in.defined() && in.requires_grad());
    if (any) {
      n->requires_grad = true;
      for (const auto& in : inputs)
        if (in.defined() && in.requires_grad()) n->parents.push_back(in.node());
      n->backward = std::move(rule);
    }
  }
  return Tensor<T>(std::move(n));
}

template <class T>
std::vector<Node<T>*> topological_order(const Tensor<T>& root) {
  std::vector<Node<T>*> order;
  if (!root.defined() || !root.requires_grad()) return order;
  std::unordered_set<Node<T>*> seen;
  // iterative post-order DFS; (node, next parent index)
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

template <class T>
void backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1)
    throw ContractError("backward() needs a scalar loss, got shape " +
                        (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  if (!loss.requires_grad()) return;
  const auto order = topological_order(loss);
  for (Node<T>* n : order)
    if (n->backward) n->grad.assign(n->data.size(), T(0));
  loss.node()->grad_buffer()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backward) n->backward(*n);
  }
}

#define AXH_INSTANTIATE(T)                                                                            \
  template class Tensor<T>;                                                                           \
  template Tensor<T> make_result<T>(Shape, std::vector<T>, std::initializer_list<Tensor<T>>,          \
                                    std::function<void(const Node<T>&)>, const char*);                \
  template Tensor<T> make_result<T>(Shape, std::vector<T>, const std::vector<Tensor<T>>&,             \
                                    std::function<void(const Node<T>&)>, const char*);                \
  template std::vector<Node<T>*> topological_order<T>(const Tensor<T>&);                              \
  template void backward<T>(const Tensor<T>&);

AXH_INSTANTIATE(float)
AXH_INSTANTIATE(double)
#undef AXH_INSTANTIATE

}  // namespace axh
