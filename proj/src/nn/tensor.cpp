#include "xspec/nn/tensor.hpp"

#include <sstream>
#include <unordered_set>

namespace xspec::nn {

namespace {
thread_local bool g_grad_enabled = true;
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw DimensionError("non-positive dimension in shape " + shape_str(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream ss;
  ss << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) ss << (i ? "," : "") << shape[i];
  ss << ']';
  return ss.str();
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill, bool requires_grad) : node_(std::make_shared<Node<T>>()) {
  const std::size_t n = shape_numel(shape);
  node_->shape = std::move(shape);
  node_->data.assign(n, fill);
  node_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data, bool requires_grad)
    : node_(std::make_shared<Node<T>>()) {
  const std::size_t n = shape_numel(shape);
  if (data.size() != n)
    throw DimensionError("data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
  node_->shape = std::move(shape);
  node_->data = std::move(data);
  node_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return Tensor<T>(node_->shape, node_->data, false);
}

template <typename T>
T Tensor<T>::item() const {
  if (node_->data.size() != 1)
    throw DimensionError("item() on tensor of shape " + shape_str(node_->shape));
  return node_->data[0];
}

template <typename T>
void backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1)
    throw DimensionError("backward() requires a scalar loss");

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node<T>* n : order)
    if (!n->is_leaf()) n->grad.assign(n->data.size(), T(0));

  Node<T>* root = loss.node().get();
  root->ensure_grad();
  root->grad[0] += T(1);

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (!n->is_leaf()) n->backward(*n);
  }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

namespace detail {

template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> data,
                      std::vector<std::shared_ptr<Node<T>>> parents,
                      std::function<void(Node<T>&)> backward_fn) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  bool needs = false;
  if (g_grad_enabled)
    for (const auto& p : parents) needs = needs || p->requires_grad;
  if (needs) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward = std::move(backward_fn);
  }
  return Tensor<T>(std::move(node));
}

template Tensor<float> make_result(Shape, std::vector<float>,
                                   std::vector<std::shared_ptr<Node<float>>>,
                                   std::function<void(Node<float>&)>);
template Tensor<double> make_result(Shape, std::vector<double>,
                                    std::vector<std::shared_ptr<Node<double>>>,
                                    std::function<void(Node<double>&)>);

}  // namespace detail

template class Tensor<float>;
template class Tensor<double>;
template void backward(const Tensor<float>&);
template void backward(const Tensor<double>&);

}  // namespace xspec::nn
