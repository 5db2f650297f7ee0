#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace xspec::nn {

using Shape = std::vector<int>;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until a gradient reaches this node
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads self.grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward;

  bool is_leaf() const { return !backward; }
  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
  }
};

// Reference-counted handle to a node in the autodiff graph. Copies share the
// node; ops never mutate their inputs.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0), bool requires_grad = false);
  Tensor(Shape shape, std::vector<T> data, bool requires_grad = false);
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape.at(static_cast<std::size_t>(i)); }
  int ndim() const { return static_cast<int>(node_->shape.size()); }
  std::size_t numel() const { return node_->data.size(); }

  std::span<T> data() { return node_->data; }
  std::span<const T> data() const { return node_->data; }
  std::vector<T>& storage() { return node_->data; }
  const std::vector<T>& storage() const { return node_->data; }

  bool has_grad() const { return node_->grad.size() == node_->data.size(); }
  std::span<T> grad() { return node_->grad; }
  std::span<const T> grad() const { return node_->grad; }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool r) { node_->requires_grad = r; }
  void zero_grad() { node_->grad.assign(node_->data.size(), T(0)); }

  // Fresh leaf holding a copy of the values, cut from the graph.
  Tensor detach() const;
  Tensor clone() const { return detach(); }

  T item() const;
  T& at(std::size_t i) { return node_->data.at(i); }
  T at(std::size_t i) const { return node_->data.at(i); }

  const std::shared_ptr<Node<T>>& node() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

// Reverse-mode sweep from a scalar loss. Intermediate gradients are
// recomputed on every call; leaf gradients accumulate until zeroed.
template <typename T>
void backward(const Tensor<T>& loss);

// While alive on the current thread, ops do not record the graph.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

namespace detail {

// Builds an op result. The backward closure is attached only when grad mode is
// on and some parent requires a gradient.
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> data,
                      std::vector<std::shared_ptr<Node<T>>> parents,
                      std::function<void(Node<T>&)> backward_fn);

}  // namespace detail

}  // namespace xspec::nn
