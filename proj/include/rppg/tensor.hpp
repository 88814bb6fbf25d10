#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rppg {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or truncated file contents.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major value buffer. Video data uses the N x T x H x W x C layout.
template <typename T>
struct Tensor {
  Shape shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(Shape s, T fill = T(0));
  Tensor(Shape s, std::vector<T> values);

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }
  bool empty() const { return data.empty() && shape.empty(); }

  std::span<T> values() { return data; }
  std::span<const T> values() const { return data; }

  T& operator[](std::size_t i) { return data[i]; }
  const T& operator[](std::size_t i) const { return data[i]; }

  void fill(T v);
  bool all_finite() const;
};

/// Throws NumericError naming `where` if any element is NaN or Inf.
template <typename T>
void require_finite(const Tensor<T>& t, const char* where);

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward;

  Tensor<T>& ensure_grad();
};

/// Handle onto a node of the reverse-mode graph. Copies share the node.
template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(Tensor<T> value, bool requires_grad = false);
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& mutable_value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape; }
  std::size_t dim(std::size_t i) const { return node_->value.shape.at(i); }

  bool defined() const { return static_cast<bool>(node_); }
  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.data.empty(); }
  const Tensor<T>& grad() const { return node_->grad; }
  void zero_grad() const { node_->grad = Tensor<T>(); }

  T item() const;

  /// Seeds d(self)/d(self)=1; self must be a scalar.
  void backward() const;
  void backward(const Tensor<T>& seed) const;

  /// Same value, cut from the graph.
  Var detach() const { return Var(node_->value, false); }

  const std::shared_ptr<Node<T>>& node() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Builds an op result. The backward closure is kept only if some parent
/// requires a gradient, so inference passes do not retain the graph.
template <typename T>
Var<T> make_result(Tensor<T> value, std::vector<Var<T>> parents,
                   std::function<void(Node<T>&)> backward);

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;
using VarF = Var<float>;
using VarD = Var<double>;

}  // namespace rppg
