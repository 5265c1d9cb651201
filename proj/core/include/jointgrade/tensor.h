#pragma once

// Minimal reverse-mode automatic differentiation over dense float64 tensors.
//
// A Tensor is a cheap handle to a shared graph node. Operations build new
// nodes that remember their parents and a backward rule; Tensor::backward()
// walks the graph in reverse topological order. Leaves created with
// Tensor::parameter() accumulate gradients across backward calls until
// zero_grad() is called. Intermediate gradients are reset on every backward.
//
// Only rank-1 and rank-2 shapes are used. A scalar has shape [1].
// Broadcasting exists only in add_bias.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace jointgrade {

using Shape = std::vector<std::size_t>;

class Tensor {
 public:
  struct Node;

  /// An empty scalar constant 0.
  Tensor();

  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor zeros(Shape shape);
  static Tensor scalar(double value);
  /// Leaf that requires grad; grad starts at zero.
  static Tensor parameter(Shape shape, std::vector<double> values);

  const Shape& shape() const;
  std::size_t size() const;
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const;
  /// Direct write access for optimizers and perturbation tests. Only valid on
  /// leaves; mutating an interior node does not invalidate saved activations.
  std::span<double> mutable_values();
  double item() const;
  double at(std::size_t row, std::size_t col) const;

  /// Gradient buffer; empty when the tensor does not require grad.
  std::span<const double> grad() const;
  void zero_grad();
  bool requires_grad() const;
  bool is_leaf() const;
  std::string_view op_name() const;

  /// d(this)/d(leaf) accumulated into every reachable leaf that requires grad.
  /// Throws ContractError unless size() == 1.
  void backward() const;

  /// True when both handles point to the same node.
  bool same_node(const Tensor& other) const { return node_ == other.node_; }

  const std::shared_ptr<Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<Node> node_;
};

struct Tensor::Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;
  bool requires_grad = false;
  std::string_view op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  // Adds this node's grad contribution into the parents' grad buffers.
  std::function<void(Node&)> backward_rule;
};

/// While alive, operations on this thread record no graph.
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

// Forward operations.
Tensor matmul(const Tensor& a, const Tensor& b);  // [m x k] * [k x n]
Tensor add_bias(const Tensor& x, const Tensor& bias);  // [m x n] + [n]
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor relu(const Tensor& x);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor softmax_rows(const Tensor& x);
Tensor log(const Tensor& x);
Tensor pow(const Tensor& x, double exponent);  // requires x >= 0
Tensor clamp(const Tensor& x, double lo, double hi);
/// Row i, column labels[i] of a [m x C] tensor; result has shape [m].
Tensor gather_true(const Tensor& p, std::span<const int> labels);
Tensor mean(const Tensor& x);
Tensor scale(const Tensor& x, double factor);
/// factor * x + offset
Tensor affine(const Tensor& x, double factor, double offset);

/// Same values, no parents, no gradient flow.
Tensor detach(const Tensor& t);

}  // namespace jointgrade
