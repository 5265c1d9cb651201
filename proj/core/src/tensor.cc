#include "jointgrade/tensor.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_set>
#include <utility>

#include "jointgrade/error.h"

namespace jointgrade {

namespace {

thread_local bool g_grad_enabled = true;

using NodePtr = std::shared_ptr<Tensor::Node>;

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

NodePtr make_leaf(Shape shape, std::vector<double> values, bool requires_grad,
                  std::string_view op = "leaf") {
  for (std::size_t dim : shape) {
    if (dim == 0) throw ShapeError(std::string(op), shape, {});
  }
  if (shape.empty() || element_count(shape) != values.size()) {
    throw ShapeError(std::string(op), shape, {values.size()});
  }
  auto node = std::make_shared<Tensor::Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  node->requires_grad = requires_grad;
  node->op = op;
  if (requires_grad) node->grad.assign(node->values.size(), 0.0);
  return node;
}

// Builds an interior node. The graph is only recorded when grad mode is on and
// some parent requires grad; otherwise the result is a constant.
Tensor make_result(std::string_view op, Shape shape, std::vector<double> values,
                   std::vector<NodePtr> parents,
                   std::function<void(Tensor::Node&)> rule) {
  auto node = std::make_shared<Tensor::Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  node->op = op;
  const bool tracked =
      g_grad_enabled &&
      std::any_of(parents.begin(), parents.end(),
                  [](const NodePtr& p) { return p->requires_grad; });
  if (tracked) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward_rule = std::move(rule);
  }
  return Tensor(std::move(node));
}

bool is_matrix(const Tensor& t) { return t.shape().size() == 2; }

void require_matrix(std::string_view op, const Tensor& t) {
  if (!is_matrix(t)) throw ShapeError(std::string(op), t.shape(), {});
}

void require_same_shape(std::string_view op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op), a.shape(), b.shape());
  }
}

// Applies an elementwise unary map whose derivative depends on (x, y).
template <typename Forward, typename Derivative>
Tensor unary(std::string_view op, const Tensor& x, Forward f, Derivative df) {
  const auto in = x.values();
  std::vector<double> out(in.size());
  std::transform(in.begin(), in.end(), out.begin(), f);
  return make_result(op, x.shape(), std::move(out), {x.node()},
                     [df](Tensor::Node& self) {
                       Tensor::Node& p = *self.parents[0];
                       for (std::size_t i = 0; i < self.grad.size(); ++i) {
                         p.grad[i] += self.grad[i] * df(p.values[i], self.values[i]);
                       }
                     });
}

}  // namespace

Tensor::Tensor() : node_(make_leaf({1}, {0.0}, false, "constant")) {}

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  return Tensor(make_leaf(std::move(shape), std::move(values), false, "constant"));
}

Tensor Tensor::zeros(Shape shape) {
  const std::size_t n = element_count(shape);
  return constant(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::scalar(double value) { return constant({1}, {value}); }

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  return Tensor(make_leaf(std::move(shape), std::move(values), true, "parameter"));
}

const Shape& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::size() const { return node_->values.size(); }

std::size_t Tensor::rows() const { return node_->shape[0]; }

std::size_t Tensor::cols() const {
  return node_->shape.size() > 1 ? node_->shape[1] : 1;
}

std::span<const double> Tensor::values() const { return node_->values; }
std::span<double> Tensor::mutable_values() { return node_->values; }

double Tensor::item() const {
  if (size() != 1) throw ContractError("item() on tensor of shape " + shape_to_string(shape()));
  return node_->values[0];
}

double Tensor::at(std::size_t row, std::size_t col) const {
  if (row >= rows() || col >= cols()) {
    throw IndexError("at(" + std::to_string(row) + ", " + std::to_string(col) +
                     ") out of range for " + shape_to_string(shape()));
  }
  return node_->values[row * cols() + col];
}

std::span<const double> Tensor::grad() const { return node_->grad; }

void Tensor::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

bool Tensor::requires_grad() const { return node_->requires_grad; }
bool Tensor::is_leaf() const { return !node_->backward_rule; }
std::string_view Tensor::op_name() const { return node_->op; }

void Tensor::backward() const {
  if (size() != 1) {
    throw ContractError("backward() requires a scalar, got shape " +
                        shape_to_string(shape()));
  }
  if (!node_->requires_grad) return;

  // Post-order DFS over the tracked subgraph.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }

  for (Node* node : order) {
    if (node->backward_rule) node->grad.assign(node->values.size(), 0.0);
  }
  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward_rule) (*it)->backward_rule(**it);
  }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix("matmul", a);
  require_matrix("matmul", b);
  if (a.cols() != b.rows()) throw ShapeError("matmul", a.shape(), b.shape());
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * bv[p * n + j];
    }
  }
  return make_result("matmul", {m, n}, std::move(out), {a.node(), b.node()},
                     [m, k, n](Tensor::Node& self) {
                       Tensor::Node& lhs = *self.parents[0];
                       Tensor::Node& rhs = *self.parents[1];
                       const auto& g = self.grad;
                       if (lhs.requires_grad) {
                         // dA = dC * B^T
                         for (std::size_t i = 0; i < m; ++i) {
                           for (std::size_t p = 0; p < k; ++p) {
                             double acc = 0.0;
                             for (std::size_t j = 0; j < n; ++j) {
                               acc += g[i * n + j] * rhs.values[p * n + j];
                             }
                             lhs.grad[i * k + p] += acc;
                           }
                         }
                       }
                       if (rhs.requires_grad) {
                         // dB = A^T * dC
                         for (std::size_t i = 0; i < m; ++i) {
                           for (std::size_t p = 0; p < k; ++p) {
                             const double aip = lhs.values[i * k + p];
                             for (std::size_t j = 0; j < n; ++j) {
                               rhs.grad[p * n + j] += aip * g[i * n + j];
                             }
                           }
                         }
                       }
                     });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  require_matrix("add_bias", x);
  if (bias.shape().size() != 1 || bias.size() != x.cols()) {
    throw ShapeError("add_bias", x.shape(), bias.shape());
  }
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> out(x.values().begin(), x.values().end());
  const auto bv = bias.values();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bv[j];
  }
  return make_result("add_bias", x.shape(), std::move(out), {x.node(), bias.node()},
                     [m, n](Tensor::Node& self) {
                       Tensor::Node& xs = *self.parents[0];
                       Tensor::Node& b = *self.parents[1];
                       for (std::size_t i = 0; i < m; ++i) {
                         for (std::size_t j = 0; j < n; ++j) {
                           const double g = self.grad[i * n + j];
                           if (xs.requires_grad) xs.grad[i * n + j] += g;
                           if (b.requires_grad) b.grad[j] += g;
                         }
                       }
                     });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  return make_result("add", a.shape(), std::move(out), {a.node(), b.node()},
                     [](Tensor::Node& self) {
                       for (auto& parent : self.parents) {
                         if (!parent->requires_grad) continue;
                         for (std::size_t i = 0; i < self.grad.size(); ++i) {
                           parent->grad[i] += self.grad[i];
                         }
                       }
                     });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  return make_result("mul", a.shape(), std::move(out), {a.node(), b.node()},
                     [](Tensor::Node& self) {
                       Tensor::Node& lhs = *self.parents[0];
                       Tensor::Node& rhs = *self.parents[1];
                       for (std::size_t i = 0; i < self.grad.size(); ++i) {
                         if (lhs.requires_grad) lhs.grad[i] += self.grad[i] * rhs.values[i];
                         if (rhs.requires_grad) rhs.grad[i] += self.grad[i] * lhs.values[i];
                       }
                     });
}

Tensor relu(const Tensor& x) {
  return unary(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double in, double) { return in > 0.0 ? 1.0 : 0.0; });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require_matrix("concat_cols", a);
  require_matrix("concat_cols", b);
  if (a.rows() != b.rows()) throw ShapeError("concat_cols", a.shape(), b.shape());
  const std::size_t m = a.rows(), ca = a.cols(), cb = b.cols(), c = ca + cb;
  std::vector<double> out(m * c);
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(a.values().begin() + i * ca, ca, out.begin() + i * c);
    std::copy_n(b.values().begin() + i * cb, cb, out.begin() + i * c + ca);
  }
  return make_result("concat_cols", {m, c}, std::move(out), {a.node(), b.node()},
                     [m, ca, cb, c](Tensor::Node& self) {
                       Tensor::Node& lhs = *self.parents[0];
                       Tensor::Node& rhs = *self.parents[1];
                       for (std::size_t i = 0; i < m; ++i) {
                         if (lhs.requires_grad) {
                           for (std::size_t j = 0; j < ca; ++j) lhs.grad[i * ca + j] += self.grad[i * c + j];
                         }
                         if (rhs.requires_grad) {
                           for (std::size_t j = 0; j < cb; ++j) rhs.grad[i * cb + j] += self.grad[i * c + ca + j];
                         }
                       }
                     });
}

Tensor softmax_rows(const Tensor& x) {
  require_matrix("softmax_rows", x);
  const std::size_t m = x.rows(), n = x.cols();
  const auto in = x.values();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = in.data() + i * n;
    const double peak = *std::max_element(row, row + n);
    if (!std::isfinite(peak)) throw NumericError("softmax_rows: non-finite logits in row " + std::to_string(i));
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      out[i * n + j] = std::exp(row[j] - peak);
      total += out[i * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= total;
  }
  return make_result("softmax_rows", x.shape(), std::move(out), {x.node()},
                     [m, n](Tensor::Node& self) {
                       Tensor::Node& xs = *self.parents[0];
                       const auto& p = self.values;
                       const auto& g = self.grad;
                       for (std::size_t i = 0; i < m; ++i) {
                         double dot = 0.0;
                         for (std::size_t j = 0; j < n; ++j) dot += g[i * n + j] * p[i * n + j];
                         for (std::size_t j = 0; j < n; ++j) {
                           xs.grad[i * n + j] += p[i * n + j] * (g[i * n + j] - dot);
                         }
                       }
                     });
}

Tensor log(const Tensor& x) {
  return unary(
      "log", x, [](double v) { return std::log(v); },
      [](double in, double) { return 1.0 / in; });
}

Tensor pow(const Tensor& x, double exponent) {
  for (double v : x.values()) {
    if (!(v >= 0.0)) throw NumericError("pow: base must be non-negative, got " + std::to_string(v));
  }
  return unary(
      "pow", x, [exponent](double v) { return std::pow(v, exponent); },
      [exponent](double in, double) {
        if (exponent == 0.0) return 0.0;
        if (in == 0.0) {
          if (exponent > 1.0) return 0.0;
          if (exponent == 1.0) return 1.0;
          return std::numeric_limits<double>::infinity();
        }
        return exponent * std::pow(in, exponent - 1.0);
      });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  return unary(
      "clamp", x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
      [lo, hi](double in, double) { return (in >= lo && in <= hi) ? 1.0 : 0.0; });
}

Tensor gather_true(const Tensor& p, std::span<const int> labels) {
  require_matrix("gather_true", p);
  const std::size_t m = p.rows(), n = p.cols();
  if (labels.size() != m) throw ShapeError("gather_true", p.shape(), {labels.size()});
  std::vector<std::size_t> index(m);
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= n) {
      throw IndexError("gather_true: label " + std::to_string(labels[i]) + " at row " +
                       std::to_string(i) + " outside [0, " + std::to_string(n) + ")");
    }
    index[i] = i * n + static_cast<std::size_t>(labels[i]);
    out[i] = p.values()[index[i]];
  }
  return make_result("gather_true", {m}, std::move(out), {p.node()},
                     [index = std::move(index)](Tensor::Node& self) {
                       Tensor::Node& src = *self.parents[0];
                       for (std::size_t i = 0; i < index.size(); ++i) src.grad[index[i]] += self.grad[i];
                     });
}

Tensor mean(const Tensor& x) {
  const auto in = x.values();
  const double n = static_cast<double>(in.size());
  const double total = std::accumulate(in.begin(), in.end(), 0.0);
  return make_result("mean", {1}, {total / n}, {x.node()}, [n](Tensor::Node& self) {
    Tensor::Node& src = *self.parents[0];
    const double g = self.grad[0] / n;
    for (double& v : src.grad) v += g;
  });
}

Tensor scale(const Tensor& x, double factor) { return affine(x, factor, 0.0); }

Tensor affine(const Tensor& x, double factor, double offset) {
  return unary(
      "affine", x, [factor, offset](double v) { return factor * v + offset; },
      [factor](double, double) { return factor; });
}

Tensor detach(const Tensor& t) {
  return Tensor(make_leaf(t.shape(), std::vector<double>(t.values().begin(), t.values().end()),
                          false, "detach"));
}

}  // namespace jointgrade
