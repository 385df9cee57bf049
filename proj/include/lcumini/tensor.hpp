// Copyright 2026 The lcumini Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCUMINI_TENSOR_HPP
#define LCUMINI_TENSOR_HPP

// Dense row-major tensors with tape-free reverse-mode autodiff.
//
// A Tensor is a cheap handle onto a graph node. Ops allocate a fresh node and,
// when any input requires a gradient (and grad mode is on), remember their
// inputs plus a closure that pushes the output gradient back into them.
// Tensor<float> is used for training, Tensor<double> for gradient checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lcumini/errors.hpp"

namespace lcumini {

using Shape = std::vector<std::size_t>;

inline std::size_t numel_of(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

namespace detail {

inline thread_local bool grad_mode_enabled = true;

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  bool is_leaf() const { return !backward; }

  std::vector<T>& ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), T{0});
    return grad;
  }
};

}  // namespace detail

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_mode_enabled) { detail::grad_mode_enabled = false; }
  ~NoGradGuard() { detail::grad_mode_enabled = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <typename T>
class Tensor {
 public:
  using value_type = T;
  using NodePtr = std::shared_ptr<detail::Node<T>>;

  Tensor() = default;

  static Tensor from(Shape shape, std::vector<T> data, bool requires_grad = false) {
    for (std::size_t d : shape) {
      if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_str(shape));
    }
    if (numel_of(shape) != data.size()) {
      throw ShapeError("shape " + shape_str(shape) + " does not match " +
                       std::to_string(data.size()) + " values");
    }
    auto node = std::make_shared<detail::Node<T>>();
    node->shape = std::move(shape);
    node->data = std::move(data);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    std::vector<T> data(numel_of(shape), T{0});
    return from(std::move(shape), std::move(data), requires_grad);
  }

  static Tensor full(Shape shape, T value, bool requires_grad = false) {
    std::vector<T> data(numel_of(shape), value);
    return from(std::move(shape), std::move(data), requires_grad);
  }

  static Tensor scalar(T value, bool requires_grad = false) {
    return from({}, {value}, requires_grad);
  }

  /// Builds an op result; records the graph edge only if some input needs a gradient.
  static Tensor make_result(Shape shape, std::vector<T> data, std::vector<NodePtr> inputs,
                            std::function<void(detail::Node<T>&)> backward) {
    auto node = std::make_shared<detail::Node<T>>();
    node->shape = std::move(shape);
    node->data = std::move(data);
    bool needs = false;
    if (detail::grad_mode_enabled) {
      for (const auto& in : inputs) needs = needs || in->requires_grad;
    }
    if (needs) {
      node->requires_grad = true;
      node->inputs = std::move(inputs);
      node->backward = std::move(backward);
    }
    return Tensor(std::move(node));
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->data.size(); }

  std::span<const T> data() const { return node_->data; }
  /// In-place access for optimizers and initializers; never used on op outputs.
  std::span<T> mutable_data() { return node_->data; }
  std::vector<T> to_vector() const { return node_->data; }

  T item() const {
    if (numel() != 1) throw ContractError("item() on tensor of shape " + shape_str(shape()));
    return node_->data[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool flag) { node_->requires_grad = flag; }

  bool has_grad() const { return node_->grad.size() == node_->data.size(); }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->ensure_grad(); }
  void zero_grad() { node_->grad.clear(); }

  /// Accumulates d(this)/d(leaf) into every reachable leaf with requires_grad.
  void backward() const;

  const NodePtr& node() const { return node_; }
  bool same_node(const Tensor& other) const { return node_ == other.node_; }

  /// Deep copy of the values with no graph history.
  Tensor detach_copy(bool requires_grad = false) const {
    return from(shape(), node_->data, requires_grad);
  }

 private:
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}
  NodePtr node_;
};

template <typename T>
void Tensor<T>::backward() const {
  if (numel() != 1) {
    throw ContractError("backward() requires a scalar loss, got shape " + shape_str(shape()));
  }
  if (!requires_grad()) return;

  // Iterative post-order DFS; reversed it is a valid topological order.
  using NodeT = detail::Node<T>;
  std::vector<NodeT*> order;
  std::unordered_set<NodeT*> visited;
  std::vector<std::pair<NodeT*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      NodeT* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (NodeT* n : order) {
    if (!n->is_leaf()) n->grad.assign(n->data.size(), T{0});
  }
  node_->ensure_grad()[0] += T{1};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (!(*it)->is_leaf()) (*it)->backward(**it);
  }
}

namespace detail {

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()) + " differ");
  }
}

template <typename T>
void require_rank(const Tensor<T>& a, std::size_t rank, const char* op) {
  if (a.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_str(a.shape()));
  }
}

// C[m x n] (+)= A[m x k] * B[k x n]
template <typename T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[i * k + p];
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m x k] += A[m x n] * B[k x n]^T
template <typename T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T* brow = b + p * n;
      T acc{0};
      for (std::size_t j = 0; j < n; ++j) acc += arow[j] * brow[j];
      c[i * k + p] += acc;
    }
  }
}

// C[k x n] += A[m x k]^T * B[m x n]
template <typename T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* brow = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[i * k + p];
      T* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

struct AxisSplit {
  std::size_t outer, axis, inner;
};

inline AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s{1, shape[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "add");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return Tensor<T>::make_result(a.shape(), std::move(out), {a.node(), b.node()},
                                [](detail::Node<T>& self) {
                                  for (auto& in : self.inputs) {
                                    if (!in->requires_grad) continue;
                                    auto& g = in->ensure_grad();
                                    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                                  }
                                });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "sub");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return Tensor<T>::make_result(a.shape(), std::move(out), {a.node(), b.node()},
                                [](detail::Node<T>& self) {
                                  auto& a = *self.inputs[0];
                                  auto& b = *self.inputs[1];
                                  if (a.requires_grad) {
                                    auto& g = a.ensure_grad();
                                    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                                  }
                                  if (b.requires_grad) {
                                    auto& g = b.ensure_grad();
                                    for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
                                  }
                                });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "mul");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return Tensor<T>::make_result(a.shape(), std::move(out), {a.node(), b.node()},
                                [](detail::Node<T>& self) {
                                  auto& a = *self.inputs[0];
                                  auto& b = *self.inputs[1];
                                  if (a.requires_grad) {
                                    auto& g = a.ensure_grad();
                                    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * b.data[i];
                                  }
                                  if (b.requires_grad) {
                                    auto& g = b.ensure_grad();
                                    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * a.data[i];
                                  }
                                });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * factor;
  return Tensor<T>::make_result(a.shape(), std::move(out), {a.node()},
                                [factor](detail::Node<T>& self) {
                                  auto& g = self.inputs[0]->ensure_grad();
                                  for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * factor;
                                });
}

/// Adds a vector of length shape.back() to every row of x.
template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias) {
  if (x.rank() == 0 || bias.numel() != x.shape().back()) {
    throw ShapeError("add_bias: bias " + shape_str(bias.shape()) + " does not match rows of " +
                     shape_str(x.shape()));
  }
  const std::size_t cols = bias.numel();
  const std::size_t rows = x.numel() / cols;
  std::vector<T> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = x.data()[r * cols + c] + bias.data()[c];
  }
  return Tensor<T>::make_result(x.shape(), std::move(out), {x.node(), bias.node()},
                                [rows, cols](detail::Node<T>& self) {
                                  auto& x = *self.inputs[0];
                                  auto& b = *self.inputs[1];
                                  if (x.requires_grad) {
                                    auto& g = x.ensure_grad();
                                    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                                  }
                                  if (b.requires_grad) {
                                    auto& g = b.ensure_grad();
                                    for (std::size_t r = 0; r < rows; ++r) {
                                      for (std::size_t c = 0; c < cols; ++c) g[c] += self.grad[r * cols + c];
                                    }
                                  }
                                });
}

/// Tanh-approximated GELU.
template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  const T k = static_cast<T>(0.7978845608028654);  // sqrt(2/pi)
  const T c = static_cast<T>(0.044715);
  std::vector<T> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T v = x.data()[i];
    out[i] = T{0.5} * v * (T{1} + std::tanh(k * (v + c * v * v * v)));
  }
  return Tensor<T>::make_result(x.shape(), std::move(out), {x.node()}, [k, c](detail::Node<T>& self) {
    auto& in = *self.inputs[0];
    auto& g = in.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const T v = in.data[i];
      const T th = std::tanh(k * (v + c * v * v * v));
      const T d = T{0.5} * (T{1} + th) + T{0.5} * v * (T{1} - th * th) * k * (T{1} + T{3} * c * v * v);
      g[i] += self.grad[i] * d;
    }
  });
}

// ---------------------------------------------------------------------------
// Linear algebra and layout

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: cannot multiply " + shape_str(a.shape()) + " by " + shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<T> out(m * n, T{0});
  detail::gemm_nn(a.data().data(), b.data().data(), out.data(), m, k, n);
  return Tensor<T>::make_result({m, n}, std::move(out), {a.node(), b.node()},
                                [m, k, n](detail::Node<T>& self) {
                                  auto& a = *self.inputs[0];
                                  auto& b = *self.inputs[1];
                                  if (a.requires_grad) {
                                    detail::gemm_nt(self.grad.data(), b.data.data(), a.ensure_grad().data(), m, n, k);
                                  }
                                  if (b.requires_grad) {
                                    detail::gemm_tn(a.data.data(), self.grad.data(), b.ensure_grad().data(), m, k, n);
                                  }
                                });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (numel_of(shape) != a.numel()) {
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  }
  std::vector<T> out(a.data().begin(), a.data().end());
  return Tensor<T>::make_result(std::move(shape), std::move(out), {a.node()}, [](detail::Node<T>& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

/// General axis permutation: out.shape[i] = a.shape[axes[i]].
template <typename T>
Tensor<T> permute(const Tensor<T>& a, const std::vector<std::size_t>& axes) {
  const std::size_t r = a.rank();
  if (axes.size() != r) throw ShapeError("permute: axes length does not match rank of " + shape_str(a.shape()));
  std::vector<bool> seen(r, false);
  for (std::size_t ax : axes) {
    if (ax >= r || seen[ax]) throw ContractError("permute: invalid axis permutation");
    seen[ax] = true;
  }
  Shape out_shape(r);
  std::vector<std::size_t> in_strides(r, 1);
  for (std::size_t i = r; i-- > 1;) in_strides[i - 1] = in_strides[i] * a.dim(i);
  std::vector<std::size_t> src_stride(r);
  for (std::size_t i = 0; i < r; ++i) {
    out_shape[i] = a.dim(axes[i]);
    src_stride[i] = in_strides[axes[i]];
  }
  // index[j] = offset in a of output element j
  std::vector<std::size_t> index(a.numel());
  std::vector<std::size_t> counter(r, 0);
  std::size_t offset = 0;
  for (std::size_t j = 0; j < index.size(); ++j) {
    index[j] = offset;
    for (std::size_t d = r; d-- > 0;) {
      ++counter[d];
      offset += src_stride[d];
      if (counter[d] < out_shape[d]) break;
      offset -= src_stride[d] * counter[d];
      counter[d] = 0;
    }
  }
  std::vector<T> out(a.numel());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = a.data()[index[j]];
  return Tensor<T>::make_result(std::move(out_shape), std::move(out), {a.node()},
                                [index = std::move(index)](detail::Node<T>& self) {
                                  auto& g = self.inputs[0]->ensure_grad();
                                  for (std::size_t j = 0; j < index.size(); ++j) g[index[j]] += self.grad[j];
                                });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  detail::require_rank(a, 2, "transpose");
  return permute(a, {1, 0});
}

/// Contiguous range [start, start+length) along one axis.
template <typename T>
Tensor<T> slice(const Tensor<T>& a, std::size_t axis, std::size_t start, std::size_t length) {
  if (axis >= a.rank()) throw ContractError("slice: axis out of range for " + shape_str(a.shape()));
  if (length == 0 || start + length > a.dim(axis)) {
    throw ShapeError("slice: range [" + std::to_string(start) + ", " + std::to_string(start + length) +
                     ") exceeds axis " + std::to_string(axis) + " of " + shape_str(a.shape()));
  }
  const auto s = detail::split_at(a.shape(), axis);
  Shape out_shape = a.shape();
  out_shape[axis] = length;
  const std::size_t block = length * s.inner;
  std::vector<T> out(s.outer * block);
  for (std::size_t o = 0; o < s.outer; ++o) {
    const T* src = a.data().data() + (o * s.axis + start) * s.inner;
    std::copy(src, src + block, out.begin() + static_cast<std::ptrdiff_t>(o * block));
  }
  return Tensor<T>::make_result(std::move(out_shape), std::move(out), {a.node()},
                                [s, start, block](detail::Node<T>& self) {
                                  auto& g = self.inputs[0]->ensure_grad();
                                  for (std::size_t o = 0; o < s.outer; ++o) {
                                    T* dst = g.data() + (o * s.axis + start) * s.inner;
                                    const T* src = self.grad.data() + o * block;
                                    for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
                                  }
                                });
}

/// Concatenates along one axis; all other dimensions must agree.
template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) throw ContractError("concat: axis out of range for " + shape_str(first));
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    Shape probe = p.shape();
    if (probe.size() != first.size()) throw ShapeError("concat: rank mismatch " + shape_str(probe) + " vs " + shape_str(first));
    for (std::size_t d = 0; d < probe.size(); ++d) {
      if (d != axis && probe[d] != first[d]) {
        throw ShapeError("concat: shapes " + shape_str(first) + " and " + shape_str(probe) + " disagree off-axis");
      }
    }
    out_shape[axis] += probe[axis];
  }
  const auto s = detail::split_at(out_shape, axis);
  std::vector<T> out(numel_of(out_shape));
  std::vector<std::size_t> offsets;
  std::vector<typename Tensor<T>::NodePtr> nodes;
  std::size_t at = 0;
  for (const auto& p : parts) {
    const std::size_t block = p.dim(axis) * s.inner;
    for (std::size_t o = 0; o < s.outer; ++o) {
      std::copy(p.data().begin() + static_cast<std::ptrdiff_t>(o * block),
                p.data().begin() + static_cast<std::ptrdiff_t>((o + 1) * block),
                out.begin() + static_cast<std::ptrdiff_t>((o * s.axis + at) * s.inner));
    }
    offsets.push_back(at);
    nodes.push_back(p.node());
    at += p.dim(axis);
  }
  return Tensor<T>::make_result(std::move(out_shape), std::move(out), std::move(nodes),
                                [s, offsets = std::move(offsets)](detail::Node<T>& self) {
                                  for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                                    auto& in = *self.inputs[k];
                                    if (!in.requires_grad) continue;
                                    auto& g = in.ensure_grad();
                                    const std::size_t block = g.size() / s.outer;
                                    for (std::size_t o = 0; o < s.outer; ++o) {
                                      const T* src = self.grad.data() + (o * s.axis + offsets[k]) * s.inner;
                                      for (std::size_t i = 0; i < block; ++i) g[o * block + i] += src[i];
                                    }
                                  }
                                });
}

// ---------------------------------------------------------------------------
// Reductions and normalization

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T total{0};
  for (T v : a.data()) total += v;
  return Tensor<T>::make_result({}, {total}, {a.node()}, [](detail::Node<T>& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (auto& v : g) v += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  return scale(sum(a), T{1} / static_cast<T>(a.numel()));
}

/// Softmax along `axis`, max-subtracted.
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis) {
  if (axis >= x.rank()) throw ContractError("softmax: axis " + std::to_string(axis) + " out of range for " + shape_str(x.shape()));
  const auto s = detail::split_at(x.shape(), axis);
  std::vector<T> out(x.numel());
  const T* in = x.data().data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      const std::size_t base = o * s.axis * s.inner + i;
      T mx = in[base];
      for (std::size_t a = 1; a < s.axis; ++a) mx = std::max(mx, in[base + a * s.inner]);
      T z{0};
      for (std::size_t a = 0; a < s.axis; ++a) {
        const T e = std::exp(in[base + a * s.inner] - mx);
        out[base + a * s.inner] = e;
        z += e;
      }
      for (std::size_t a = 0; a < s.axis; ++a) out[base + a * s.inner] /= z;
    }
  }
  return Tensor<T>::make_result(x.shape(), std::move(out), {x.node()}, [s](detail::Node<T>& self) {
    auto& g = self.inputs[0]->ensure_grad();
    const T* y = self.data.data();
    const T* dy = self.grad.data();
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        const std::size_t base = o * s.axis * s.inner + i;
        T dot{0};
        for (std::size_t a = 0; a < s.axis; ++a) dot += y[base + a * s.inner] * dy[base + a * s.inner];
        for (std::size_t a = 0; a < s.axis; ++a) {
          const std::size_t idx = base + a * s.inner;
          g[idx] += y[idx] * (dy[idx] - dot);
        }
      }
    }
  });
}

/// Layer norm over the last axis with affine gain and shift.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps = T{1e-5}) {
  if (x.rank() == 0) throw ShapeError("layer_norm: scalar input");
  const std::size_t cols = x.shape().back();
  if (gamma.numel() != cols || beta.numel() != cols) {
    throw ShapeError("layer_norm: gain/shift " + shape_str(gamma.shape()) + "/" + shape_str(beta.shape()) +
                     " do not match " + shape_str(x.shape()));
  }
  const std::size_t rows = x.numel() / cols;
  std::vector<T> out(x.numel());
  std::vector<T> xhat(x.numel());
  std::vector<T> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = x.data().data() + r * cols;
    T mu{0};
    for (std::size_t c = 0; c < cols; ++c) mu += row[c];
    mu /= static_cast<T>(cols);
    T var{0};
    for (std::size_t c = 0; c < cols; ++c) var += (row[c] - mu) * (row[c] - mu);
    var /= static_cast<T>(cols);
    inv_std[r] = T{1} / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c) {
      const T h = (row[c] - mu) * inv_std[r];
      xhat[r * cols + c] = h;
      out[r * cols + c] = h * gamma.data()[c] + beta.data()[c];
    }
  }
  return Tensor<T>::make_result(
      x.shape(), std::move(out), {x.node(), gamma.node(), beta.node()},
      [rows, cols, xhat = std::move(xhat), inv_std = std::move(inv_std)](detail::Node<T>& self) {
        auto& xn = *self.inputs[0];
        auto& gn = *self.inputs[1];
        auto& bn = *self.inputs[2];
        const T* dy = self.grad.data();
        if (gn.requires_grad) {
          auto& g = gn.ensure_grad();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) g[c] += dy[r * cols + c] * xhat[r * cols + c];
        }
        if (bn.requires_grad) {
          auto& g = bn.ensure_grad();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) g[c] += dy[r * cols + c];
        }
        if (xn.requires_grad) {
          auto& g = xn.ensure_grad();
          const T n = static_cast<T>(cols);
          for (std::size_t r = 0; r < rows; ++r) {
            T mean_d{0}, mean_dx{0};
            for (std::size_t c = 0; c < cols; ++c) {
              const T d = dy[r * cols + c] * gn.data[c];
              mean_d += d;
              mean_dx += d * xhat[r * cols + c];
            }
            mean_d /= n;
            mean_dx /= n;
            for (std::size_t c = 0; c < cols; ++c) {
              const T d = dy[r * cols + c] * gn.data[c];
              g[r * cols + c] += inv_std[r] * (d - mean_d - xhat[r * cols + c] * mean_dx);
            }
          }
        }
      });
}

/// Row lookup: out[i] = table[ids[i]].
template <typename T>
Tensor<T> embedding(const Tensor<T>& table, const std::vector<std::size_t>& ids) {
  detail::require_rank(table, 2, "embedding");
  if (ids.empty()) throw ContractError("embedding: empty id list");
  const std::size_t rows = table.dim(0), cols = table.dim(1);
  std::vector<T> out(ids.size() * cols);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= rows) {
      throw ContractError("embedding: id " + std::to_string(ids[i]) + " out of range for table of " +
                          std::to_string(rows) + " rows");
    }
    std::copy_n(table.data().begin() + static_cast<std::ptrdiff_t>(ids[i] * cols), cols,
                out.begin() + static_cast<std::ptrdiff_t>(i * cols));
  }
  return Tensor<T>::make_result({ids.size(), cols}, std::move(out), {table.node()},
                                [ids, cols](detail::Node<T>& self) {
                                  auto& g = self.inputs[0]->ensure_grad();
                                  for (std::size_t i = 0; i < ids.size(); ++i)
                                    for (std::size_t c = 0; c < cols; ++c) g[ids[i] * cols + c] += self.grad[i * cols + c];
                                });
}

/// Value copy into another precision, no graph history.
template <typename U, typename T>
Tensor<U> cast(const Tensor<T>& a, bool requires_grad = false) {
  std::vector<U> out(a.numel());
  std::transform(a.data().begin(), a.data().end(), out.begin(), [](T v) { return static_cast<U>(v); });
  return Tensor<U>::from(a.shape(), std::move(out), requires_grad);
}

/// Mean squared error over all elements.
template <typename T>
Tensor<T> mse(const Tensor<T>& prediction, const Tensor<T>& target) {
  const auto diff = sub(prediction, target);
  return mean(mul(diff, diff));
}

}  // namespace lcumini

#endif  // LCUMINI_TENSOR_HPP
