// Copyright 2026 The slicegate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major tensors with a define-by-run reverse-mode tape.
//
// A Tensor is a shared handle onto a Node. Ops create a new Node that keeps
// its parents alive together with a closure that pushes the node's gradient
// back into them. Leaves created with requires_grad are parameters; their
// gradient buffers accumulate until zero_grad() is called.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace slicegate::numerics {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised whenever a forward value or a gradient stops being finite.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until something is accumulated
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  std::vector<T>& ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), T(0));
    return grad;
  }
};

/// True unless a NoGradGuard is alive on this thread.
bool grad_enabled();

/// Disables tape recording for its lifetime (evaluation passes).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <typename T>
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor scalar(T value);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const;

  std::span<const T> values() const&;
  /// On a temporary the span would dangle, so a copy is returned instead.
  std::vector<T> values() const&&;
  std::span<T> mutable_values();
  T item() const;

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const T> grad() const;
  std::span<T> mutable_grad();
  /// Resets the gradient buffer to zeros (allocating it if needed).
  void zero_grad();

  /// Reverse pass from a single-element tensor. Throws NumericError if any
  /// gradient on the tape becomes non-finite.
  void backward() const;

  /// Value copy that is cut from the tape.
  Tensor detach() const;

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(size());
    auto v = values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<U>(v[i]);
    return Tensor<U>(shape(), std::move(out));
  }

  const std::shared_ptr<Node<T>>& node() const { return node_; }
  bool same_node(const Tensor& other) const { return node_ == other.node_; }

  static Tensor wrap(std::shared_ptr<Node<T>> node) {
    Tensor t;
    t.node_ = std::move(node);
    return t;
  }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Builds the result node of an op. Values are checked for finiteness; the
/// tape entry is only recorded when grad mode is on and a parent needs it.
template <typename T>
Tensor<T> make_result(const char* op, Shape shape, std::vector<T> values,
                      std::vector<Tensor<T>> parents,
                      std::function<void(Node<T>&)> backward_fn);

void require_finite(std::span<const float> values, const char* what);
void require_finite(std::span<const double> values, const char* what);

}  // namespace slicegate::numerics
