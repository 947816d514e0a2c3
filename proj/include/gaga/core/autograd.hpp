#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "gaga/core/tensor.hpp"

namespace gaga {

namespace detail {
inline std::atomic<int64_t>& node_sequence() {
  static std::atomic<int64_t> seq{0};
  return seq;
}
inline bool& grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}
}  // namespace detail

// RAII guard that disables graph construction (inference mode).
struct NoGradGuard {
  NoGradGuard() : prev_(detail::grad_mode()) { detail::grad_mode() = false; }
  ~NoGradGuard() { detail::grad_mode() = prev_; }

 private:
  bool prev_;
};

inline bool grad_enabled() { return detail::grad_mode(); }

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // allocated lazily, same shape as value
  bool requires_grad = false;
  int64_t seq = 0;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;  // pushes grad into parents

  Tensor<T>& ensure_grad() {
    if (!grad.same_shape(value)) grad = Tensor<T>(value.dims());
    return grad;
  }
  void zero_grad() {
    if (grad.same_shape(value)) grad.fill(T(0));
  }
};

template <typename T>
using Var = std::shared_ptr<Node<T>>;

template <typename T>
Var<T> make_var(Tensor<T> value, bool requires_grad = false) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  n->seq = detail::node_sequence().fetch_add(1, std::memory_order_relaxed);
  return n;
}

// Constant (never receives gradient).
template <typename T>
Var<T> make_const(Tensor<T> value) {
  return make_var<T>(std::move(value), false);
}

template <typename T>
Var<T> make_result(Tensor<T> value, std::vector<Var<T>> parents,
                   std::function<void(Node<T>&)> backprop) {
  bool needs = false;
  if (grad_enabled()) {
    for (const auto& p : parents)
      if (p && p->requires_grad) {
        needs = true;
        break;
      }
  }
  auto n = make_var<T>(std::move(value), needs);
  if (needs) {
    n->parents = std::move(parents);
    n->backprop = std::move(backprop);
  }
  return n;
}

template <typename T>
Var<T> detach(const Var<T>& v) {
  return make_const<T>(v->value);
}

// Reverse-mode sweep from a scalar (or any) root. Gradients accumulate
// into every reachable node with requires_grad; leaves keep theirs until
// the caller zeroes them.
template <typename T>
void backward(const Var<T>& root) {
  if (!root->requires_grad && !root->backprop) {
    // still seed leaf roots so callers can read a gradient of ones
  }
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<Node<T>*> stack{root.get()};
  seen.insert(root.get());
  while (!stack.empty()) {
    Node<T>* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (auto& p : n->parents) {
      if (p && p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
    }
  }
  std::sort(order.begin(), order.end(),
            [](const Node<T>* a, const Node<T>* b) { return a->seq > b->seq; });
  auto& g = root->ensure_grad();
  g.fill(T(1));
  for (Node<T>* n : order) {
    if (n->backprop && n->grad.same_shape(n->value)) n->backprop(*n);
  }
}

}  // namespace gaga
