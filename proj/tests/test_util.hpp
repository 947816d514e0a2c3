#pragma once

#include <functional>
#include <vector>

#include "gaga/core/autograd.hpp"
#include "gaga/core/rng.hpp"

namespace gaga::testutil {

// Central-difference gradient check. `loss_fn` rebuilds the scalar loss
// from the current leaf values; leaves must have requires_grad set.
// Returns the worst relative error across all leaf elements.
inline double max_rel_grad_error(const std::vector<Var<double>>& leaves,
                                 const std::function<Var<double>()>& loss_fn,
                                 double h = 1e-5) {
  for (auto& l : leaves) l->grad = Tensor<double>();
  Var<double> loss = loss_fn();
  backward(loss);
  std::vector<Tensor<double>> analytic;
  analytic.reserve(leaves.size());
  for (auto& l : leaves) {
    analytic.push_back(l->grad.same_shape(l->value) ? l->grad : Tensor<double>(l->value.dims()));
  }
  double worst = 0.0;
  for (size_t li = 0; li < leaves.size(); ++li) {
    auto& t = leaves[li]->value;
    for (int64_t i = 0; i < t.numel(); ++i) {
      double saved = t[i];
      t[i] = saved + h;
      double fp = loss_fn()->value[0];
      t[i] = saved - h;
      double fm = loss_fn()->value[0];
      t[i] = saved;
      double fd = (fp - fm) / (2 * h);
      double ad = analytic[li][i];
      double denom = std::max({1e-6, std::abs(fd), std::abs(ad)});
      worst = std::max(worst, std::abs(fd - ad) / denom);
    }
  }
  return worst;
}

inline Tensor<double> random_tensor(std::vector<int64_t> dims, uint64_t seed, double scale = 1.0) {
  Tensor<double> t(std::move(dims));
  Rng rng(seed);
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = scale * rng.normal();
  return t;
}

}  // namespace gaga::testutil
