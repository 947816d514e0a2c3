#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

#include "gaga/core/autograd.hpp"

// Differentiable tensor operations. Each op returns a new Var whose
// backprop closure scatters the adjoint into its parents. Shapes are
// validated eagerly; mismatches are contract errors.
namespace gaga::ops {

template <typename T>
using EMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using EMap = Eigen::Map<EMat<T>>;
template <typename T>
using ECMap = Eigen::Map<const EMat<T>>;

template <typename T>
void check_same_shape(const Var<T>& a, const Var<T>& b, const char* what) {
  if (!a->value.same_shape(b->value))
    throw std::invalid_argument(std::string(what) + ": shape mismatch " +
                                a->value.shape_string() + " vs " + b->value.shape_string());
}

// ---- elementwise binary ----

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  check_same_shape(a, b, "add");
  Tensor<T> out(a->value.dims());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] + b->value[i];
  return make_result<T>(std::move(out), {a, b}, [](Node<T>& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
    }
  });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  check_same_shape(a, b, "sub");
  Tensor<T> out(a->value.dims());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] - b->value[i];
  return make_result<T>(std::move(out), {a, b}, [](Node<T>& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      for (int64_t i = 0; i < g.numel(); ++i) g[i] -= n.grad[i];
    }
  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  check_same_shape(a, b, "mul");
  Tensor<T> out(a->value.dims());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] * b->value[i];
  return make_result<T>(std::move(out), {a, b}, [](Node<T>& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * pa.value[i];
    }
  });
}

// ---- scalar ops ----

template <typename T>
Var<T> mul_scalar(const Var<T>& a, T s) {
  Tensor<T> out(a->value.dims());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] * s;
  return make_result<T>(std::move(out), {a}, [s](Node<T>& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    auto& g = pa.ensure_grad();
    for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * s;
  });
}

template <typename T>
Var<T> add_scalar(const Var<T>& a, T s) {
  Tensor<T> out(a->value.dims());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] + s;
  return make_result<T>(std::move(out), {a}, [](Node<T>& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    auto& g = pa.ensure_grad();
    for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
  });
}

template <typename T>
Var<T> neg(const Var<T>& a) {
  return mul_scalar(a, T(-1));
}

// ---- unary ----

template <typename T>
Var<T> relu(const Var<T>& a) {
  Tensor<T> out(a->value.dims());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] > T(0) ? a->value[i] : T(0);
  return make_result<T>(std::move(out), {a}, [](Node<T>& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    auto& g = pa.ensure_grad();
    for (int64_t i = 0; i < g.numel(); ++i)
      if (pa.value[i] > T(0)) g[i] += n.grad[i];
  });
}

template <typename T>
Var<T> leaky_relu(const Var<T>& a, T alpha = T(0.2)) {
  Tensor<T> out(a->value.dims());
  for (int64_t i = 0; i < out.numel(); ++i)
    out[i] = a->value[i] > T(0) ? a->value[i] : alpha * a->value[i];
  return make_result<T>(std::move(out), {a}, [alpha](Node<T>& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    auto& g = pa.ensure_grad();
    for (int64_t i = 0; i < g.numel(); ++i)
      g[i] += n.grad[i] * (pa.value[i] > T(0) ? T(1) : alpha);
  });
}

template <typename T>
Var<T> sigmoid(const Var<T>& a) {
  Tensor<T> out(a->value.dims());
  for (int64_t i = 0; i < out.numel(); ++i) {
    T x = a->value[i];
    out[i] = x >= T(0) ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
  }
  return make_result<T>(std::move(out), {a}, [](Node<T>& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    auto& g = pa.ensure_grad();
    for (int64_t i = 0; i < g.numel(); ++i) {
      T y = n.value[i];
      g[i] += n.grad[i] * y * (T(1) - y);
    }
  });
}

template <typename T>
Var<T> tanh_op(const Var<T>& a) {
  Tensor<T> out(a->value.dims());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(a->value[i]);
  return make_result<T>(std::move(out), {a}, [](Node<T>& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    auto& g = pa.ensure_grad();
    for (int64_t i = 0; i < g.numel(); ++i) {
      T y = n.value[i];
      g[i] += n.grad[i] * (T(1) - y * y);
    }
  });
}

template <typename T>
Var<T> exp_op(const Var<T>& a) {
  Tensor<T> out(a->value.dims());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::exp(a->value[i]);
  return make_result<T>(std::move(out), {a}, [](Node<T>& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    auto& g = pa.ensure_grad();
    for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * n.value[i];
  });
}

template <typename T>
Var<T> square(const Var<T>& a) {
  Tensor<T> out(a->value.dims());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a->value[i] * a->value[i];
  return make_result<T>(std::move(out), {a}, [](Node<T>& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    auto& g = pa.ensure_grad();
    for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i] * T(2) * pa.value[i];
  });
}

template <typename T>
Var<T> abs_op(const Var<T>& a) {
  Tensor<T> out(a->value.dims());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::abs(a->value[i]);
  return make_result<T>(std::move(out), {a}, [](Node<T>& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    auto& g = pa.ensure_grad();
    for (int64_t i = 0; i < g.numel(); ++i) {
      T x = pa.value[i];
      if (x > T(0))
        g[i] += n.grad[i];
      else if (x < T(0))
        g[i] -= n.grad[i];
    }
  });
}

// Hard clamp; gradient passes only strictly inside the interval.
template <typename T>
Var<T> clamp(const Var<T>& a, T lo, T hi) {
  Tensor<T> out(a->value.dims());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::min(hi, std::max(lo, a->value[i]));
  return make_result<T>(std::move(out), {a}, [lo, hi](Node<T>& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    auto& g = pa.ensure_grad();
    for (int64_t i = 0; i < g.numel(); ++i) {
      T x = pa.value[i];
      if (x > lo && x < hi) g[i] += n.grad[i];
    }
  });
}

// ---- reductions ----

template <typename T>
Var<T> sum_all(const Var<T>& a) {
  T s = T(0);
  for (int64_t i = 0; i < a->value.numel(); ++i) s += a->value[i];
  return make_result<T>(Tensor<T>::scalar(s), {a}, [](Node<T>& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    auto& g = pa.ensure_grad();
    T go = n.grad[0];
    for (int64_t i = 0; i < g.numel(); ++i) g[i] += go;
  });
}

template <typename T>
Var<T> mean_all(const Var<T>& a) {
  T s = T(0);
  int64_t m = a->value.numel();
  for (int64_t i = 0; i < m; ++i) s += a->value[i];
  return make_result<T>(Tensor<T>::scalar(s / T(m)), {a}, [m](Node<T>& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    auto& g = pa.ensure_grad();
    T go = n.grad[0] / T(m);
    for (int64_t i = 0; i < g.numel(); ++i) g[i] += go;
  });
}

// (N,D) -> (N): sum over the last axis
template <typename T>
Var<T> sum_cols(const Var<T>& a) {
  int64_t n_rows = a->value.dim(0), d = a->value.dim(1);
  Tensor<T> out({n_rows});
  for (int64_t r = 0; r < n_rows; ++r) {
    T s = T(0);
    for (int64_t c = 0; c < d; ++c) s += a->value[r * d + c];
    out[r] = s;
  }
  return make_result<T>(std::move(out), {a}, [d](Node<T>& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    auto& g = pa.ensure_grad();
    int64_t rows = n.value.numel();
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t c = 0; c < d; ++c) g[r * d + c] += n.grad[r];
  });
}

// (N,C,H,W) -> (N,C): sum over spatial positions
template <typename T>
Var<T> spatial_sum(const Var<T>& a) {
  int64_t n = a->value.dim(0), c = a->value.dim(1), hw = a->value.dim(2) * a->value.dim(3);
  Tensor<T> out({n, c});
  const T* src = a->value.data();
  for (int64_t i = 0; i < n * c; ++i) {
    T s = T(0);
    for (int64_t p = 0; p < hw; ++p) s += src[i * hw + p];
    out[i] = s;
  }
  return make_result<T>(std::move(out), {a}, [hw](Node<T>& n_) {
    auto& pa = *n_.parents[0];
    if (!pa.requires_grad) return;
    auto& g = pa.ensure_grad();
    int64_t nc = n_.value.numel();
    for (int64_t i = 0; i < nc; ++i)
      for (int64_t p = 0; p < hw; ++p) g[i * hw + p] += n_.grad[i];
  });
}

template <typename T>
Var<T> spatial_mean(const Var<T>& a) {
  int64_t hw = a->value.dim(2) * a->value.dim(3);
  return mul_scalar(spatial_sum(a), T(1) / T(hw));
}

// ---- shape ----

template <typename T>
Var<T> reshape(const Var<T>& a, std::vector<int64_t> dims) {
  Tensor<T> out = a->value.reshaped(dims);
  return make_result<T>(std::move(out), {a}, [](Node<T>& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    auto& g = pa.ensure_grad();
    for (int64_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
  });
}

template <typename T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b) {
  const auto& da = a->value.dims();
  const auto& db = b->value.dims();
  if (da.size() != 4 || db.size() != 4 || da[0] != db[0] || da[2] != db[2] || da[3] != db[3])
    throw std::invalid_argument("concat_channels: incompatible shapes");
  int64_t n = da[0], ca = da[1], cb = db[1], h = da[2], w = da[3], hw = h * w;
  Tensor<T> out({n, ca + cb, h, w});
  for (int64_t i = 0; i < n; ++i) {
    std::copy_n(a->value.data() + i * ca * hw, ca * hw, out.data() + i * (ca + cb) * hw);
    std::copy_n(b->value.data() + i * cb * hw, cb * hw, out.data() + (i * (ca + cb) + ca) * hw);
  }
  return make_result<T>(std::move(out), {a, b}, [ca, cb, hw](Node<T>& n_) {
    int64_t n = n_.value.dim(0);
    auto& pa = *n_.parents[0];
    auto& pb = *n_.parents[1];
    for (int64_t i = 0; i < n; ++i) {
      if (pa.requires_grad) {
        auto& g = pa.ensure_grad();
        const T* src = n_.grad.data() + i * (ca + cb) * hw;
        T* dst = g.data() + i * ca * hw;
        for (int64_t j = 0; j < ca * hw; ++j) dst[j] += src[j];
      }
      if (pb.requires_grad) {
        auto& g = pb.ensure_grad();
        const T* src = n_.grad.data() + (i * (ca + cb) + ca) * hw;
        T* dst = g.data() + i * cb * hw;
        for (int64_t j = 0; j < cb * hw; ++j) dst[j] += src[j];
      }
    }
  });
}

// (N,C) -> (N,C,H,W); every spatial position carries the code
template <typename T>
Var<T> broadcast_spatial(const Var<T>& a, int64_t h, int64_t w) {
  int64_t n = a->value.dim(0), c = a->value.dim(1), hw = h * w;
  Tensor<T> out({n, c, h, w});
  for (int64_t i = 0; i < n * c; ++i)
    for (int64_t p = 0; p < hw; ++p) out[i * hw + p] = a->value[i];
  return make_result<T>(std::move(out), {a}, [hw](Node<T>& n_) {
    auto& pa = *n_.parents[0];
    if (!pa.requires_grad) return;
    auto& g = pa.ensure_grad();
    for (int64_t i = 0; i < g.numel(); ++i) {
      T s = T(0);
      for (int64_t p = 0; p < hw; ++p) s += n_.grad[i * hw + p];
      g[i] += s;
    }
  });
}

// ---- broadcast arithmetic used by heatmap machinery ----

// out[n,k,h,w] = grid[h,w] - code[n,k]
template <typename T>
Var<T> grid_sub_code(const Tensor<T>& grid, const Var<T>& code, int64_t h, int64_t w) {
  int64_t n = code->value.dim(0), k = code->value.dim(1), hw = h * w;
  Tensor<T> out({n, k, h, w});
  for (int64_t i = 0; i < n * k; ++i)
    for (int64_t p = 0; p < hw; ++p) out[i * hw + p] = grid[p] - code->value[i];
  return make_result<T>(std::move(out), {code}, [hw](Node<T>& n_) {
    auto& pc = *n_.parents[0];
    if (!pc.requires_grad) return;
    auto& g = pc.ensure_grad();
    for (int64_t i = 0; i < g.numel(); ++i) {
      T s = T(0);
      for (int64_t p = 0; p < hw; ++p) s += n_.grad[i * hw + p];
      g[i] -= s;
    }
  });
}

// out[n,k,h,w] = x[n,k,h,w] / s[n,k]
template <typename T>
Var<T> div_spatial(const Var<T>& x, const Var<T>& s) {
  int64_t n = x->value.dim(0), k = x->value.dim(1), hw = x->value.dim(2) * x->value.dim(3);
  if (s->value.dim(0) != n || s->value.dim(1) != k)
    throw std::invalid_argument("div_spatial: denominator shape mismatch");
  Tensor<T> out(x->value.dims());
  for (int64_t i = 0; i < n * k; ++i) {
    T inv = T(1) / s->value[i];
    for (int64_t p = 0; p < hw; ++p) out[i * hw + p] = x->value[i * hw + p] * inv;
  }
  return make_result<T>(std::move(out), {x, s}, [hw](Node<T>& n_) {
    auto& px = *n_.parents[0];
    auto& ps = *n_.parents[1];
    int64_t nk = ps.value.numel();
    for (int64_t i = 0; i < nk; ++i) {
      T inv = T(1) / ps.value[i];
      if (px.requires_grad) {
        auto& g = px.ensure_grad();
        for (int64_t p = 0; p < hw; ++p) g[i * hw + p] += n_.grad[i * hw + p] * inv;
      }
      if (ps.requires_grad) {
        auto& g = ps.ensure_grad();
        T s = T(0);
        for (int64_t p = 0; p < hw; ++p) s += n_.grad[i * hw + p] * n_.value[i * hw + p];
        g[i] -= s * inv;
      }
    }
  });
}

// out[n,k] = sum_p x[n,k,p] * grid[p]  (linear functional of the map)
template <typename T>
Var<T> weighted_spatial_sum(const Var<T>& x, const Tensor<T>& grid) {
  int64_t n = x->value.dim(0), k = x->value.dim(1), hw = x->value.dim(2) * x->value.dim(3);
  if (grid.numel() != hw) throw std::invalid_argument("weighted_spatial_sum: grid size mismatch");
  Tensor<T> out({n, k});
  for (int64_t i = 0; i < n * k; ++i) {
    T s = T(0);
    for (int64_t p = 0; p < hw; ++p) s += x->value[i * hw + p] * grid[p];
    out[i] = s;
  }
  Tensor<T> grid_copy = grid;
  return make_result<T>(std::move(out), {x}, [hw, grid_copy](Node<T>& n_) {
    auto& px = *n_.parents[0];
    if (!px.requires_grad) return;
    auto& g = px.ensure_grad();
    int64_t nk = n_.value.numel();
    for (int64_t i = 0; i < nk; ++i)
      for (int64_t p = 0; p < hw; ++p) g[i * hw + p] += n_.grad[i] * grid_copy[p];
  });
}

// ---- spatial softmax over H*W per channel ----

template <typename T>
Var<T> spatial_softmax(const Var<T>& x) {
  int64_t n = x->value.dim(0), k = x->value.dim(1), hw = x->value.dim(2) * x->value.dim(3);
  Tensor<T> out(x->value.dims());
  for (int64_t i = 0; i < n * k; ++i) {
    const T* src = x->value.data() + i * hw;
    T* dst = out.data() + i * hw;
    T mx = src[0];
    for (int64_t p = 1; p < hw; ++p) mx = std::max(mx, src[p]);
    T sum = T(0);
    for (int64_t p = 0; p < hw; ++p) {
      dst[p] = std::exp(src[p] - mx);
      sum += dst[p];
    }
    T inv = T(1) / sum;
    for (int64_t p = 0; p < hw; ++p) dst[p] *= inv;
  }
  return make_result<T>(std::move(out), {x}, [hw](Node<T>& n_) {
    auto& px = *n_.parents[0];
    if (!px.requires_grad) return;
    auto& g = px.ensure_grad();
    int64_t nk = n_.value.numel() / hw;
    for (int64_t i = 0; i < nk; ++i) {
      const T* y = n_.value.data() + i * hw;
      const T* dy = n_.grad.data() + i * hw;
      T dot = T(0);
      for (int64_t p = 0; p < hw; ++p) dot += y[p] * dy[p];
      T* dst = g.data() + i * hw;
      for (int64_t p = 0; p < hw; ++p) dst[p] += y[p] * (dy[p] - dot);
    }
  });
}

// ---- linear layer ----

// x:(N,Din), w:(Dout,Din), b:(Dout) -> (N,Dout)
template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  int64_t n = x->value.dim(0), din = x->value.dim(1);
  int64_t dout = w->value.dim(0);
  if (w->value.dim(1) != din) throw std::invalid_argument("linear: weight shape mismatch");
  Tensor<T> out({n, dout});
  ECMap<T> xm(x->value.data(), n, din);
  ECMap<T> wm(w->value.data(), dout, din);
  EMap<T> om(out.data(), n, dout);
  om.noalias() = xm * wm.transpose();
  if (b) {
    if (b->value.numel() != dout) throw std::invalid_argument("linear: bias shape mismatch");
    for (int64_t r = 0; r < n; ++r)
      for (int64_t c = 0; c < dout; ++c) out[r * dout + c] += b->value[c];
  }
  std::vector<Var<T>> parents = b ? std::vector<Var<T>>{x, w, b} : std::vector<Var<T>>{x, w};
  return make_result<T>(std::move(out), std::move(parents), [n, din, dout](Node<T>& n_) {
    auto& px = *n_.parents[0];
    auto& pw = *n_.parents[1];
    ECMap<T> dy(n_.grad.data(), n, dout);
    if (px.requires_grad) {
      auto& g = px.ensure_grad();
      EMap<T> gx(g.data(), n, din);
      ECMap<T> wm(pw.value.data(), dout, din);
      gx.noalias() += dy * wm;
    }
    if (pw.requires_grad) {
      auto& g = pw.ensure_grad();
      EMap<T> gw(g.data(), dout, din);
      ECMap<T> xm(px.value.data(), n, din);
      gw.noalias() += dy.transpose() * xm;
    }
    if (n_.parents.size() > 2 && n_.parents[2]->requires_grad) {
      auto& g = n_.parents[2]->ensure_grad();
      for (int64_t r = 0; r < n; ++r)
        for (int64_t c = 0; c < dout; ++c) g[c] += n_.grad[r * dout + c];
    }
  });
}

// ---- Gram matrix: (N,C,H,W) -> (N,C,C), normalized by C*H*W ----

template <typename T>
Var<T> gram(const Var<T>& f) {
  int64_t n = f->value.dim(0), c = f->value.dim(1), hw = f->value.dim(2) * f->value.dim(3);
  T norm = T(1) / (T(c) * T(hw));
  Tensor<T> out({n, c, c});
  for (int64_t i = 0; i < n; ++i) {
    ECMap<T> fm(f->value.data() + i * c * hw, c, hw);
    EMap<T> gm(out.data() + i * c * c, c, c);
    gm.noalias() = fm * fm.transpose() * norm;
  }
  return make_result<T>(std::move(out), {f}, [c, hw, norm](Node<T>& n_) {
    auto& pf = *n_.parents[0];
    if (!pf.requires_grad) return;
    auto& g = pf.ensure_grad();
    int64_t n = n_.value.dim(0);
    for (int64_t i = 0; i < n; ++i) {
      ECMap<T> dg(n_.grad.data() + i * c * c, c, c);
      ECMap<T> fm(pf.value.data() + i * c * hw, c, hw);
      EMap<T> gf(g.data() + i * c * hw, c, hw);
      gf.noalias() += (dg + dg.transpose()) * fm * norm;
    }
  });
}

}  // namespace gaga::ops
