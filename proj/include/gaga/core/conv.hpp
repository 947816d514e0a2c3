#pragma once

#include <vector>

#include "gaga/core/ops.hpp"

namespace gaga::ops {

namespace conv_detail {

// im2col for one sample: out is (Cin*kh*kw) x (Ho*Wo), row-major.
template <typename T>
void im2col(const T* x, int64_t cin, int64_t h, int64_t w, int64_t kh, int64_t kw,
            int64_t stride, int64_t pad, int64_t ho, int64_t wo, T* out) {
  for (int64_t c = 0; c < cin; ++c) {
    for (int64_t ki = 0; ki < kh; ++ki) {
      for (int64_t kj = 0; kj < kw; ++kj) {
        T* row = out + ((c * kh + ki) * kw + kj) * ho * wo;
        for (int64_t oi = 0; oi < ho; ++oi) {
          int64_t ii = oi * stride - pad + ki;
          if (ii < 0 || ii >= h) {
            std::fill_n(row + oi * wo, wo, T(0));
            continue;
          }
          const T* src = x + (c * h + ii) * w;
          for (int64_t oj = 0; oj < wo; ++oj) {
            int64_t jj = oj * stride - pad + kj;
            row[oi * wo + oj] = (jj >= 0 && jj < w) ? src[jj] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* cols, int64_t cin, int64_t h, int64_t w, int64_t kh, int64_t kw,
                int64_t stride, int64_t pad, int64_t ho, int64_t wo, T* x) {
  for (int64_t c = 0; c < cin; ++c) {
    for (int64_t ki = 0; ki < kh; ++ki) {
      for (int64_t kj = 0; kj < kw; ++kj) {
        const T* row = cols + ((c * kh + ki) * kw + kj) * ho * wo;
        for (int64_t oi = 0; oi < ho; ++oi) {
          int64_t ii = oi * stride - pad + ki;
          if (ii < 0 || ii >= h) continue;
          T* dst = x + (c * h + ii) * w;
          for (int64_t oj = 0; oj < wo; ++oj) {
            int64_t jj = oj * stride - pad + kj;
            if (jj >= 0 && jj < w) dst[jj] += row[oi * wo + oj];
          }
        }
      }
    }
  }
}

template <typename T>
std::vector<T>& scratch() {
  thread_local std::vector<T> buf;
  return buf;
}

}  // namespace conv_detail

// 2-D convolution, NCHW. w:(Cout,Cin,kh,kw), optional bias (Cout).
// The im2col buffer is recomputed in the backward pass to keep graph
// memory proportional to activations only.
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int64_t stride = 1,
              int64_t pad = 1) {
  const auto& xd = x->value.dims();
  const auto& wd = w->value.dims();
  if (xd.size() != 4 || wd.size() != 4) throw std::invalid_argument("conv2d: rank must be 4");
  int64_t n = xd[0], cin = xd[1], h = xd[2], ww = xd[3];
  int64_t cout = wd[0], kh = wd[2], kw = wd[3];
  if (wd[1] != cin)
    throw std::invalid_argument("conv2d: input channels " + std::to_string(cin) +
                                " do not match kernel " + std::to_string(wd[1]));
  int64_t ho = (h + 2 * pad - kh) / stride + 1;
  int64_t wo = (ww + 2 * pad - kw) / stride + 1;
  int64_t krows = cin * kh * kw;

  Tensor<T> out({n, cout, ho, wo});
  auto& cols = conv_detail::scratch<T>();
  cols.resize(static_cast<size_t>(krows * ho * wo));
  ECMap<T> wm(w->value.data(), cout, krows);
  for (int64_t i = 0; i < n; ++i) {
    conv_detail::im2col(x->value.data() + i * cin * h * ww, cin, h, ww, kh, kw, stride, pad, ho,
                        wo, cols.data());
    ECMap<T> cm(cols.data(), krows, ho * wo);
    EMap<T> om(out.data() + i * cout * ho * wo, cout, ho * wo);
    om.noalias() = wm * cm;
  }
  if (b) {
    for (int64_t i = 0; i < n; ++i)
      for (int64_t c = 0; c < cout; ++c) {
        T* dst = out.data() + (i * cout + c) * ho * wo;
        T bv = b->value[c];
        for (int64_t p = 0; p < ho * wo; ++p) dst[p] += bv;
      }
  }

  std::vector<Var<T>> parents = b ? std::vector<Var<T>>{x, w, b} : std::vector<Var<T>>{x, w};
  auto backprop = [n, cin, h, ww, cout, kh, kw, stride, pad, ho, wo, krows](Node<T>& n_) {
    auto& px = *n_.parents[0];
    auto& pw = *n_.parents[1];
    auto& cols = conv_detail::scratch<T>();
    cols.resize(static_cast<size_t>(krows * ho * wo));
    for (int64_t i = 0; i < n; ++i) {
      ECMap<T> dy(n_.grad.data() + i * cout * ho * wo, cout, ho * wo);
      if (pw.requires_grad) {
        conv_detail::im2col(px.value.data() + i * cin * h * ww, cin, h, ww, kh, kw, stride, pad,
                            ho, wo, cols.data());
        ECMap<T> cm(cols.data(), krows, ho * wo);
        EMap<T> gw(pw.ensure_grad().data(), cout, krows);
        gw.noalias() += dy * cm.transpose();
      }
      if (px.requires_grad) {
        EMap<T> cm(cols.data(), krows, ho * wo);
        ECMap<T> wm(pw.value.data(), cout, krows);
        cm.noalias() = wm.transpose() * dy;
        conv_detail::col2im_add(cols.data(), cin, h, ww, kh, kw, stride, pad, ho, wo,
                                px.ensure_grad().data() + i * cin * h * ww);
      }
    }
    if (n_.parents.size() > 2 && n_.parents[2]->requires_grad) {
      auto& g = n_.parents[2]->ensure_grad();
      for (int64_t i = 0; i < n; ++i)
        for (int64_t c = 0; c < cout; ++c) {
          const T* src = n_.grad.data() + (i * cout + c) * ho * wo;
          T s = T(0);
          for (int64_t p = 0; p < ho * wo; ++p) s += src[p];
          g[c] += s;
        }
    }
  };
  return make_result<T>(std::move(out), std::move(parents), std::move(backprop));
}

// Bilinear resize with corner alignment, so the [-1,1] coordinate frame
// of soft-argmax is preserved across scales.
template <typename T>
Var<T> resize_bilinear(const Var<T>& x, int64_t ho, int64_t wo) {
  int64_t n = x->value.dim(0), c = x->value.dim(1), h = x->value.dim(2), w = x->value.dim(3);
  if (h == ho && w == wo) return x;
  struct Lerp {
    int64_t i0, i1;
    T w0, w1;
  };
  auto table = [](int64_t in, int64_t out) {
    std::vector<Lerp> t(static_cast<size_t>(out));
    for (int64_t o = 0; o < out; ++o) {
      double pos = (out == 1) ? 0.0 : static_cast<double>(o) * (in - 1) / (out - 1);
      int64_t i0 = static_cast<int64_t>(pos);
      if (i0 >= in - 1) i0 = in - 2 >= 0 ? in - 2 : 0;
      double f = pos - static_cast<double>(i0);
      t[static_cast<size_t>(o)] = {i0, std::min(i0 + 1, in - 1), T(1.0 - f), T(f)};
    }
    return t;
  };
  auto ti = table(h, ho);
  auto tj = table(w, wo);
  Tensor<T> out({n, c, ho, wo});
  for (int64_t i = 0; i < n * c; ++i) {
    const T* src = x->value.data() + i * h * w;
    T* dst = out.data() + i * ho * wo;
    for (int64_t oi = 0; oi < ho; ++oi) {
      const auto& ri = ti[static_cast<size_t>(oi)];
      for (int64_t oj = 0; oj < wo; ++oj) {
        const auto& rj = tj[static_cast<size_t>(oj)];
        dst[oi * wo + oj] = ri.w0 * (rj.w0 * src[ri.i0 * w + rj.i0] + rj.w1 * src[ri.i0 * w + rj.i1]) +
                            ri.w1 * (rj.w0 * src[ri.i1 * w + rj.i0] + rj.w1 * src[ri.i1 * w + rj.i1]);
      }
    }
  }
  return make_result<T>(std::move(out), {x}, [ti, tj, h, w, ho, wo](Node<T>& n_) {
    auto& px = *n_.parents[0];
    if (!px.requires_grad) return;
    auto& g = px.ensure_grad();
    int64_t nc = n_.value.dim(0) * n_.value.dim(1);
    for (int64_t i = 0; i < nc; ++i) {
      T* dst = g.data() + i * h * w;
      const T* dy = n_.grad.data() + i * ho * wo;
      for (int64_t oi = 0; oi < ho; ++oi) {
        const auto& ri = ti[static_cast<size_t>(oi)];
        for (int64_t oj = 0; oj < wo; ++oj) {
          const auto& rj = tj[static_cast<size_t>(oj)];
          T d = dy[oi * wo + oj];
          dst[ri.i0 * w + rj.i0] += ri.w0 * rj.w0 * d;
          dst[ri.i0 * w + rj.i1] += ri.w0 * rj.w1 * d;
          dst[ri.i1 * w + rj.i0] += ri.w1 * rj.w0 * d;
          dst[ri.i1 * w + rj.i1] += ri.w1 * rj.w1 * d;
        }
      }
    }
  });
}

}  // namespace gaga::ops
