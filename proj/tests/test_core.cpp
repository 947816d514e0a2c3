#include <gtest/gtest.h>

#include "gaga/core/conv.hpp"
#include "gaga/core/nn.hpp"
#include "gaga/core/ops.hpp"
#include "test_util.hpp"

using namespace gaga;
using testutil::max_rel_grad_error;
using testutil::random_tensor;

TEST(Tensor, ShapeAndAccess) {
  Tensor<float> t({2, 3, 4, 5});
  EXPECT_EQ(t.numel(), 120);
  t.at(1, 2, 3, 4) = 7.f;
  EXPECT_EQ(t[119], 7.f);
  EXPECT_THROW(t.reshaped({7}), std::invalid_argument);
  auto r = t.reshaped({6, 20});
  EXPECT_EQ(r.dim(1), 20);
}

TEST(Rng, StreamsAreIndependentAndStable) {
  Rng a = Rng::stream(42, "weights", 0);
  Rng b = Rng::stream(42, "weights", 0);
  Rng c = Rng::stream(42, "weights", 1);
  EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_NE(a.next_u64(), c.next_u64());
  // normal draws have roughly unit variance
  Rng d(7);
  double sum = 0, sum2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double x = d.normal();
    sum += x;
    sum2 += x * x;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.05);
  EXPECT_NEAR(sum2 / n, 1.0, 0.05);
}

TEST(Autograd, SimpleChain) {
  auto x = make_var<double>(Tensor<double>::scalar(3.0), true);
  auto y = ops::mul(x, x);           // x^2
  auto z = ops::add_scalar(y, 1.0);  // x^2+1
  backward(z);
  EXPECT_DOUBLE_EQ(x->grad[0], 6.0);
}

TEST(Autograd, DetachBlocksGradient) {
  auto x = make_var<double>(Tensor<double>::scalar(2.0), true);
  auto y = ops::mul(detach(x), x);  // treated as c*x
  backward(y);
  EXPECT_DOUBLE_EQ(x->grad[0], 2.0);
}

TEST(Autograd, NoGradMode) {
  auto x = make_var<double>(Tensor<double>::scalar(2.0), true);
  NoGradGuard guard;
  auto y = ops::mul(x, x);
  EXPECT_FALSE(y->requires_grad);
}

TEST(GradCheck, ElementwiseOps) {
  auto a = make_var<double>(random_tensor({2, 3}, 1), true);
  auto b = make_var<double>(random_tensor({2, 3}, 2), true);
  double err = max_rel_grad_error({a, b}, [&] {
    auto t = ops::mul(ops::add(a, b), ops::sub(a, b));
    t = ops::add(t, ops::square(ops::sigmoid(a)));
    t = ops::add(t, ops::tanh_op(ops::mul_scalar(b, 0.7)));
    return ops::mean_all(t);
  });
  EXPECT_LT(err, 1e-6);
}

TEST(GradCheck, AbsAndClamp) {
  Tensor<double> v({5});
  v[0] = -2.0; v[1] = -0.3; v[2] = 0.4; v[3] = 1.5; v[4] = 3.0;
  auto a = make_var<double>(v, true);
  double err = max_rel_grad_error({a}, [&] {
    return ops::mean_all(ops::add(ops::abs_op(a), ops::clamp(a, -1.0, 2.0)));
  });
  EXPECT_LT(err, 1e-6);
}

TEST(GradCheck, ReductionsAndBroadcast) {
  auto a = make_var<double>(random_tensor({2, 3, 4, 4}, 3), true);
  auto c = make_var<double>(random_tensor({2, 3}, 4), true);
  double err = max_rel_grad_error({a, c}, [&] {
    auto bs = ops::broadcast_spatial(c, 4, 4);
    auto prod = ops::mul(a, bs);
    auto s = ops::spatial_sum(prod);
    return ops::mean_all(ops::sum_cols(ops::square(s)));
  });
  EXPECT_LT(err, 1e-6);
}

TEST(GradCheck, SpatialSoftmax) {
  auto a = make_var<double>(random_tensor({2, 2, 3, 3}, 5), true);
  Tensor<double> grid({9});
  for (int i = 0; i < 9; ++i) grid[i] = 0.31 * i - 1.0;
  double err = max_rel_grad_error({a}, [&] {
    auto sm = ops::spatial_softmax(a);
    auto w = ops::weighted_spatial_sum(sm, grid);
    return ops::mean_all(ops::square(w));
  });
  EXPECT_LT(err, 1e-6);
}

TEST(GradCheck, DivSpatialAndGridSub) {
  auto x = make_var<double>(random_tensor({2, 2, 3, 3}, 6, 0.5), true);
  auto code = make_var<double>(random_tensor({2, 2}, 7, 0.3), true);
  Tensor<double> grid({9});
  for (int i = 0; i < 9; ++i) grid[i] = 0.25 * i;
  double err = max_rel_grad_error({x, code}, [&] {
    auto d = ops::grid_sub_code(grid, code, 3, 3);
    auto e = ops::exp_op(ops::mul_scalar(ops::square(d), -0.5));
    auto mixed = ops::mul(e, ops::exp_op(x));
    auto s = ops::spatial_sum(mixed);
    auto nrm = ops::div_spatial(mixed, s);
    return ops::mean_all(ops::square(ops::spatial_sum(ops::mul(nrm, nrm))));
  });
  EXPECT_LT(err, 1e-6);
}

TEST(GradCheck, Linear) {
  auto x = make_var<double>(random_tensor({3, 4}, 8), true);
  auto w = make_var<double>(random_tensor({5, 4}, 9, 0.5), true);
  auto b = make_var<double>(random_tensor({5}, 10, 0.1), true);
  double err = max_rel_grad_error({x, w, b}, [&] {
    return ops::mean_all(ops::square(ops::linear(x, w, b)));
  });
  EXPECT_LT(err, 1e-6);
}

TEST(GradCheck, Conv2d) {
  for (auto [stride, pad] : {std::pair<int64_t, int64_t>{1, 1}, {2, 1}, {1, 0}}) {
    auto x = make_var<double>(random_tensor({2, 3, 6, 6}, 11), true);
    auto w = make_var<double>(random_tensor({4, 3, 3, 3}, 12, 0.4), true);
    auto b = make_var<double>(random_tensor({4}, 13, 0.1), true);
    double err = max_rel_grad_error({x, w, b}, [&, s = stride, p = pad] {
      return ops::mean_all(ops::square(ops::conv2d(x, w, b, s, p)));
    });
    EXPECT_LT(err, 1e-6) << "stride=" << stride << " pad=" << pad;
  }
}

TEST(Conv2d, KnownValue) {
  // 1x1x3x3 input, single 3x3 averaging kernel, pad 1
  Tensor<double> xi({1, 1, 3, 3});
  for (int i = 0; i < 9; ++i) xi[i] = i + 1;
  auto x = make_const(xi);
  auto w = make_const(Tensor<double>({1, 1, 3, 3}, 1.0));
  auto out = ops::conv2d<double>(x, w, nullptr, 1, 1);
  // center output: sum of all nine values
  EXPECT_DOUBLE_EQ(out->value.at(0, 0, 1, 1), 45.0);
  // corner: 1+2+4+5
  EXPECT_DOUBLE_EQ(out->value.at(0, 0, 0, 0), 12.0);
}

TEST(GradCheck, ResizeBilinear) {
  auto x = make_var<double>(random_tensor({1, 2, 4, 4}, 14), true);
  double err = max_rel_grad_error({x}, [&] {
    return ops::mean_all(ops::square(ops::resize_bilinear(x, 7, 7)));
  });
  EXPECT_LT(err, 1e-6);
}

TEST(ResizeBilinear, CornersAlign) {
  Tensor<double> xi({1, 1, 2, 2});
  xi[0] = 1; xi[1] = 2; xi[2] = 3; xi[3] = 4;
  auto out = ops::resize_bilinear(make_const(xi), 5, 5);
  EXPECT_DOUBLE_EQ(out->value.at(0, 0, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(out->value.at(0, 0, 0, 4), 2.0);
  EXPECT_DOUBLE_EQ(out->value.at(0, 0, 4, 0), 3.0);
  EXPECT_DOUBLE_EQ(out->value.at(0, 0, 4, 4), 4.0);
  EXPECT_DOUBLE_EQ(out->value.at(0, 0, 2, 2), 2.5);
}

TEST(GradCheck, Gram) {
  auto f = make_var<double>(random_tensor({2, 3, 2, 2}, 15), true);
  double err = max_rel_grad_error({f}, [&] { return ops::mean_all(ops::square(ops::gram(f))); });
  EXPECT_LT(err, 1e-6);
}

TEST(GradCheck, ConcatChannels) {
  auto a = make_var<double>(random_tensor({2, 2, 3, 3}, 16), true);
  auto b = make_var<double>(random_tensor({2, 3, 3, 3}, 17), true);
  double err = max_rel_grad_error({a, b}, [&] {
    return ops::mean_all(ops::square(ops::concat_channels(a, b)));
  });
  EXPECT_LT(err, 1e-6);
}

TEST(Nn, ParamRegistryRejectsDuplicates) {
  nn::ParamRegistry<float> reg;
  auto c = nn::Conv<float>::create("enc.c1", 3, 8, 3, 1, 1, 0);
  c.params(reg);
  EXPECT_THROW(c.params(reg), std::logic_error);
  EXPECT_EQ(reg.all().size(), 2u);
}

TEST(Nn, InitIsNameSeeded) {
  auto a = nn::Conv<float>::create("layer", 3, 8, 3, 1, 1, 42);
  auto b = nn::Conv<float>::create("layer", 3, 8, 3, 1, 1, 42);
  auto c = nn::Conv<float>::create("other", 3, 8, 3, 1, 1, 42);
  EXPECT_EQ(a.w->value.storage(), b.w->value.storage());
  EXPECT_NE(a.w->value.storage(), c.w->value.storage());
}
