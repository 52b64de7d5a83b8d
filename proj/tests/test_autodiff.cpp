// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "awmfuse/autodiff.hpp"
#include "awmfuse/kernels.hpp"
#include "test_util.hpp"

using namespace awm;
namespace ad = awm::ad;

namespace {

// Reduce any op output to a scalar with a fixed random projection so
// every output element influences the loss.
ad::Value project(ad::Tape& t, ad::Value v, std::uint64_t seed) {
  Rng rng(seed);
  Tensor probe = Tensor::uniform(t.val(v).shape(), rng, -1.0, 1.0);
  return ad::dot(t, v, t.constant(std::move(probe)));
}

double op_grad_check(
    const std::vector<int>& shape,
    const std::function<ad::Value(ad::Tape&, ad::Value)>& op,
    std::uint64_t seed = 5, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  Tensor input = Tensor::uniform(shape, rng, lo, hi);
  return testutil::input_grad_check(
      input,
      [&](ad::Tape& t, ad::Value x) { return project(t, op(t, x), seed + 1); },
      16, seed + 2);
}

}  // namespace

TEST_CASE("elementwise op gradients match finite differences") {
  CHECK(op_grad_check({3, 4, 4}, [](ad::Tape& t, ad::Value x) {
          return ad::silu(t, x);
        }) < 1e-5);
  CHECK(op_grad_check({2, 3, 3}, [](ad::Tape& t, ad::Value x) {
          return ad::sigmoid(t, x);
        }) < 1e-5);
  CHECK(op_grad_check({8}, [](ad::Tape& t, ad::Value x) {
          return ad::softplus(t, x);
        }) < 1e-5);
  CHECK(op_grad_check({8}, [](ad::Tape& t, ad::Value x) {
          return ad::exp_of(t, x);
        }) < 1e-5);
  CHECK(op_grad_check({9}, [](ad::Tape& t, ad::Value x) {
          return ad::square(t, x);
        }) < 1e-5);
  CHECK(op_grad_check({9}, [](ad::Tape& t, ad::Value x) {
          return ad::mul(t, x, ad::add_scalar(t, x, 0.7));
        }) < 1e-5);
  CHECK(op_grad_check({9}, [](ad::Tape& t, ad::Value x) {
          return ad::div(t, ad::add_scalar(t, x, 3.0),
                         ad::add_scalar(t, ad::square(t, x), 1.0));
        }) < 1e-5);
  // |x| away from the kink.
  CHECK(op_grad_check({9}, [](ad::Tape& t, ad::Value x) {
          return ad::abs_of(t, ad::add_scalar(t, x, 2.0));
        }) < 1e-5);
}

TEST_CASE("normalization and reduction gradients") {
  CHECK(op_grad_check({12}, [](ad::Tape& t, ad::Value x) {
          return ad::l2_normalize(t, x);
        }) < 1e-5);
  CHECK(op_grad_check({5, 7}, [](ad::Tape& t, ad::Value x) {
          return ad::mean_rows(t, x);
        }) < 1e-5);
  CHECK(op_grad_check({4, 6}, [](ad::Tape& t, ad::Value x) {
          return ad::softmax_rows(t, x);
        }) < 1e-5);
  CHECK(op_grad_check({3, 5, 5}, [](ad::Tape& t, ad::Value x) {
          return ad::global_avg_pool(t, x);
        }) < 1e-5);
  CHECK(op_grad_check({3, 8, 6}, [](ad::Tape& t, ad::Value x) {
          return ad::avgpool_to_grid(t, x, 4);
        }) < 1e-5);
}

TEST_CASE("matmul and linear gradients") {
  Rng rng(11);
  const Tensor w = Tensor::uniform({5, 7}, rng, -1.0, 1.0);
  const Tensor b = Tensor::uniform({5}, rng, -1.0, 1.0);
  CHECK(op_grad_check({3, 7}, [&](ad::Tape& t, ad::Value x) {
          return ad::linear(t, x, t.constant(w), t.constant(b));
        }) < 1e-5);
  const Tensor m = Tensor::uniform({7, 4}, rng, -1.0, 1.0);
  CHECK(op_grad_check({3, 7}, [&](ad::Tape& t, ad::Value x) {
          return ad::matmul(t, x, t.constant(m));
        }) < 1e-5);
  const Tensor mt = Tensor::uniform({4, 7}, rng, -1.0, 1.0);
  CHECK(op_grad_check({3, 7}, [&](ad::Tape& t, ad::Value x) {
          return ad::matmul_nt(t, x, t.constant(mt));
        }) < 1e-5);
  // Weight-side gradient.
  const Tensor x = Tensor::uniform({3, 7}, rng, -1.0, 1.0);
  CHECK(op_grad_check({5, 7}, [&](ad::Tape& t, ad::Value wv) {
          return ad::linear(t, t.constant(x), wv);
        }) < 1e-5);
}

TEST_CASE("conv2d gradients across stride, dilation and groups") {
  Rng rng(13);
  SUBCASE("plain 3x3") {
    const Tensor w = Tensor::uniform({4, 3, 3, 3}, rng, -0.5, 0.5);
    const Tensor b = Tensor::uniform({4}, rng, -0.5, 0.5);
    ad::ConvSpec spec;
    spec.pad = 1;
    CHECK(op_grad_check({3, 6, 5}, [&](ad::Tape& t, ad::Value x) {
            return ad::conv2d(t, x, t.constant(w), t.constant(b), spec);
          }) < 1e-5);
    const Tensor xin = Tensor::uniform({3, 6, 5}, rng, -1.0, 1.0);
    CHECK(op_grad_check({4, 3, 3, 3}, [&](ad::Tape& t, ad::Value wv) {
            return ad::conv2d(t, t.constant(xin), wv, {}, spec);
          }) < 1e-5);
  }
  SUBCASE("stride 2") {
    const Tensor w = Tensor::uniform({2, 3, 3, 3}, rng, -0.5, 0.5);
    ad::ConvSpec spec;
    spec.stride = 2;
    spec.pad = 1;
    CHECK(op_grad_check({3, 8, 8}, [&](ad::Tape& t, ad::Value x) {
            return ad::conv2d(t, x, t.constant(w), {}, spec);
          }) < 1e-5);
  }
  SUBCASE("dilation 3, same padding") {
    const Tensor w = Tensor::uniform({3, 3, 3, 3}, rng, -0.5, 0.5);
    ad::ConvSpec spec;
    spec.dilation = 3;
    spec.pad = 3;
    CHECK(op_grad_check({3, 9, 9}, [&](ad::Tape& t, ad::Value x) {
            return ad::conv2d(t, x, t.constant(w), {}, spec);
          }) < 1e-5);
  }
  SUBCASE("depthwise groups") {
    const Tensor w = Tensor::uniform({4, 1, 3, 3}, rng, -0.5, 0.5);
    ad::ConvSpec spec;
    spec.pad = 1;
    spec.groups = 4;
    CHECK(op_grad_check({4, 5, 5}, [&](ad::Tape& t, ad::Value x) {
            return ad::conv2d(t, x, t.constant(w), {}, spec);
          }) < 1e-5);
  }
}

TEST_CASE("structural op gradients") {
  CHECK(op_grad_check({4, 6, 6}, [](ad::Tape& t, ad::Value x) {
          return ad::maxpool3x3(t, x);
        }) < 1e-5);
  CHECK(op_grad_check({4, 5, 5}, [](ad::Tape& t, ad::Value x) {
          return ad::flatten_hw(t, x);
        }) < 1e-5);
  CHECK(op_grad_check({6, 4, 4}, [](ad::Tape& t, ad::Value x) {
          auto halves = ad::slice_ch(t, x, 1, 3);
          return ad::concat_ch(t, halves, ad::slice_ch(t, x, 0, 2));
        }) < 1e-5);
  CHECK(op_grad_check({3, 4, 4}, [](ad::Tape& t, ad::Value x) {
          return ad::upsample_nearest2(t, x);
        }) < 1e-5);
  Rng rng(17);
  const Tensor v = Tensor::uniform({5}, rng, -1.0, 1.0);
  CHECK(op_grad_check({5, 4, 4}, [&](ad::Tape& t, ad::Value x) {
          return ad::add_bias_ch(t, ad::scale_ch(t, x, t.constant(v)),
                                 t.constant(v));
        }) < 1e-5);
  const Tensor gamma = Tensor::uniform({6}, rng, 0.5, 1.5);
  const Tensor beta = Tensor::uniform({6}, rng, -0.5, 0.5);
  CHECK(op_grad_check({6, 4, 4}, [&](ad::Tape& t, ad::Value x) {
          return ad::layer_norm_chw(t, x, t.constant(gamma), t.constant(beta));
        }) < 1e-5);
}

TEST_CASE("wavelet and color op gradients") {
  CHECK(op_grad_check({3, 8, 8}, [](ad::Tape& t, ad::Value x) {
          return ad::dwt_haar(t, x);
        }) < 1e-5);
  CHECK(op_grad_check({8, 4, 4}, [](ad::Tape& t, ad::Value x) {
          return ad::idwt_haar(t, x);
        }) < 1e-5);
  CHECK(op_grad_check({3, 5, 5}, [](ad::Tape& t, ad::Value x) {
          return ad::rgb_to_ycbcr_node(t, x);
        }) < 1e-5);
  CHECK(op_grad_check({3, 5, 5}, [](ad::Tape& t, ad::Value x) {
          return ad::ycbcr_to_rgb_node(t, x);
        }) < 1e-5);
}

TEST_CASE("selective scan gradients w.r.t. input and every parameter") {
  Rng rng(23);
  const int l = 10, c = 3, n = 4;
  const Tensor a = Tensor::uniform({c, n}, rng, 0.1, 0.9);
  const Tensor b = Tensor::uniform({c, n}, rng, -1.0, 1.0);
  const Tensor cm = Tensor::uniform({c, n}, rng, -1.0, 1.0);
  const Tensor d = Tensor::uniform({c}, rng, -1.0, 1.0);
  const Tensor xin = Tensor::uniform({l, c}, rng, -1.0, 1.0);

  CHECK(op_grad_check({l, c}, [&](ad::Tape& t, ad::Value x) {
          return ad::selective_scan(t, x, t.constant(a), t.constant(b),
                                    t.constant(cm), t.constant(d));
        }) < 1e-5);
  CHECK(op_grad_check({c, n}, [&](ad::Tape& t, ad::Value av) {
          return ad::selective_scan(t, t.constant(xin), av, t.constant(b),
                                    t.constant(cm), t.constant(d));
        }, 29, 0.1, 0.9) < 1e-5);
  CHECK(op_grad_check({c, n}, [&](ad::Tape& t, ad::Value bv) {
          return ad::selective_scan(t, t.constant(xin), t.constant(a), bv,
                                    t.constant(cm), t.constant(d));
        }) < 1e-5);
  CHECK(op_grad_check({c, n}, [&](ad::Tape& t, ad::Value cv) {
          return ad::selective_scan(t, t.constant(xin), t.constant(a),
                                    t.constant(b), cv, t.constant(d));
        }) < 1e-5);
  CHECK(op_grad_check({c}, [&](ad::Tape& t, ad::Value dv) {
          return ad::selective_scan(t, t.constant(xin), t.constant(a),
                                    t.constant(b), t.constant(cm), dv);
        }) < 1e-5);
}

TEST_CASE("backward accumulates into externally bound leaves") {
  Tensor value = Tensor::scalar(3.0);
  Tensor grad = Tensor::scalar(0.0);
  ad::Tape t;
  ad::Value x = t.leaf(value, &grad);
  ad::Value loss = ad::square(t, x);
  t.backward(loss);
  CHECK(grad[0] == doctest::Approx(6.0));
  // A second pass adds on top.
  ad::Tape t2;
  ad::Value x2 = t2.leaf(value, &grad);
  t2.backward(ad::square(t2, x2));
  CHECK(grad[0] == doctest::Approx(12.0));
}

TEST_CASE("backward requires a scalar root") {
  ad::Tape t;
  ad::Value v = t.constant(Tensor({2, 2}));
  CHECK_THROWS_AS(t.backward(v), DimMismatch);
}

TEST_CASE("a value used twice receives both gradient contributions") {
  Tensor value = Tensor::scalar(2.0);
  Tensor grad = Tensor::scalar(0.0);
  ad::Tape t;
  ad::Value x = t.leaf(value, &grad);
  // f = x*x + 3x -> f' = 2x + 3 = 7
  ad::Value loss = ad::add(t, ad::mul(t, x, x), ad::scale(t, x, 3.0));
  t.backward(loss);
  CHECK(grad[0] == doctest::Approx(7.0));
}
