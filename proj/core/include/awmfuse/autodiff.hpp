// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "awmfuse/tensor.hpp"

namespace awm::ad {

/// Handle into a Tape. Ops take and return Values; the Tensors behind
/// them live on the tape until it is destroyed.
struct Value {
  int idx = -1;
  bool valid() const { return idx >= 0; }
};

/// Define-by-run reverse-mode tape. One tape per forward/backward pass;
/// parameters are bound by pointer so their gradients accumulate into
/// caller-owned storage across the pass.
class Tape {
 public:
  Value constant(Tensor t);
  /// Leaf whose gradient is accumulated into *external_grad (may be null
  /// to just track the gradient on the tape).
  Value leaf(Tensor t, Tensor* external_grad = nullptr);

  const Tensor& val(Value v) const { return nodes_[v.idx]->val; }
  /// Gradient of the last backward() root w.r.t. v (zeros if unused).
  Tensor grad_of(Value v) const;

  /// Reverse sweep from a scalar root. Gradients of bound leaves are
  /// added into their external storage.
  void backward(Value root);

  std::size_t size() const { return nodes_.size(); }

  // -- op-author interface ------------------------------------------------
  using BackwardFn = std::function<void(Tape&)>;
  Value make_node(Tensor val, BackwardFn back = nullptr);
  void set_backward(Value v, BackwardFn back);
  void accumulate(Value v, const Tensor& delta);
  void accumulate_at(Value v, std::size_t flat_index, double delta);
  const Tensor& grad(Value v) const { return nodes_[v.idx]->grad; }
  Tensor& grad_mut(Value v);

 private:
  struct Node {
    Tensor val;
    Tensor grad;  // empty until touched by the reverse sweep
    BackwardFn back;
    Tensor* external_grad = nullptr;
  };
  std::vector<std::unique_ptr<Node>> nodes_;
};

// ---- elementwise --------------------------------------------------------
Value add(Tape& t, Value a, Value b);
Value sub(Tape& t, Value a, Value b);
Value mul(Tape& t, Value a, Value b);
Value div(Tape& t, Value a, Value b);
Value scale(Tape& t, Value a, double s);
Value add_scalar(Tape& t, Value a, double s);
Value silu(Tape& t, Value x);
Value sigmoid(Tape& t, Value x);
Value softplus(Tape& t, Value x);
Value exp_of(Tape& t, Value x);
Value neg_of(Tape& t, Value x);
Value abs_of(Tape& t, Value x);
Value square(Tape& t, Value x);

// ---- reductions / vectors ----------------------------------------------
Value sum_all(Tape& t, Value x);
Value mean_all(Tape& t, Value x);
Value dot(Tape& t, Value a, Value b);
Value l2_normalize(Tape& t, Value v);
Value mean_rows(Tape& t, Value x);  // [M,N] -> [N]

// ---- linear algebra ------------------------------------------------------
/// y = x * w^T (+ bias per output). x may be [K] or [M,K]; w is [N,K].
Value linear(Tape& t, Value x, Value w, Value bias = Value{});
Value matmul(Tape& t, Value a, Value b);     // [M,K]*[K,N]
Value matmul_nt(Tape& t, Value a, Value b);  // [M,K]*[N,K]^T
Value softmax_rows(Tape& t, Value x);
Value reshape(Tape& t, Value x, std::vector<int> shape);

// ---- feature-map ops ------------------------------------------------------
struct ConvSpec {
  int stride = 1;
  int pad = 0;
  int dilation = 1;
  int groups = 1;
};
/// x [Cin,H,W], w [Cout,Cin/groups,kh,kw], optional bias [Cout].
Value conv2d(Tape& t, Value x, Value w, Value bias, const ConvSpec& spec);
Value maxpool3x3(Tape& t, Value x);  // stride 1, zero pad 1
Value concat_ch(Tape& t, Value a, Value b);
Value slice_ch(Tape& t, Value x, int first, int count);
Value flatten_hw(Tape& t, Value x);                    // [C,H,W] -> [H*W,C]
Value unflatten_hw(Tape& t, Value x, int h, int w);    // [H*W,C] -> [C,H,W]
Value add_bias_ch(Tape& t, Value x, Value v);          // x[C,H,W] + v[C]
Value scale_ch(Tape& t, Value x, Value v);             // x[C,H,W] * v[C]
Value global_avg_pool(Tape& t, Value x);               // [C,H,W] -> [C]
Value layer_norm_chw(Tape& t, Value x, Value gamma, Value beta,
                     double eps = 1e-6);
Value upsample_nearest2(Tape& t, Value x);
Value avgpool_to_grid(Tape& t, Value x, int grid);     // adaptive mean pooling

/// Per-channel linear state-space recurrence over a [L,C] sequence:
///   h_t = A_c (.) h_{t-1} + B_c x_t[c],  y_t[c] = C_c . h_t + D_c x_t[c]
/// with A,B,C of shape [C,N] and D of shape [C].
Value selective_scan(Tape& t, Value x, Value a, Value b, Value c, Value d);

/// Orthonormal single-level 2-D Haar analysis, packed as
/// [LL | LH | HL | HH] along channels: [C,H,W] -> [4C,H/2,W/2].
Value dwt_haar(Tape& t, Value x);
/// Exact inverse of dwt_haar: [4C,h,w] -> [C,2h,2w].
Value idwt_haar(Tape& t, Value x);

/// Fixed-coefficient BT.601 conversions (linear, no clamping).
Value rgb_to_ycbcr_node(Tape& t, Value rgb);
Value ycbcr_to_rgb_node(Tape& t, Value ycc);

}  // namespace awm::ad
