// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "awmfuse/tensor.hpp"

namespace awm {

// Plain-tensor kernels shared between the autodiff ops and the
// module-level functional API.

/// One level of the orthonormal 2-D Haar analysis filter bank.
/// [C,H,W] -> [4C,H/2,W/2] packed as [LL | LH | HL | HH] channel groups.
/// Throws IndivisibleSpatialSize when H or W is odd.
Tensor haar_analysis_packed(const Tensor& x);

/// Exact inverse of haar_analysis_packed: [4C,h,w] -> [C,2h,2w].
Tensor haar_synthesis_packed(const Tensor& x);

/// Per-channel linear recurrence h_t = A (.) h_{t-1} + B x_t,
/// y_t = C . h_t + D x_t over a [L,C] sequence with [C,N] parameters.
/// When h_store is non-null it receives all hidden states (L*C*N doubles,
/// layout [t][c][n]) for use by the backward pass.
Tensor selective_scan_forward(const Tensor& x, const Tensor& a,
                              const Tensor& b, const Tensor& c,
                              const Tensor& d,
                              std::vector<double>* h_store = nullptr);

}  // namespace awm
