// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>

#include "awmfuse/tensor.hpp"

namespace awm {

/// Multi-level orthonormal Haar decomposition of a [C,H,W] map.
/// `ll` holds the coarsest approximation; `details[l]` holds the
/// {LH, HL, HH} bands of level l+1 (level 1 = finest). Level-l subbands
/// have spatial dims H/2^l x W/2^l; the transform preserves energy.
struct WaveletStack {
  int levels = 0;
  Tensor ll;
  std::vector<std::array<Tensor, 3>> details;
};

/// Forward transform; throws IndivisibleSpatialSize unless 2^levels
/// divides both H and W.
WaveletStack haar_dwt2(const Tensor& f, int levels);

/// Exact inverse of haar_dwt2 (orthonormal basis).
Tensor haar_idwt2(const WaveletStack& w);

/// Sum of squared coefficients; equals the input energy.
double stack_energy(const WaveletStack& w);

}  // namespace awm
