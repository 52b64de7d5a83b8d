// Copyright 2026 the awmfuse authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "awmfuse/error.hpp"
#include "awmfuse/rng.hpp"

namespace awm {

/// Dense row-major double tensor. Rank is dynamic; the project uses
/// rank-1 vectors, rank-2 matrices/token sequences and rank-3 [C,H,W]
/// feature maps. Values are always doubles: the whole pipeline is
/// defined (and gradient-checked) at double precision.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::initializer_list<int> shape)
      : Tensor(std::vector<int>(shape)) {}

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
  static Tensor full(std::vector<int> shape, double v);
  static Tensor scalar(double v);
  /// i.i.d. uniform in [lo, hi).
  static Tensor uniform(std::vector<int> shape, Rng& rng, double lo = 0.0,
                        double hi = 1.0);
  /// i.i.d. standard normal scaled by `stddev`.
  static Tensor normal(std::vector<int> shape, Rng& rng, double stddev = 1.0);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Rank-specific accessors; unchecked in release builds.
  double& at(int i) { return data_[static_cast<std::size_t>(i)]; }
  double at(int i) const { return data_[static_cast<std::size_t>(i)]; }
  double& at(int r, int c) {
    return data_[static_cast<std::size_t>(r) * shape_[1] + c];
  }
  double at(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * shape_[1] + c];
  }
  double& at(int c, int y, int x) {
    return data_[(static_cast<std::size_t>(c) * shape_[1] + y) * shape_[2] + x];
  }
  double at(int c, int y, int x) const {
    return data_[(static_cast<std::size_t>(c) * shape_[1] + y) * shape_[2] + x];
  }

  void fill(double v);
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;
  double min() const;
  double max() const;
  double sum() const;

  /// Reinterprets the buffer with a new shape of identical element count.
  Tensor reshaped(std::vector<int> shape) const;

  std::string shape_str() const;

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

/// Throws ShapeMismatch unless both tensors have identical shapes.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace awm
