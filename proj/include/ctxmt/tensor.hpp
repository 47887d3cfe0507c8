// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ctxmt {

/// Dense row-major tensor of 64-bit floats with an optional gradient buffer.
/// Graph operations work on 2-D tensors ([rows, cols]); scalars are [1, 1]
/// and row vectors [1, n]. Invariants: product(shape) == data.size(), and
/// grad, when allocated, has the same length as data.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;  // empty unless allocated

  Tensor() = default;

  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, double value);
  static Tensor from(std::vector<int> shape, std::vector<double> values);
  static Tensor scalar(double value);

  int64_t numel() const;
  bool is_scalar() const { return numel() == 1; }

  // 2-D accessors.
  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
  double at(int r, int c) const {
    return data[static_cast<size_t>(r) * cols() + c];
  }

  void alloc_grad();                // zero-filled, same length as data
  void zero_grad();                 // no-op if grad not allocated
  bool all_finite() const;          // data only
  std::string shape_str() const;    // e.g. "[3, 4]"
};

bool same_shape(const Tensor& a, const Tensor& b);

}  // namespace ctxmt
