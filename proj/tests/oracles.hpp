// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0
//
// Independent reference computations used to check the library. Everything
// here is deliberately written the slow, obvious way and must stay
// independent of the implementation paths it verifies.

#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "ctxmt/tensor.hpp"

namespace oracle {

// Naive triple-loop matrix product.
inline ctxmt::Tensor matmul(const ctxmt::Tensor& a, const ctxmt::Tensor& b) {
  ctxmt::Tensor c = ctxmt::Tensor::zeros({a.rows(), b.cols()});
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (int k = 0; k < a.cols(); ++k) s += a.at(i, k) * b.at(k, j);
      c.at(i, j) = s;
    }
  }
  return c;
}

// Direct exp/sum softmax at extended precision.
inline std::vector<double> softmax(const std::vector<double>& x) {
  long double sum = 0.0L;
  std::vector<long double> e(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    e[i] = expl(static_cast<long double>(x[i]));
    sum += e[i];
  }
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    out[i] = static_cast<double>(e[i] / sum);
  }
  return out;
}

// Single-row scaled dot-product attention with given (already projected)
// q/k/v, no masking; returns [Lq, d].
inline ctxmt::Tensor attention(const ctxmt::Tensor& q, const ctxmt::Tensor& k,
                               const ctxmt::Tensor& v, double scale) {
  ctxmt::Tensor out = ctxmt::Tensor::zeros({q.rows(), v.cols()});
  for (int i = 0; i < q.rows(); ++i) {
    std::vector<double> scores(static_cast<size_t>(k.rows()));
    for (int j = 0; j < k.rows(); ++j) {
      double s = 0.0;
      for (int c = 0; c < q.cols(); ++c) s += q.at(i, c) * k.at(j, c);
      scores[static_cast<size_t>(j)] = s * scale;
    }
    std::vector<double> p = softmax(scores);
    for (int j = 0; j < k.rows(); ++j) {
      for (int c = 0; c < v.cols(); ++c) {
        out.at(i, c) += p[static_cast<size_t>(j)] * v.at(j, c);
      }
    }
  }
  return out;
}

// Central finite difference d loss / d x at one scalar location.
// `loss` must re-run the full forward pass each call.
inline double central_difference(std::function<double()> loss, double* x,
                                 double h = 1e-5) {
  double keep = *x;
  *x = keep + h;
  double up = loss();
  *x = keep - h;
  double down = loss();
  *x = keep;
  return (up - down) / (2.0 * h);
}

// Relative error with a floor so exact-zero pairs compare equal.
inline double rel_err(double a, double b, double floor = 1e-6) {
  double denom = std::max(std::max(std::fabs(a), std::fabs(b)), floor);
  return std::fabs(a - b) / denom;
}

// Hand-stepped Adam on one scalar parameter.
struct ScalarAdam {
  double beta1 = 0.9, beta2 = 0.98, eps = 1e-9;
  double m = 0.0, v = 0.0;
  long long t = 0;

  double step(double theta, double g, double lr) {
    ++t;
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g * g;
    double mhat = m / (1.0 - std::pow(beta1, static_cast<double>(t)));
    double vhat = v / (1.0 - std::pow(beta2, static_cast<double>(t)));
    return theta - lr * mhat / (std::sqrt(vhat) + eps);
  }
};

// Mean-pool each context block over rows, broadcast-add onto the input.
inline ctxmt::Tensor pool_broadcast_fuse(const ctxmt::Tensor& cur,
                                         const ctxmt::Tensor* prev,
                                         const ctxmt::Tensor* next) {
  ctxmt::Tensor out = cur;
  for (const ctxmt::Tensor* ctx : {prev, next}) {
    if (!ctx) continue;
    for (int c = 0; c < cur.cols(); ++c) {
      double mean = 0.0;
      for (int r = 0; r < ctx->rows(); ++r) mean += ctx->at(r, c);
      mean /= ctx->rows();
      for (int r = 0; r < cur.rows(); ++r) out.at(r, c) += mean;
    }
  }
  return out;
}

}  // namespace oracle
