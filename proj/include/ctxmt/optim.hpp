// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "ctxmt/params.hpp"

namespace ctxmt {

/// Inverse-square-root warmup schedule:
///   rate(step) = factor * d_model^(-1/2) * min(step^(-1/2),
///                                              step * warmup_steps^(-3/2))
/// Strictly increasing for step < warmup_steps, strictly decreasing after.
struct LRSchedule {
  int d_model = 512;
  int warmup_steps = 4000;
  double factor = 1.0;

  double rate(int64_t step) const;
};

/// Adam moments, one slot per parameter tensor in registration order.
struct AdamState {
  int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-9;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  static AdamState init(const ParamStore& params, double beta1 = 0.9,
                        double beta2 = 0.98, double epsilon = 1e-9);
};

/// One Adam update with bias correction at rate schedule.rate(step + 1);
/// increments state.step. A non-finite gradient aborts the step before any
/// parameter is touched, naming the offending parameter.
void adam_step(ParamStore& params, AdamState& state, const LRSchedule& sched);

double grad_global_norm(const ParamStore& params);

/// Scales all gradients by min(1, max_norm / ||g||). No-op if max_norm <= 0.
void clip_gradients(ParamStore& params, double max_norm);

}  // namespace ctxmt
