// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#include "ctxmt/optim.hpp"

#include <algorithm>
#include <cmath>

#include "ctxmt/error.hpp"

namespace ctxmt {

double LRSchedule::rate(int64_t step) const {
  if (step < 1) throw Error("schedule rate is defined for step >= 1");
  double s = static_cast<double>(step);
  double w = static_cast<double>(warmup_steps);
  return factor * std::pow(static_cast<double>(d_model), -0.5) *
         std::min(std::pow(s, -0.5), s * std::pow(w, -1.5));
}

AdamState AdamState::init(const ParamStore& params, double beta1, double beta2,
                          double epsilon) {
  AdamState st;
  st.beta1 = beta1;
  st.beta2 = beta2;
  st.epsilon = epsilon;
  st.m.reserve(params.size());
  st.v.reserve(params.size());
  for (const auto& p : params.list()) {
    st.m.emplace_back(p->tensor.data.size(), 0.0);
    st.v.emplace_back(p->tensor.data.size(), 0.0);
  }
  return st;
}

void adam_step(ParamStore& params, AdamState& state, const LRSchedule& sched) {
  if (state.m.size() != params.size()) {
    throw Error("optimizer state does not match parameter store");
  }
  for (const auto& p : params.list()) {
    for (double g : p->tensor.grad) {
      if (!std::isfinite(g)) {
        throw NumericalError("non-finite gradient in parameter " + p->name);
      }
    }
  }
  int64_t t = state.step + 1;
  double lr = sched.rate(t);
  double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(t));
  double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(t));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& w = params.list()[i]->tensor;
    if (w.grad.empty()) w.alloc_grad();
    std::vector<double>& m = state.m[i];
    std::vector<double>& v = state.v[i];
    for (size_t j = 0; j < w.data.size(); ++j) {
      double g = w.grad[j];
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
      double mhat = m[j] / bc1;
      double vhat = v[j] / bc2;
      w.data[j] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
  state.step = t;
}

double grad_global_norm(const ParamStore& params) {
  double sq = 0.0;
  for (const auto& p : params.list()) {
    for (double g : p->tensor.grad) sq += g * g;
  }
  return std::sqrt(sq);
}

void clip_gradients(ParamStore& params, double max_norm) {
  if (max_norm <= 0.0) return;
  double norm = grad_global_norm(params);
  if (norm <= max_norm) return;
  double scale = max_norm / norm;
  for (const auto& p : params.list()) {
    for (double& g : p->tensor.grad) g *= scale;
  }
}

}  // namespace ctxmt
