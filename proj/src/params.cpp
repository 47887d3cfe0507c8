// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#include "ctxmt/params.hpp"

#include <cmath>

#include "ctxmt/error.hpp"

namespace ctxmt {

Parameter* ParamStore::add(const std::string& name, Tensor t) {
  if (by_name_.count(name)) {
    throw Error("duplicate parameter name: " + name);
  }
  t.requires_grad = true;
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->tensor = std::move(t);
  Parameter* raw = p.get();
  list_.push_back(std::move(p));
  by_name_[name] = raw;
  return raw;
}

Parameter* ParamStore::find(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

int64_t ParamStore::total_scalars() const {
  int64_t n = 0;
  for (const auto& p : list_) n += p->tensor.numel();
  return n;
}

void ParamStore::zero_grads() {
  for (const auto& p : list_) p->tensor.zero_grad();
}

void ParamStore::alloc_grads() {
  for (const auto& p : list_) {
    if (p->tensor.grad.empty()) p->tensor.alloc_grad();
  }
}

Tensor xavier_uniform(int rows, int cols, Rng& rng) {
  double limit = std::sqrt(6.0 / (rows + cols));
  Tensor t = Tensor::zeros({rows, cols});
  for (double& x : t.data) x = rng.uniform(-limit, limit);
  return t;
}

Tensor embedding_init(int vocab, int d_model, Rng& rng) {
  double scale = 1.0 / std::sqrt(static_cast<double>(d_model));
  Tensor t = Tensor::zeros({vocab, d_model});
  for (double& x : t.data) x = rng.normal() * scale;
  return t;
}

}  // namespace ctxmt
