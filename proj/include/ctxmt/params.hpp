// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "ctxmt/rng.hpp"
#include "ctxmt/tensor.hpp"

namespace ctxmt {

/// A named, trainable tensor owned by a model.
struct Parameter {
  std::string name;
  Tensor tensor;
};

/// Ordered registry of a model's parameters. Registration order is the
/// canonical order for optimizer state and checkpoint layout, so it must be
/// deterministic for a given model configuration.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) = default;
  ParamStore& operator=(ParamStore&&) = default;

  Parameter* add(const std::string& name, Tensor t);
  Parameter* find(const std::string& name) const;  // nullptr if absent

  const std::vector<std::unique_ptr<Parameter>>& list() const { return list_; }
  size_t size() const { return list_.size(); }
  int64_t total_scalars() const;

  void zero_grads();
  void alloc_grads();

 private:
  std::vector<std::unique_ptr<Parameter>> list_;
  std::unordered_map<std::string, Parameter*> by_name_;
};

/// Glorot-uniform matrix init, limit sqrt(6 / (fan_in + fan_out)).
Tensor xavier_uniform(int rows, int cols, Rng& rng);

/// Embedding init ~ N(0, d^-1/2).
Tensor embedding_init(int vocab, int d_model, Rng& rng);

}  // namespace ctxmt
