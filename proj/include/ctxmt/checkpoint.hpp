// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ctxmt/optim.hpp"
#include "ctxmt/params.hpp"

namespace ctxmt {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Serialized training state: config snapshot, named parameter tensors,
/// optional optimizer moments, step counter and vocabulary hashes.
/// The on-disk encoding is canonical (little-endian 64-bit floats,
/// name-length-prefixed records, trailing integrity hash), so
/// save(load(file)) is byte-identical.
struct Checkpoint {
  static constexpr uint32_t kVersion = 1;

  uint32_t version = kVersion;
  int64_t step = 0;
  uint64_t src_vocab_hash = 0;
  uint64_t tgt_vocab_hash = 0;
  std::string config_text;
  std::vector<NamedTensor> params;

  struct OptimizerState {
    int64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.98;
    double epsilon = 1e-9;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
  };
  std::optional<OptimizerState> optimizer;

  const NamedTensor* find(const std::string& name) const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);

/// Verifies magic, version and the trailing integrity hash before parsing;
/// truncated or corrupt files never load partially.
Checkpoint load_checkpoint(const std::string& path);

/// Captures every parameter of the store (registration order).
Checkpoint snapshot(const ParamStore& store, const std::string& config_text,
                    int64_t step, uint64_t src_vocab_hash,
                    uint64_t tgt_vocab_hash,
                    const AdamState* optimizer = nullptr);

/// Copies checkpoint tensors into the store by exact name; every store
/// parameter must be present with a matching shape. Extra checkpoint
/// entries are ignored.
void load_params(const Checkpoint& ckpt, ParamStore& store);

/// Restores Adam moments saved by snapshot(); requires a matching store.
AdamState load_optimizer(const Checkpoint& ckpt, const ParamStore& store);

uint64_t fnv1a64(const void* data, size_t len,
                 uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace ctxmt
