// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <vector>

#include "ctxmt/corpus.hpp"
#include "ctxmt/transformer.hpp"

namespace testutil {

inline ctxmt::TransformerConfig tiny_config(int src_vocab = 11,
                                            int tgt_vocab = 13) {
  ctxmt::TransformerConfig cfg;
  cfg.d_model = 8;
  cfg.d_ff = 16;
  cfg.num_layers = 2;
  cfg.num_heads = 2;
  cfg.src_vocab = src_vocab;
  cfg.tgt_vocab = tgt_vocab;
  cfg.max_len = 32;
  cfg.dropout = 0.0;
  cfg.label_smoothing = 0.0;
  return cfg;
}

inline ctxmt::TrainingInstance quad(std::vector<int> prev,
                                    std::vector<int> cur,
                                    std::vector<int> next,
                                    std::vector<int> tgt) {
  ctxmt::TrainingInstance inst;
  if (!prev.empty()) inst.prev_src = std::move(prev);
  inst.cur_src = std::move(cur);
  if (!next.empty()) inst.next_src = std::move(next);
  if (!tgt.empty()) inst.tgt = std::move(tgt);
  return inst;
}

}  // namespace testutil
