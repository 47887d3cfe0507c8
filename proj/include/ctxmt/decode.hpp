// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <vector>

#include "ctxmt/corpus.hpp"

namespace ctxmt {

/// Next-token distribution provider for decoding. The prefix always starts
/// with BOS; implementations must be pure functions of the prefix.
class SequenceScorer {
 public:
  virtual ~SequenceScorer() = default;
  virtual int vocab_size() const = 0;
  virtual std::vector<double> next_logprobs(
      const std::vector<int>& prefix) const = 0;
};

struct BeamHypothesis {
  std::vector<int> tokens;  // generated tokens, EOS excluded
  double logprob = 0.0;     // sum of per-step token log-probabilities
  bool finished = false;
};

struct BeamResult {
  std::vector<int> tokens;
  double logprob = 0.0;
  double score = 0.0;  // logprob / length^length_norm, the ranking key
  bool finished = false;  // false: nothing finished within max_len (warning)
};

/// Standard beam expansion from BOS; hypotheses finish on EOS; final ranking
/// by logprob / length^length_norm with deterministic tie-break by token id.
/// beam_size 1 is exactly greedy decoding. If nothing finishes within
/// max_len, the best unfinished hypothesis is returned with finished=false.
BeamResult beam_search(const SequenceScorer& scorer, int beam_size,
                       int max_len, double length_norm,
                       int bos = Vocabulary::kBos, int eos = Vocabulary::kEos);

}  // namespace ctxmt
