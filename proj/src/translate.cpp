// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#include "ctxmt/translate.hpp"

#include <algorithm>
#include <cmath>

namespace ctxmt {

MemoryScorer::MemoryScorer(const DecoderStack& decoder, Tensor memory)
    : decoder_(decoder), memory_(std::move(memory)) {}

std::vector<double> MemoryScorer::next_logprobs(
    const std::vector<int>& prefix) const {
  Graph g(0);
  g.set_inference(true);
  NodeId mem = g.constant(memory_);
  NodeId logits = decoder_.decode(g, prefix, mem);
  const Tensor& t = g.value(logits);
  int last = t.rows() - 1;
  int vocab = t.cols();
  std::vector<double> lp(static_cast<size_t>(vocab));
  const double* z = t.data.data() + static_cast<size_t>(last) * vocab;
  double m = z[0];
  for (int c = 1; c < vocab; ++c) m = std::max(m, z[c]);
  double sum = 0.0;
  for (int c = 0; c < vocab; ++c) sum += std::exp(z[c] - m);
  double lse = m + std::log(sum);
  for (int c = 0; c < vocab; ++c) lp[static_cast<size_t>(c)] = z[c] - lse;
  return lp;
}

Tensor encode_memory(const NmtModel& model, const std::vector<int>& src) {
  Graph g(0);
  g.set_inference(true);
  return g.value(model.encode(g, src));
}

Tensor encode_memory(const JointModel& model, const std::vector<int>& src) {
  Graph g(0);
  g.set_inference(true);
  return g.value(model.encode(g, src));
}

Tensor encode_memory(const FinetuneModel& model,
                     const TrainingInstance& inst) {
  Graph g(0);
  g.set_inference(true);
  return g.value(model.encode_with_context(g, inst.cur_src, inst.prev_src,
                                           inst.next_src));
}

BeamResult translate(const NmtModel& model, const std::vector<int>& src,
                     const DecodeOptions& opts) {
  MemoryScorer scorer(model.decoder(), encode_memory(model, src));
  return beam_search(scorer, opts.beam_size, opts.max_len, opts.length_norm);
}

BeamResult translate(const JointModel& model, const std::vector<int>& src,
                     const DecodeOptions& opts) {
  MemoryScorer scorer(model.tgt_decoder(), encode_memory(model, src));
  return beam_search(scorer, opts.beam_size, opts.max_len, opts.length_norm);
}

BeamResult translate(const FinetuneModel& model, const TrainingInstance& inst,
                     const DecodeOptions& opts) {
  MemoryScorer scorer(model.decoder(), encode_memory(model, inst));
  return beam_search(scorer, opts.beam_size, opts.max_len, opts.length_norm);
}

}  // namespace ctxmt
