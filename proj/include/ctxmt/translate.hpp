// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <vector>

#include "ctxmt/ctxpretrain.hpp"
#include "ctxmt/decode.hpp"
#include "ctxmt/jointmt.hpp"
#include "ctxmt/nmt.hpp"

namespace ctxmt {

struct DecodeOptions {
  int beam_size = 4;
  int max_len = 64;
  double length_norm = 0.6;
};

/// Teacher-free scorer over a fixed encoder memory: each step re-decodes the
/// prefix in a fresh inference graph and returns log-softmax of the last
/// position.
class MemoryScorer : public SequenceScorer {
 public:
  MemoryScorer(const DecoderStack& decoder, Tensor memory);
  int vocab_size() const override { return decoder_.vocab(); }
  std::vector<double> next_logprobs(
      const std::vector<int>& prefix) const override;

 private:
  const DecoderStack& decoder_;
  Tensor memory_;
};

/// Encoder memory values computed in an inference graph.
Tensor encode_memory(const NmtModel& model, const std::vector<int>& src);
Tensor encode_memory(const JointModel& model, const std::vector<int>& src);
Tensor encode_memory(const FinetuneModel& model,
                     const TrainingInstance& inst);

BeamResult translate(const NmtModel& model, const std::vector<int>& src,
                     const DecodeOptions& opts);
/// The joint model translates through its encoder + target decoder; no
/// context input is needed at test time.
BeamResult translate(const JointModel& model, const std::vector<int>& src,
                     const DecodeOptions& opts);
/// The fine-tuned model structurally requires contexts, so inputs must stay
/// document-formatted.
BeamResult translate(const FinetuneModel& model, const TrainingInstance& inst,
                     const DecodeOptions& opts);

}  // namespace ctxmt
