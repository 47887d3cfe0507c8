// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>

#include "ctxmt/checkpoint.hpp"
#include "ctxmt/nmt.hpp"

namespace ctxmt {

/// Which auxiliary context decoders participate in the joint loss.
enum class JointMode { pre, next, pre_next };

JointMode parse_joint_mode(const std::string& s);
std::string joint_mode_name(JointMode m);

/// Weights on the auxiliary losses: joint = tgt + mu * pre + lambda * next.
/// (0.5, 0.3) is the dev-selected pre+next setting; single-context modes use
/// (0.5, 0.5).
struct JointLossWeights {
  double mu = 0.5;
  double lambda = 0.3;
};

/// One shared encoder over the current source sentence and three decoders:
/// pre/next decoders predict the neighboring source sentences (consuming and
/// emitting source-vocabulary tokens through the shared source embedding
/// table), the target decoder predicts the translation. The encoder runs
/// once per instance; all active decoders attend to the same memory.
class JointModel {
 public:
  JointModel(const TransformerConfig& cfg, uint64_t seed);

  /// Teacher-forced forward. Inactive decoders (per mode) contribute absent
  /// components. When a context is absent and ctx_none_losses holds, the
  /// decoder predicts the placeholder sequence; otherwise the component is
  /// skipped for that instance.
  ComponentNodes forward(Graph& g, const TrainingInstance& inst,
                         JointMode mode, bool ctx_none_losses = true) const;

  NodeId encode(Graph& g, const std::vector<int>& src) const;

  const TransformerConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  Parameter* src_embed() const { return src_embed_; }
  Parameter* tgt_embed() const { return tgt_embed_; }
  const EncoderStack& encoder() const { return *encoder_; }
  const DecoderStack& pre_decoder() const { return *pre_dec_; }
  const DecoderStack& next_decoder() const { return *next_dec_; }
  const DecoderStack& tgt_decoder() const { return *tgt_dec_; }

 private:
  TransformerConfig cfg_;
  ParamStore store_;
  Parameter* src_embed_;
  Parameter* tgt_embed_;
  std::unique_ptr<EncoderStack> encoder_;
  std::unique_ptr<DecoderStack> pre_dec_;
  std::unique_ptr<DecoderStack> next_dec_;
  std::unique_ptr<DecoderStack> tgt_dec_;
};

/// Copies the (encoder + target decoder) subgraph into a standalone NMT
/// model; forward outputs match the joint model's target path bit-exactly at
/// handoff. This is the step-2 handoff and the inference-time model: no
/// context input is needed at test time.
NmtModel extract_nmt(const JointModel& joint);

/// Replaces the shared source embedding table with the one from a
/// pre-training checkpoint; all other parameters are untouched. Vocabulary
/// size, d_model and (when both sides provide one) the vocabulary hash must
/// match.
void init_joint_from_pretrained(JointModel& model, const Checkpoint& ckpt,
                                uint64_t expected_src_vocab_hash = 0);

}  // namespace ctxmt
