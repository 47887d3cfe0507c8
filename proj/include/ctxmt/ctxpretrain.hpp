// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>

#include "ctxmt/checkpoint.hpp"
#include "ctxmt/nmt.hpp"

namespace ctxmt {

enum class EncoderMode { two_encoders, shared_encoder };
enum class FusionMode { sum_mean_pooled, embeddings_only, explicit_attention };

EncoderMode parse_encoder_mode(const std::string& s);
FusionMode parse_fusion_mode(const std::string& s);
std::string fusion_mode_name(FusionMode m);

/// Monolingual pre-training model: two encoder-decoder pairs predicting the
/// previous and next source sentence from the current one, sharing one
/// source embedding table. In shared_encoder mode both decoders read the
/// single shared encoder (the same object).
class PretrainModel {
 public:
  PretrainModel(const TransformerConfig& cfg, uint64_t seed,
                EncoderMode mode = EncoderMode::two_encoders);

  /// Loss = loss_pre + loss_next with unit weights; absent contexts predict
  /// the placeholder sequence (or are skipped when ctx_none_losses is off).
  ComponentNodes forward(Graph& g, const TrainingInstance& inst,
                         bool ctx_none_losses = true) const;

  EncoderMode mode() const { return mode_; }
  const TransformerConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  Parameter* src_embed() const { return src_embed_; }
  const EncoderStack& pre_encoder() const { return *pre_enc_; }
  const EncoderStack& next_encoder() const {
    return mode_ == EncoderMode::shared_encoder ? *pre_enc_ : *next_enc_;
  }

 private:
  TransformerConfig cfg_;
  EncoderMode mode_;
  ParamStore store_;
  Parameter* src_embed_;
  std::unique_ptr<EncoderStack> pre_enc_;   // the shared encoder in
  std::unique_ptr<EncoderStack> next_enc_;  // shared mode (next_enc_ null)
  std::unique_ptr<DecoderStack> pre_dec_;
  std::unique_ptr<DecoderStack> next_dec_;
};

/// Context fusion at the NMT encoder input. sum_mean_pooled mean-pools each
/// context state matrix to one d-vector and broadcast-adds it onto every
/// embedding row (an absent context contributes the zero vector);
/// embeddings_only returns the embeddings unchanged. explicit_attention
/// fuses after the encoder stack instead and is rejected here.
NodeId fuse_context(Graph& g, NodeId cur_embeddings,
                    std::optional<NodeId> prev_states,
                    std::optional<NodeId> next_states, FusionMode mode);

/// One attention block from current-sentence states (queries) over context
/// states (keys/values), residual-added and normalized.
NodeId explicit_context_attend(Graph& g, NodeId cur_states, NodeId ctx_states,
                               const AttentionWeights& w,
                               const LayerNormWeights& ln, int num_heads,
                               double eps, double dropout);

/// Fine-tuning model: pre/next context encoders feeding the NMT
/// encoder-decoder through the configured fusion mode. Context encoders and
/// the shared source embeddings keep training unless
/// trainable_context_encoders is off, which freezes the encoder bodies.
class FinetuneModel {
 public:
  FinetuneModel(const TransformerConfig& cfg, FusionMode fusion,
                bool trainable_context_encoders, uint64_t seed);

  ComponentNodes forward(Graph& g, const TrainingInstance& inst) const;

  /// Encoder memory for decoding, context handling per fusion mode.
  NodeId encode_with_context(Graph& g, const std::vector<int>& cur,
                             const std::optional<std::vector<int>>& prev,
                             const std::optional<std::vector<int>>& next) const;

  FusionMode fusion() const { return fusion_; }
  bool trainable_context_encoders() const { return trainable_ctx_; }
  bool from_pretrained() const { return from_pretrained_; }
  void mark_from_pretrained() { from_pretrained_ = true; }

  const TransformerConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  Parameter* src_embed() const { return src_embed_; }
  Parameter* tgt_embed() const { return tgt_embed_; }
  const EncoderStack& pre_encoder() const { return *pre_enc_; }
  const EncoderStack& next_encoder() const { return *next_enc_; }
  const EncoderStack& nmt_encoder() const { return *nmt_enc_; }
  const DecoderStack& decoder() const { return *dec_; }

 private:
  TransformerConfig cfg_;
  FusionMode fusion_;
  bool trainable_ctx_;
  bool from_pretrained_ = false;
  ParamStore store_;
  Parameter* src_embed_;
  Parameter* tgt_embed_;
  std::unique_ptr<EncoderStack> pre_enc_;
  std::unique_ptr<EncoderStack> next_enc_;
  std::unique_ptr<EncoderStack> nmt_enc_;
  std::unique_ptr<DecoderStack> dec_;
  // explicit_attention integration blocks
  std::unique_ptr<AttentionWeights> attn_prev_;
  std::unique_ptr<LayerNormWeights> norm_prev_;
  std::unique_ptr<AttentionWeights> attn_next_;
  std::unique_ptr<LayerNormWeights> norm_next_;
};

/// Copies the shared source embeddings and the pre/next encoder bodies from
/// a pre-training checkpoint (a shared-encoder checkpoint populates both);
/// the NMT encoder body and the decoder keep their fresh initialization.
void init_finetune_from_pretrained(FinetuneModel& model,
                                   const Checkpoint& ckpt,
                                   uint64_t expected_src_vocab_hash = 0);

}  // namespace ctxmt
