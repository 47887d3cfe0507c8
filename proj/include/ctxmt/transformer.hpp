// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctxmt/graph.hpp"
#include "ctxmt/params.hpp"

namespace ctxmt {

struct TransformerConfig {
  int d_model = 512;
  int d_ff = 2048;
  int num_layers = 6;
  int num_heads = 8;
  int src_vocab = 0;
  int tgt_vocab = 0;
  int max_len = 160;
  double dropout = 0.1;
  double label_smoothing = 0.1;
  double layer_norm_eps = 1e-6;
  bool pre_norm = false;   // post-norm (residual then normalize) by default
  bool tie_output = true;  // decoder output projection tied to its embedding

  void validate() const;  // throws ConfigError
};

/// Boolean attention mask, true = attend allowed, row-major
/// [query_len * key_len].
struct AttentionMask {
  enum class Kind { padding, causal, combined, full };
  Kind kind = Kind::full;
  int query_len = 0;
  int key_len = 0;
  std::vector<uint8_t> allowed;

  bool at(int q, int k) const {
    return allowed[static_cast<size_t>(q) * key_len + k] != 0;
  }

  static AttentionMask full(int query_len, int key_len);
  /// Entry (i, j) allowed iff j <= i.
  static AttentionMask causal(int len);
  /// Forbids attention to pad key positions only.
  static AttentionMask padding(const std::vector<uint8_t>& key_is_pad,
                               int query_len);
  /// Causal and pad-forbidding at once.
  static AttentionMask combined(const std::vector<uint8_t>& key_is_pad);
};

/// Sinusoidal table: sin on even dimensions, cos on odd, frequency
/// 1/10000^(2i/d_model). All entries lie in [-1, 1].
Tensor positional_encoding(int length, int d_model);

struct AttentionWeights {
  Parameter* wq;
  Parameter* bq;
  Parameter* wk;
  Parameter* bk;
  Parameter* wv;
  Parameter* bv;
  Parameter* wo;
  Parameter* bo;
};

struct LayerNormWeights {
  Parameter* gain;
  Parameter* bias;
};

struct FeedForwardWeights {
  Parameter* w1;
  Parameter* b1;
  Parameter* w2;
  Parameter* b2;
};

/// Registers one attention block (four d_model x d_model projections with
/// biases) under `prefix.` in the store.
AttentionWeights make_attention_weights(ParamStore& store,
                                        const std::string& prefix, int d_model,
                                        Rng& rng);
LayerNormWeights make_layer_norm_weights(ParamStore& store,
                                         const std::string& prefix,
                                         int d_model);

/// Scaled dot-product attention per head (scale 1/sqrt(d_model/num_heads)),
/// masked positions receive exactly zero weight, heads concatenated then
/// projected. q [Lq,d], k/v [Lk,d], mask [Lq,Lk].
NodeId multi_head_attention(Graph& g, NodeId q, NodeId k, NodeId v,
                            const AttentionMask& mask,
                            const AttentionWeights& w, int num_heads);

struct EncoderLayerWeights {
  AttentionWeights self_attn;
  LayerNormWeights norm_attn;
  FeedForwardWeights ff;
  LayerNormWeights norm_ff;
};

struct DecoderLayerWeights {
  AttentionWeights self_attn;
  LayerNormWeights norm_self;
  AttentionWeights cross_attn;
  LayerNormWeights norm_cross;
  FeedForwardWeights ff;
  LayerNormWeights norm_ff;
};

/// Transformer encoder: scaled embeddings + positions, then num_layers of
/// (self-attention, feed-forward) with residuals and normalization.
class EncoderStack {
 public:
  EncoderStack(ParamStore& store, const std::string& prefix,
               const TransformerConfig& cfg, Parameter* embed, Rng& rng);

  /// Encodes a token sequence; output [len, d_model].
  NodeId encode(Graph& g, const std::vector<int>& tokens,
                const AttentionMask* pad_mask = nullptr) const;

  /// Runs the stack on already-fused raw embeddings [len, d_model]
  /// (embedding scale and positions are applied here, as for tokens).
  NodeId encode_embeddings(Graph& g, NodeId raw_embeddings,
                           const AttentionMask* pad_mask = nullptr) const;

  Parameter* embed() const { return embed_; }
  const std::string& prefix() const { return prefix_; }
  int64_t body_param_count() const;  // actual storage, embeddings excluded

 private:
  const TransformerConfig cfg_;
  std::string prefix_;
  Parameter* embed_;
  std::vector<EncoderLayerWeights> layers_;
};

/// Transformer decoder with causal self-attention, cross-attention over an
/// encoder memory, and a vocabulary projection (tied to out_embed unless the
/// config unties it, in which case a fresh projection matrix is registered).
class DecoderStack {
 public:
  DecoderStack(ParamStore& store, const std::string& prefix,
               const TransformerConfig& cfg, Parameter* in_embed,
               Parameter* out_embed, int vocab, Rng& rng);

  /// Teacher-forced logits [len(tgt_input), vocab]; position t sees target
  /// positions <= t and all of memory.
  NodeId decode(Graph& g, const std::vector<int>& tgt_input, NodeId memory,
                const AttentionMask* memory_mask = nullptr) const;

  Parameter* in_embed() const { return in_embed_; }
  int vocab() const { return vocab_; }
  const std::string& prefix() const { return prefix_; }
  int64_t body_param_count() const;  // embeddings excluded, projection
                                     // included only when untied

 private:
  const TransformerConfig cfg_;
  std::string prefix_;
  Parameter* in_embed_;
  Parameter* out_embed_;      // tied projection table
  Parameter* out_proj_ = nullptr;  // untied projection, else null
  int vocab_;
  std::vector<DecoderLayerWeights> layers_;
};

// Closed-form parameter counts (embeddings excluded). The encoder formula is
//   num_layers * (4 d^2 + 4 d + 2 d d_ff + d_ff + d + 4 d)
// i.e. per layer: q/k/v/o projections with biases, the two feed-forward
// matrices with biases, and two layer norms (gain + bias).
int64_t encoder_body_param_count(const TransformerConfig& cfg);
int64_t decoder_body_param_count(const TransformerConfig& cfg, int vocab);
int64_t embedding_param_count(int vocab, int d_model);

}  // namespace ctxmt
