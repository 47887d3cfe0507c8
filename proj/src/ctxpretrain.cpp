// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#include "ctxmt/ctxpretrain.hpp"

#include "ctxmt/error.hpp"

namespace ctxmt {

EncoderMode parse_encoder_mode(const std::string& s) {
  if (s == "two_encoders") return EncoderMode::two_encoders;
  if (s == "shared_encoder") return EncoderMode::shared_encoder;
  throw ConfigError(
      "encoder mode must be two_encoders or shared_encoder, got '" + s + "'");
}

FusionMode parse_fusion_mode(const std::string& s) {
  if (s == "sum_mean_pooled") return FusionMode::sum_mean_pooled;
  if (s == "embeddings_only") return FusionMode::embeddings_only;
  if (s == "explicit_attention") return FusionMode::explicit_attention;
  throw ConfigError("fusion mode must be sum_mean_pooled, embeddings_only or "
                    "explicit_attention, got '" + s + "'");
}

std::string fusion_mode_name(FusionMode m) {
  switch (m) {
    case FusionMode::sum_mean_pooled:
      return "sum_mean_pooled";
    case FusionMode::embeddings_only:
      return "embeddings_only";
    case FusionMode::explicit_attention:
      return "explicit_attention";
  }
  return "?";
}

PretrainModel::PretrainModel(const TransformerConfig& cfg, uint64_t seed,
                             EncoderMode mode)
    : cfg_(cfg), mode_(mode) {
  cfg.validate();
  if (cfg.src_vocab <= 0) {
    throw ConfigError("pre-training requires a positive source vocabulary");
  }
  Rng rng(seed);
  src_embed_ = store_.add("src_embed",
                          embedding_init(cfg.src_vocab, cfg.d_model, rng));
  if (mode == EncoderMode::shared_encoder) {
    pre_enc_ = std::make_unique<EncoderStack>(store_, "encoder", cfg,
                                              src_embed_, rng);
  } else {
    pre_enc_ = std::make_unique<EncoderStack>(store_, "pre_encoder", cfg,
                                              src_embed_, rng);
    next_enc_ = std::make_unique<EncoderStack>(store_, "next_encoder", cfg,
                                               src_embed_, rng);
  }
  pre_dec_ = std::make_unique<DecoderStack>(store_, "pre_decoder", cfg,
                                            src_embed_, src_embed_,
                                            cfg.src_vocab, rng);
  next_dec_ = std::make_unique<DecoderStack>(store_, "next_decoder", cfg,
                                             src_embed_, src_embed_,
                                             cfg.src_vocab, rng);
}

ComponentNodes PretrainModel::forward(Graph& g, const TrainingInstance& inst,
                                      bool ctx_none_losses) const {
  if (inst.tgt) {
    throw DataError("pre-training instances are monolingual triples");
  }
  ComponentNodes out;
  std::vector<int> cur = with_eos(inst.cur_src);
  NodeId pre_memory = pre_enc_->encode(g, cur);
  NodeId next_memory = mode_ == EncoderMode::shared_encoder
                           ? pre_memory
                           : next_enc_->encode(g, cur);
  out.memory = pre_memory;
  if (inst.prev_src || ctx_none_losses) {
    std::vector<int> prev = context_or_placeholder(inst.prev_src);
    out.pre = sequence_loss(g, *pre_dec_, pre_memory, prev,
                            cfg_.label_smoothing);
    out.toks_pre = static_cast<int64_t>(prev.size()) + 1;
  }
  if (inst.next_src || ctx_none_losses) {
    std::vector<int> next = context_or_placeholder(inst.next_src);
    out.next = sequence_loss(g, *next_dec_, next_memory, next,
                             cfg_.label_smoothing);
    out.toks_next = static_cast<int64_t>(next.size()) + 1;
  }
  return out;
}

NodeId fuse_context(Graph& g, NodeId cur_embeddings,
                    std::optional<NodeId> prev_states,
                    std::optional<NodeId> next_states, FusionMode mode) {
  if (mode == FusionMode::embeddings_only) return cur_embeddings;
  if (mode == FusionMode::explicit_attention) {
    throw Error("explicit_attention fuses after the encoder stack, not at "
                "the embedding input");
  }
  int d = g.value(cur_embeddings).cols();
  NodeId x = cur_embeddings;
  for (const std::optional<NodeId>& ctx : {prev_states, next_states}) {
    if (!ctx) continue;
    if (g.value(*ctx).cols() != d) {
      throw ShapeError("context states are " +
                       std::to_string(g.value(*ctx).cols()) +
                       "-dimensional, embeddings are " + std::to_string(d));
    }
    x = g.add(x, g.mean_rows(*ctx));
  }
  return x;
}

NodeId explicit_context_attend(Graph& g, NodeId cur_states, NodeId ctx_states,
                               const AttentionWeights& w,
                               const LayerNormWeights& ln, int num_heads,
                               double eps, double dropout) {
  int lq = g.value(cur_states).rows();
  int lk = g.value(ctx_states).rows();
  NodeId attended = multi_head_attention(g, cur_states, ctx_states, ctx_states,
                                         AttentionMask::full(lq, lk), w,
                                         num_heads);
  NodeId residual = g.add(cur_states, g.dropout(attended, dropout));
  return g.layer_norm(residual, g.param(ln.gain->tensor),
                      g.param(ln.bias->tensor), eps);
}

FinetuneModel::FinetuneModel(const TransformerConfig& cfg, FusionMode fusion,
                             bool trainable_context_encoders, uint64_t seed)
    : cfg_(cfg), fusion_(fusion), trainable_ctx_(trainable_context_encoders) {
  cfg.validate();
  if (cfg.src_vocab <= 0 || cfg.tgt_vocab <= 0) {
    throw ConfigError("model vocabulary sizes must be positive");
  }
  Rng rng(seed);
  src_embed_ = store_.add("src_embed",
                          embedding_init(cfg.src_vocab, cfg.d_model, rng));
  tgt_embed_ = store_.add("tgt_embed",
                          embedding_init(cfg.tgt_vocab, cfg.d_model, rng));
  pre_enc_ = std::make_unique<EncoderStack>(store_, "pre_encoder", cfg,
                                            src_embed_, rng);
  next_enc_ = std::make_unique<EncoderStack>(store_, "next_encoder", cfg,
                                             src_embed_, rng);
  nmt_enc_ = std::make_unique<EncoderStack>(store_, "encoder", cfg,
                                            src_embed_, rng);
  dec_ = std::make_unique<DecoderStack>(store_, "decoder", cfg, tgt_embed_,
                                        tgt_embed_, cfg.tgt_vocab, rng);
  if (fusion == FusionMode::explicit_attention) {
    attn_prev_ = std::make_unique<AttentionWeights>(
        make_attention_weights(store_, "ctx_attn_prev", cfg.d_model, rng));
    norm_prev_ = std::make_unique<LayerNormWeights>(
        make_layer_norm_weights(store_, "ctx_norm_prev", cfg.d_model));
    attn_next_ = std::make_unique<AttentionWeights>(
        make_attention_weights(store_, "ctx_attn_next", cfg.d_model, rng));
    norm_next_ = std::make_unique<LayerNormWeights>(
        make_layer_norm_weights(store_, "ctx_norm_next", cfg.d_model));
  }
  if (!trainable_ctx_) {
    for (const auto& p : store_.list()) {
      if (p->name.rfind("pre_encoder.", 0) == 0 ||
          p->name.rfind("next_encoder.", 0) == 0) {
        p->tensor.requires_grad = false;
      }
    }
  }
}

NodeId FinetuneModel::encode_with_context(
    Graph& g, const std::vector<int>& cur,
    const std::optional<std::vector<int>>& prev,
    const std::optional<std::vector<int>>& next) const {
  std::vector<int> cur_eos = with_eos(cur);
  switch (fusion_) {
    case FusionMode::embeddings_only:
      return nmt_enc_->encode(g, cur_eos);
    case FusionMode::sum_mean_pooled: {
      // absent contexts contribute the zero vector, i.e. are skipped
      std::optional<NodeId> prev_states, next_states;
      if (prev) prev_states = pre_enc_->encode(g, with_eos(*prev));
      if (next) next_states = next_enc_->encode(g, with_eos(*next));
      NodeId raw = g.lookup(g.param(src_embed_->tensor), cur_eos);
      NodeId fused = fuse_context(g, raw, prev_states, next_states, fusion_);
      return nmt_enc_->encode_embeddings(g, fused);
    }
    case FusionMode::explicit_attention: {
      // absent contexts fall back to the encoded placeholder sequence
      NodeId memory = nmt_enc_->encode(g, cur_eos);
      NodeId prev_states =
          pre_enc_->encode(g, with_eos(context_or_placeholder(prev)));
      memory = explicit_context_attend(g, memory, prev_states, *attn_prev_,
                                       *norm_prev_, cfg_.num_heads,
                                       cfg_.layer_norm_eps, cfg_.dropout);
      NodeId next_states =
          next_enc_->encode(g, with_eos(context_or_placeholder(next)));
      memory = explicit_context_attend(g, memory, next_states, *attn_next_,
                                       *norm_next_, cfg_.num_heads,
                                       cfg_.layer_norm_eps, cfg_.dropout);
      return memory;
    }
  }
  throw Error("unreachable fusion mode");
}

ComponentNodes FinetuneModel::forward(Graph& g,
                                      const TrainingInstance& inst) const {
  if (!inst.tgt) {
    throw DataError("fine-tuning requires a target sentence");
  }
  ComponentNodes out;
  out.memory = encode_with_context(g, inst.cur_src, inst.prev_src,
                                   inst.next_src);
  out.tgt = sequence_loss(g, *dec_, out.memory, *inst.tgt,
                          cfg_.label_smoothing);
  out.toks_tgt = static_cast<int64_t>(inst.tgt->size()) + 1;
  return out;
}

void init_finetune_from_pretrained(FinetuneModel& model,
                                   const Checkpoint& ckpt,
                                   uint64_t expected_src_vocab_hash) {
  if (expected_src_vocab_hash != 0 && ckpt.src_vocab_hash != 0 &&
      expected_src_vocab_hash != ckpt.src_vocab_hash) {
    throw DataError("source vocabulary hash mismatch between checkpoint and "
                    "current run");
  }
  const NamedTensor* embed = ckpt.find("src_embed");
  if (!embed) {
    throw DataError("checkpoint carries no source embedding table");
  }
  Tensor& dst = model.src_embed()->tensor;
  if (embed->tensor.shape != dst.shape) {
    throw DataError("source embedding shape mismatch: checkpoint " +
                    embed->tensor.shape_str() + ", model " + dst.shape_str());
  }
  dst.data = embed->tensor.data;

  // a shared-encoder pre-training checkpoint stores one body under
  // "encoder."; it populates both context encoders
  bool shared = ckpt.find("encoder.layer0.self_attn.wq") != nullptr &&
                ckpt.find("pre_encoder.layer0.self_attn.wq") == nullptr;
  for (const auto& p : model.params().list()) {
    bool is_pre = p->name.rfind("pre_encoder.", 0) == 0;
    bool is_next = p->name.rfind("next_encoder.", 0) == 0;
    if (!is_pre && !is_next) continue;
    std::string src_name = p->name;
    if (shared) {
      size_t dot = p->name.find('.');
      src_name = "encoder" + p->name.substr(dot);
    }
    const NamedTensor* nt = ckpt.find(src_name);
    if (!nt) {
      throw DataError("checkpoint lacks parameter '" + src_name +
                      "' needed to initialize '" + p->name + "'");
    }
    if (nt->tensor.shape != p->tensor.shape) {
      throw DataError("parameter '" + src_name + "' has shape " +
                      nt->tensor.shape_str() + ", model expects " +
                      p->tensor.shape_str());
    }
    p->tensor.data = nt->tensor.data;
  }
  model.mark_from_pretrained();
}

}  // namespace ctxmt
