// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#include "ctxmt/transformer.hpp"

#include <cmath>

#include "ctxmt/error.hpp"

namespace ctxmt {

void TransformerConfig::validate() const {
  if (d_model <= 0 || d_ff <= 0 || num_layers <= 0 || num_heads <= 0) {
    throw ConfigError("transformer dimensions must be positive");
  }
  if (d_model % num_heads != 0) {
    throw ConfigError("d_model (" + std::to_string(d_model) +
                      ") must be divisible by num_heads (" +
                      std::to_string(num_heads) + ")");
  }
  if (max_len <= 0) throw ConfigError("max_len must be positive");
  if (dropout < 0.0 || dropout >= 1.0) {
    throw ConfigError("dropout must be in [0, 1)");
  }
  if (label_smoothing < 0.0 || label_smoothing >= 1.0) {
    throw ConfigError("label_smoothing must be in [0, 1)");
  }
}

AttentionMask AttentionMask::full(int query_len, int key_len) {
  AttentionMask m;
  m.kind = Kind::full;
  m.query_len = query_len;
  m.key_len = key_len;
  m.allowed.assign(static_cast<size_t>(query_len) * key_len, 1);
  return m;
}

AttentionMask AttentionMask::causal(int len) {
  AttentionMask m;
  m.kind = Kind::causal;
  m.query_len = len;
  m.key_len = len;
  m.allowed.assign(static_cast<size_t>(len) * len, 0);
  for (int i = 0; i < len; ++i) {
    for (int j = 0; j <= i; ++j) {
      m.allowed[static_cast<size_t>(i) * len + j] = 1;
    }
  }
  return m;
}

AttentionMask AttentionMask::padding(const std::vector<uint8_t>& key_is_pad,
                                     int query_len) {
  AttentionMask m;
  m.kind = Kind::padding;
  m.query_len = query_len;
  m.key_len = static_cast<int>(key_is_pad.size());
  m.allowed.assign(static_cast<size_t>(query_len) * m.key_len, 1);
  for (int q = 0; q < query_len; ++q) {
    for (int k = 0; k < m.key_len; ++k) {
      if (key_is_pad[static_cast<size_t>(k)]) {
        m.allowed[static_cast<size_t>(q) * m.key_len + k] = 0;
      }
    }
  }
  return m;
}

AttentionMask AttentionMask::combined(const std::vector<uint8_t>& key_is_pad) {
  int len = static_cast<int>(key_is_pad.size());
  AttentionMask m = causal(len);
  m.kind = Kind::combined;
  for (int q = 0; q < len; ++q) {
    for (int k = 0; k < len; ++k) {
      if (key_is_pad[static_cast<size_t>(k)]) {
        m.allowed[static_cast<size_t>(q) * len + k] = 0;
      }
    }
  }
  return m;
}

Tensor positional_encoding(int length, int d_model) {
  Tensor pe = Tensor::zeros({length, d_model});
  for (int pos = 0; pos < length; ++pos) {
    for (int i = 0; i < d_model; i += 2) {
      double angle =
          pos * std::exp(-std::log(10000.0) * i / d_model);
      pe.at(pos, i) = std::sin(angle);
      if (i + 1 < d_model) pe.at(pos, i + 1) = std::cos(angle);
    }
  }
  return pe;
}

AttentionWeights make_attention_weights(ParamStore& store,
                                        const std::string& prefix, int d_model,
                                        Rng& rng) {
  AttentionWeights w;
  w.wq = store.add(prefix + ".wq", xavier_uniform(d_model, d_model, rng));
  w.bq = store.add(prefix + ".bq", Tensor::zeros({1, d_model}));
  w.wk = store.add(prefix + ".wk", xavier_uniform(d_model, d_model, rng));
  w.bk = store.add(prefix + ".bk", Tensor::zeros({1, d_model}));
  w.wv = store.add(prefix + ".wv", xavier_uniform(d_model, d_model, rng));
  w.bv = store.add(prefix + ".bv", Tensor::zeros({1, d_model}));
  w.wo = store.add(prefix + ".wo", xavier_uniform(d_model, d_model, rng));
  w.bo = store.add(prefix + ".bo", Tensor::zeros({1, d_model}));
  return w;
}

LayerNormWeights make_layer_norm_weights(ParamStore& store,
                                         const std::string& prefix,
                                         int d_model) {
  LayerNormWeights w;
  w.gain = store.add(prefix + ".gain", Tensor::full({1, d_model}, 1.0));
  w.bias = store.add(prefix + ".bias", Tensor::zeros({1, d_model}));
  return w;
}

static FeedForwardWeights make_ff_weights(ParamStore& store,
                                          const std::string& prefix,
                                          int d_model, int d_ff, Rng& rng) {
  FeedForwardWeights w;
  w.w1 = store.add(prefix + ".w1", xavier_uniform(d_model, d_ff, rng));
  w.b1 = store.add(prefix + ".b1", Tensor::zeros({1, d_ff}));
  w.w2 = store.add(prefix + ".w2", xavier_uniform(d_ff, d_model, rng));
  w.b2 = store.add(prefix + ".b2", Tensor::zeros({1, d_model}));
  return w;
}

NodeId multi_head_attention(Graph& g, NodeId q, NodeId k, NodeId v,
                            const AttentionMask& mask,
                            const AttentionWeights& w, int num_heads) {
  const Tensor& tq = g.value(q);
  const Tensor& tk = g.value(k);
  int d = tq.cols();
  if (d % num_heads != 0) {
    throw ShapeError("attention width not divisible by head count");
  }
  if (mask.query_len != tq.rows() || mask.key_len != tk.rows()) {
    throw ShapeError("attention mask shape does not match q/k lengths");
  }
  int dk = d / num_heads;
  double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  NodeId qp = g.add(g.matmul(q, g.param(w.wq->tensor)), g.param(w.bq->tensor));
  NodeId kp = g.add(g.matmul(k, g.param(w.wk->tensor)), g.param(w.bk->tensor));
  NodeId vp = g.add(g.matmul(v, g.param(w.wv->tensor)), g.param(w.bv->tensor));

  std::vector<NodeId> heads;
  heads.reserve(static_cast<size_t>(num_heads));
  for (int h = 0; h < num_heads; ++h) {
    NodeId qh = g.slice_cols(qp, h * dk, dk);
    NodeId kh = g.slice_cols(kp, h * dk, dk);
    NodeId vh = g.slice_cols(vp, h * dk, dk);
    NodeId scores = g.scale(g.matmul_nt(qh, kh), scale);
    NodeId probs = g.masked_softmax(scores, mask.allowed);
    heads.push_back(g.matmul(probs, vh));
  }
  NodeId cat = num_heads == 1 ? heads[0] : g.concat_cols(heads);
  return g.add(g.matmul(cat, g.param(w.wo->tensor)), g.param(w.bo->tensor));
}

namespace {

NodeId feed_forward(Graph& g, NodeId x, const FeedForwardWeights& w) {
  NodeId h = g.relu(
      g.add(g.matmul(x, g.param(w.w1->tensor)), g.param(w.b1->tensor)));
  return g.add(g.matmul(h, g.param(w.w2->tensor)), g.param(w.b2->tensor));
}

NodeId norm(Graph& g, NodeId x, const LayerNormWeights& w, double eps) {
  return g.layer_norm(x, g.param(w.gain->tensor), g.param(w.bias->tensor),
                      eps);
}

// Residual sublayer in post-norm (norm(x + f(x))) or pre-norm
// (x + f(norm(x))) arrangement, with dropout on the sublayer output.
template <typename F>
NodeId sublayer(Graph& g, NodeId x, const LayerNormWeights& ln,
                const TransformerConfig& cfg, F&& f) {
  if (cfg.pre_norm) {
    NodeId y = f(norm(g, x, ln, cfg.layer_norm_eps));
    return g.add(x, g.dropout(y, cfg.dropout));
  }
  NodeId y = f(x);
  return norm(g, g.add(x, g.dropout(y, cfg.dropout)), ln, cfg.layer_norm_eps);
}

NodeId embed_and_position(Graph& g, NodeId raw, const TransformerConfig& cfg) {
  const Tensor& tr = g.value(raw);
  int len = tr.rows();
  if (len > cfg.max_len) {
    throw DataError("sequence length " + std::to_string(len) +
                    " exceeds max_len " + std::to_string(cfg.max_len));
  }
  NodeId scaled = g.scale(raw, std::sqrt(static_cast<double>(cfg.d_model)));
  NodeId pos = g.constant(positional_encoding(len, cfg.d_model));
  return g.dropout(g.add(scaled, pos), cfg.dropout);
}

}  // namespace

EncoderStack::EncoderStack(ParamStore& store, const std::string& prefix,
                           const TransformerConfig& cfg, Parameter* embed,
                           Rng& rng)
    : cfg_(cfg), prefix_(prefix), embed_(embed) {
  cfg.validate();
  layers_.reserve(static_cast<size_t>(cfg.num_layers));
  for (int l = 0; l < cfg.num_layers; ++l) {
    std::string lp = prefix + ".layer" + std::to_string(l);
    EncoderLayerWeights w;
    w.self_attn = make_attention_weights(store, lp + ".self_attn",
                                         cfg.d_model, rng);
    w.norm_attn = make_layer_norm_weights(store, lp + ".norm_attn",
                                          cfg.d_model);
    w.ff = make_ff_weights(store, lp + ".ff", cfg.d_model, cfg.d_ff, rng);
    w.norm_ff = make_layer_norm_weights(store, lp + ".norm_ff", cfg.d_model);
    layers_.push_back(w);
  }
}

NodeId EncoderStack::encode(Graph& g, const std::vector<int>& tokens,
                            const AttentionMask* pad_mask) const {
  if (tokens.empty()) throw Error("encode: empty token sequence");
  NodeId raw = g.lookup(g.param(embed_->tensor), tokens);
  return encode_embeddings(g, raw, pad_mask);
}

NodeId EncoderStack::encode_embeddings(Graph& g, NodeId raw,
                                       const AttentionMask* pad_mask) const {
  int len = g.value(raw).rows();
  AttentionMask full = AttentionMask::full(len, len);
  const AttentionMask& mask = pad_mask ? *pad_mask : full;
  NodeId x = embed_and_position(g, raw, cfg_);
  for (const EncoderLayerWeights& w : layers_) {
    x = sublayer(g, x, w.norm_attn, cfg_, [&](NodeId in) {
      return multi_head_attention(g, in, in, in, mask, w.self_attn,
                                  cfg_.num_heads);
    });
    x = sublayer(g, x, w.norm_ff, cfg_,
                 [&](NodeId in) { return feed_forward(g, in, w.ff); });
  }
  return x;
}

int64_t EncoderStack::body_param_count() const {
  int64_t n = 0;
  for (const EncoderLayerWeights& w : layers_) {
    for (Parameter* p :
         {w.self_attn.wq, w.self_attn.bq, w.self_attn.wk, w.self_attn.bk,
          w.self_attn.wv, w.self_attn.bv, w.self_attn.wo, w.self_attn.bo,
          w.norm_attn.gain, w.norm_attn.bias, w.ff.w1, w.ff.b1, w.ff.w2,
          w.ff.b2, w.norm_ff.gain, w.norm_ff.bias}) {
      n += p->tensor.numel();
    }
  }
  return n;
}

DecoderStack::DecoderStack(ParamStore& store, const std::string& prefix,
                           const TransformerConfig& cfg, Parameter* in_embed,
                           Parameter* out_embed, int vocab, Rng& rng)
    : cfg_(cfg),
      prefix_(prefix),
      in_embed_(in_embed),
      out_embed_(out_embed),
      vocab_(vocab) {
  cfg.validate();
  layers_.reserve(static_cast<size_t>(cfg.num_layers));
  for (int l = 0; l < cfg.num_layers; ++l) {
    std::string lp = prefix + ".layer" + std::to_string(l);
    DecoderLayerWeights w;
    w.self_attn = make_attention_weights(store, lp + ".self_attn",
                                         cfg.d_model, rng);
    w.norm_self = make_layer_norm_weights(store, lp + ".norm_self",
                                          cfg.d_model);
    w.cross_attn = make_attention_weights(store, lp + ".cross_attn",
                                          cfg.d_model, rng);
    w.norm_cross = make_layer_norm_weights(store, lp + ".norm_cross",
                                           cfg.d_model);
    w.ff = make_ff_weights(store, lp + ".ff", cfg.d_model, cfg.d_ff, rng);
    w.norm_ff = make_layer_norm_weights(store, lp + ".norm_ff", cfg.d_model);
    layers_.push_back(w);
  }
  if (!cfg.tie_output) {
    out_proj_ = store.add(prefix + ".out_proj",
                          xavier_uniform(cfg.d_model, vocab, rng));
  }
}

NodeId DecoderStack::decode(Graph& g, const std::vector<int>& tgt_input,
                            NodeId memory,
                            const AttentionMask* memory_mask) const {
  if (tgt_input.empty()) throw Error("decode: empty target sequence");
  int tlen = static_cast<int>(tgt_input.size());
  int slen = g.value(memory).rows();
  AttentionMask causal = AttentionMask::causal(tlen);
  AttentionMask mem_full = AttentionMask::full(tlen, slen);
  const AttentionMask& mem_mask = memory_mask ? *memory_mask : mem_full;

  NodeId raw = g.lookup(g.param(in_embed_->tensor), tgt_input);
  NodeId x = embed_and_position(g, raw, cfg_);
  for (const DecoderLayerWeights& w : layers_) {
    x = sublayer(g, x, w.norm_self, cfg_, [&](NodeId in) {
      return multi_head_attention(g, in, in, in, causal, w.self_attn,
                                  cfg_.num_heads);
    });
    x = sublayer(g, x, w.norm_cross, cfg_, [&](NodeId in) {
      return multi_head_attention(g, in, memory, memory, mem_mask,
                                  w.cross_attn, cfg_.num_heads);
    });
    x = sublayer(g, x, w.norm_ff, cfg_,
                 [&](NodeId in) { return feed_forward(g, in, w.ff); });
  }
  if (out_proj_) return g.matmul(x, g.param(out_proj_->tensor));
  return g.matmul_nt(x, g.param(out_embed_->tensor));
}

int64_t DecoderStack::body_param_count() const {
  int64_t n = 0;
  for (const DecoderLayerWeights& w : layers_) {
    for (Parameter* p :
         {w.self_attn.wq, w.self_attn.bq, w.self_attn.wk, w.self_attn.bk,
          w.self_attn.wv, w.self_attn.bv, w.self_attn.wo, w.self_attn.bo,
          w.norm_self.gain, w.norm_self.bias, w.cross_attn.wq, w.cross_attn.bq,
          w.cross_attn.wk, w.cross_attn.bk, w.cross_attn.wv, w.cross_attn.bv,
          w.cross_attn.wo, w.cross_attn.bo, w.norm_cross.gain,
          w.norm_cross.bias, w.ff.w1, w.ff.b1, w.ff.w2, w.ff.b2,
          w.norm_ff.gain, w.norm_ff.bias}) {
      n += p->tensor.numel();
    }
  }
  if (out_proj_) n += out_proj_->tensor.numel();
  return n;
}

int64_t encoder_body_param_count(const TransformerConfig& cfg) {
  int64_t d = cfg.d_model, ff = cfg.d_ff;
  return static_cast<int64_t>(cfg.num_layers) *
         (4 * d * d + 4 * d + 2 * d * ff + ff + d + 4 * d);
}

int64_t decoder_body_param_count(const TransformerConfig& cfg, int vocab) {
  int64_t d = cfg.d_model, ff = cfg.d_ff;
  int64_t per_layer = 8 * d * d + 8 * d + 2 * d * ff + ff + d + 6 * d;
  int64_t n = static_cast<int64_t>(cfg.num_layers) * per_layer;
  if (!cfg.tie_output) n += d * vocab;
  return n;
}

int64_t embedding_param_count(int vocab, int d_model) {
  return static_cast<int64_t>(vocab) * d_model;
}

}  // namespace ctxmt
