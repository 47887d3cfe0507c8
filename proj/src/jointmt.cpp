// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#include "ctxmt/jointmt.hpp"

#include "ctxmt/error.hpp"

namespace ctxmt {

JointMode parse_joint_mode(const std::string& s) {
  if (s == "pre") return JointMode::pre;
  if (s == "next") return JointMode::next;
  if (s == "pre+next") return JointMode::pre_next;
  throw ConfigError("joint mode must be pre, next or pre+next, got '" + s +
                    "'");
}

std::string joint_mode_name(JointMode m) {
  switch (m) {
    case JointMode::pre:
      return "pre";
    case JointMode::next:
      return "next";
    case JointMode::pre_next:
      return "pre+next";
  }
  return "?";
}

JointModel::JointModel(const TransformerConfig& cfg, uint64_t seed)
    : cfg_(cfg) {
  cfg.validate();
  if (cfg.src_vocab <= 0 || cfg.tgt_vocab <= 0) {
    throw ConfigError("model vocabulary sizes must be positive");
  }
  Rng rng(seed);
  src_embed_ = store_.add("src_embed",
                          embedding_init(cfg.src_vocab, cfg.d_model, rng));
  tgt_embed_ = store_.add("tgt_embed",
                          embedding_init(cfg.tgt_vocab, cfg.d_model, rng));
  encoder_ = std::make_unique<EncoderStack>(store_, "encoder", cfg,
                                            src_embed_, rng);
  // pre/next decoders emit source-vocabulary logits through the shared table
  pre_dec_ = std::make_unique<DecoderStack>(store_, "pre_decoder", cfg,
                                            src_embed_, src_embed_,
                                            cfg.src_vocab, rng);
  next_dec_ = std::make_unique<DecoderStack>(store_, "next_decoder", cfg,
                                             src_embed_, src_embed_,
                                             cfg.src_vocab, rng);
  tgt_dec_ = std::make_unique<DecoderStack>(store_, "decoder", cfg,
                                            tgt_embed_, tgt_embed_,
                                            cfg.tgt_vocab, rng);
}

NodeId JointModel::encode(Graph& g, const std::vector<int>& src) const {
  return encoder_->encode(g, with_eos(src));
}

ComponentNodes JointModel::forward(Graph& g, const TrainingInstance& inst,
                                   JointMode mode,
                                   bool ctx_none_losses) const {
  if (!inst.tgt) {
    throw DataError("joint training requires a target sentence");
  }
  ComponentNodes out;
  // the current sentence is encoded exactly once; every active decoder
  // reads this same memory node
  out.memory = encode(g, inst.cur_src);
  out.tgt = sequence_loss(g, *tgt_dec_, out.memory, *inst.tgt,
                          cfg_.label_smoothing);
  out.toks_tgt = static_cast<int64_t>(inst.tgt->size()) + 1;

  bool want_pre = mode == JointMode::pre || mode == JointMode::pre_next;
  bool want_next = mode == JointMode::next || mode == JointMode::pre_next;
  if (want_pre && (inst.prev_src || ctx_none_losses)) {
    std::vector<int> prev = context_or_placeholder(inst.prev_src);
    out.pre = sequence_loss(g, *pre_dec_, out.memory, prev,
                            cfg_.label_smoothing);
    out.toks_pre = static_cast<int64_t>(prev.size()) + 1;
  }
  if (want_next && (inst.next_src || ctx_none_losses)) {
    std::vector<int> next = context_or_placeholder(inst.next_src);
    out.next = sequence_loss(g, *next_dec_, out.memory, next,
                             cfg_.label_smoothing);
    out.toks_next = static_cast<int64_t>(next.size()) + 1;
  }
  return out;
}

NmtModel extract_nmt(const JointModel& joint) {
  NmtModel nmt(joint.config(), /*seed=*/0);
  for (const auto& p : nmt.params().list()) {
    const Parameter* src = joint.params().find(p->name);
    if (!src) {
      throw Error("joint model lacks parameter '" + p->name +
                  "' expected by the NMT subgraph");
    }
    if (src->tensor.shape != p->tensor.shape) {
      throw ShapeError("parameter '" + p->name + "' shape mismatch");
    }
    p->tensor.data = src->tensor.data;
  }
  return nmt;
}

void init_joint_from_pretrained(JointModel& model, const Checkpoint& ckpt,
                                uint64_t expected_src_vocab_hash) {
  const NamedTensor* embed = ckpt.find("src_embed");
  if (!embed) {
    throw DataError("checkpoint carries no source embedding table");
  }
  Tensor& dst = model.src_embed()->tensor;
  if (embed->tensor.rows() != dst.rows()) {
    throw DataError("source vocabulary size mismatch: checkpoint has " +
                    std::to_string(embed->tensor.rows()) + ", model has " +
                    std::to_string(dst.rows()));
  }
  if (embed->tensor.cols() != dst.cols()) {
    throw DataError("d_model mismatch: checkpoint embeddings are " +
                    std::to_string(embed->tensor.cols()) + "-dimensional, "
                    "model expects " + std::to_string(dst.cols()));
  }
  if (expected_src_vocab_hash != 0 && ckpt.src_vocab_hash != 0 &&
      expected_src_vocab_hash != ckpt.src_vocab_hash) {
    throw DataError("source vocabulary hash mismatch between checkpoint and "
                    "current run");
  }
  dst.data = embed->tensor.data;
}

}  // namespace ctxmt
