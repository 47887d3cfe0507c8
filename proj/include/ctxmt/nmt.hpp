// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ctxmt/corpus.hpp"
#include "ctxmt/graph.hpp"
#include "ctxmt/transformer.hpp"

namespace ctxmt {

// Sequence conventions shared by every model: sources are encoded with a
// trailing EOS; decoders consume BOS + sequence and are trained against
// sequence + EOS; an absent context is represented by the placeholder
// sequence [CTX_NONE].
std::vector<int> with_eos(const std::vector<int>& seq);
std::vector<int> with_bos(const std::vector<int>& seq);
std::vector<int> context_or_placeholder(
    const std::optional<std::vector<int>>& ctx);

/// Per-component loss nodes from one instance forward pass, with the token
/// counts needed for token-weighted batch averaging.
struct ComponentNodes {
  std::optional<NodeId> tgt;
  std::optional<NodeId> pre;
  std::optional<NodeId> next;
  int64_t toks_tgt = 0;
  int64_t toks_pre = 0;
  int64_t toks_next = 0;
  NodeId memory;  // encoder output over the current sentence
};

/// Component losses as floats. joint is combined left to right as
/// tgt + mu * pre + lambda * next, absent terms skipped.
struct LossBreakdown {
  std::optional<double> loss_tgt;
  std::optional<double> loss_pre;
  std::optional<double> loss_next;
  double joint = 0.0;
};

double combine_losses(const std::optional<double>& tgt,
                      const std::optional<double>& pre,
                      const std::optional<double>& next, double mu,
                      double lambda);
LossBreakdown breakdown_from(const Graph& g, const ComponentNodes& nodes,
                             double mu, double lambda);

/// Teacher-forced sequence loss: decode BOS + out_seq against out_seq + EOS.
NodeId sequence_loss(Graph& g, const DecoderStack& dec, NodeId memory,
                     const std::vector<int>& out_seq, double label_smoothing);

/// Named parameter totals grouped by top-level component prefix; shared
/// tables are stored once and therefore counted once.
struct ParamCountReport {
  std::vector<std::pair<std::string, int64_t>> components;
  int64_t total = 0;
  std::string to_string() const;
};
ParamCountReport param_count(const ParamStore& store);

/// Baseline sentence-level Transformer (one encoder, one decoder).
class NmtModel {
 public:
  NmtModel(const TransformerConfig& cfg, uint64_t seed);

  ComponentNodes forward(Graph& g, const TrainingInstance& inst) const;
  NodeId encode(Graph& g, const std::vector<int>& src) const;
  NodeId decode_logits(Graph& g, const std::vector<int>& input_with_bos,
                       NodeId memory) const;

  const TransformerConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  Parameter* src_embed() const { return src_embed_; }
  Parameter* tgt_embed() const { return tgt_embed_; }
  const EncoderStack& encoder() const { return *encoder_; }
  const DecoderStack& decoder() const { return *decoder_; }

 private:
  TransformerConfig cfg_;
  ParamStore store_;
  Parameter* src_embed_;
  Parameter* tgt_embed_;
  std::unique_ptr<EncoderStack> encoder_;
  std::unique_ptr<DecoderStack> decoder_;
};

}  // namespace ctxmt
