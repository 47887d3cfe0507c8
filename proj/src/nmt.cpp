// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#include "ctxmt/nmt.hpp"

#include <map>
#include <sstream>

#include "ctxmt/error.hpp"

namespace ctxmt {

std::vector<int> with_eos(const std::vector<int>& seq) {
  std::vector<int> out = seq;
  out.push_back(Vocabulary::kEos);
  return out;
}

std::vector<int> with_bos(const std::vector<int>& seq) {
  std::vector<int> out;
  out.reserve(seq.size() + 1);
  out.push_back(Vocabulary::kBos);
  out.insert(out.end(), seq.begin(), seq.end());
  return out;
}

std::vector<int> context_or_placeholder(
    const std::optional<std::vector<int>>& ctx) {
  if (ctx) return *ctx;
  return {Vocabulary::kCtxNone};
}

double combine_losses(const std::optional<double>& tgt,
                      const std::optional<double>& pre,
                      const std::optional<double>& next, double mu,
                      double lambda) {
  double joint = tgt ? *tgt : 0.0;
  if (pre) joint += mu * *pre;
  if (next) joint += lambda * *next;
  return joint;
}

LossBreakdown breakdown_from(const Graph& g, const ComponentNodes& nodes,
                             double mu, double lambda) {
  LossBreakdown bd;
  if (nodes.tgt) bd.loss_tgt = g.value(*nodes.tgt).data[0];
  if (nodes.pre) bd.loss_pre = g.value(*nodes.pre).data[0];
  if (nodes.next) bd.loss_next = g.value(*nodes.next).data[0];
  bd.joint = combine_losses(bd.loss_tgt, bd.loss_pre, bd.loss_next, mu,
                            lambda);
  return bd;
}

NodeId sequence_loss(Graph& g, const DecoderStack& dec, NodeId memory,
                     const std::vector<int>& out_seq, double label_smoothing) {
  NodeId logits = dec.decode(g, with_bos(out_seq), memory);
  return g.cross_entropy(logits, with_eos(out_seq), Vocabulary::kPad,
                         label_smoothing);
}

std::string ParamCountReport::to_string() const {
  std::ostringstream os;
  for (const auto& [name, count] : components) {
    os << name << " " << count << "\n";
  }
  os << "total " << total << "\n";
  return os.str();
}

ParamCountReport param_count(const ParamStore& store) {
  ParamCountReport report;
  std::map<std::string, int64_t> groups;
  std::vector<std::string> order;
  for (const auto& p : store.list()) {
    std::string prefix = p->name.substr(0, p->name.find('.'));
    if (!groups.count(prefix)) order.push_back(prefix);
    groups[prefix] += p->tensor.numel();
    report.total += p->tensor.numel();
  }
  for (const std::string& g : order) {
    report.components.push_back({g, groups[g]});
  }
  return report;
}

NmtModel::NmtModel(const TransformerConfig& cfg, uint64_t seed) : cfg_(cfg) {
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
  decoder_ = std::make_unique<DecoderStack>(store_, "decoder", cfg,
                                            tgt_embed_, tgt_embed_,
                                            cfg.tgt_vocab, rng);
}

NodeId NmtModel::encode(Graph& g, const std::vector<int>& src) const {
  return encoder_->encode(g, with_eos(src));
}

NodeId NmtModel::decode_logits(Graph& g,
                               const std::vector<int>& input_with_bos,
                               NodeId memory) const {
  return decoder_->decode(g, input_with_bos, memory);
}

ComponentNodes NmtModel::forward(Graph& g, const TrainingInstance& inst) const {
  if (!inst.tgt) {
    throw DataError("baseline training requires a target sentence");
  }
  ComponentNodes out;
  out.memory = encode(g, inst.cur_src);
  out.tgt = sequence_loss(g, *decoder_, out.memory, *inst.tgt,
                          cfg_.label_smoothing);
  out.toks_tgt = static_cast<int64_t>(inst.tgt->size()) + 1;
  return out;
}

}  // namespace ctxmt
