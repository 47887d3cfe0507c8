// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#include "ctxmt/train.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <fstream>
#include <memory>

#include "ctxmt/checkpoint.hpp"
#include "ctxmt/error.hpp"

namespace ctxmt {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) {
  return v ? fmt17(*v) : "-";
}

// One whitespace-separated record per step:
// step lr loss_tgt loss_pre loss_next joint
class MetricsLog {
 public:
  explicit MetricsLog(const std::string& path) {
    if (!path.empty()) {
      out_.open(path, std::ios::trunc);
      if (!out_) throw DataError("cannot write metrics log to " + path);
    }
  }
  void record(int64_t step, double lr, const LossBreakdown& bd) {
    if (!out_.is_open()) return;
    out_ << step << " " << fmt17(lr) << " " << fmt_opt(bd.loss_tgt) << " "
         << fmt_opt(bd.loss_pre) << " " << fmt_opt(bd.loss_next) << " "
         << fmt17(bd.joint) << "\n";
    out_.flush();
  }

 private:
  std::ofstream out_;
};

struct BatchAccumulator {
  double sum_tgt = 0, sum_pre = 0, sum_next = 0;
  int64_t toks_tgt = 0, toks_pre = 0, toks_next = 0;

  void add(const Graph& g, const ComponentNodes& nodes) {
    if (nodes.tgt) {
      sum_tgt += g.value(*nodes.tgt).data[0] * nodes.toks_tgt;
      toks_tgt += nodes.toks_tgt;
    }
    if (nodes.pre) {
      sum_pre += g.value(*nodes.pre).data[0] * nodes.toks_pre;
      toks_pre += nodes.toks_pre;
    }
    if (nodes.next) {
      sum_next += g.value(*nodes.next).data[0] * nodes.toks_next;
      toks_next += nodes.toks_next;
    }
  }

  LossBreakdown breakdown(double mu, double lambda) const {
    LossBreakdown bd;
    if (toks_tgt > 0) bd.loss_tgt = sum_tgt / toks_tgt;
    if (toks_pre > 0) bd.loss_pre = sum_pre / toks_pre;
    if (toks_next > 0) bd.loss_next = sum_next / toks_next;
    bd.joint = combine_losses(bd.loss_tgt, bd.loss_pre, bd.loss_next, mu,
                              lambda);
    return bd;
  }
};

}  // namespace

TrainOptions TrainOptions::from_config(const RunConfig& cfg) {
  TrainOptions o;
  o.max_steps = cfg.training_max_steps;
  o.eval_interval = cfg.training_eval_interval;
  o.patience = cfg.training_patience;
  o.budget_tokens = cfg.training_budget_tokens;
  o.seed = static_cast<uint64_t>(cfg.training_seed);
  o.clip_norm = cfg.training_clip_norm;
  o.schedule = LRSchedule{cfg.model_d_model, cfg.training_warmup_steps,
                          cfg.training_lr_factor};
  o.adam_beta1 = cfg.training_adam_beta1;
  o.adam_beta2 = cfg.training_adam_beta2;
  o.adam_epsilon = cfg.training_adam_epsilon;
  o.config_text = cfg.serialize();
  return o;
}

LossBreakdown evaluate_dataset(const std::vector<TrainingInstance>& insts,
                               const InstanceForward& forward, double mu,
                               double lambda) {
  BatchAccumulator acc;
  for (const TrainingInstance& inst : insts) {
    Graph g(0);
    g.set_inference(true);
    ComponentNodes nodes = forward(g, inst);
    acc.add(g, nodes);
  }
  return acc.breakdown(mu, lambda);
}

TrainResult train_loop(ParamStore& params,
                       const std::vector<TrainingInstance>& train,
                       const std::vector<TrainingInstance>& dev,
                       const InstanceForward& forward, double mu,
                       double lambda, const TrainOptions& opts) {
  if (train.empty()) throw DataError("training corpus is empty");
  params.alloc_grads();
  AdamState adam = AdamState::init(params, opts.adam_beta1, opts.adam_beta2,
                                   opts.adam_epsilon);
  MetricsLog metrics(opts.metrics_path);
  TrainResult result;
  result.best_dev = std::numeric_limits<double>::infinity();
  bool saved_any = false;
  int bad_evals = 0;

  uint64_t epoch = 0;
  std::vector<Batch> batches =
      batch_by_tokens(train, opts.budget_tokens, Rng::derive(opts.seed, 0));
  size_t batch_idx = 0;

  auto save_ckpt = [&](int64_t step) {
    if (opts.checkpoint_path.empty()) return;
    Checkpoint ckpt =
        snapshot(params, opts.config_text, step, opts.src_vocab_hash,
                 opts.tgt_vocab_hash, opts.save_optimizer ? &adam : nullptr);
    save_checkpoint(ckpt, opts.checkpoint_path);
    saved_any = true;
  };

  for (int64_t step = 1; step <= opts.max_steps; ++step) {
    if (batch_idx >= batches.size()) {
      ++epoch;
      batches = batch_by_tokens(train, opts.budget_tokens,
                                Rng::derive(opts.seed, epoch));
      batch_idx = 0;
    }
    const Batch& batch = batches[batch_idx++];

    // forward every instance first so component token totals are known,
    // then backprop with per-instance token weights
    std::vector<std::unique_ptr<Graph>> graphs;
    std::vector<ComponentNodes> nodes;
    graphs.reserve(batch.instances.size());
    nodes.reserve(batch.instances.size());
    BatchAccumulator acc;
    for (size_t i = 0; i < batch.instances.size(); ++i) {
      uint64_t g_seed =
          Rng::derive(Rng::derive(opts.seed, static_cast<uint64_t>(step)), i);
      graphs.push_back(std::make_unique<Graph>(g_seed));
      const TrainingInstance& inst =
          train[static_cast<size_t>(batch.instances[i])];
      nodes.push_back(forward(*graphs.back(), inst));
      acc.add(*graphs.back(), nodes.back());
    }
    LossBreakdown bd = acc.breakdown(mu, lambda);
    if (!std::isfinite(bd.joint)) {
      std::string detail = saved_any
                               ? "; last good checkpoint: " +
                                     opts.checkpoint_path
                               : "";
      throw NumericalError("joint loss became non-finite at step " +
                           std::to_string(step) + detail);
    }

    params.zero_grads();
    for (size_t i = 0; i < graphs.size(); ++i) {
      Graph& g = *graphs[i];
      const ComponentNodes& cn = nodes[i];
      std::optional<NodeId> combined;
      auto accumulate = [&](const std::optional<NodeId>& node, double coeff,
                            int64_t toks, int64_t total) {
        if (!node || total == 0) return;
        NodeId term = g.scale(*node, coeff * static_cast<double>(toks) /
                                         static_cast<double>(total));
        combined = combined ? g.add(*combined, term) : term;
      };
      accumulate(cn.tgt, 1.0, cn.toks_tgt, acc.toks_tgt);
      accumulate(cn.pre, mu, cn.toks_pre, acc.toks_pre);
      accumulate(cn.next, lambda, cn.toks_next, acc.toks_next);
      if (combined) g.backward(*combined);
    }
    clip_gradients(params, opts.clip_norm);
    double lr = opts.schedule.rate(step);
    adam_step(params, adam, opts.schedule);
    metrics.record(step, lr, bd);
    result.final_train = bd;
    result.steps = step;

    if (opts.eval_interval > 0 && !dev.empty() &&
        step % opts.eval_interval == 0) {
      LossBreakdown devbd = evaluate_dataset(dev, forward, mu, lambda);
      result.history.push_back({step, devbd});
      if (devbd.joint < result.best_dev) {
        result.best_dev = devbd.joint;
        result.best_step = step;
        bad_evals = 0;
        save_ckpt(step);
      } else {
        ++bad_evals;
        if (bad_evals >= opts.patience) {
          result.early_stopped = true;
          break;
        }
      }
    }
  }

  if (!saved_any) {
    save_ckpt(result.steps);
  } else if (opts.restore_best && result.best_step > 0 &&
             !opts.checkpoint_path.empty()) {
    load_params(load_checkpoint(opts.checkpoint_path), params);
  }
  return result;
}

TrainResult train_baseline(NmtModel& model,
                           const std::vector<TrainingInstance>& train,
                           const std::vector<TrainingInstance>& dev,
                           const TrainOptions& opts) {
  InstanceForward fwd = [&model](Graph& g, const TrainingInstance& inst) {
    return model.forward(g, inst);
  };
  return train_loop(model.params(), train, dev, fwd, 0.0, 0.0, opts);
}

TrainResult train_joint_step1(JointModel& model,
                              const std::vector<TrainingInstance>& train,
                              const std::vector<TrainingInstance>& dev,
                              const JointLossWeights& weights, JointMode mode,
                              bool ctx_none_losses, const TrainOptions& opts) {
  InstanceForward fwd = [&model, mode, ctx_none_losses](
                            Graph& g, const TrainingInstance& inst) {
    return model.forward(g, inst, mode, ctx_none_losses);
  };
  return train_loop(model.params(), train, dev, fwd, weights.mu,
                    weights.lambda, opts);
}

NmtModel train_joint_step2(const JointModel& joint,
                           const std::vector<TrainingInstance>& train,
                           const std::vector<TrainingInstance>& dev,
                           const TrainOptions& opts, TrainResult* result) {
  // the pre/next decoders drop out of the graph and the optimizer; the
  // optimizer itself restarts (fresh moments) for the continued run
  NmtModel nmt = extract_nmt(joint);
  TrainResult r = train_baseline(nmt, train, dev, opts);
  if (result) *result = r;
  return nmt;
}

TrainResult train_pretrain(PretrainModel& model,
                           const std::vector<TrainingInstance>& train,
                           const std::vector<TrainingInstance>& dev,
                           bool ctx_none_losses, const TrainOptions& opts) {
  InstanceForward fwd = [&model, ctx_none_losses](Graph& g,
                                                  const TrainingInstance& i) {
    return model.forward(g, i, ctx_none_losses);
  };
  // unit weights per the pre-training loss definition
  return train_loop(model.params(), train, dev, fwd, 1.0, 1.0, opts);
}

TrainResult train_finetune(FinetuneModel& model,
                           const std::vector<TrainingInstance>& train,
                           const std::vector<TrainingInstance>& dev,
                           const TrainOptions& opts) {
  InstanceForward fwd = [&model](Graph& g, const TrainingInstance& inst) {
    return model.forward(g, inst);
  };
  return train_loop(model.params(), train, dev, fwd, 0.0, 0.0, opts);
}

}  // namespace ctxmt
