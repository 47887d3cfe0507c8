// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ctxmt/config.hpp"
#include "ctxmt/ctxpretrain.hpp"
#include "ctxmt/jointmt.hpp"
#include "ctxmt/nmt.hpp"
#include "ctxmt/optim.hpp"

namespace ctxmt {

struct TrainOptions {
  int64_t max_steps = 1000;
  int eval_interval = 0;  // 0 disables dev evaluation and early stopping
  int patience = 5;
  int64_t budget_tokens = 4096;
  uint64_t seed = 1;
  double clip_norm = 0.0;
  LRSchedule schedule{512, 4000, 1.0};
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.98;
  double adam_epsilon = 1e-9;
  std::string metrics_path;     // empty: no metrics log
  std::string checkpoint_path;  // empty: no checkpoints
  bool save_optimizer = true;
  bool restore_best = true;  // reload the best checkpoint when training ends
  std::string config_text;   // snapshot stored into checkpoints
  uint64_t src_vocab_hash = 0;
  uint64_t tgt_vocab_hash = 0;

  static TrainOptions from_config(const RunConfig& cfg);
};

struct EvalPoint {
  int64_t step = 0;
  LossBreakdown dev;
};

struct TrainResult {
  int64_t steps = 0;
  bool early_stopped = false;
  int64_t best_step = -1;
  double best_dev = 0.0;
  std::vector<EvalPoint> history;
  LossBreakdown final_train;
};

/// Per-instance forward pass producing component loss nodes.
using InstanceForward =
    std::function<ComponentNodes(Graph&, const TrainingInstance&)>;

/// Token-weighted component losses over a dataset (inference mode, no
/// dropout). joint combines with the given weights.
LossBreakdown evaluate_dataset(const std::vector<TrainingInstance>& insts,
                               const InstanceForward& forward, double mu,
                               double lambda);

/// Generic optimizer loop: token-budget batches (re-shuffled per epoch
/// deterministically), token-weighted batch losses, one metrics record per
/// step, periodic dev evaluation with early stopping, best checkpoint by dev
/// joint loss. A non-finite joint loss aborts with NumericalError after the
/// last good checkpoint is kept on disk.
TrainResult train_loop(ParamStore& params,
                       const std::vector<TrainingInstance>& train,
                       const std::vector<TrainingInstance>& dev,
                       const InstanceForward& forward, double mu,
                       double lambda, const TrainOptions& opts);

TrainResult train_baseline(NmtModel& model,
                           const std::vector<TrainingInstance>& train,
                           const std::vector<TrainingInstance>& dev,
                           const TrainOptions& opts);

TrainResult train_joint_step1(JointModel& model,
                              const std::vector<TrainingInstance>& train,
                              const std::vector<TrainingInstance>& dev,
                              const JointLossWeights& weights, JointMode mode,
                              bool ctx_none_losses, const TrainOptions& opts);

/// Removes the pre/next decoders (by extracting the NMT subgraph) and
/// continues training on the target loss only, with a fresh optimizer.
NmtModel train_joint_step2(const JointModel& joint,
                           const std::vector<TrainingInstance>& train,
                           const std::vector<TrainingInstance>& dev,
                           const TrainOptions& opts,
                           TrainResult* result = nullptr);

TrainResult train_pretrain(PretrainModel& model,
                           const std::vector<TrainingInstance>& train,
                           const std::vector<TrainingInstance>& dev,
                           bool ctx_none_losses, const TrainOptions& opts);

TrainResult train_finetune(FinetuneModel& model,
                           const std::vector<TrainingInstance>& train,
                           const std::vector<TrainingInstance>& dev,
                           const TrainOptions& opts);

}  // namespace ctxmt
