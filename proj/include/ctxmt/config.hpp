// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "ctxmt/transformer.hpp"

namespace ctxmt {

// Single source of truth for every run-configuration key: type, member,
// key string, default, help text. The config file is flat
// `section.key = value` lines; unknown keys are rejected.
#define CTXMT_CONFIG_KEYS(X)                                                   \
  X(int, model_d_model, "model.d_model", 512, "transformer hidden size")      \
  X(int, model_d_ff, "model.d_ff", 2048, "feed-forward filter size")          \
  X(int, model_num_layers, "model.num_layers", 6,                             \
    "encoder/decoder layer count")                                            \
  X(int, model_num_heads, "model.num_heads", 8, "attention head count")       \
  X(int, model_max_len, "model.max_len", 160,                                 \
    "maximum sequence length inside the model")                               \
  X(double, model_dropout, "model.dropout", 0.1, "dropout rate")              \
  X(double, model_label_smoothing, "model.label_smoothing", 0.1,              \
    "cross-entropy label smoothing")                                          \
  X(bool, model_pre_norm, "model.pre_norm", false,                            \
    "pre-norm residual arrangement (post-norm when false)")                   \
  X(bool, model_tie_output, "model.tie_output", true,                         \
    "tie decoder output projection to its embedding table")                   \
  X(int, training_budget_tokens, "training.budget_tokens", 4096,              \
    "token budget per batch (source+target)")                                 \
  X(int, training_warmup_steps, "training.warmup_steps", 4000,                \
    "learning-rate warmup steps")                                             \
  X(double, training_lr_factor, "training.lr_factor", 1.0,                    \
    "learning-rate schedule factor")                                          \
  X(int, training_seed, "training.seed", 1, "global random seed")             \
  X(int, training_max_steps, "training.max_steps", 100000,                    \
    "maximum optimizer steps")                                                \
  X(int, training_eval_interval, "training.eval_interval", 1000,              \
    "steps between dev evaluations (0 disables)")                             \
  X(int, training_patience, "training.patience", 5,                           \
    "dev evaluations without improvement before stopping")                    \
  X(double, training_clip_norm, "training.clip_norm", 0.0,                    \
    "global gradient-norm clip (0 disables)")                                 \
  X(double, training_adam_beta1, "training.adam_beta1", 0.9, "Adam beta1")    \
  X(double, training_adam_beta2, "training.adam_beta2", 0.98, "Adam beta2")   \
  X(double, training_adam_epsilon, "training.adam_epsilon", 1e-9,             \
    "Adam epsilon")                                                           \
  X(double, joint_mu, "joint.mu", 0.5, "weight on the previous-sentence loss")\
  X(double, joint_lambda, "joint.lambda", 0.3,                                \
    "weight on the next-sentence loss")                                       \
  X(std::string, joint_mode, "joint.mode", "pre+next",                        \
    "joint prediction mode: pre | next | pre+next")                           \
  X(bool, joint_ctx_none_losses, "joint.ctx_none_losses", true,               \
    "boundary instances still predict the placeholder context")               \
  X(std::string, pretrain_encoder_mode, "pretrain.encoder_mode",              \
    "two_encoders", "pre-training encoders: two_encoders | shared_encoder")   \
  X(std::string, finetune_fusion, "finetune.fusion", "sum_mean_pooled",       \
    "context fusion: sum_mean_pooled | embeddings_only | explicit_attention") \
  X(bool, finetune_trainable_context_encoders,                                \
    "finetune.trainable_context_encoders", true,                              \
    "keep optimizing the context encoders during fine-tuning")                \
  X(int, decode_beam_size, "decode.beam_size", 4, "beam width")               \
  X(double, decode_length_norm, "decode.length_norm", 0.6,                    \
    "length-normalization exponent (0 disables)")                             \
  X(int, decode_max_len, "decode.max_len", 64, "decoding length cap")         \
  X(bool, eval_lowercase, "eval.lowercase", true,                             \
    "case-insensitive BLEU")                                                  \
  X(bool, eval_bleu_smoothing, "eval.bleu_smoothing", false,                  \
    "add-one BLEU smoothing for tiny corpora")                                \
  X(int, eval_bootstrap_samples, "eval.bootstrap_samples", 1000,              \
    "bootstrap resample count")                                               \
  X(int, eval_bootstrap_seed, "eval.bootstrap_seed", 1, "bootstrap seed")     \
  X(std::string, data_train_src, "data.train_src", "",                        \
    "source-side training documents")                                         \
  X(std::string, data_train_tgt, "data.train_tgt", "",                        \
    "target-side training documents")                                         \
  X(std::string, data_dev_src, "data.dev_src", "",                            \
    "source-side development documents")                                      \
  X(std::string, data_dev_tgt, "data.dev_tgt", "",                            \
    "target-side development documents")                                      \
  X(std::string, data_mono, "data.mono", "",                                  \
    "monolingual documents for pre-training")                                 \
  X(std::string, data_work_dir, "data.work_dir", "work",                      \
    "output directory for prepared data, checkpoints and logs")               \
  X(int, data_bpe_merges, "data.bpe_merges", 8000, "BPE merge count")         \
  X(bool, data_joint_bpe, "data.joint_bpe", false,                            \
    "train one BPE model/vocabulary over both languages")                     \
  X(int, data_vocab_max_size, "data.vocab_max_size", 0,                       \
    "vocabulary size cap including reserved ids (0 = unlimited)")             \
  X(int, data_vocab_min_freq, "data.vocab_min_freq", 1,                       \
    "minimum token frequency kept in the vocabulary")                         \
  X(int, data_max_sentence_len, "data.max_sentence_len", 128,                 \
    "sentences longer than this many subwords are truncated")                 \
  X(bool, data_concat_prev, "data.concat_prev", false,                        \
    "emit the previous-sentence concatenation transform during prepare")

/// Flat, typo-safe run configuration. Every key has a default.
struct RunConfig {
#define CTXMT_DECLARE(type, member, key, def, help) type member = def;
  CTXMT_CONFIG_KEYS(CTXMT_DECLARE)
#undef CTXMT_DECLARE

  /// Parses one `section.key = value` assignment. Unknown keys and
  /// malformed values raise ConfigError.
  void set(const std::string& key, const std::string& value);

  /// Canonical dump in registry order; parse(serialize()) round-trips
  /// bit-exactly (doubles printed with 17 significant digits).
  std::string serialize() const;

  static RunConfig from_file(const std::string& path);
  static RunConfig from_text(const std::string& text,
                             const std::string& origin = "<config>");

  /// One help line per key, with defaults.
  static std::string help();

  TransformerConfig transformer(int src_vocab, int tgt_vocab) const;
};

}  // namespace ctxmt
