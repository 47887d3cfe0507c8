// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic synthetic corpora for the acceptance tasks, plus the
// document-to-instance preparation pipeline the tasks share.

#pragma once

#include <string>
#include <vector>

#include "ctxmt/corpus.hpp"

namespace synth {

struct Corpus {
  std::vector<ctxmt::Document> train_src;
  std::vector<ctxmt::Document> train_tgt;
  std::vector<ctxmt::Document> dev_src;
  std::vector<ctxmt::Document> dev_tgt;
  std::vector<ctxmt::Document> mono;  // source-language documents
};

/// Word-to-word translatable documents: every source word type maps to one
/// target word type, so a converged model reproduces targets exactly.
/// 32 documents x 4 sentences, ~46 word types per side.
Corpus overfit_corpus(uint64_t seed);

/// The context-disambiguation task: every document is [cue sentence,
/// ambiguous sentence]. The ambiguous source token translates two ways,
/// decided entirely by the cue in the previous sentence, balanced 50/50.
/// Monolingual documents [intro(cue), cue sentence, outro(cue)] let
/// pre-training learn to separate the cues.
Corpus context_corpus(uint64_t seed, int train_docs = 64, int dev_docs = 16,
                      int mono_docs = 128);

/// Target words of the two ambiguous readings (after the word-map).
const std::string& ambiguous_variant_a();
const std::string& ambiguous_variant_b();

struct Prepared {
  ctxmt::BPEModel src_bpe;
  ctxmt::BPEModel tgt_bpe;
  ctxmt::Vocabulary src_vocab;
  ctxmt::Vocabulary tgt_vocab;
  std::vector<ctxmt::TrainingInstance> train;
  std::vector<ctxmt::TrainingInstance> dev;
  std::vector<ctxmt::TrainingInstance> mono;
  // raw sentences aligned with the instance order, for decode checks
  std::vector<std::string> train_src_text;
  std::vector<std::string> train_tgt_text;
  std::vector<std::string> dev_src_text;
  std::vector<std::string> dev_tgt_text;
};

/// Runs the real pipeline: BPE training (source side includes the
/// monolingual text), vocabulary building, tokenization, instance
/// extraction.
Prepared prepare(const Corpus& corpus, int merges = 400);

/// Writes the corpus as document-format files under dir (train.src,
/// train.tgt, dev.src, dev.tgt, mono.txt).
void write_corpus(const Corpus& corpus, const std::string& dir);

}  // namespace synth
