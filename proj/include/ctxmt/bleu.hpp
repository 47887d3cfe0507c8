// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ctxmt {

/// Corpus-level BLEU with per-order modified precisions and brevity penalty.
struct BleuReport {
  std::vector<double> precisions;  // p1..p_max_order
  double brevity_penalty = 1.0;
  double score = 0.0;  // in [0, 100]
  int64_t hyp_len = 0;
  int64_t ref_len = 0;

  /// Single-line key=value record for scripting.
  std::string to_record() const;
};

/// Case-folded (when lowercase) 4-gram BLEU over whitespace-tokenized text.
/// Any zero n-gram precision yields score 0 unless add-one smoothing is on.
BleuReport bleu(const std::vector<std::string>& hypotheses,
                const std::vector<std::string>& references, int max_order = 4,
                bool lowercase = true, bool smooth = false);

struct SignificanceReport {
  int num_samples = 0;
  int wins_a = 0;
  int wins_b = 0;
  int ties = 0;
  double p_value = 1.0;

  std::string to_record() const;
};

/// Paired bootstrap resampling: draws sentence indices with replacement
/// num_samples times and compares corpus BLEU of the two systems per sample.
/// p_value = 1 - wins_of_better / num_samples.
SignificanceReport bootstrap_significance(
    const std::vector<std::string>& hyps_a,
    const std::vector<std::string>& hyps_b,
    const std::vector<std::string>& refs, int num_samples = 1000,
    uint64_t seed = 1, bool lowercase = true);

}  // namespace ctxmt
