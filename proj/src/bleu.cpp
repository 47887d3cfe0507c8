// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#include "ctxmt/bleu.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "ctxmt/error.hpp"
#include "ctxmt/rng.hpp"

namespace ctxmt {

namespace {

std::vector<std::string> tokenize(const std::string& line, bool lowercase) {
  std::vector<std::string> toks;
  std::istringstream is(line);
  std::string w;
  while (is >> w) {
    if (lowercase) {
      for (char& c : w) {
        c = static_cast<char>(
            std::tolower(static_cast<unsigned char>(c)));
      }
    }
    toks.push_back(w);
  }
  return toks;
}

using NgramCounts = std::map<std::vector<std::string>, int64_t>;

NgramCounts count_ngrams(const std::vector<std::string>& toks, int n) {
  NgramCounts counts;
  if (static_cast<int>(toks.size()) < n) return counts;
  for (size_t i = 0; i + n <= toks.size(); ++i) {
    counts[std::vector<std::string>(toks.begin() + static_cast<long>(i),
                                    toks.begin() + static_cast<long>(i + n))]++;
  }
  return counts;
}

// Per-sentence sufficient statistics; corpus BLEU is additive over these.
struct SentenceStats {
  std::vector<int64_t> matched;  // per order
  std::vector<int64_t> total;
  int64_t hyp_len = 0;
  int64_t ref_len = 0;
};

SentenceStats sentence_stats(const std::string& hyp, const std::string& ref,
                             int max_order, bool lowercase) {
  SentenceStats st;
  st.matched.assign(static_cast<size_t>(max_order), 0);
  st.total.assign(static_cast<size_t>(max_order), 0);
  std::vector<std::string> h = tokenize(hyp, lowercase);
  std::vector<std::string> r = tokenize(ref, lowercase);
  st.hyp_len = static_cast<int64_t>(h.size());
  st.ref_len = static_cast<int64_t>(r.size());
  for (int n = 1; n <= max_order; ++n) {
    NgramCounts hc = count_ngrams(h, n);
    NgramCounts rc = count_ngrams(r, n);
    for (const auto& [gram, cnt] : hc) {
      st.total[static_cast<size_t>(n - 1)] += cnt;
      auto it = rc.find(gram);
      if (it != rc.end()) {
        st.matched[static_cast<size_t>(n - 1)] += std::min(cnt, it->second);
      }
    }
  }
  return st;
}

BleuReport report_from_stats(const std::vector<SentenceStats>& stats,
                             const std::vector<int>& indices, int max_order,
                             bool smooth) {
  std::vector<int64_t> matched(static_cast<size_t>(max_order), 0);
  std::vector<int64_t> total(static_cast<size_t>(max_order), 0);
  BleuReport rep;
  for (int i : indices) {
    const SentenceStats& st = stats[static_cast<size_t>(i)];
    for (int n = 0; n < max_order; ++n) {
      matched[static_cast<size_t>(n)] += st.matched[static_cast<size_t>(n)];
      total[static_cast<size_t>(n)] += st.total[static_cast<size_t>(n)];
    }
    rep.hyp_len += st.hyp_len;
    rep.ref_len += st.ref_len;
  }
  rep.precisions.assign(static_cast<size_t>(max_order), 0.0);
  double log_sum = 0.0;
  bool zero = false;
  for (int n = 0; n < max_order; ++n) {
    double m = static_cast<double>(matched[static_cast<size_t>(n)]);
    double t = static_cast<double>(total[static_cast<size_t>(n)]);
    if (smooth) {
      m += 1.0;
      t += 1.0;
    }
    if (t <= 0.0 || m <= 0.0) {
      zero = true;
      rep.precisions[static_cast<size_t>(n)] = 0.0;
      continue;
    }
    rep.precisions[static_cast<size_t>(n)] = m / t;
    log_sum += std::log(m / t);
  }
  rep.brevity_penalty =
      (rep.hyp_len >= rep.ref_len || rep.hyp_len == 0)
          ? (rep.hyp_len == 0 ? 0.0 : 1.0)
          : std::exp(1.0 - static_cast<double>(rep.ref_len) /
                               static_cast<double>(rep.hyp_len));
  rep.score = zero ? 0.0
                   : rep.brevity_penalty * std::exp(log_sum / max_order) *
                         100.0;
  return rep;
}

std::vector<SentenceStats> corpus_stats(
    const std::vector<std::string>& hyps,
    const std::vector<std::string>& refs, int max_order, bool lowercase) {
  if (hyps.empty()) throw DataError("BLEU needs at least one hypothesis");
  if (hyps.size() != refs.size()) {
    throw DataError("hypothesis/reference counts differ: " +
                    std::to_string(hyps.size()) + " vs " +
                    std::to_string(refs.size()));
  }
  std::vector<SentenceStats> stats;
  stats.reserve(hyps.size());
  for (size_t i = 0; i < hyps.size(); ++i) {
    stats.push_back(sentence_stats(hyps[i], refs[i], max_order, lowercase));
  }
  return stats;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string BleuReport::to_record() const {
  std::ostringstream os;
  os << "score=" << fmt(score) << " bp=" << fmt(brevity_penalty);
  for (size_t n = 0; n < precisions.size(); ++n) {
    os << " p" << n + 1 << "=" << fmt(precisions[n]);
  }
  os << " hyp_len=" << hyp_len << " ref_len=" << ref_len;
  return os.str();
}

BleuReport bleu(const std::vector<std::string>& hypotheses,
                const std::vector<std::string>& references, int max_order,
                bool lowercase, bool smooth) {
  std::vector<SentenceStats> stats =
      corpus_stats(hypotheses, references, max_order, lowercase);
  std::vector<int> all(stats.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return report_from_stats(stats, all, max_order, smooth);
}

std::string SignificanceReport::to_record() const {
  std::ostringstream os;
  os << "samples=" << num_samples << " wins_a=" << wins_a
     << " wins_b=" << wins_b << " ties=" << ties
     << " p_value=" << fmt(p_value);
  return os.str();
}

SignificanceReport bootstrap_significance(
    const std::vector<std::string>& hyps_a,
    const std::vector<std::string>& hyps_b,
    const std::vector<std::string>& refs, int num_samples, uint64_t seed,
    bool lowercase) {
  if (hyps_a.size() != hyps_b.size() || hyps_a.size() != refs.size()) {
    throw DataError("bootstrap needs aligned sentence lists");
  }
  const int max_order = 4;
  std::vector<SentenceStats> stats_a =
      corpus_stats(hyps_a, refs, max_order, lowercase);
  std::vector<SentenceStats> stats_b =
      corpus_stats(hyps_b, refs, max_order, lowercase);
  int n = static_cast<int>(refs.size());
  Rng rng(seed);
  SignificanceReport rep;
  rep.num_samples = num_samples;
  for (int s = 0; s < num_samples; ++s) {
    std::vector<int> sample(static_cast<size_t>(n));
    for (int& idx : sample) idx = rng.uniform_int(n);
    double a = report_from_stats(stats_a, sample, max_order, true).score;
    double b = report_from_stats(stats_b, sample, max_order, true).score;
    if (a > b) {
      ++rep.wins_a;
    } else if (b > a) {
      ++rep.wins_b;
    } else {
      ++rep.ties;
    }
  }
  int wins_better = std::max(rep.wins_a, rep.wins_b);
  rep.p_value = 1.0 - static_cast<double>(wins_better) / rep.num_samples;
  return rep;
}

}  // namespace ctxmt
