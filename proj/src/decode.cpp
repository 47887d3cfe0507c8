// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#include "ctxmt/decode.hpp"

#include <algorithm>
#include <cmath>

#include "ctxmt/error.hpp"

namespace ctxmt {

namespace {

double normalized(double logprob, size_t length, double alpha) {
  if (alpha == 0.0) return logprob;
  double len = static_cast<double>(std::max<size_t>(length, 1));
  return logprob / std::pow(len, alpha);
}

struct Candidate {
  int hyp;       // index into the alive set
  int token;
  double logprob;
};

}  // namespace

BeamResult beam_search(const SequenceScorer& scorer, int beam_size,
                       int max_len, double length_norm, int bos, int eos) {
  if (beam_size < 1) throw Error("beam_size must be >= 1");
  if (max_len < 1) throw Error("max_len must be >= 1");

  std::vector<BeamHypothesis> alive(1);
  alive[0].tokens = {};
  alive[0].logprob = 0.0;
  std::vector<BeamHypothesis> finished;

  for (int step = 0; step < max_len && !alive.empty(); ++step) {
    std::vector<Candidate> cands;
    cands.reserve(alive.size() * static_cast<size_t>(scorer.vocab_size()));
    for (size_t h = 0; h < alive.size(); ++h) {
      std::vector<int> prefix;
      prefix.reserve(alive[h].tokens.size() + 1);
      prefix.push_back(bos);
      prefix.insert(prefix.end(), alive[h].tokens.begin(),
                    alive[h].tokens.end());
      std::vector<double> lp = scorer.next_logprobs(prefix);
      if (static_cast<int>(lp.size()) != scorer.vocab_size()) {
        throw Error("scorer returned a distribution of the wrong size");
      }
      for (int tok = 0; tok < scorer.vocab_size(); ++tok) {
        cands.push_back({static_cast<int>(h), tok,
                         alive[h].logprob + lp[static_cast<size_t>(tok)]});
      }
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a,
                                             const Candidate& b) {
      if (a.logprob != b.logprob) return a.logprob > b.logprob;
      if (a.token != b.token) return a.token < b.token;
      return a.hyp < b.hyp;
    });
    // the top beam_size candidates fill the beam; an EOS candidate finishes
    // and keeps its slot, so beam_size 1 is exactly greedy decoding
    std::vector<BeamHypothesis> next_alive;
    int slots = std::min<size_t>(cands.size(),
                                 static_cast<size_t>(beam_size));
    for (int s = 0; s < slots; ++s) {
      const Candidate& c = cands[static_cast<size_t>(s)];
      BeamHypothesis h = alive[static_cast<size_t>(c.hyp)];
      h.logprob = c.logprob;
      if (c.token == eos) {
        h.finished = true;
        h.tokens.push_back(eos);
        finished.push_back(std::move(h));
      } else {
        h.tokens.push_back(c.token);
        next_alive.push_back(std::move(h));
      }
    }
    alive = std::move(next_alive);
  }

  auto better = [&](const BeamHypothesis& a, const BeamHypothesis& b) {
    double sa = normalized(a.logprob, a.tokens.size(), length_norm);
    double sb = normalized(b.logprob, b.tokens.size(), length_norm);
    if (sa != sb) return sa > sb;
    return a.tokens < b.tokens;
  };

  const std::vector<BeamHypothesis>& pool =
      finished.empty() ? alive : finished;
  const BeamHypothesis* best = &pool[0];
  for (const BeamHypothesis& h : pool) {
    if (better(h, *best)) best = &h;
  }
  BeamResult result;
  result.tokens = best->tokens;
  result.finished = best->finished;
  if (result.finished) result.tokens.pop_back();  // drop EOS
  result.logprob = best->logprob;
  result.score = normalized(best->logprob, best->tokens.size(), length_norm);
  return result;
}

}  // namespace ctxmt
