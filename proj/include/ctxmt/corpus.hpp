// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace ctxmt {

/// One document: ordered sentences, original order preserved.
struct Document {
  std::string doc_id;
  std::vector<std::string> sentences;
};

struct ParallelDocument {
  Document source;
  Document target;
};

/// Document with sentences already segmented and mapped to token ids.
struct TokenDocument {
  std::string doc_id;
  std::vector<std::vector<int>> sentences;
};

struct ParallelTokenDocument {
  TokenDocument source;
  TokenDocument target;
};

/// The (s_{i-1}, s_i, s_{i+1}, y_i) quad driving every model. prev/next are
/// absent exactly at document boundaries; tgt is absent for monolingual
/// instances.
struct TrainingInstance {
  std::optional<std::vector<int>> prev_src;
  std::vector<int> cur_src;
  std::optional<std::vector<int>> next_src;
  std::optional<std::vector<int>> tgt;
};

/// Parses blank-line-delimited documents: one sentence per line, documents
/// separated by exactly one blank line, optional `#doc id=<string>` header
/// line. Empty documents are dropped with a warning. Malformed UTF-8 raises
/// DataError with the byte offset.
std::vector<Document> parse_documents(std::istream& in,
                                      std::vector<std::string>* warnings =
                                          nullptr);
std::vector<Document> parse_documents_file(const std::string& path,
                                           std::vector<std::string>* warnings =
                                               nullptr);

/// Pairs up two document streams; counts must agree document by document.
std::vector<ParallelDocument> align_documents(std::vector<Document> source,
                                              std::vector<Document> target);

/// Tab-separated variant: one `src\ttgt` pair per line, blank line between
/// documents.
std::vector<ParallelDocument> parse_parallel_tsv(std::istream& in);

/// One instance per sentence; prev/next absent at document boundaries.
std::vector<TrainingInstance> extract_instances(const TokenDocument& doc);
std::vector<TrainingInstance> extract_instances(
    const ParallelTokenDocument& doc);

// --- byte pair encoding ------------------------------------------------

/// Learned merge list. Words are segmented into Unicode code points with the
/// end-of-word marker fused onto the final symbol, then merges apply in
/// learned order.
struct BPEModel {
  static constexpr const char* kEow = "</w>";
  std::vector<std::pair<std::string, std::string>> merges;

  void save(const std::string& path) const;
  static BPEModel load(const std::string& path);
};

/// Greedy most-frequent-pair learning with deterministic lexicographic
/// tie-break. Raises DataError on an empty corpus.
BPEModel train_bpe(const std::vector<std::string>& sentences, int num_merges);

std::vector<std::string> apply_bpe(const BPEModel& model,
                                   const std::string& sentence);

/// Inverse of apply_bpe: reconstructs the whitespace-tokenized text.
std::string detokenize_bpe(const std::vector<std::string>& subwords);

/// Splits a word into UTF-8 code points. Raises DataError on malformed
/// encoding.
std::vector<std::string> utf8_codepoints(const std::string& word);

// --- vocabulary ---------------------------------------------------------

struct EncodeStats {
  int64_t tokens = 0;
  int64_t unks = 0;
  double unk_rate() const { return tokens ? static_cast<double>(unks) / tokens : 0.0; }
};

/// Token <-> id bijection with fixed low reserved ids.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kCtxNone = 4;
  static constexpr int kSep = 5;
  static constexpr int kNumReserved = 6;

  /// Frequency-sorted (ties lexicographic), reserved tokens first.
  /// max_size caps the total size including reserved ids (0 = unlimited);
  /// min_freq drops rarer tokens.
  static Vocabulary build(const std::vector<std::vector<std::string>>& corpus,
                          int max_size = 0, int min_freq = 1);

  int size() const { return static_cast<int>(tokens_.size()); }
  /// Token id, UNK for out-of-vocabulary tokens.
  int id(const std::string& token) const;
  const std::string& token(int id) const;

  std::vector<int> encode(const std::vector<std::string>& tokens,
                          EncodeStats* stats = nullptr) const;
  std::vector<std::string> decode(const std::vector<int>& ids) const;

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);
  uint64_t hash() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

// --- batching and transforms ---------------------------------------------

struct Batch {
  std::vector<int> instances;  // indices into the instance list
  int64_t tokens = 0;
};

/// Cost of an instance for batching: current source plus target tokens, or
/// plus the predicted context sides for monolingual instances.
int64_t instance_token_cost(const TrainingInstance& inst);

/// Greedy length-sorted packing under the token budget; the resulting batch
/// order is shuffled deterministically by seed. A single instance over
/// budget raises DataError naming the instance.
std::vector<Batch> batch_by_tokens(const std::vector<TrainingInstance>& insts,
                                   int64_t budget_tokens, uint64_t seed);

/// Source-side concatenation baseline: cur becomes prev + sep + cur, contexts
/// cleared, tgt unchanged. Instances without a previous sentence pass through.
TrainingInstance concat_context(const TrainingInstance& inst, int sep_id);

// --- tokenization pipeline -------------------------------------------------

/// Applies BPE and vocabulary encoding to a document, truncating sentences
/// longer than max_sentence_len subwords (with a warning).
TokenDocument tokenize_document(const Document& doc, const BPEModel& bpe,
                                const Vocabulary& vocab, int max_sentence_len,
                                EncodeStats* stats = nullptr,
                                std::vector<std::string>* warnings = nullptr);

// --- instance files ---------------------------------------------------------

/// One instance per line, four tab-separated fields (prev, cur, next, tgt),
/// each a space-separated id list or `*` when absent.
void save_instances(const std::vector<TrainingInstance>& insts,
                    const std::string& path);
std::vector<TrainingInstance> load_instances(const std::string& path);

}  // namespace ctxmt
