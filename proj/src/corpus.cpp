// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#include "ctxmt/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "ctxmt/error.hpp"
#include "ctxmt/rng.hpp"

namespace ctxmt {

namespace {

// Validates UTF-8 and reports the byte offset of the first bad byte.
void validate_utf8(const std::string& text) {
  size_t i = 0;
  const auto* b = reinterpret_cast<const unsigned char*>(text.data());
  while (i < text.size()) {
    unsigned char c = b[i];
    size_t len;
    if (c < 0x80) {
      len = 1;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
    } else {
      throw DataError("malformed UTF-8 at byte offset " + std::to_string(i));
    }
    if (i + len > text.size()) {
      throw DataError("truncated UTF-8 sequence at byte offset " +
                      std::to_string(i));
    }
    for (size_t j = 1; j < len; ++j) {
      if ((b[i + j] & 0xC0) != 0x80) {
        throw DataError("malformed UTF-8 at byte offset " +
                        std::to_string(i + j));
      }
    }
    i += len;
  }
}

std::vector<std::string> split_words(const std::string& line) {
  std::vector<std::string> words;
  std::istringstream is(line);
  std::string w;
  while (is >> w) words.push_back(w);
  return words;
}

std::string rstrip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

std::vector<Document> parse_documents(std::istream& in,
                                      std::vector<std::string>* warnings) {
  std::vector<Document> docs;
  Document cur;
  bool has_header = false;
  int anon = 0;
  size_t offset = 0;
  auto flush = [&]() {
    if (!cur.sentences.empty()) {
      if (cur.doc_id.empty()) cur.doc_id = "doc" + std::to_string(anon);
      ++anon;
      docs.push_back(std::move(cur));
    } else if (has_header && warnings) {
      warnings->push_back("dropping empty document '" + cur.doc_id + "'");
    }
    cur = Document{};
    has_header = false;
  };
  std::string line;
  while (std::getline(in, line)) {
    size_t line_start = offset;
    offset += line.size() + 1;
    line = rstrip_cr(line);
    try {
      validate_utf8(line);
    } catch (const DataError& e) {
      // re-anchor the offset to the whole stream
      std::string msg = e.what();
      size_t pos = msg.rfind(' ');
      size_t local = std::stoul(msg.substr(pos + 1));
      throw DataError("malformed UTF-8 at byte offset " +
                      std::to_string(line_start + local));
    }
    if (line.empty()) {
      flush();
      continue;
    }
    if (line.rfind("#doc id=", 0) == 0) {
      cur.doc_id = line.substr(8);
      has_header = true;
      continue;
    }
    cur.sentences.push_back(line);
  }
  flush();
  return docs;
}

std::vector<Document> parse_documents_file(const std::string& path,
                                           std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path);
  return parse_documents(in, warnings);
}

std::vector<ParallelDocument> align_documents(std::vector<Document> source,
                                              std::vector<Document> target) {
  if (source.size() != target.size()) {
    throw DataError("document counts differ: " +
                    std::to_string(source.size()) + " source vs " +
                    std::to_string(target.size()) + " target");
  }
  std::vector<ParallelDocument> out;
  out.reserve(source.size());
  for (size_t i = 0; i < source.size(); ++i) {
    if (source[i].sentences.size() != target[i].sentences.size()) {
      throw DataError("misaligned document '" + source[i].doc_id + "': " +
                      std::to_string(source[i].sentences.size()) +
                      " source vs " +
                      std::to_string(target[i].sentences.size()) +
                      " target sentences");
    }
    out.push_back({std::move(source[i]), std::move(target[i])});
  }
  return out;
}

std::vector<ParallelDocument> parse_parallel_tsv(std::istream& in) {
  std::vector<ParallelDocument> docs;
  ParallelDocument cur;
  int anon = 0;
  auto flush = [&]() {
    if (!cur.source.sentences.empty()) {
      cur.source.doc_id = cur.target.doc_id = "doc" + std::to_string(anon++);
      docs.push_back(std::move(cur));
    }
    cur = ParallelDocument{};
  };
  std::string line;
  while (std::getline(in, line)) {
    line = rstrip_cr(line);
    if (line.empty()) {
      flush();
      continue;
    }
    size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError("parallel tsv line lacks a tab: " + line);
    }
    cur.source.sentences.push_back(line.substr(0, tab));
    cur.target.sentences.push_back(line.substr(tab + 1));
  }
  flush();
  return docs;
}

std::vector<TrainingInstance> extract_instances(const TokenDocument& doc) {
  std::vector<TrainingInstance> out;
  size_t n = doc.sentences.size();
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    TrainingInstance inst;
    inst.cur_src = doc.sentences[i];
    if (i > 0) inst.prev_src = doc.sentences[i - 1];
    if (i + 1 < n) inst.next_src = doc.sentences[i + 1];
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<TrainingInstance> extract_instances(
    const ParallelTokenDocument& doc) {
  if (doc.source.sentences.size() != doc.target.sentences.size()) {
    throw DataError("misaligned document '" + doc.source.doc_id + "': " +
                    std::to_string(doc.source.sentences.size()) +
                    " source vs " +
                    std::to_string(doc.target.sentences.size()) +
                    " target sentences");
  }
  std::vector<TrainingInstance> out = extract_instances(doc.source);
  for (size_t i = 0; i < out.size(); ++i) {
    out[i].tgt = doc.target.sentences[i];
  }
  return out;
}

// --- BPE ---------------------------------------------------------------

std::vector<std::string> utf8_codepoints(const std::string& word) {
  std::vector<std::string> cps;
  size_t i = 0;
  const auto* b = reinterpret_cast<const unsigned char*>(word.data());
  while (i < word.size()) {
    unsigned char c = b[i];
    size_t len;
    if (c < 0x80) {
      len = 1;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
    } else {
      throw DataError("malformed UTF-8 in word '" + word + "'");
    }
    if (i + len > word.size()) {
      throw DataError("truncated UTF-8 in word '" + word + "'");
    }
    cps.push_back(word.substr(i, len));
    i += len;
  }
  return cps;
}

namespace {

// Initial segmentation: code points with the marker fused onto the last one.
std::vector<std::string> word_symbols(const std::string& word) {
  std::vector<std::string> syms = utf8_codepoints(word);
  if (!syms.empty()) syms.back() += BPEModel::kEow;
  return syms;
}

using SymWord = std::vector<std::string>;

void merge_in_word(SymWord& w, const std::string& left,
                   const std::string& right) {
  SymWord out;
  out.reserve(w.size());
  size_t i = 0;
  while (i < w.size()) {
    if (i + 1 < w.size() && w[i] == left && w[i + 1] == right) {
      out.push_back(left + right);
      i += 2;
    } else {
      out.push_back(w[i]);
      ++i;
    }
  }
  w = std::move(out);
}

}  // namespace

BPEModel train_bpe(const std::vector<std::string>& sentences, int num_merges) {
  if (num_merges < 0) throw DataError("num_merges must be >= 0");
  // word type frequencies
  std::map<std::string, int64_t> word_freq;
  for (const std::string& s : sentences) {
    for (const std::string& w : split_words(s)) ++word_freq[w];
  }
  if (word_freq.empty()) throw DataError("cannot train BPE on empty corpus");

  std::vector<std::pair<SymWord, int64_t>> words;
  words.reserve(word_freq.size());
  for (const auto& [w, f] : word_freq) words.push_back({word_symbols(w), f});

  BPEModel model;
  for (int step = 0; step < num_merges; ++step) {
    std::map<std::pair<std::string, std::string>, int64_t> pair_freq;
    for (const auto& [syms, f] : words) {
      for (size_t i = 0; i + 1 < syms.size(); ++i) {
        pair_freq[{syms[i], syms[i + 1]}] += f;
      }
    }
    if (pair_freq.empty()) break;
    // most frequent pair; ties break lexicographically (std::map order)
    auto best = pair_freq.begin();
    for (auto it = pair_freq.begin(); it != pair_freq.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    model.merges.push_back(best->first);
    for (auto& [syms, f] : words) {
      merge_in_word(syms, best->first.first, best->first.second);
    }
  }
  return model;
}

std::vector<std::string> apply_bpe(const BPEModel& model,
                                   const std::string& sentence) {
  std::vector<std::string> out;
  for (const std::string& w : split_words(sentence)) {
    SymWord syms = word_symbols(w);
    for (const auto& [l, r] : model.merges) {
      if (syms.size() < 2) break;
      merge_in_word(syms, l, r);
    }
    for (std::string& s : syms) out.push_back(std::move(s));
  }
  return out;
}

std::string detokenize_bpe(const std::vector<std::string>& subwords) {
  std::string joined;
  for (const std::string& s : subwords) joined += s;
  // every end-of-word marker becomes a word boundary
  std::string out;
  const std::string marker = BPEModel::kEow;
  size_t pos = 0;
  while (pos < joined.size()) {
    size_t hit = joined.find(marker, pos);
    if (hit == std::string::npos) {
      out += joined.substr(pos);
      break;
    }
    out += joined.substr(pos, hit - pos);
    pos = hit + marker.size();
    if (pos < joined.size()) out += ' ';
  }
  return out;
}

void BPEModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write BPE model to " + path);
  out << "bpe-merges " << merges.size() << "\n";
  for (const auto& [l, r] : merges) out << l << " " << r << "\n";
}

BPEModel BPEModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open BPE model " + path);
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string tag;
  size_t n = 0;
  if (!(hs >> tag >> n) || tag != "bpe-merges") {
    throw DataError("bad BPE model header in " + path);
  }
  BPEModel model;
  std::string line;
  while (std::getline(in, line)) {
    line = rstrip_cr(line);
    if (line.empty()) continue;
    size_t sp = line.find(' ');
    if (sp == std::string::npos) {
      throw DataError("bad merge line in " + path + ": " + line);
    }
    model.merges.push_back({line.substr(0, sp), line.substr(sp + 1)});
  }
  if (model.merges.size() != n) {
    throw DataError("BPE model " + path + " declares " + std::to_string(n) +
                    " merges but contains " +
                    std::to_string(model.merges.size()));
  }
  return model;
}

// --- vocabulary ------------------------------------------------------------

static const char* kReservedTokens[] = {"<pad>", "<unk>", "<bos>",
                                        "<eos>", "<ctx_none>", "<sep>"};

Vocabulary Vocabulary::build(
    const std::vector<std::vector<std::string>>& corpus, int max_size,
    int min_freq) {
  std::map<std::string, int64_t> freq;
  for (const auto& sent : corpus) {
    for (const auto& tok : sent) ++freq[tok];
  }
  std::vector<std::pair<std::string, int64_t>> items(freq.begin(), freq.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary v;
  for (const char* t : kReservedTokens) {
    v.ids_[t] = static_cast<int>(v.tokens_.size());
    v.tokens_.push_back(t);
  }
  for (const auto& [tok, f] : items) {
    if (max_size > 0 && static_cast<int>(v.tokens_.size()) >= max_size) break;
    if (f < min_freq) continue;
    if (v.ids_.count(tok)) continue;  // reserved literal in corpus
    v.ids_[tok] = static_cast<int>(v.tokens_.size());
    v.tokens_.push_back(tok);
  }
  return v;
}

int Vocabulary::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) {
    throw DataError("token id " + std::to_string(id) +
                    " out of vocabulary range [0, " + std::to_string(size()) +
                    ")");
  }
  return tokens_[static_cast<size_t>(id)];
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens,
                                    EncodeStats* stats) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const std::string& t : tokens) {
    int i = id(t);
    if (stats) {
      ++stats->tokens;
      if (i == kUnk) ++stats->unks;
    }
    out.push_back(i);
  }
  return out;
}

std::vector<std::string> Vocabulary::decode(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(token(i));
  return out;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocabulary to " + path);
  for (const std::string& t : tokens_) out << t << "\n";
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary " + path);
  Vocabulary v;
  std::string line;
  while (std::getline(in, line)) {
    line = rstrip_cr(line);
    if (line.empty()) continue;
    v.ids_[line] = static_cast<int>(v.tokens_.size());
    v.tokens_.push_back(line);
  }
  for (int i = 0; i < kNumReserved; ++i) {
    if (v.size() <= i || v.tokens_[static_cast<size_t>(i)] !=
                             kReservedTokens[i]) {
      throw DataError("vocabulary " + path +
                      " lacks the reserved token table");
    }
  }
  return v;
}

uint64_t Vocabulary::hash() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const std::string& t : tokens_) {
    for (char c : t) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    h ^= static_cast<unsigned char>('\n');
    h *= 0x100000001b3ULL;
  }
  return h;
}

// --- batching and transforms -------------------------------------------

int64_t instance_token_cost(const TrainingInstance& inst) {
  int64_t n = static_cast<int64_t>(inst.cur_src.size());
  if (inst.tgt) {
    n += static_cast<int64_t>(inst.tgt->size());
  } else {
    if (inst.prev_src) n += static_cast<int64_t>(inst.prev_src->size());
    if (inst.next_src) n += static_cast<int64_t>(inst.next_src->size());
  }
  return n;
}

std::vector<Batch> batch_by_tokens(const std::vector<TrainingInstance>& insts,
                                   int64_t budget_tokens, uint64_t seed) {
  std::vector<int> order(insts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return instance_token_cost(insts[static_cast<size_t>(a)]) >
           instance_token_cost(insts[static_cast<size_t>(b)]);
  });
  std::vector<Batch> batches;
  Batch cur;
  for (int idx : order) {
    int64_t cost = instance_token_cost(insts[static_cast<size_t>(idx)]);
    if (cost > budget_tokens) {
      throw DataError("instance " + std::to_string(idx) + " needs " +
                      std::to_string(cost) + " tokens, over the budget of " +
                      std::to_string(budget_tokens));
    }
    if (cur.tokens + cost > budget_tokens && !cur.instances.empty()) {
      batches.push_back(std::move(cur));
      cur = Batch{};
    }
    cur.instances.push_back(idx);
    cur.tokens += cost;
  }
  if (!cur.instances.empty()) batches.push_back(std::move(cur));
  Rng rng(seed);
  rng.shuffle(batches);
  return batches;
}

TrainingInstance concat_context(const TrainingInstance& inst, int sep_id) {
  if (!inst.prev_src) return inst;
  TrainingInstance out;
  out.cur_src = *inst.prev_src;
  out.cur_src.push_back(sep_id);
  out.cur_src.insert(out.cur_src.end(), inst.cur_src.begin(),
                     inst.cur_src.end());
  out.tgt = inst.tgt;
  return out;
}

// --- tokenization pipeline ----------------------------------------------

TokenDocument tokenize_document(const Document& doc, const BPEModel& bpe,
                                const Vocabulary& vocab, int max_sentence_len,
                                EncodeStats* stats,
                                std::vector<std::string>* warnings) {
  TokenDocument out;
  out.doc_id = doc.doc_id;
  out.sentences.reserve(doc.sentences.size());
  for (size_t i = 0; i < doc.sentences.size(); ++i) {
    std::vector<std::string> sub = apply_bpe(bpe, doc.sentences[i]);
    if (max_sentence_len > 0 &&
        static_cast<int>(sub.size()) > max_sentence_len) {
      if (warnings) {
        warnings->push_back("truncating sentence " + std::to_string(i) +
                            " of document '" + doc.doc_id + "' from " +
                            std::to_string(sub.size()) + " to " +
                            std::to_string(max_sentence_len) + " subwords");
      }
      sub.resize(static_cast<size_t>(max_sentence_len));
    }
    out.sentences.push_back(vocab.encode(sub, stats));
  }
  return out;
}

// --- instance files -----------------------------------------------------

namespace {

void write_field(std::ostream& out, const std::optional<std::vector<int>>& f) {
  if (!f) {
    out << "*";
    return;
  }
  for (size_t i = 0; i < f->size(); ++i) {
    if (i) out << ' ';
    out << (*f)[i];
  }
}

std::optional<std::vector<int>> read_field(const std::string& s) {
  if (s == "*") return std::nullopt;
  std::vector<int> ids;
  std::istringstream is(s);
  int v;
  while (is >> v) ids.push_back(v);
  return ids;
}

}  // namespace

void save_instances(const std::vector<TrainingInstance>& insts,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write instances to " + path);
  for (const TrainingInstance& inst : insts) {
    write_field(out, inst.prev_src);
    out << '\t';
    write_field(out, inst.cur_src);
    out << '\t';
    write_field(out, inst.next_src);
    out << '\t';
    write_field(out, inst.tgt);
    out << '\n';
  }
}

std::vector<TrainingInstance> load_instances(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open instance file " + path);
  std::vector<TrainingInstance> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = rstrip_cr(line);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    size_t pos = 0;
    for (int f = 0; f < 3; ++f) {
      size_t tab = line.find('\t', pos);
      if (tab == std::string::npos) {
        throw DataError("instance file " + path + " line " +
                        std::to_string(lineno) + " has missing fields");
      }
      fields.push_back(line.substr(pos, tab - pos));
      pos = tab + 1;
    }
    fields.push_back(line.substr(pos));
    TrainingInstance inst;
    inst.prev_src = read_field(fields[0]);
    auto cur = read_field(fields[1]);
    if (!cur || cur->empty()) {
      throw DataError("instance file " + path + " line " +
                      std::to_string(lineno) + " has an empty current side");
    }
    inst.cur_src = *cur;
    inst.next_src = read_field(fields[2]);
    inst.tgt = read_field(fields[3]);
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace ctxmt
