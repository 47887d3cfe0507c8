// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#include "ctxmt/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "ctxmt/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

namespace ctxmt {

namespace {

constexpr char kMagic[8] = {'C', 'T', 'X', 'M', 'T', 'C', 'K', '1'};

struct Writer {
  std::string buf;

  void raw(const void* p, size_t n) {
    buf.append(static_cast<const char*>(p), n);
  }
  void u32(uint32_t v) { raw(&v, 4); }
  void u64(uint64_t v) { raw(&v, 8); }
  void i64(int64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }
  void f64s(const std::vector<double>& v) {
    raw(v.data(), v.size() * sizeof(double));
  }
  void str(const std::string& s) {
    u32(static_cast<uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
};

struct Reader {
  const char* p;
  size_t left;

  void raw(void* out, size_t n) {
    if (n > left) throw DataError("checkpoint ends unexpectedly");
    std::memcpy(out, p, n);
    p += n;
    left -= n;
  }
  uint32_t u32() {
    uint32_t v;
    raw(&v, 4);
    return v;
  }
  uint64_t u64() {
    uint64_t v;
    raw(&v, 8);
    return v;
  }
  int64_t i64() {
    int64_t v;
    raw(&v, 8);
    return v;
  }
  double f64() {
    double v;
    raw(&v, 8);
    return v;
  }
  std::vector<double> f64s(size_t n) {
    std::vector<double> v(n);
    raw(v.data(), n * sizeof(double));
    return v;
  }
  std::string str() {
    uint32_t n = u32();
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
};

}  // namespace

uint64_t fnv1a64(const void* data, size_t len, uint64_t seed) {
  uint64_t h = seed;
  const auto* b = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= b[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

const NamedTensor* Checkpoint::find(const std::string& name) const {
  for (const NamedTensor& nt : params) {
    if (nt.name == name) return &nt;
  }
  return nullptr;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.u32(ckpt.version);
  w.i64(ckpt.step);
  w.u64(ckpt.src_vocab_hash);
  w.u64(ckpt.tgt_vocab_hash);
  w.str(ckpt.config_text);
  w.u32(static_cast<uint32_t>(ckpt.params.size()));
  for (const NamedTensor& nt : ckpt.params) {
    w.str(nt.name);
    w.u32(static_cast<uint32_t>(nt.tensor.shape.size()));
    for (int d : nt.tensor.shape) w.u32(static_cast<uint32_t>(d));
    w.f64s(nt.tensor.data);
  }
  if (ckpt.optimizer) {
    const auto& opt = *ckpt.optimizer;
    w.buf.push_back(1);
    w.i64(opt.step);
    w.f64(opt.beta1);
    w.f64(opt.beta2);
    w.f64(opt.epsilon);
    w.u32(static_cast<uint32_t>(opt.m.size()));
    for (size_t i = 0; i < opt.m.size(); ++i) {
      w.u32(static_cast<uint32_t>(opt.m[i].size()));
      w.f64s(opt.m[i]);
      w.f64s(opt.v[i]);
    }
  } else {
    w.buf.push_back(0);
  }
  uint64_t hash = fnv1a64(w.buf.data(), w.buf.size());
  w.u64(hash);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint to " + path);
  out.write(w.buf.data(), static_cast<std::streamsize>(w.buf.size()));
  if (!out) throw DataError("short write while saving checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path);
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  if (buf.size() < sizeof(kMagic) + 8) {
    throw DataError("checkpoint " + path + " is truncated");
  }
  uint64_t stored_hash;
  std::memcpy(&stored_hash, buf.data() + buf.size() - 8, 8);
  if (fnv1a64(buf.data(), buf.size() - 8) != stored_hash) {
    throw DataError("checkpoint " + path +
                    " fails its integrity hash (truncated or corrupt)");
  }
  Reader r{buf.data(), buf.size() - 8};
  char magic[8];
  r.raw(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) {
    throw DataError(path + " is not a checkpoint file");
  }
  Checkpoint ckpt;
  ckpt.version = r.u32();
  if (ckpt.version != Checkpoint::kVersion) {
    throw DataError("checkpoint " + path + " has format version " +
                    std::to_string(ckpt.version) + ", expected " +
                    std::to_string(Checkpoint::kVersion));
  }
  ckpt.step = r.i64();
  ckpt.src_vocab_hash = r.u64();
  ckpt.tgt_vocab_hash = r.u64();
  ckpt.config_text = r.str();
  uint32_t n = r.u32();
  ckpt.params.reserve(n);
  for (uint32_t i = 0; i < n; ++i) {
    NamedTensor nt;
    nt.name = r.str();
    uint32_t rank = r.u32();
    std::vector<int> shape;
    int64_t numel = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      shape.push_back(static_cast<int>(r.u32()));
      numel *= shape.back();
    }
    nt.tensor = Tensor::from(shape, r.f64s(static_cast<size_t>(numel)));
    ckpt.params.push_back(std::move(nt));
  }
  char has_opt;
  r.raw(&has_opt, 1);
  if (has_opt) {
    Checkpoint::OptimizerState opt;
    opt.step = r.i64();
    opt.beta1 = r.f64();
    opt.beta2 = r.f64();
    opt.epsilon = r.f64();
    uint32_t slots = r.u32();
    for (uint32_t i = 0; i < slots; ++i) {
      uint32_t len = r.u32();
      opt.m.push_back(r.f64s(len));
      opt.v.push_back(r.f64s(len));
    }
    ckpt.optimizer = std::move(opt);
  }
  if (r.left != 0) {
    throw DataError("checkpoint " + path + " has trailing bytes");
  }
  return ckpt;
}

Checkpoint snapshot(const ParamStore& store, const std::string& config_text,
                    int64_t step, uint64_t src_vocab_hash,
                    uint64_t tgt_vocab_hash, const AdamState* optimizer) {
  Checkpoint ckpt;
  ckpt.step = step;
  ckpt.src_vocab_hash = src_vocab_hash;
  ckpt.tgt_vocab_hash = tgt_vocab_hash;
  ckpt.config_text = config_text;
  for (const auto& p : store.list()) {
    NamedTensor nt;
    nt.name = p->name;
    nt.tensor = p->tensor;
    nt.tensor.requires_grad = false;
    nt.tensor.grad.clear();
    ckpt.params.push_back(std::move(nt));
  }
  if (optimizer) {
    Checkpoint::OptimizerState opt;
    opt.step = optimizer->step;
    opt.beta1 = optimizer->beta1;
    opt.beta2 = optimizer->beta2;
    opt.epsilon = optimizer->epsilon;
    opt.m = optimizer->m;
    opt.v = optimizer->v;
    ckpt.optimizer = std::move(opt);
  }
  return ckpt;
}

void load_params(const Checkpoint& ckpt, ParamStore& store) {
  for (const auto& p : store.list()) {
    const NamedTensor* nt = ckpt.find(p->name);
    if (!nt) {
      throw DataError("checkpoint lacks parameter '" + p->name + "'");
    }
    if (nt->tensor.shape != p->tensor.shape) {
      throw DataError("checkpoint parameter '" + p->name + "' has shape " +
                      nt->tensor.shape_str() + ", model expects " +
                      p->tensor.shape_str());
    }
    p->tensor.data = nt->tensor.data;
  }
}

AdamState load_optimizer(const Checkpoint& ckpt, const ParamStore& store) {
  if (!ckpt.optimizer) throw DataError("checkpoint has no optimizer state");
  const auto& opt = *ckpt.optimizer;
  if (opt.m.size() != store.size()) {
    throw DataError("optimizer state has " + std::to_string(opt.m.size()) +
                    " slots, model has " + std::to_string(store.size()));
  }
  AdamState st;
  st.step = opt.step;
  st.beta1 = opt.beta1;
  st.beta2 = opt.beta2;
  st.epsilon = opt.epsilon;
  st.m = opt.m;
  st.v = opt.v;
  for (size_t i = 0; i < store.size(); ++i) {
    if (st.m[i].size() != store.list()[i]->tensor.data.size()) {
      throw DataError("optimizer slot size mismatch for parameter '" +
                      store.list()[i]->name + "'");
    }
  }
  return st;
}

}  // namespace ctxmt
