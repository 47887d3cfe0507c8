// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#include "ctxmt/graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ctxmt/error.hpp"

namespace ctxmt {

namespace {

// c += a[m,k] * b[k,n]
void matmul_acc(const double* a, const double* b, double* c, int m, int k,
                int n) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<size_t>(i) * k;
    double* ci = c + static_cast<size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      double aip = ai[p];
      if (aip == 0.0) continue;
      const double* bp = b + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

// c += a[m,k] * b[n,k]^T
void matmul_nt_acc(const double* a, const double* b, double* c, int m, int k,
                   int n) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<size_t>(i) * k;
    double* ci = c + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = b + static_cast<size_t>(j) * k;
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] += acc;
    }
  }
}

// c += a[k,m]^T * b[k,n]
void matmul_tn_acc(const double* a, const double* b, double* c, int m, int k,
                   int n) {
  for (int p = 0; p < k; ++p) {
    const double* ap = a + static_cast<size_t>(p) * m;
    const double* bp = b + static_cast<size_t>(p) * n;
    for (int i = 0; i < m; ++i) {
      double api = ap[i];
      if (api == 0.0) continue;
      double* ci = c + static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

std::string shape_pair(const Tensor& a, const Tensor& b) {
  return a.shape_str() + " and " + b.shape_str();
}

}  // namespace

NodeId Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return NodeId{static_cast<int>(nodes_.size()) - 1};
}

const Tensor& Graph::value(NodeId id) const {
  return val(id.v);
}

bool Graph::needs_grad(NodeId id) const {
  return nodes_[static_cast<size_t>(id.v)].needs_grad;
}

std::vector<double>& Graph::grad_buf(int i) {
  Node& n = nodes_[static_cast<size_t>(i)];
  if (n.grad.empty()) n.grad.assign(val(i).data.size(), 0.0);
  return n.grad;
}

NodeId Graph::param(Tensor& t) {
  auto it = param_nodes_.find(&t);
  if (it != param_nodes_.end()) return NodeId{it->second};
  Node n;
  n.op = Op::kParam;
  n.ext = &t;
  n.needs_grad = t.requires_grad;
  NodeId id = push(std::move(n));
  param_nodes_[&t] = id.v;
  return id;
}

NodeId Graph::constant(Tensor t) {
  Node n;
  n.op = Op::kConstant;
  n.value = std::move(t);
  return push(std::move(n));
}

NodeId Graph::lookup(NodeId table, const std::vector<int>& ids) {
  const Tensor& tab = val(table.v);
  if (tab.shape.size() != 2) throw ShapeError("lookup table must be 2-D");
  int v = tab.rows(), d = tab.cols();
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= v) {
      std::ostringstream os;
      os << "token id " << ids[i] << " at position " << i
         << " out of vocabulary range [0, " << v << ")";
      throw DataError(os.str());
    }
  }
  Node n;
  n.op = Op::kLookup;
  n.inputs = {table.v};
  n.ids = ids;
  n.needs_grad = nodes_[static_cast<size_t>(table.v)].needs_grad;
  n.value = Tensor::zeros({static_cast<int>(ids.size()), d});
  for (size_t i = 0; i < ids.size(); ++i) {
    const double* src = tab.data.data() + static_cast<size_t>(ids[i]) * d;
    std::copy(src, src + d, n.value.data.data() + i * static_cast<size_t>(d));
  }
  return push(std::move(n));
}

NodeId Graph::add(NodeId a, NodeId b) {
  const Tensor& ta = val(a.v);
  const Tensor& tb = val(b.v);
  bool broadcast = !same_shape(ta, tb);
  if (broadcast && !(tb.rows() == 1 && tb.cols() == ta.cols())) {
    throw ShapeError("add: incompatible shapes " + shape_pair(ta, tb));
  }
  Node n;
  n.op = Op::kAdd;
  n.inputs = {a.v, b.v};
  n.needs_grad = nodes_[static_cast<size_t>(a.v)].needs_grad ||
                 nodes_[static_cast<size_t>(b.v)].needs_grad;
  n.value = ta;
  n.value.requires_grad = false;
  n.value.grad.clear();
  int rows = ta.rows(), cols = ta.cols();
  for (int r = 0; r < rows; ++r) {
    const double* brow =
        tb.data.data() + (broadcast ? 0 : static_cast<size_t>(r) * cols);
    double* out = n.value.data.data() + static_cast<size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) out[c] += brow[c];
  }
  return push(std::move(n));
}

NodeId Graph::scale(NodeId a, double c) {
  const Tensor& ta = val(a.v);
  Node n;
  n.op = Op::kScale;
  n.inputs = {a.v};
  n.scalar0 = c;
  n.needs_grad = nodes_[static_cast<size_t>(a.v)].needs_grad;
  n.value = ta;
  n.value.requires_grad = false;
  n.value.grad.clear();
  for (double& x : n.value.data) x *= c;
  return push(std::move(n));
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  const Tensor& ta = val(a.v);
  const Tensor& tb = val(b.v);
  if (ta.cols() != tb.rows()) {
    throw ShapeError("matmul: inner dimensions disagree for " +
                     shape_pair(ta, tb));
  }
  Node n;
  n.op = Op::kMatmul;
  n.inputs = {a.v, b.v};
  n.needs_grad = nodes_[static_cast<size_t>(a.v)].needs_grad ||
                 nodes_[static_cast<size_t>(b.v)].needs_grad;
  n.value = Tensor::zeros({ta.rows(), tb.cols()});
  matmul_acc(ta.data.data(), tb.data.data(), n.value.data.data(), ta.rows(),
             ta.cols(), tb.cols());
  return push(std::move(n));
}

NodeId Graph::matmul_nt(NodeId a, NodeId b) {
  const Tensor& ta = val(a.v);
  const Tensor& tb = val(b.v);
  if (ta.cols() != tb.cols()) {
    throw ShapeError("matmul_nt: inner dimensions disagree for " +
                     shape_pair(ta, tb));
  }
  Node n;
  n.op = Op::kMatmulNT;
  n.inputs = {a.v, b.v};
  n.needs_grad = nodes_[static_cast<size_t>(a.v)].needs_grad ||
                 nodes_[static_cast<size_t>(b.v)].needs_grad;
  n.value = Tensor::zeros({ta.rows(), tb.rows()});
  matmul_nt_acc(ta.data.data(), tb.data.data(), n.value.data.data(), ta.rows(),
                ta.cols(), tb.rows());
  return push(std::move(n));
}

NodeId Graph::relu(NodeId a) {
  Node n;
  n.op = Op::kRelu;
  n.inputs = {a.v};
  n.needs_grad = nodes_[static_cast<size_t>(a.v)].needs_grad;
  n.value = val(a.v);
  n.value.requires_grad = false;
  n.value.grad.clear();
  for (double& x : n.value.data) x = x > 0.0 ? x : 0.0;
  return push(std::move(n));
}

NodeId Graph::softmax(NodeId a) {
  const Tensor& ta = val(a.v);
  Node n;
  n.op = Op::kSoftmax;
  n.inputs = {a.v};
  n.needs_grad = nodes_[static_cast<size_t>(a.v)].needs_grad;
  n.value = Tensor::zeros(ta.shape);
  int rows = ta.rows(), cols = ta.cols();
  for (int r = 0; r < rows; ++r) {
    const double* in = ta.data.data() + static_cast<size_t>(r) * cols;
    double* out = n.value.data.data() + static_cast<size_t>(r) * cols;
    double m = in[0];
    for (int c = 1; c < cols; ++c) m = std::max(m, in[c]);
    double sum = 0.0;
    for (int c = 0; c < cols; ++c) {
      out[c] = std::exp(in[c] - m);
      sum += out[c];
    }
    for (int c = 0; c < cols; ++c) out[c] /= sum;
  }
  return push(std::move(n));
}

NodeId Graph::masked_softmax(NodeId scores, const std::vector<uint8_t>& mask) {
  const Tensor& ts = val(scores.v);
  int rows = ts.rows(), cols = ts.cols();
  if (static_cast<int64_t>(mask.size()) != ts.numel()) {
    throw ShapeError("masked_softmax: mask size does not match scores " +
                     ts.shape_str());
  }
  Node n;
  n.op = Op::kMaskedSoftmax;
  n.inputs = {scores.v};
  n.mask = mask;
  n.needs_grad = nodes_[static_cast<size_t>(scores.v)].needs_grad;
  n.value = Tensor::zeros(ts.shape);
  for (int r = 0; r < rows; ++r) {
    const double* in = ts.data.data() + static_cast<size_t>(r) * cols;
    const uint8_t* mk = mask.data() + static_cast<size_t>(r) * cols;
    double* out = n.value.data.data() + static_cast<size_t>(r) * cols;
    double m = -1.0;
    bool any = false;
    for (int c = 0; c < cols; ++c) {
      if (!mk[c]) continue;
      m = any ? std::max(m, in[c]) : in[c];
      any = true;
    }
    if (!any) {
      std::ostringstream os;
      os << "masked_softmax: query row " << r << " has no attendable key";
      throw Error(os.str());
    }
    double sum = 0.0;
    for (int c = 0; c < cols; ++c) {
      if (!mk[c]) continue;
      out[c] = std::exp(in[c] - m);
      sum += out[c];
    }
    for (int c = 0; c < cols; ++c) {
      if (mk[c]) out[c] /= sum;
    }
  }
  return push(std::move(n));
}

NodeId Graph::layer_norm(NodeId x, NodeId gain, NodeId bias, double eps) {
  const Tensor& tx = val(x.v);
  const Tensor& tg = val(gain.v);
  const Tensor& tb = val(bias.v);
  int rows = tx.rows(), d = tx.cols();
  if (tg.numel() != d || tb.numel() != d) {
    throw ShapeError("layer_norm: gain/bias must have " + std::to_string(d) +
                     " entries");
  }
  Node n;
  n.op = Op::kLayerNorm;
  n.inputs = {x.v, gain.v, bias.v};
  n.scalar0 = eps;
  n.needs_grad = nodes_[static_cast<size_t>(x.v)].needs_grad ||
                 nodes_[static_cast<size_t>(gain.v)].needs_grad ||
                 nodes_[static_cast<size_t>(bias.v)].needs_grad;
  n.value = Tensor::zeros(tx.shape);
  n.aux.resize(static_cast<size_t>(rows) * 2);  // mean, rstd per row
  for (int r = 0; r < rows; ++r) {
    const double* in = tx.data.data() + static_cast<size_t>(r) * d;
    double* out = n.value.data.data() + static_cast<size_t>(r) * d;
    double mean = 0.0;
    for (int c = 0; c < d; ++c) mean += in[c];
    mean /= d;
    double var = 0.0;
    for (int c = 0; c < d; ++c) var += (in[c] - mean) * (in[c] - mean);
    var /= d;
    double rstd = 1.0 / std::sqrt(var + eps);
    n.aux[static_cast<size_t>(r) * 2] = mean;
    n.aux[static_cast<size_t>(r) * 2 + 1] = rstd;
    for (int c = 0; c < d; ++c) {
      out[c] = tg.data[static_cast<size_t>(c)] * (in[c] - mean) * rstd +
               tb.data[static_cast<size_t>(c)];
    }
  }
  return push(std::move(n));
}

NodeId Graph::dropout(NodeId x, double p) {
  if (p == 0.0 || inference_) return x;
  if (p < 0.0 || p >= 1.0) throw Error("dropout rate must be in [0, 1)");
  const Tensor& tx = val(x.v);
  Node n;
  n.op = Op::kDropout;
  n.inputs = {x.v};
  n.needs_grad = nodes_[static_cast<size_t>(x.v)].needs_grad;
  n.aux.resize(tx.data.size());
  double keep_scale = 1.0 / (1.0 - p);
  for (double& m : n.aux) m = rng_.uniform() < p ? 0.0 : keep_scale;
  n.value = tx;
  n.value.requires_grad = false;
  n.value.grad.clear();
  for (size_t i = 0; i < n.value.data.size(); ++i) n.value.data[i] *= n.aux[i];
  return push(std::move(n));
}

NodeId Graph::cross_entropy(NodeId logits, const std::vector<int>& targets,
                            int pad_id, double smoothing) {
  const Tensor& tl = val(logits.v);
  int rows = tl.rows(), vocab = tl.cols();
  if (static_cast<int>(targets.size()) != rows) {
    throw ShapeError("cross_entropy: targets length " +
                     std::to_string(targets.size()) +
                     " does not match logits rows " + std::to_string(rows));
  }
  int nonpad = 0;
  for (size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] == pad_id) continue;
    if (targets[i] < 0 || targets[i] >= vocab) {
      std::ostringstream os;
      os << "cross_entropy: target id " << targets[i] << " at position " << i
         << " out of vocabulary range [0, " << vocab << ")";
      throw DataError(os.str());
    }
    ++nonpad;
  }
  Node n;
  n.op = Op::kCrossEntropy;
  n.inputs = {logits.v};
  n.ids = targets;
  n.int0 = pad_id;
  n.scalar0 = smoothing;
  n.needs_grad = nodes_[static_cast<size_t>(logits.v)].needs_grad;
  n.aux.assign(tl.data.size(), 0.0);  // cached softmax over non-pad rows
  double total = 0.0;
  for (int r = 0; r < rows; ++r) {
    if (targets[static_cast<size_t>(r)] == pad_id) continue;
    const double* z = tl.data.data() + static_cast<size_t>(r) * vocab;
    double* probs = n.aux.data() + static_cast<size_t>(r) * vocab;
    double m = z[0];
    for (int c = 1; c < vocab; ++c) m = std::max(m, z[c]);
    double sum = 0.0;
    for (int c = 0; c < vocab; ++c) {
      probs[c] = std::exp(z[c] - m);
      sum += probs[c];
    }
    double lse = m + std::log(sum);
    for (int c = 0; c < vocab; ++c) probs[c] /= sum;
    int t = targets[static_cast<size_t>(r)];
    double loss = -(1.0 - smoothing) * (z[t] - lse);
    if (smoothing > 0.0) {
      double mean_logp = 0.0;
      for (int c = 0; c < vocab; ++c) mean_logp += z[c] - lse;
      loss -= smoothing / vocab * mean_logp;
    }
    total += loss;
  }
  if (nonpad == 0) {
    warnings_.push_back("cross_entropy: all-pad target sequence, loss is 0");
    n.value = Tensor::scalar(0.0);
  } else {
    n.value = Tensor::scalar(total / nonpad);
  }
  n.aux.push_back(static_cast<double>(nonpad));
  return push(std::move(n));
}

NodeId Graph::sum_all(NodeId a) {
  const Tensor& ta = val(a.v);
  Node n;
  n.op = Op::kSumAll;
  n.inputs = {a.v};
  n.needs_grad = nodes_[static_cast<size_t>(a.v)].needs_grad;
  double s = 0.0;
  for (double x : ta.data) s += x;
  n.value = Tensor::scalar(s);
  return push(std::move(n));
}

NodeId Graph::mean_rows(NodeId a) {
  const Tensor& ta = val(a.v);
  int rows = ta.rows(), cols = ta.cols();
  Node n;
  n.op = Op::kMeanRows;
  n.inputs = {a.v};
  n.needs_grad = nodes_[static_cast<size_t>(a.v)].needs_grad;
  n.value = Tensor::zeros({1, cols});
  for (int r = 0; r < rows; ++r) {
    const double* in = ta.data.data() + static_cast<size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) n.value.data[static_cast<size_t>(c)] += in[c];
  }
  for (double& x : n.value.data) x /= rows;
  return push(std::move(n));
}

NodeId Graph::slice_cols(NodeId a, int start, int width) {
  const Tensor& ta = val(a.v);
  int rows = ta.rows(), cols = ta.cols();
  if (start < 0 || width <= 0 || start + width > cols) {
    throw ShapeError("slice_cols: range [" + std::to_string(start) + ", " +
                     std::to_string(start + width) + ") out of " +
                     ta.shape_str());
  }
  Node n;
  n.op = Op::kSliceCols;
  n.inputs = {a.v};
  n.int0 = start;
  n.needs_grad = nodes_[static_cast<size_t>(a.v)].needs_grad;
  n.value = Tensor::zeros({rows, width});
  for (int r = 0; r < rows; ++r) {
    const double* in = ta.data.data() + static_cast<size_t>(r) * cols + start;
    std::copy(in, in + width,
              n.value.data.data() + static_cast<size_t>(r) * width);
  }
  return push(std::move(n));
}

NodeId Graph::concat_cols(const std::vector<NodeId>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  int rows = val(parts[0].v).rows();
  int total = 0;
  for (NodeId p : parts) {
    if (val(p.v).rows() != rows) {
      throw ShapeError("concat_cols: row counts disagree");
    }
    total += val(p.v).cols();
  }
  Node n;
  n.op = Op::kConcatCols;
  n.value = Tensor::zeros({rows, total});
  int off = 0;
  for (NodeId p : parts) {
    n.inputs.push_back(p.v);
    n.needs_grad = n.needs_grad || nodes_[static_cast<size_t>(p.v)].needs_grad;
    const Tensor& tp = val(p.v);
    int w = tp.cols();
    for (int r = 0; r < rows; ++r) {
      std::copy(tp.data.data() + static_cast<size_t>(r) * w,
                tp.data.data() + static_cast<size_t>(r) * w + w,
                n.value.data.data() + static_cast<size_t>(r) * total + off);
    }
    off += w;
  }
  return push(std::move(n));
}

void Graph::backward(NodeId loss, double seed_grad) {
  const Tensor& lv = val(loss.v);
  if (!lv.is_scalar()) {
    throw Error("backward requires a scalar loss, got " + lv.shape_str());
  }
  if (backward_done_) {
    throw Error("backward may run only once per graph");
  }
  backward_done_ = true;
  grad_buf(loss.v)[0] += seed_grad;
  for (int i = loss.v; i >= 0; --i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (n.grad.empty() || !n.needs_grad) continue;
    backward_node(i);
  }
  // flush parameter gradients into external tensors
  for (auto& [tensor, idx] : param_nodes_) {
    Node& n = nodes_[static_cast<size_t>(idx)];
    if (n.grad.empty() || !n.needs_grad) continue;
    Tensor* t = n.ext;
    if (t->grad.empty()) t->alloc_grad();
    for (size_t j = 0; j < n.grad.size(); ++j) t->grad[j] += n.grad[j];
  }
}

void Graph::backward_node(int i) {
  Node& n = nodes_[static_cast<size_t>(i)];
  const std::vector<double>& g = n.grad;
  auto in_needs = [&](int slot) {
    return nodes_[static_cast<size_t>(n.inputs[static_cast<size_t>(slot)])]
        .needs_grad;
  };
  switch (n.op) {
    case Op::kParam:
    case Op::kConstant:
      break;
    case Op::kLookup: {
      if (!in_needs(0)) break;
      std::vector<double>& gt = grad_buf(n.inputs[0]);
      int d = n.value.cols();
      for (size_t r = 0; r < n.ids.size(); ++r) {
        double* dst = gt.data() + static_cast<size_t>(n.ids[r]) * d;
        const double* src = g.data() + r * static_cast<size_t>(d);
        for (int c = 0; c < d; ++c) dst[c] += src[c];
      }
      break;
    }
    case Op::kAdd: {
      const Tensor& ta = val(n.inputs[0]);
      const Tensor& tb = val(n.inputs[1]);
      if (in_needs(0)) {
        std::vector<double>& ga = grad_buf(n.inputs[0]);
        for (size_t j = 0; j < g.size(); ++j) ga[j] += g[j];
      }
      if (in_needs(1)) {
        std::vector<double>& gb = grad_buf(n.inputs[1]);
        if (same_shape(ta, tb)) {
          for (size_t j = 0; j < g.size(); ++j) gb[j] += g[j];
        } else {
          int rows = ta.rows(), cols = ta.cols();
          for (int r = 0; r < rows; ++r) {
            const double* row = g.data() + static_cast<size_t>(r) * cols;
            for (int c = 0; c < cols; ++c) gb[static_cast<size_t>(c)] += row[c];
          }
        }
      }
      break;
    }
    case Op::kScale: {
      if (!in_needs(0)) break;
      std::vector<double>& ga = grad_buf(n.inputs[0]);
      for (size_t j = 0; j < g.size(); ++j) ga[j] += n.scalar0 * g[j];
      break;
    }
    case Op::kMatmul: {
      const Tensor& ta = val(n.inputs[0]);
      const Tensor& tb = val(n.inputs[1]);
      int m = ta.rows(), k = ta.cols(), c = tb.cols();
      if (in_needs(0)) {
        // dA += dC * B^T
        matmul_nt_acc(g.data(), tb.data.data(), grad_buf(n.inputs[0]).data(),
                      m, c, k);
      }
      if (in_needs(1)) {
        // dB += A^T * dC
        matmul_tn_acc(ta.data.data(), g.data(), grad_buf(n.inputs[1]).data(),
                      k, m, c);
      }
      break;
    }
    case Op::kMatmulNT: {
      const Tensor& ta = val(n.inputs[0]);
      const Tensor& tb = val(n.inputs[1]);
      int m = ta.rows(), k = ta.cols(), r = tb.rows();
      if (in_needs(0)) {
        // dA += dC * B
        matmul_acc(g.data(), tb.data.data(), grad_buf(n.inputs[0]).data(), m,
                   r, k);
      }
      if (in_needs(1)) {
        // dB += dC^T * A
        matmul_tn_acc(g.data(), ta.data.data(), grad_buf(n.inputs[1]).data(),
                      r, m, k);
      }
      break;
    }
    case Op::kRelu: {
      if (!in_needs(0)) break;
      const Tensor& ta = val(n.inputs[0]);
      std::vector<double>& ga = grad_buf(n.inputs[0]);
      for (size_t j = 0; j < g.size(); ++j) {
        if (ta.data[j] > 0.0) ga[j] += g[j];
      }
      break;
    }
    case Op::kSoftmax: {
      if (!in_needs(0)) break;
      std::vector<double>& ga = grad_buf(n.inputs[0]);
      int rows = n.value.rows(), cols = n.value.cols();
      for (int r = 0; r < rows; ++r) {
        const double* p = n.value.data.data() + static_cast<size_t>(r) * cols;
        const double* gr = g.data() + static_cast<size_t>(r) * cols;
        double dot = 0.0;
        for (int c = 0; c < cols; ++c) dot += p[c] * gr[c];
        double* out = ga.data() + static_cast<size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) out[c] += p[c] * (gr[c] - dot);
      }
      break;
    }
    case Op::kMaskedSoftmax: {
      if (!in_needs(0)) break;
      std::vector<double>& ga = grad_buf(n.inputs[0]);
      int rows = n.value.rows(), cols = n.value.cols();
      for (int r = 0; r < rows; ++r) {
        const double* p = n.value.data.data() + static_cast<size_t>(r) * cols;
        const double* gr = g.data() + static_cast<size_t>(r) * cols;
        const uint8_t* mk = n.mask.data() + static_cast<size_t>(r) * cols;
        double dot = 0.0;
        for (int c = 0; c < cols; ++c) {
          if (mk[c]) dot += p[c] * gr[c];
        }
        double* out = ga.data() + static_cast<size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) {
          if (mk[c]) out[c] += p[c] * (gr[c] - dot);
        }
      }
      break;
    }
    case Op::kLayerNorm: {
      const Tensor& tx = val(n.inputs[0]);
      const Tensor& tg = val(n.inputs[1]);
      int rows = tx.rows(), d = tx.cols();
      std::vector<double>* gx = in_needs(0) ? &grad_buf(n.inputs[0]) : nullptr;
      std::vector<double>* gg = in_needs(1) ? &grad_buf(n.inputs[1]) : nullptr;
      std::vector<double>* gb = in_needs(2) ? &grad_buf(n.inputs[2]) : nullptr;
      for (int r = 0; r < rows; ++r) {
        double mean = n.aux[static_cast<size_t>(r) * 2];
        double rstd = n.aux[static_cast<size_t>(r) * 2 + 1];
        const double* x = tx.data.data() + static_cast<size_t>(r) * d;
        const double* gy = g.data() + static_cast<size_t>(r) * d;
        double mean_u = 0.0, mean_ux = 0.0;
        for (int c = 0; c < d; ++c) {
          double xhat = (x[c] - mean) * rstd;
          double u = gy[c] * tg.data[static_cast<size_t>(c)];
          mean_u += u;
          mean_ux += u * xhat;
          if (gg) (*gg)[static_cast<size_t>(c)] += gy[c] * xhat;
          if (gb) (*gb)[static_cast<size_t>(c)] += gy[c];
        }
        mean_u /= d;
        mean_ux /= d;
        if (gx) {
          double* out = gx->data() + static_cast<size_t>(r) * d;
          for (int c = 0; c < d; ++c) {
            double xhat = (x[c] - mean) * rstd;
            double u = gy[c] * tg.data[static_cast<size_t>(c)];
            out[c] += rstd * (u - mean_u - xhat * mean_ux);
          }
        }
      }
      break;
    }
    case Op::kDropout: {
      if (!in_needs(0)) break;
      std::vector<double>& ga = grad_buf(n.inputs[0]);
      for (size_t j = 0; j < g.size(); ++j) ga[j] += g[j] * n.aux[j];
      break;
    }
    case Op::kCrossEntropy: {
      if (!in_needs(0)) break;
      int rows = val(n.inputs[0]).rows();
      int vocab = val(n.inputs[0]).cols();
      int nonpad = static_cast<int>(n.aux.back());
      if (nonpad == 0) break;
      double go = g[0] / nonpad;
      double smoothing = n.scalar0;
      std::vector<double>& gl = grad_buf(n.inputs[0]);
      for (int r = 0; r < rows; ++r) {
        int t = n.ids[static_cast<size_t>(r)];
        if (t == n.int0) continue;  // pad
        const double* p = n.aux.data() + static_cast<size_t>(r) * vocab;
        double* out = gl.data() + static_cast<size_t>(r) * vocab;
        for (int c = 0; c < vocab; ++c) {
          double q = smoothing / vocab + (c == t ? 1.0 - smoothing : 0.0);
          out[c] += go * (p[c] - q);
        }
      }
      break;
    }
    case Op::kSumAll: {
      if (!in_needs(0)) break;
      std::vector<double>& ga = grad_buf(n.inputs[0]);
      for (double& x : ga) x += g[0];
      break;
    }
    case Op::kMeanRows: {
      if (!in_needs(0)) break;
      const Tensor& ta = val(n.inputs[0]);
      int rows = ta.rows(), cols = ta.cols();
      std::vector<double>& ga = grad_buf(n.inputs[0]);
      for (int r = 0; r < rows; ++r) {
        double* out = ga.data() + static_cast<size_t>(r) * cols;
        for (int c = 0; c < cols; ++c) out[c] += g[static_cast<size_t>(c)] / rows;
      }
      break;
    }
    case Op::kSliceCols: {
      if (!in_needs(0)) break;
      const Tensor& ta = val(n.inputs[0]);
      int rows = ta.rows(), cols = ta.cols(), w = n.value.cols();
      std::vector<double>& ga = grad_buf(n.inputs[0]);
      for (int r = 0; r < rows; ++r) {
        double* out = ga.data() + static_cast<size_t>(r) * cols + n.int0;
        const double* src = g.data() + static_cast<size_t>(r) * w;
        for (int c = 0; c < w; ++c) out[c] += src[c];
      }
      break;
    }
    case Op::kConcatCols: {
      int rows = n.value.rows(), total = n.value.cols();
      int off = 0;
      for (size_t s = 0; s < n.inputs.size(); ++s) {
        const Tensor& tp = val(n.inputs[s]);
        int w = tp.cols();
        if (nodes_[static_cast<size_t>(n.inputs[s])].needs_grad) {
          std::vector<double>& gp = grad_buf(n.inputs[s]);
          for (int r = 0; r < rows; ++r) {
            const double* src = g.data() + static_cast<size_t>(r) * total + off;
            double* dst = gp.data() + static_cast<size_t>(r) * w;
            for (int c = 0; c < w; ++c) dst[c] += src[c];
          }
        }
        off += w;
      }
      break;
    }
  }
}

}  // namespace ctxmt
