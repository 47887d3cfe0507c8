// Copyright 2026 the ctxmt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

#include "ctxmt/rng.hpp"
#include "ctxmt/tensor.hpp"

namespace ctxmt {

/// Handle to a node in a Graph.
struct NodeId {
  int v = -1;
  bool valid() const { return v >= 0; }
};

enum class Op {
  kParam,
  kConstant,
  kLookup,
  kAdd,          // same shape, or rhs [1, n] broadcast over rows
  kScale,
  kMatmul,       // [m,k] x [k,n]
  kMatmulNT,     // [m,k] x [n,k]^T
  kRelu,
  kSoftmax,      // along last axis
  kMaskedSoftmax,
  kLayerNorm,
  kDropout,
  kCrossEntropy,
  kSumAll,
  kMeanRows,     // [m,n] -> [1,n]
  kSliceCols,
  kConcatCols,
};

/// Reverse-mode automatic differentiation tape. Nodes are appended in
/// construction order (which is a topological order by construction) and
/// values are computed eagerly. backward() visits nodes in exact reverse
/// construction order, accumulating (+=) gradients across fan-out; parameter
/// leaves flush their gradients into the external Tensor's grad buffer.
///
/// Graphs are single-owner values: no operation mutates shared global state,
/// so independent graphs may run on independent workers.
class Graph {
 public:
  /// dropout_seed drives every dropout mask drawn while building this graph.
  explicit Graph(uint64_t dropout_seed = 0) : rng_(dropout_seed) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Leaf over an externally owned parameter tensor. Repeated calls with the
  /// same tensor return the same node. The tensor must outlive the graph.
  NodeId param(Tensor& t);

  /// Leaf with no gradient.
  NodeId constant(Tensor t);

  /// Row gather: table [V, d], ids in [0, V) -> [ids.size(), d].
  /// Out-of-range ids raise DataError naming the offending position.
  NodeId lookup(NodeId table, const std::vector<int>& ids);

  NodeId add(NodeId a, NodeId b);
  NodeId scale(NodeId a, double c);
  NodeId matmul(NodeId a, NodeId b);
  NodeId matmul_nt(NodeId a, NodeId b);
  NodeId relu(NodeId a);

  /// Numerically stabilized softmax along the last axis.
  NodeId softmax(NodeId a);

  /// Softmax restricted to allowed entries; masked entries get weight
  /// exactly 0. mask is row-major [rows*cols], nonzero = allowed. Every row
  /// must have at least one allowed entry.
  NodeId masked_softmax(NodeId scores, const std::vector<uint8_t>& mask);

  /// Per-row normalization: gain * (x - mean) / sqrt(var + eps) + bias.
  /// gain and bias are [1, d].
  NodeId layer_norm(NodeId x, NodeId gain, NodeId bias, double eps);

  /// Inverted dropout with keep-scale 1/(1-p); identity when p == 0 or the
  /// graph is in inference mode. The mask is drawn from this graph's seeded
  /// stream at construction time.
  NodeId dropout(NodeId x, double p);

  /// Inference graphs skip dropout entirely.
  void set_inference(bool on) { inference_ = on; }
  bool inference() const { return inference_; }

  /// Mean over non-pad positions of the smoothed negative log-likelihood.
  /// logits [positions, vocab]; targets.size() == positions. The smoothed
  /// target distribution puts (1 - smoothing) on the target id plus a
  /// uniform smoothing/vocab everywhere. Padding positions contribute zero;
  /// an all-pad sequence yields loss 0 and records a warning.
  NodeId cross_entropy(NodeId logits, const std::vector<int>& targets,
                       int pad_id, double smoothing);

  NodeId sum_all(NodeId a);
  NodeId mean_rows(NodeId a);
  NodeId slice_cols(NodeId a, int start, int width);
  NodeId concat_cols(const std::vector<NodeId>& parts);

  const Tensor& value(NodeId id) const;
  bool needs_grad(NodeId id) const;
  size_t size() const { return nodes_.size(); }

  /// Backpropagates seed_grad from a scalar loss node into every
  /// requires_grad parameter reachable from it.
  void backward(NodeId loss, double seed_grad = 1.0);

  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  struct Node {
    Op op;
    std::vector<int> inputs;
    Tensor value;           // unused for kParam (external storage)
    Tensor* ext = nullptr;  // kParam only
    std::vector<double> grad;
    bool needs_grad = false;
    // op-specific payload
    std::vector<int> ids;        // kLookup, kCrossEntropy targets, kSliceCols
    std::vector<uint8_t> mask;   // kMaskedSoftmax
    std::vector<double> aux;     // kLayerNorm mean/rstd, kDropout mask,
                                 // kCrossEntropy cached probabilities
    double scalar0 = 0.0;        // kScale c, kLayerNorm eps, kCE smoothing
    int int0 = 0;                // kCE pad id / nonpad count, kSliceCols start
  };

  const Tensor& val(int i) const {
    const Node& n = nodes_[static_cast<size_t>(i)];
    return n.ext ? *n.ext : n.value;
  }
  std::vector<double>& grad_buf(int i);
  NodeId push(Node n);
  void backward_node(int i);

  std::deque<Node> nodes_;
  std::unordered_map<const Tensor*, int> param_nodes_;
  std::vector<std::string> warnings_;
  Rng rng_;
  bool backward_done_ = false;
  bool inference_ = false;
};

}  // namespace ctxmt
