#pragma once

#include <functional>
#include <vector>

#include "pcam/tensor.hpp"

namespace pcam::ad {

using NodeId = int;

/// Reverse-mode tape for the fixed network shapes used in this toolkit.
/// Operations append nodes in topological order; backward() runs one reverse
/// traversal. Every forward and backward pass hard-fails on non-finite
/// values. A tape is single-threaded; independent tapes may run on separate
/// threads.
class Tape {
public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf node (input or parameter).
  NodeId leaf(Tensor value);

  /// out[i,j] = sum_a x[i,a]*w[a,j] + b[j].  x:[n,m] w:[m,k] b:[k] -> [n,k]
  NodeId affine(NodeId x, NodeId w, NodeId b);

  NodeId relu(NodeId x);
  NodeId sigmoid(NodeId x);

  struct Pooled {
    NodeId values;
    std::vector<int> argmax;  // source row per output element
  };

  /// Column-wise max over n points: [n,f] -> [f]. Gradient routes to the
  /// argmax row; ties break to the lowest row index.
  Pooled max_reduce_points(NodeId x);

  /// Same reduction over `segments` equal row blocks: [s*n,f] -> [s,f].
  Pooled max_pool_segments(NodeId x, int segments);

  /// Mean over the batch of -log softmax(logits)[label]. Stabilized by
  /// max-subtraction. labels[i] must lie in [0, k).
  NodeId softmax_cross_entropy(NodeId logits, std::vector<int> labels);

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);  // elementwise
  NodeId scale(NodeId a, double c);
  NodeId add_const(NodeId a, double c);
  NodeId log(NodeId a);
  NodeId clamp_min(NodeId a, double floor);
  NodeId mean_all(NodeId a);
  NodeId mean_squared_error(NodeId a, NodeId b);
  NodeId reshape(NodeId a, std::vector<int> shape);
  NodeId pick(NodeId a, int flat_index);

  /// Symmetric Chamfer reconstruction loss between per-segment point sets.
  /// a:[s*n,3] b:[s*m,3] -> scalar; per segment the mean nearest-neighbor
  /// Euclidean distance is taken in both directions and averaged, then
  /// averaged over segments. Subgradient at coincident points is 0.
  NodeId chamfer_loss(NodeId a, NodeId b, int segments);

  const Tensor& value(NodeId id) const;
  const Tensor& grad(NodeId id) const;

  /// Reverse accumulation from a scalar seed. Gradients of nodes the seed
  /// does not reach stay zero. May be called again; gradients are reset.
  void backward(NodeId seed);

  int node_count() const { return static_cast<int>(nodes_.size()); }

private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Tape&)> back;  // empty for leaves
  };

  NodeId push(Tensor value, std::function<void(Tape&)> back, const char* op);
  Tensor& grad_mut(NodeId id) { return nodes_[static_cast<std::size_t>(id)].grad; }
  const Tensor& val(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  void require(NodeId id) const;
  Pooled pool_impl(NodeId x, int segments, bool squeeze);

  std::vector<Node> nodes_;
};

}  // namespace pcam::ad
