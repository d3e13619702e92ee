#pragma once

#include <array>
#include <vector>

#include "veram/tensor.hpp"

namespace veram {

/// Node handle on a Tape.
using NodeId = int;

/// Recorded forward graph with reverse-mode differentiation.
///
/// The op set is exactly what the agent needs: affine maps, the pointwise
/// nonlinearities, concat/slice, elementwise add/mul, LogSoftMax and the
/// NLL pick. Parameters are bound by index into an external tensor vector;
/// their values are copied onto the tape at first use, so the recorded
/// graph stays valid even if the caller mutates parameters afterwards.
///
/// Gradients may be seeded at any node (seed_gradient) before backward();
/// backward(loss) is the shorthand that seeds 1 at a scalar node. A tape
/// can run backward once; a second call raises StaleGraphError.
class Tape {
 public:
  explicit Tape(const std::vector<Tensor>& params);

  NodeId constant(Tensor value);
  /// Leaf for params[index]; memoized, so repeated use accumulates naturally.
  NodeId param(int index);

  NodeId affine(NodeId x, NodeId w, NodeId b);  // W*x + b
  NodeId matvec(NodeId w, NodeId x);            // W*x
  NodeId relu(NodeId x);
  NodeId elu(NodeId x, double alpha = 1.0);
  NodeId sigmoid(NodeId x);
  NodeId tanh(NodeId x);
  NodeId concat(NodeId a, NodeId b);
  NodeId slice(NodeId x, int offset, int length);
  NodeId add(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId log_softmax(NodeId x);
  NodeId nll(NodeId log_probs, int label);  // -log_probs[label]
  NodeId sum(NodeId x);

  const Tensor& value(NodeId n) const { return nodes_[static_cast<std::size_t>(n)].value; }
  int node_count() const { return static_cast<int>(nodes_.size()); }

  /// Accumulates g into the node's output gradient ahead of backward().
  void seed_gradient(NodeId n, const Tensor& g);
  /// Reverse topological sweep; each node visited exactly once.
  void backward();
  /// Seeds d(loss)=1 at a scalar node, then runs backward().
  void backward(NodeId loss);

  /// One tensor per bound parameter; zeros for parameters the recorded
  /// graph never touched.
  std::vector<Tensor> param_gradients() const;
  /// Gradient at a non-parameter node (valid after backward()).
  const Tensor& gradient(NodeId n) const;

 private:
  enum class Op {
    kConstant,
    kParam,
    kAffine,
    kMatVec,
    kRelu,
    kElu,
    kSigmoid,
    kTanh,
    kConcat,
    kSlice,
    kAdd,
    kMul,
    kLogSoftmax,
    kNll,
    kSum,
  };

  struct Node {
    Op op;
    std::array<NodeId, 3> in{-1, -1, -1};
    Tensor value;
    Tensor grad;      // allocated lazily, same shape as value
    int iaux = -1;    // param index / slice offset / class label
    int iaux2 = -1;   // slice length
    double daux = 0;  // elu alpha
  };

  NodeId push(Node n);
  Tensor& grad_of(NodeId n);
  const Tensor& in_value(const Node& n, int slot) const { return nodes_[static_cast<std::size_t>(n.in[static_cast<std::size_t>(slot)])].value; }
  void check_finite(NodeId n) const;

  const std::vector<Tensor>* params_;
  std::vector<Node> nodes_;
  std::vector<NodeId> param_node_;  // param index -> leaf node id or -1
  bool backward_done_ = false;
};

}  // namespace veram
