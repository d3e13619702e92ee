#include "veram/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "veram/errors.hpp"

namespace veram {

Tape::Tape(const std::vector<Tensor>& params) : params_(&params) {
  param_node_.assign(params.size(), -1);
  nodes_.reserve(128);
}

NodeId Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size()) - 1;
}

NodeId Tape::constant(Tensor value) {
  Node n;
  n.op = Op::kConstant;
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Tape::param(int index) {
  NodeId& memo = param_node_.at(static_cast<std::size_t>(index));
  if (memo >= 0) return memo;
  Node n;
  n.op = Op::kParam;
  n.iaux = index;
  n.value = (*params_)[static_cast<std::size_t>(index)];
  memo = push(std::move(n));
  return memo;
}

NodeId Tape::affine(NodeId x, NodeId w, NodeId b) {
  const Tensor& xv = value(x);
  const Tensor& wv = value(w);
  const Tensor& bv = value(b);
  if (wv.rank() != 2 || xv.rank() != 1 || wv.cols() != xv.size())
    throw DimensionError("affine: W " + shape_str(wv) + " does not accept x " + shape_str(xv));
  if (bv.rank() != 1 || bv.size() != wv.rows())
    throw DimensionError("affine: b " + shape_str(bv) + " does not match W " + shape_str(wv));
  Node n;
  n.op = Op::kAffine;
  n.in = {x, w, b};
  n.value = Tensor::zeros({wv.rows()});
  for (int r = 0; r < wv.rows(); ++r) {
    double acc = bv[r];
    const double* wrow = wv.data.data() + static_cast<std::size_t>(r) * wv.cols();
    for (int c = 0; c < wv.cols(); ++c) acc += wrow[c] * xv[c];
    n.value[r] = acc;
  }
  return push(std::move(n));
}

NodeId Tape::matvec(NodeId w, NodeId x) {
  const Tensor& xv = value(x);
  const Tensor& wv = value(w);
  if (wv.rank() != 2 || xv.rank() != 1 || wv.cols() != xv.size())
    throw DimensionError("matvec: W " + shape_str(wv) + " does not accept x " + shape_str(xv));
  Node n;
  n.op = Op::kMatVec;
  n.in = {x, w, -1};
  n.value = Tensor::zeros({wv.rows()});
  for (int r = 0; r < wv.rows(); ++r) {
    double acc = 0.0;
    const double* wrow = wv.data.data() + static_cast<std::size_t>(r) * wv.cols();
    for (int c = 0; c < wv.cols(); ++c) acc += wrow[c] * xv[c];
    n.value[r] = acc;
  }
  return push(std::move(n));
}

NodeId Tape::relu(NodeId x) {
  Node n;
  n.op = Op::kRelu;
  n.in = {x, -1, -1};
  n.value = value(x);
  for (double& v : n.value.data) v = v > 0 ? v : 0.0;
  return push(std::move(n));
}

NodeId Tape::elu(NodeId x, double alpha) {
  Node n;
  n.op = Op::kElu;
  n.in = {x, -1, -1};
  n.daux = alpha;
  n.value = value(x);
  for (double& v : n.value.data) v = v >= 0 ? v : alpha * (std::exp(v) - 1.0);
  return push(std::move(n));
}

NodeId Tape::sigmoid(NodeId x) {
  Node n;
  n.op = Op::kSigmoid;
  n.in = {x, -1, -1};
  n.value = value(x);
  for (double& v : n.value.data) v = 1.0 / (1.0 + std::exp(-v));
  return push(std::move(n));
}

NodeId Tape::tanh(NodeId x) {
  Node n;
  n.op = Op::kTanh;
  n.in = {x, -1, -1};
  n.value = value(x);
  for (double& v : n.value.data) v = std::tanh(v);
  return push(std::move(n));
}

NodeId Tape::concat(NodeId a, NodeId b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (av.rank() != 1 || bv.rank() != 1)
    throw DimensionError("concat: expects vectors, got " + shape_str(av) + " and " + shape_str(bv));
  Node n;
  n.op = Op::kConcat;
  n.in = {a, b, -1};
  n.value = Tensor::zeros({av.size() + bv.size()});
  std::copy(av.data.begin(), av.data.end(), n.value.data.begin());
  std::copy(bv.data.begin(), bv.data.end(), n.value.data.begin() + av.size());
  return push(std::move(n));
}

NodeId Tape::slice(NodeId x, int offset, int length) {
  const Tensor& xv = value(x);
  if (xv.rank() != 1 || offset < 0 || length < 0 || offset + length > xv.size())
    throw DimensionError("slice: [" + std::to_string(offset) + "," + std::to_string(offset + length) +
                         ") out of range for " + shape_str(xv));
  Node n;
  n.op = Op::kSlice;
  n.in = {x, -1, -1};
  n.iaux = offset;
  n.iaux2 = length;
  n.value = Tensor::zeros({length});
  std::copy(xv.data.begin() + offset, xv.data.begin() + offset + length, n.value.data.begin());
  return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
  require_same_shape(value(a), value(b), "add");
  Node n;
  n.op = Op::kAdd;
  n.in = {a, b, -1};
  n.value = value(a);
  n.value += value(b);
  return push(std::move(n));
}

NodeId Tape::mul(NodeId a, NodeId b) {
  require_same_shape(value(a), value(b), "mul");
  Node n;
  n.op = Op::kMul;
  n.in = {a, b, -1};
  n.value = value(a);
  for (int i = 0; i < n.value.size(); ++i) n.value[i] *= value(b)[i];
  return push(std::move(n));
}

NodeId Tape::log_softmax(NodeId x) {
  const Tensor& xv = value(x);
  if (xv.rank() != 1 || xv.size() < 2)
    throw DimensionError("log_softmax: expects a vector of >=2 entries, got " + shape_str(xv));
  Node n;
  n.op = Op::kLogSoftmax;
  n.in = {x, -1, -1};
  n.value = xv;
  double mx = *std::max_element(xv.data.begin(), xv.data.end());
  double lse = 0.0;
  for (double v : xv.data) lse += std::exp(v - mx);
  lse = mx + std::log(lse);
  for (double& v : n.value.data) v -= lse;
  return push(std::move(n));
}

NodeId Tape::nll(NodeId log_probs, int label) {
  const Tensor& lp = value(log_probs);
  if (label < 0 || label >= lp.size())
    throw UsageError("nll: label " + std::to_string(label) + " out of range for " + shape_str(lp));
  Node n;
  n.op = Op::kNll;
  n.in = {log_probs, -1, -1};
  n.iaux = label;
  n.value = Tensor::vec({-lp[label]});
  return push(std::move(n));
}

NodeId Tape::sum(NodeId x) {
  Node n;
  n.op = Op::kSum;
  n.in = {x, -1, -1};
  double acc = 0.0;
  for (double v : value(x).data) acc += v;
  n.value = Tensor::vec({acc});
  return push(std::move(n));
}

Tensor& Tape::grad_of(NodeId n) {
  Node& node = nodes_[static_cast<std::size_t>(n)];
  if (node.grad.data.empty()) node.grad = Tensor::zeros(node.value.shape);
  return node.grad;
}

void Tape::seed_gradient(NodeId n, const Tensor& g) {
  if (backward_done_) throw StaleGraphError("seed_gradient after backward(); record a new forward pass");
  require_same_shape(value(n), g, "seed_gradient");
  grad_of(n) += g;
}

void Tape::backward(NodeId loss) {
  if (value(loss).size() != 1)
    throw DimensionError("backward: loss node must be scalar, got " + shape_str(value(loss)));
  seed_gradient(loss, Tensor::vec({1.0}));
  backward();
}

void Tape::backward() {
  if (backward_done_) throw StaleGraphError("backward() called twice on the same graph");
  backward_done_ = true;

  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.grad.data.empty()) continue;  // nothing flowed into this node
    const Tensor& g = n.grad;
    switch (n.op) {
      case Op::kConstant:
      case Op::kParam:
        break;
      case Op::kAffine:
      case Op::kMatVec: {
        const Tensor& xv = in_value(n, 0);
        const Tensor& wv = in_value(n, 1);
        Tensor& gx = grad_of(n.in[0]);
        Tensor& gw = grad_of(n.in[1]);
        for (int r = 0; r < wv.rows(); ++r) {
          double gr = g[r];
          if (gr == 0.0) continue;
          const double* wrow = wv.data.data() + static_cast<std::size_t>(r) * wv.cols();
          double* gwrow = gw.data.data() + static_cast<std::size_t>(r) * wv.cols();
          for (int c = 0; c < wv.cols(); ++c) {
            gx[c] += wrow[c] * gr;
            gwrow[c] += xv[c] * gr;
          }
        }
        if (n.op == Op::kAffine) grad_of(n.in[2]) += g;
        break;
      }
      case Op::kRelu: {
        const Tensor& xv = in_value(n, 0);
        Tensor& gx = grad_of(n.in[0]);
        for (int k = 0; k < xv.size(); ++k) gx[k] += xv[k] > 0 ? g[k] : 0.0;
        break;
      }
      case Op::kElu: {
        const Tensor& xv = in_value(n, 0);
        Tensor& gx = grad_of(n.in[0]);
        for (int k = 0; k < xv.size(); ++k)
          gx[k] += xv[k] >= 0 ? g[k] : g[k] * (n.value[k] + n.daux);
        break;
      }
      case Op::kSigmoid: {
        Tensor& gx = grad_of(n.in[0]);
        for (int k = 0; k < n.value.size(); ++k) gx[k] += g[k] * n.value[k] * (1.0 - n.value[k]);
        break;
      }
      case Op::kTanh: {
        Tensor& gx = grad_of(n.in[0]);
        for (int k = 0; k < n.value.size(); ++k) gx[k] += g[k] * (1.0 - n.value[k] * n.value[k]);
        break;
      }
      case Op::kConcat: {
        Tensor& ga = grad_of(n.in[0]);
        Tensor& gb = grad_of(n.in[1]);
        for (int k = 0; k < ga.size(); ++k) ga[k] += g[k];
        for (int k = 0; k < gb.size(); ++k) gb[k] += g[ga.size() + k];
        break;
      }
      case Op::kSlice: {
        Tensor& gx = grad_of(n.in[0]);
        for (int k = 0; k < n.iaux2; ++k) gx[n.iaux + k] += g[k];
        break;
      }
      case Op::kAdd: {
        grad_of(n.in[0]) += g;
        grad_of(n.in[1]) += g;
        break;
      }
      case Op::kMul: {
        const Tensor& av = in_value(n, 0);
        const Tensor& bv = in_value(n, 1);
        Tensor& ga = grad_of(n.in[0]);
        Tensor& gb = grad_of(n.in[1]);
        for (int k = 0; k < av.size(); ++k) {
          ga[k] += g[k] * bv[k];
          gb[k] += g[k] * av[k];
        }
        break;
      }
      case Op::kLogSoftmax: {
        Tensor& gx = grad_of(n.in[0]);
        double gsum = 0.0;
        for (double v : g.data) gsum += v;
        for (int k = 0; k < n.value.size(); ++k) gx[k] += g[k] - std::exp(n.value[k]) * gsum;
        break;
      }
      case Op::kNll: {
        grad_of(n.in[0])[n.iaux] -= g[0];
        break;
      }
      case Op::kSum: {
        Tensor& gx = grad_of(n.in[0]);
        for (double& v : gx.data) v += g[0];
        break;
      }
    }
  }
}

std::vector<Tensor> Tape::param_gradients() const {
  std::vector<Tensor> out;
  out.reserve(params_->size());
  for (std::size_t i = 0; i < params_->size(); ++i) {
    NodeId id = param_node_[i];
    if (id >= 0 && !nodes_[static_cast<std::size_t>(id)].grad.data.empty())
      out.push_back(nodes_[static_cast<std::size_t>(id)].grad);
    else
      out.push_back(Tensor::zeros((*params_)[i].shape));
  }
  return out;
}

const Tensor& Tape::gradient(NodeId n) const {
  const Node& node = nodes_[static_cast<std::size_t>(n)];
  if (node.grad.data.empty())
    throw StaleGraphError("gradient: no gradient reached node " + std::to_string(n));
  return node.grad;
}

}  // namespace veram
