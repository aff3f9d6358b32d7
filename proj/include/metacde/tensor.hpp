#pragma once

// Reverse-mode autodiff over dense float64 tensors. A Tape records the ops of
// one forward construction; backward() replays them in reverse insertion
// order exactly once. Ops called on tensors that are not attached to a tape
// compute eagerly and return detached results, so the same code serves both
// training (taped) and prediction (eager).
//
// Tapes are not thread-safe; confine a tape and everything attached to it to
// one thread. The intended lifecycle is one fresh tape per loss evaluation.

#include <memory>
#include <vector>

#include "metacde/linalg.hpp"

namespace metacde {

class Tape;

struct Tensor {
  std::vector<int> shape;
  std::shared_ptr<std::vector<double>> data;
  Tape* tape = nullptr;
  int node = -1;

  int numel() const {
    int n = 1;
    for (int s : shape) n *= s;
    return n;
  }
  int rank() const { return static_cast<int>(shape.size()); }
  int rows() const { return shape[0]; }
  int cols() const { return shape[1]; }
  bool on_tape() const { return tape != nullptr; }
  double* ptr() { return data->data(); }
  const double* ptr() const { return data->data(); }
  double value() const { return (*data)[0]; }  // for numel()==1 tensors
  double at(int i) const { return (*data)[i]; }
  double at(int i, int j) const { return (*data)[static_cast<size_t>(i) * shape[1] + j]; }
};

Tensor tensor_zeros(std::vector<int> shape);
Tensor tensor_of(std::vector<int> shape, std::vector<double> vals);
Tensor tensor_scalar(double v);

class Tape {
 public:
  // Tracked leaf: shares the caller's buffer, receives a gradient.
  Tensor param(const Tensor& v);
  // Untracked leaf: participates in the graph, no gradient.
  Tensor constant(const Tensor& v);

  // Accumulate gradients of a scalar root into every tracked node. May be
  // called again on the same tape; buffers are reset first.
  void backward(const Tensor& root);

  // Gradient of the last backward() w.r.t. a tensor on this tape. Tensors
  // the root does not depend on get zeros.
  const std::vector<double>& grad(const Tensor& t);

  size_t node_count() const { return nodes_.size(); }

  // internal: op implementations append nodes through this
  struct Node {
    int kind = 0;
    int a = -1, b = -1;
    std::shared_ptr<std::vector<double>> val;
    std::vector<int> shape;
    bool requires_grad = false;
    double scalar = 0.0;
    bool ta = false, tb = false;
    int axis = -1;
    int count = 0;
    std::shared_ptr<CholFactor> factor;
  };
  int push(Node n);
  const Node& node_at(int i) const { return nodes_[i]; }

 private:
  std::vector<double>& grad_buf(int i);
  std::vector<Node> nodes_;
  std::vector<std::vector<double>> grads_;
  std::vector<char> touched_;
};

// ---- ops -------------------------------------------------------------------
// All ops validate shapes and throw DimensionError naming both shapes on
// mismatch; domain violations throw DomainError.

// c = opA(a) * opB(b) on rank-2 tensors (flags transpose the operand).
Tensor matmul(const Tensor& a, const Tensor& b, bool ta = false, bool tb = false);

Tensor add(const Tensor& a, const Tensor& b);   // same shape
Tensor add(const Tensor& a, double s);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);   // elementwise
Tensor mul(const Tensor& a, double s);
Tensor neg(const Tensor& a);

Tensor tanh(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);       // DomainError on values <= 0
Tensor softplus(const Tensor& a);
Tensor sigmoid(const Tensor& a);

Tensor sum(const Tensor& a);             // -> shape {1}
Tensor mean(const Tensor& a);            // -> shape {1}
Tensor sum(const Tensor& a, int axis);   // rank-2: axis 0 -> {cols}, axis 1 -> {rows}
Tensor mean(const Tensor& a, int axis);

// Solve (A + 0) X = B for symmetric positive definite A [n x n], B [n x m].
// A must be symmetric to 1e-10 relative; the Cholesky factor is computed once
// per call and cached on the node for the backward pass (and reachable by
// callers that keep the op's result). Gradient w.r.t. A is symmetrized.
Tensor spd_solve(const Tensor& a, const Tensor& b);

Tensor add_rowvec(const Tensor& a, const Tensor& v);  // a [n x m] + v [m] per row
Tensor repeat_rows(const Tensor& a, int times);       // [n x m] -> [n*times x m], row i*times+c = row i
Tensor rowwise_dot(const Tensor& a, const Tensor& b); // [n x m], [n x m] -> {n}
Tensor concat_cols(const Tensor& a, const Tensor& b); // [n x p], [n x q] -> [n x p+q]
Tensor reshape(const Tensor& a, std::vector<int> shape);

}  // namespace metacde
