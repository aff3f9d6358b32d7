#include "metacde/tensor.hpp"

#include <cmath>
#include <string>

#include "metacde/errors.hpp"
#include "metacde/kernels.hpp"

namespace metacde {
namespace {

enum OpKind : int {
  kLeaf,
  kMatmul,
  kAdd,
  kAddScalar,
  kSub,
  kMul,
  kMulScalar,
  kNeg,
  kTanh,
  kExp,
  kLog,
  kSoftplus,
  kSigmoid,
  kSum,
  kMean,
  kSumAxis,
  kMeanAxis,
  kSpdSolve,
  kAddRowVec,
  kRepeatRows,
  kRowwiseDot,
  kConcatCols,
  kReshape,
};

int numel_of(const std::vector<int>& shape) {
  int n = 1;
  for (int s : shape) n *= s;
  return n;
}

std::string shape_str(const std::vector<int>& s) {
  std::string r = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) r += " x ";
    r += std::to_string(s[i]);
  }
  return r + "]";
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape != b.shape)
    throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape) + " and " +
                         shape_str(b.shape) + " differ");
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2)
    throw DimensionError(std::string(op) + ": expected rank-2 tensor, got " + shape_str(t.shape));
}

Tape* common_tape(const Tensor& a, const Tensor& b) {
  if (a.tape && b.tape && a.tape != b.tape)
    throw DomainError("operands belong to different tapes");
  return a.tape ? a.tape : b.tape;
}

int lift(Tape* tp, const Tensor& t) {
  if (t.node >= 0) return t.node;
  Tape::Node nd;
  nd.kind = kLeaf;
  nd.val = t.data;
  nd.shape = t.shape;
  nd.requires_grad = false;
  return tp->push(nd);
}

// Attach an op node when any input is taped; otherwise leave the result detached.
void finish1(Tensor& out, const Tensor& a, int kind, Tape::Node extra = {}) {
  if (!a.tape) return;
  Tape::Node nd = std::move(extra);
  nd.kind = kind;
  nd.a = lift(a.tape, a);
  nd.val = out.data;
  nd.shape = out.shape;
  out.tape = a.tape;
  out.node = a.tape->push(nd);
}

void finish2(Tensor& out, const Tensor& a, const Tensor& b, int kind, Tape::Node extra = {}) {
  Tape* tp = common_tape(a, b);
  if (!tp) return;
  Tape::Node nd = std::move(extra);
  nd.kind = kind;
  nd.a = lift(tp, a);
  nd.b = lift(tp, b);
  nd.val = out.data;
  nd.shape = out.shape;
  out.tape = tp;
  out.node = tp->push(nd);
}

double stable_sigmoid(double v) {
  return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
}

}  // namespace

Tensor tensor_zeros(std::vector<int> shape) {
  Tensor t;
  t.data = std::make_shared<std::vector<double>>(numel_of(shape), 0.0);
  t.shape = std::move(shape);
  return t;
}

Tensor tensor_of(std::vector<int> shape, std::vector<double> vals) {
  if (numel_of(shape) != static_cast<int>(vals.size()))
    throw DimensionError("tensor_of: shape " + shape_str(shape) + " wants " +
                         std::to_string(numel_of(shape)) + " values, got " +
                         std::to_string(vals.size()));
  Tensor t;
  t.shape = std::move(shape);
  t.data = std::make_shared<std::vector<double>>(std::move(vals));
  return t;
}

Tensor tensor_scalar(double v) { return tensor_of({1}, {v}); }

int Tape::push(Node n) {
  if (n.kind != kLeaf)
    n.requires_grad = (n.a >= 0 && nodes_[n.a].requires_grad) ||
                      (n.b >= 0 && nodes_[n.b].requires_grad);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

Tensor Tape::param(const Tensor& v) {
  Node nd;
  nd.kind = kLeaf;
  nd.val = v.data;
  nd.shape = v.shape;
  nd.requires_grad = true;
  Tensor t = v;
  t.tape = this;
  t.node = push(nd);
  return t;
}

Tensor Tape::constant(const Tensor& v) {
  Node nd;
  nd.kind = kLeaf;
  nd.val = v.data;
  nd.shape = v.shape;
  nd.requires_grad = false;
  Tensor t = v;
  t.tape = this;
  t.node = push(nd);
  return t;
}

std::vector<double>& Tape::grad_buf(int i) {
  if (grads_[i].empty()) grads_[i].assign(numel_of(nodes_[i].shape), 0.0);
  touched_[i] = 1;
  return grads_[i];
}

const std::vector<double>& Tape::grad(const Tensor& t) {
  if (t.tape != this || t.node < 0) throw DomainError("grad: tensor not on this tape");
  if (grads_.size() != nodes_.size()) throw DomainError("grad: backward has not run");
  if (grads_[t.node].empty()) grads_[t.node].assign(numel_of(nodes_[t.node].shape), 0.0);
  return grads_[t.node];
}

void Tape::backward(const Tensor& root) {
  if (root.tape != this || root.node < 0) throw DomainError("backward: root not on this tape");
  if (root.numel() != 1)
    throw DimensionError("backward: root must be scalar, got " + shape_str(root.shape));
  grads_.assign(nodes_.size(), {});
  touched_.assign(nodes_.size(), 0);
  grad_buf(root.node)[0] = 1.0;

  const auto& kt = kernels::active();
  for (int i = root.node; i >= 0; --i) {
    const Node& nd = nodes_[i];
    if (!touched_[i] || !nd.requires_grad || nd.kind == kLeaf) continue;
    const std::vector<double>& g = grads_[i];
    const bool need_a = nd.a >= 0 && nodes_[nd.a].requires_grad;
    const bool need_b = nd.b >= 0 && nodes_[nd.b].requires_grad;

    switch (nd.kind) {
      case kMatmul: {
        const Node& na = nodes_[nd.a];
        const Node& nb = nodes_[nd.b];
        const int m = nd.shape[0], n = nd.shape[1];
        const int k = nd.ta ? na.shape[0] : na.shape[1];
        if (need_a) {
          auto& ga = grad_buf(nd.a);
          if (!nd.ta)
            kt.gemm(false, !nd.tb, m, k, n, g.data(), nb.val->data(), ga.data(), true);
          else
            kt.gemm(nd.tb, true, k, m, n, nb.val->data(), g.data(), ga.data(), true);
        }
        if (need_b) {
          auto& gb = grad_buf(nd.b);
          if (!nd.tb)
            kt.gemm(!nd.ta, false, k, n, m, na.val->data(), g.data(), gb.data(), true);
          else
            kt.gemm(true, nd.ta, n, k, m, g.data(), na.val->data(), gb.data(), true);
        }
        break;
      }
      case kAdd:
        if (need_a) kt.axpy(static_cast<int>(g.size()), 1.0, g.data(), grad_buf(nd.a).data());
        if (need_b) kt.axpy(static_cast<int>(g.size()), 1.0, g.data(), grad_buf(nd.b).data());
        break;
      case kAddScalar:
      case kReshape:
        if (need_a) kt.axpy(static_cast<int>(g.size()), 1.0, g.data(), grad_buf(nd.a).data());
        break;
      case kSub:
        if (need_a) kt.axpy(static_cast<int>(g.size()), 1.0, g.data(), grad_buf(nd.a).data());
        if (need_b) kt.axpy(static_cast<int>(g.size()), -1.0, g.data(), grad_buf(nd.b).data());
        break;
      case kMul: {
        const double* av = nodes_[nd.a].val->data();
        const double* bv = nodes_[nd.b].val->data();
        const int n = static_cast<int>(g.size());
        if (need_a) {
          auto& ga = grad_buf(nd.a);
          for (int j = 0; j < n; ++j) ga[j] += g[j] * bv[j];
        }
        if (need_b) {
          auto& gb = grad_buf(nd.b);
          for (int j = 0; j < n; ++j) gb[j] += g[j] * av[j];
        }
        break;
      }
      case kMulScalar:
        if (need_a) kt.axpy(static_cast<int>(g.size()), nd.scalar, g.data(), grad_buf(nd.a).data());
        break;
      case kNeg:
        if (need_a) kt.axpy(static_cast<int>(g.size()), -1.0, g.data(), grad_buf(nd.a).data());
        break;
      case kTanh: {
        if (!need_a) break;
        auto& ga = grad_buf(nd.a);
        const double* y = nd.val->data();
        for (size_t j = 0; j < g.size(); ++j) ga[j] += g[j] * (1.0 - y[j] * y[j]);
        break;
      }
      case kExp: {
        if (!need_a) break;
        auto& ga = grad_buf(nd.a);
        const double* y = nd.val->data();
        for (size_t j = 0; j < g.size(); ++j) ga[j] += g[j] * y[j];
        break;
      }
      case kLog: {
        if (!need_a) break;
        auto& ga = grad_buf(nd.a);
        const double* x = nodes_[nd.a].val->data();
        for (size_t j = 0; j < g.size(); ++j) ga[j] += g[j] / x[j];
        break;
      }
      case kSoftplus: {
        if (!need_a) break;
        auto& ga = grad_buf(nd.a);
        const double* x = nodes_[nd.a].val->data();
        for (size_t j = 0; j < g.size(); ++j) ga[j] += g[j] * stable_sigmoid(x[j]);
        break;
      }
      case kSigmoid: {
        if (!need_a) break;
        auto& ga = grad_buf(nd.a);
        const double* y = nd.val->data();
        for (size_t j = 0; j < g.size(); ++j) ga[j] += g[j] * y[j] * (1.0 - y[j]);
        break;
      }
      case kSum: {
        if (!need_a) break;
        auto& ga = grad_buf(nd.a);
        const double gv = g[0];
        for (double& x : ga) x += gv;
        break;
      }
      case kMean: {
        if (!need_a) break;
        auto& ga = grad_buf(nd.a);
        const double gv = g[0] / static_cast<double>(ga.size());
        for (double& x : ga) x += gv;
        break;
      }
      case kSumAxis:
      case kMeanAxis: {
        if (!need_a) break;
        auto& ga = grad_buf(nd.a);
        const Node& na = nodes_[nd.a];
        const int r = na.shape[0], c = na.shape[1];
        const double scale2 =
            nd.kind == kMeanAxis ? 1.0 / static_cast<double>(nd.axis == 0 ? r : c) : 1.0;
        if (nd.axis == 0) {
          for (int i2 = 0; i2 < r; ++i2)
            kt.axpy(c, scale2, g.data(), ga.data() + static_cast<size_t>(i2) * c);
        } else {
          for (int i2 = 0; i2 < r; ++i2) {
            const double gv = g[i2] * scale2;
            double* row = ga.data() + static_cast<size_t>(i2) * c;
            for (int j = 0; j < c; ++j) row[j] += gv;
          }
        }
        break;
      }
      case kSpdSolve: {
        const Node& na = nodes_[nd.a];
        const int n = na.shape[0];
        const int m = nd.shape[1];
        std::vector<double> s(static_cast<size_t>(n) * m);
        chol_solve(*nd.factor, m, g.data(), s.data());
        if (need_b) kt.axpy(n * m, 1.0, s.data(), grad_buf(nd.b).data());
        if (need_a) {
          // dA = -sym(A^{-1} dC X^T) with X the op's output
          std::vector<double> t(static_cast<size_t>(n) * n);
          kt.gemm(false, true, n, n, m, s.data(), nd.val->data(), t.data(), false);
          auto& ga = grad_buf(nd.a);
          for (int r = 0; r < n; ++r)
            for (int c2 = 0; c2 < n; ++c2)
              ga[static_cast<size_t>(r) * n + c2] -=
                  0.5 * (t[static_cast<size_t>(r) * n + c2] + t[static_cast<size_t>(c2) * n + r]);
        }
        break;
      }
      case kAddRowVec: {
        const int r = nd.shape[0], c = nd.shape[1];
        if (need_a) kt.axpy(r * c, 1.0, g.data(), grad_buf(nd.a).data());
        if (need_b) {
          auto& gv = grad_buf(nd.b);
          for (int i2 = 0; i2 < r; ++i2)
            kt.axpy(c, 1.0, g.data() + static_cast<size_t>(i2) * c, gv.data());
        }
        break;
      }
      case kRepeatRows: {
        if (!need_a) break;
        auto& ga = grad_buf(nd.a);
        const Node& na = nodes_[nd.a];
        const int r = na.shape[0], c = na.shape[1];
        for (int i2 = 0; i2 < r; ++i2)
          for (int rep = 0; rep < nd.count; ++rep)
            kt.axpy(c, 1.0, g.data() + (static_cast<size_t>(i2) * nd.count + rep) * c,
                    ga.data() + static_cast<size_t>(i2) * c);
        break;
      }
      case kRowwiseDot: {
        const Node& na = nodes_[nd.a];
        const int r = na.shape[0], c = na.shape[1];
        const double* av = na.val->data();
        const double* bv = nodes_[nd.b].val->data();
        if (need_a) {
          auto& ga = grad_buf(nd.a);
          for (int i2 = 0; i2 < r; ++i2)
            kt.axpy(c, g[i2], bv + static_cast<size_t>(i2) * c, ga.data() + static_cast<size_t>(i2) * c);
        }
        if (need_b) {
          auto& gb = grad_buf(nd.b);
          for (int i2 = 0; i2 < r; ++i2)
            kt.axpy(c, g[i2], av + static_cast<size_t>(i2) * c, gb.data() + static_cast<size_t>(i2) * c);
        }
        break;
      }
      case kConcatCols: {
        const int r = nd.shape[0], c = nd.shape[1];
        const int p = nd.count;  // columns of the left operand
        if (need_a) {
          auto& ga = grad_buf(nd.a);
          for (int i2 = 0; i2 < r; ++i2)
            kt.axpy(p, 1.0, g.data() + static_cast<size_t>(i2) * c, ga.data() + static_cast<size_t>(i2) * p);
        }
        if (need_b) {
          auto& gb = grad_buf(nd.b);
          const int q = c - p;
          for (int i2 = 0; i2 < r; ++i2)
            kt.axpy(q, 1.0, g.data() + static_cast<size_t>(i2) * c + p,
                    gb.data() + static_cast<size_t>(i2) * q);
        }
        break;
      }
      default:
        throw DomainError("backward: unknown op kind");
    }
  }
}

// ---- op forwards -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b, bool ta, bool tb) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const int m = ta ? a.cols() : a.rows();
  const int ka = ta ? a.rows() : a.cols();
  const int kb = tb ? b.cols() : b.rows();
  const int n = tb ? b.rows() : b.cols();
  if (ka != kb)
    throw DimensionError("matmul: inner dimensions of " + shape_str(a.shape) + (ta ? "^T" : "") +
                         " and " + shape_str(b.shape) + (tb ? "^T" : "") + " differ");
  Tensor out = tensor_zeros({m, n});
  kernels::active().gemm(ta, tb, m, n, ka, a.ptr(), b.ptr(), out.ptr(), false);
  Tape::Node extra;
  extra.ta = ta;
  extra.tb = tb;
  finish2(out, a, b, kMatmul, extra);
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = tensor_zeros(a.shape);
  kernels::active().add(a.numel(), a.ptr(), b.ptr(), out.ptr());
  finish2(out, a, b, kAdd);
  return out;
}

Tensor add(const Tensor& a, double s) {
  Tensor out = tensor_zeros(a.shape);
  const double* x = a.ptr();
  double* y = out.ptr();
  for (int i = 0; i < a.numel(); ++i) y[i] = x[i] + s;
  Tape::Node extra;
  extra.scalar = s;
  finish1(out, a, kAddScalar, extra);
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out = tensor_zeros(a.shape);
  kernels::active().sub(a.numel(), a.ptr(), b.ptr(), out.ptr());
  finish2(out, a, b, kSub);
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out = tensor_zeros(a.shape);
  kernels::active().mul(a.numel(), a.ptr(), b.ptr(), out.ptr());
  finish2(out, a, b, kMul);
  return out;
}

Tensor mul(const Tensor& a, double s) {
  Tensor out = tensor_zeros(a.shape);
  kernels::active().scale(a.numel(), s, a.ptr(), out.ptr());
  Tape::Node extra;
  extra.scalar = s;
  finish1(out, a, kMulScalar, extra);
  return out;
}

Tensor neg(const Tensor& a) {
  Tensor out = tensor_zeros(a.shape);
  kernels::active().scale(a.numel(), -1.0, a.ptr(), out.ptr());
  finish1(out, a, kNeg);
  return out;
}

Tensor tanh(const Tensor& a) {
  Tensor out = tensor_zeros(a.shape);
  kernels::active().tanh(a.numel(), a.ptr(), out.ptr());
  finish1(out, a, kTanh);
  return out;
}

Tensor exp(const Tensor& a) {
  Tensor out = tensor_zeros(a.shape);
  kernels::active().exp(a.numel(), a.ptr(), out.ptr());
  finish1(out, a, kExp);
  return out;
}

Tensor log(const Tensor& a) {
  Tensor out = tensor_zeros(a.shape);
  const double* x = a.ptr();
  double* y = out.ptr();
  for (int i = 0; i < a.numel(); ++i) {
    if (!(x[i] > 0.0))
      throw DomainError("log: value " + std::to_string(x[i]) + " at index " + std::to_string(i) +
                        " is not positive");
    y[i] = std::log(x[i]);
  }
  finish1(out, a, kLog);
  return out;
}

Tensor softplus(const Tensor& a) {
  Tensor out = tensor_zeros(a.shape);
  kernels::active().softplus(a.numel(), a.ptr(), out.ptr());
  finish1(out, a, kSoftplus);
  return out;
}

Tensor sigmoid(const Tensor& a) {
  Tensor out = tensor_zeros(a.shape);
  kernels::active().sigmoid(a.numel(), a.ptr(), out.ptr());
  finish1(out, a, kSigmoid);
  return out;
}

Tensor sum(const Tensor& a) {
  Tensor out = tensor_of({1}, {kernels::active().sum(a.numel(), a.ptr())});
  finish1(out, a, kSum);
  return out;
}

Tensor mean(const Tensor& a) {
  Tensor out = tensor_of({1}, {kernels::active().sum(a.numel(), a.ptr()) / a.numel()});
  finish1(out, a, kMean);
  return out;
}

Tensor sum(const Tensor& a, int axis) {
  require_rank2(a, "sum");
  if (axis != 0 && axis != 1) throw DomainError("sum: axis must be 0 or 1");
  const int r = a.rows(), c = a.cols();
  const auto& kt = kernels::active();
  Tensor out;
  if (axis == 0) {
    out = tensor_zeros({c});
    for (int i = 0; i < r; ++i) kt.axpy(c, 1.0, a.ptr() + static_cast<size_t>(i) * c, out.ptr());
  } else {
    out = tensor_zeros({r});
    for (int i = 0; i < r; ++i) (*out.data)[i] = kt.sum(c, a.ptr() + static_cast<size_t>(i) * c);
  }
  Tape::Node extra;
  extra.axis = axis;
  finish1(out, a, kSumAxis, extra);
  return out;
}

Tensor mean(const Tensor& a, int axis) {
  require_rank2(a, "mean");
  if (axis != 0 && axis != 1) throw DomainError("mean: axis must be 0 or 1");
  const int r = a.rows(), c = a.cols();
  const auto& kt = kernels::active();
  Tensor out;
  if (axis == 0) {
    out = tensor_zeros({c});
    for (int i = 0; i < r; ++i) kt.axpy(c, 1.0 / r, a.ptr() + static_cast<size_t>(i) * c, out.ptr());
  } else {
    out = tensor_zeros({r});
    for (int i = 0; i < r; ++i) (*out.data)[i] = kt.sum(c, a.ptr() + static_cast<size_t>(i) * c) / c;
  }
  Tape::Node extra;
  extra.axis = axis;
  finish1(out, a, kMeanAxis, extra);
  return out;
}

Tensor spd_solve(const Tensor& a, const Tensor& b) {
  require_rank2(a, "spd_solve");
  require_rank2(b, "spd_solve");
  const int n = a.rows();
  if (a.cols() != n)
    throw DimensionError("spd_solve: matrix " + shape_str(a.shape) + " is not square");
  if (b.rows() != n)
    throw DimensionError("spd_solve: rhs " + shape_str(b.shape) + " does not match matrix " +
                         shape_str(a.shape));
  double amax = 0.0;
  for (int i = 0; i < a.numel(); ++i) amax = std::max(amax, std::fabs(a.ptr()[i]));
  if (max_asymmetry(n, a.ptr()) > 1e-10 * std::max(amax, 1.0))
    throw DomainError("spd_solve: matrix is not symmetric within tolerance");
  auto factor = std::make_shared<CholFactor>(cholesky(n, a.ptr()));
  Tensor out = tensor_zeros({n, b.cols()});
  chol_solve(*factor, b.cols(), b.ptr(), out.ptr());
  Tape::Node extra;
  extra.factor = std::move(factor);
  finish2(out, a, b, kSpdSolve, extra);
  return out;
}

Tensor add_rowvec(const Tensor& a, const Tensor& v) {
  require_rank2(a, "add_rowvec");
  if (v.rank() != 1 || v.shape[0] != a.cols())
    throw DimensionError("add_rowvec: vector " + shape_str(v.shape) + " does not match columns of " +
                         shape_str(a.shape));
  const int r = a.rows(), c = a.cols();
  Tensor out = tensor_zeros(a.shape);
  const auto& kt = kernels::active();
  for (int i = 0; i < r; ++i)
    kt.add(c, a.ptr() + static_cast<size_t>(i) * c, v.ptr(), out.ptr() + static_cast<size_t>(i) * c);
  finish2(out, a, v, kAddRowVec);
  return out;
}

Tensor repeat_rows(const Tensor& a, int times) {
  require_rank2(a, "repeat_rows");
  if (times < 1) throw DomainError("repeat_rows: times must be >= 1");
  const int r = a.rows(), c = a.cols();
  Tensor out = tensor_zeros({r * times, c});
  for (int i = 0; i < r; ++i)
    for (int rep = 0; rep < times; ++rep)
      std::copy(a.ptr() + static_cast<size_t>(i) * c, a.ptr() + static_cast<size_t>(i + 1) * c,
                out.ptr() + (static_cast<size_t>(i) * times + rep) * c);
  Tape::Node extra;
  extra.count = times;
  finish1(out, a, kRepeatRows, extra);
  return out;
}

Tensor rowwise_dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "rowwise_dot");
  require_rank2(a, "rowwise_dot");
  const int r = a.rows(), c = a.cols();
  Tensor out = tensor_zeros({r});
  for (int i = 0; i < r; ++i) {
    double s = 0.0;
    const double* ar = a.ptr() + static_cast<size_t>(i) * c;
    const double* br = b.ptr() + static_cast<size_t>(i) * c;
    for (int j = 0; j < c; ++j) s += ar[j] * br[j];
    (*out.data)[i] = s;
  }
  finish2(out, a, b, kRowwiseDot);
  return out;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require_rank2(a, "concat_cols");
  require_rank2(b, "concat_cols");
  if (a.rows() != b.rows())
    throw DimensionError("concat_cols: row counts of " + shape_str(a.shape) + " and " +
                         shape_str(b.shape) + " differ");
  const int r = a.rows(), p = a.cols(), q = b.cols();
  Tensor out = tensor_zeros({r, p + q});
  for (int i = 0; i < r; ++i) {
    std::copy(a.ptr() + static_cast<size_t>(i) * p, a.ptr() + static_cast<size_t>(i + 1) * p,
              out.ptr() + static_cast<size_t>(i) * (p + q));
    std::copy(b.ptr() + static_cast<size_t>(i) * q, b.ptr() + static_cast<size_t>(i + 1) * q,
              out.ptr() + static_cast<size_t>(i) * (p + q) + p);
  }
  Tape::Node extra;
  extra.count = p;
  finish2(out, a, b, kConcatCols, extra);
  return out;
}

Tensor reshape(const Tensor& a, std::vector<int> shape) {
  if (numel_of(shape) != a.numel())
    throw DimensionError("reshape: " + shape_str(a.shape) + " to " + shape_str(shape) +
                         " changes element count");
  Tensor out;
  out.shape = std::move(shape);
  out.data = std::make_shared<std::vector<double>>(*a.data);
  finish1(out, a, kReshape);
  return out;
}

}  // namespace metacde
