#include "metacde/kernels.hpp"

#include <cmath>

// Reference lane. Plain loops, no blocking: this is the semantics the AVX2
// lane is tested against, so clarity wins over speed here.

namespace metacde::kernels {
namespace {

void gemm_scalar(bool ta, bool tb, int m, int n, int k, const double* a,
                 const double* b, double* c, bool accumulate) {
  const int lda = ta ? m : k;  // row length of a's storage
  const int ldb = tb ? k : n;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int p = 0; p < k; ++p) {
        const double av = ta ? a[p * lda + i] : a[i * lda + p];
        const double bv = tb ? b[j * ldb + p] : b[p * ldb + j];
        acc += av * bv;
      }
      c[i * n + j] = accumulate ? c[i * n + j] + acc : acc;
    }
  }
}

void add_scalar(int n, const double* a, const double* b, double* out) {
  for (int i = 0; i < n; ++i) out[i] = a[i] + b[i];
}
void sub_scalar(int n, const double* a, const double* b, double* out) {
  for (int i = 0; i < n; ++i) out[i] = a[i] - b[i];
}
void mul_scalar(int n, const double* a, const double* b, double* out) {
  for (int i = 0; i < n; ++i) out[i] = a[i] * b[i];
}
void scale_scalar(int n, double alpha, const double* a, double* out) {
  for (int i = 0; i < n; ++i) out[i] = alpha * a[i];
}
void axpy_scalar(int n, double alpha, const double* x, double* y) {
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void tanh_scalar(int n, const double* x, double* out) {
  for (int i = 0; i < n; ++i) out[i] = std::tanh(x[i]);
}
void exp_scalar(int n, const double* x, double* out) {
  for (int i = 0; i < n; ++i) out[i] = std::exp(x[i]);
}
void sigmoid_scalar(int n, const double* x, double* out) {
  for (int i = 0; i < n; ++i) {
    const double v = x[i];
    // Branch keeps exp's argument non-positive so neither side overflows.
    out[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                      : std::exp(v) / (1.0 + std::exp(v));
  }
}
void softplus_scalar(int n, const double* x, double* out) {
  for (int i = 0; i < n; ++i) {
    const double v = x[i];
    // log(1+exp(v)) = max(v,0) + log1p(exp(-|v|)); exact for large |v|.
    out[i] = (v > 0.0 ? v : 0.0) + std::log1p(std::exp(-std::fabs(v)));
  }
}

double sum_scalar(int n, const double* x) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += x[i];
  return s;
}
double max_scalar(int n, const double* x) {
  double m = x[0];
  for (int i = 1; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}
double sum_exp_shifted_scalar(int n, const double* x, double shift) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(x[i] - shift);
  return s;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t = {
      gemm_scalar,    add_scalar,  sub_scalar,     mul_scalar,
      scale_scalar,   axpy_scalar, tanh_scalar,    exp_scalar,
      sigmoid_scalar, softplus_scalar, sum_scalar, max_scalar,
      sum_exp_shifted_scalar, "scalar"};
  return t;
}

}  // namespace metacde::kernels
