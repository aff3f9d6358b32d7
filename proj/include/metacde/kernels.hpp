#pragma once

// Dense double-precision kernels behind the tensor ops. Two lanes: a scalar
// reference implementation and an AVX2+FMA implementation living in a TU
// compiled with -mavx2 -mfma. The active lane is picked once at runtime from
// cpuid and can be overridden (tests compare lanes directly, the CLI exposes
// a flag). All kernels are pure functions of their arguments; buffers must
// not alias unless a kernel documents otherwise.

namespace metacde::kernels {

struct KernelTable {
  // c[m x n] (+)= opA(a) * opB(b), row-major; opX transposes when the flag is
  // set, so a is [m x k] or [k x m] and b is [k x n] or [n x k] in storage.
  // accumulate=false overwrites c, true adds into it.
  void (*gemm)(bool ta, bool tb, int m, int n, int k, const double* a,
               const double* b, double* c, bool accumulate);

  void (*add)(int n, const double* a, const double* b, double* out);
  void (*sub)(int n, const double* a, const double* b, double* out);
  void (*mul)(int n, const double* a, const double* b, double* out);
  void (*scale)(int n, double alpha, const double* a, double* out);
  void (*axpy)(int n, double alpha, const double* x, double* y);  // y += alpha*x

  void (*tanh)(int n, const double* x, double* out);
  void (*exp)(int n, const double* x, double* out);
  void (*sigmoid)(int n, const double* x, double* out);
  void (*softplus)(int n, const double* x, double* out);

  double (*sum)(int n, const double* x);
  double (*max)(int n, const double* x);  // n >= 1
  // sum_i exp(x[i] - shift); building block for log-sum-exp.
  double (*sum_exp_shifted)(int n, const double* x, double shift);

  const char* name;
};

const KernelTable& scalar_table();
// Table of AVX2 implementations. Always constructible; calling its pointers
// on a machine without AVX2+FMA is undefined, so check avx2_available() first.
const KernelTable& avx2_table();

bool avx2_available();

enum class Lane { autodetect, scalar, avx2 };

// Active-lane selection. autodetect (the default) resolves to avx2 when the
// CPU supports it, scalar otherwise. Selecting avx2 on a machine without it
// throws. Not thread-safe; call before compute starts.
void select_lane(Lane lane);
const KernelTable& active();

}  // namespace metacde::kernels
