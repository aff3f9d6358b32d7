#include "metacde/linalg.hpp"

#include <cmath>
#include <cstring>

#include "metacde/errors.hpp"
#include "metacde/kernels.hpp"

namespace metacde {

CholFactor cholesky(int n, const double* a) {
  CholFactor f;
  f.n = n;
  f.l.assign(static_cast<size_t>(n) * n, 0.0);
  double* l = f.l.data();
  for (int j = 0; j < n; ++j) {
    double d = a[static_cast<size_t>(j) * n + j];
    for (int k = 0; k < j; ++k) d -= l[static_cast<size_t>(j) * n + k] * l[static_cast<size_t>(j) * n + k];
    if (!(d > 0.0)) throw DefinitenessError(j);
    const double ljj = std::sqrt(d);
    l[static_cast<size_t>(j) * n + j] = ljj;
    for (int i = j + 1; i < n; ++i) {
      double s = a[static_cast<size_t>(i) * n + j];
      for (int k = 0; k < j; ++k) s -= l[static_cast<size_t>(i) * n + k] * l[static_cast<size_t>(j) * n + k];
      l[static_cast<size_t>(i) * n + j] = s / ljj;
    }
  }
  return f;
}

void chol_solve(const CholFactor& f, int m, const double* b, double* x) {
  const int n = f.n;
  const double* l = f.l.data();
  const auto& kt = kernels::active();
  if (x != b) std::memcpy(x, b, sizeof(double) * static_cast<size_t>(n) * m);
  // forward: L y = b, row blocks of m right-hand sides at once
  for (int i = 0; i < n; ++i) {
    double* xi = x + static_cast<size_t>(i) * m;
    for (int k = 0; k < i; ++k)
      kt.axpy(m, -l[static_cast<size_t>(i) * n + k], x + static_cast<size_t>(k) * m, xi);
    kt.scale(m, 1.0 / l[static_cast<size_t>(i) * n + i], xi, xi);
  }
  // backward: L^T x = y
  for (int i = n - 1; i >= 0; --i) {
    double* xi = x + static_cast<size_t>(i) * m;
    for (int k = i + 1; k < n; ++k)
      kt.axpy(m, -l[static_cast<size_t>(k) * n + i], x + static_cast<size_t>(k) * m, xi);
    kt.scale(m, 1.0 / l[static_cast<size_t>(i) * n + i], xi, xi);
  }
}

double max_asymmetry(int n, const double* a) {
  double m = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double d = std::fabs(a[static_cast<size_t>(i) * n + j] - a[static_cast<size_t>(j) * n + i]);
      if (d > m) m = d;
    }
  return m;
}

}  // namespace metacde
