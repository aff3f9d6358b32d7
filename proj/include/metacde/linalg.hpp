#pragma once

#include <vector>

namespace metacde {

// Lower-triangular Cholesky factor L with A = L L^T, full row-major storage
// (upper triangle zeroed). Factor once, solve many times.
struct CholFactor {
  int n = 0;
  std::vector<double> l;
};

// Factor a symmetric positive definite matrix (row-major n x n). Reads the
// lower triangle only. Throws DefinitenessError with the failing pivot index
// when a pivot is not strictly positive.
CholFactor cholesky(int n, const double* a);

// Solve (L L^T) X = B with B row-major [n x m]; X may alias B.
void chol_solve(const CholFactor& f, int m, const double* b, double* x);

// max_ij |a[i][j] - a[j][i]| over an n x n row-major matrix.
double max_asymmetry(int n, const double* a);

}  // namespace metacde
