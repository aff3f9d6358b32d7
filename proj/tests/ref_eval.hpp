#pragma once

// Long-double reference pipeline for the episode loss, written independently
// of the library (own forward pass, own Cholesky) so a disagreement points at
// the library, and precise enough that finite differences through it are
// trustworthy at h = 1e-5.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "metacde/datasets.hpp"
#include "metacde/meta.hpp"
#include "metacde/mlp.hpp"

namespace refeval {

using ld = long double;
using Mat = std::vector<std::vector<ld>>;  // rows of a row-major matrix

struct Net {
  std::vector<int> dims;
  std::vector<Mat> w;               // [layer][out][in]
  std::vector<std::vector<ld>> b;   // [layer][out]
};

inline Net from_mlp(const metacde::Mlp& m) {
  Net n;
  n.dims = m.dims;
  for (size_t l = 0; l + 1 < m.dims.size(); ++l) {
    const int rows = m.dims[l + 1], cols = m.dims[l];
    Mat w(rows, std::vector<ld>(cols));
    const double* wp = m.weights[l].ptr();
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) w[r][c] = wp[r * cols + c];
    n.w.push_back(std::move(w));
    std::vector<ld> bias(rows);
    const double* bp = m.biases[l].ptr();
    for (int r = 0; r < rows; ++r) bias[r] = bp[r];
    n.b.push_back(std::move(bias));
  }
  return n;
}

inline int param_count(const Net& n) {
  int c = 0;
  for (size_t l = 0; l < n.w.size(); ++l)
    c += static_cast<int>(n.w[l].size() * n.w[l][0].size() + n.b[l].size());
  return c;
}

// flat order matches the library's parameter order: w0 row-major, b0, w1, ...
inline void add_param(Net& n, int flat, ld delta) {
  for (size_t l = 0; l < n.w.size(); ++l) {
    const int rows = static_cast<int>(n.w[l].size());
    const int cols = static_cast<int>(n.w[l][0].size());
    if (flat < rows * cols) {
      n.w[l][flat / cols][flat % cols] += delta;
      return;
    }
    flat -= rows * cols;
    if (flat < rows) {
      n.b[l][flat] += delta;
      return;
    }
    flat -= rows;
  }
  throw std::out_of_range("refeval: flat parameter index");
}

inline Mat forward(const Net& n, Mat x) {
  for (size_t l = 0; l < n.w.size(); ++l) {
    const int rows = static_cast<int>(x.size());
    const int out = static_cast<int>(n.w[l].size());
    const int in = static_cast<int>(n.w[l][0].size());
    Mat h(rows, std::vector<ld>(out));
    for (int r = 0; r < rows; ++r)
      for (int o = 0; o < out; ++o) {
        ld acc = n.b[l][o];
        for (int i = 0; i < in; ++i) acc += x[r][i] * n.w[l][o][i];
        h[r][o] = l + 1 < n.w.size() ? std::tanh(acc) : acc;
      }
    x = std::move(h);
  }
  return x;
}

inline Mat cholesky(Mat a) {
  const int n = static_cast<int>(a.size());
  Mat l(n, std::vector<ld>(n, 0.0L));
  for (int j = 0; j < n; ++j) {
    ld d = a[j][j];
    for (int k = 0; k < j; ++k) d -= l[j][k] * l[j][k];
    if (!(d > 0.0L)) throw std::runtime_error("refeval: not positive definite");
    l[j][j] = std::sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      ld s = a[i][j];
      for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      l[i][j] = s / l[j][j];
    }
  }
  return l;
}

inline std::vector<ld> chol_solve(const Mat& l, std::vector<ld> b) {
  const int n = static_cast<int>(l.size());
  for (int i = 0; i < n; ++i) {
    ld s = b[i];
    for (int k = 0; k < i; ++k) s -= l[i][k] * b[k];
    b[i] = s / l[i][i];
  }
  for (int i = n - 1; i >= 0; --i) {
    ld s = b[i];
    for (int k = i + 1; k < n; ++k) s -= l[k][i] * b[k];
    b[i] = s / l[i][i];
  }
  return b;
}

inline ld softplus(ld x) { return (x > 0.0L ? x : 0.0L) + std::log1p(std::exp(-std::fabs(x))); }

inline Mat rows_of(const std::vector<double>& flat, int dim) {
  Mat m(flat.size() / dim, std::vector<ld>(dim));
  for (size_t i = 0; i < m.size(); ++i)
    for (int d = 0; d < dim; ++d) m[i][d] = flat[i * dim + d];
  return m;
}

// Full episode loss: context features, regularized Gram, one solve per
// target, scores, learned normalizer, logistic losses against the fakes.
inline ld episode_loss(const Net& x_net, const Net& y_net, const Net& norm_net,
                       const metacde::ModelConfig& cfg, const metacde::TaskDataset& task,
                       const std::vector<double>& fake_y, const std::vector<double>& logpf_true,
                       const std::vector<double>& logpf_fake) {
  const int n = task.n_ctx(), t = task.n_tgt(), d = cfg.feature_dim, kappa = cfg.noise_ratio;
  const Mat fx = forward(x_net, rows_of(task.ctx_x, cfg.dim_x));   // [n x d]
  const Mat fy = forward(y_net, rows_of(task.ctx_y, cfg.dim_y));   // [n x d]
  const Mat fq = forward(x_net, rows_of(task.tgt_x, cfg.dim_x));   // [t x d]
  const Mat ft = forward(y_net, rows_of(task.tgt_y, cfg.dim_y));   // [t x d]
  const Mat ff = forward(y_net, rows_of(fake_y, cfg.dim_y));       // [t*kappa x d]

  Mat gram(n, std::vector<ld>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      ld s = i == j ? static_cast<ld>(cfg.ridge) : 0.0L;
      for (int k = 0; k < d; ++k) s += fx[i][k] * fx[j][k];
      gram[i][j] = s;
    }
  const Mat l = cholesky(gram);

  const ld log_kappa = std::log(static_cast<ld>(kappa));
  ld loss = 0.0L;
  for (int j = 0; j < t; ++j) {
    std::vector<ld> cross(n);
    for (int i = 0; i < n; ++i) {
      ld s = 0.0L;
      for (int k = 0; k < d; ++k) s += fx[i][k] * fq[j][k];
      cross[i] = s;
    }
    const std::vector<ld> alpha = chol_solve(l, cross);
    std::vector<ld> embed(d, 0.0L);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < d; ++k) embed[k] += alpha[i] * fy[i][k];

    ld s_true = 0.0L;
    for (int k = 0; k < d; ++k) s_true += embed[k] * ft[j][k];
    const ld bias = forward(norm_net, Mat{embed})[0][0];

    loss += softplus(-(s_true + bias - log_kappa - static_cast<ld>(logpf_true[j])));
    for (int f = 0; f < kappa; ++f) {
      const int row = j * kappa + f;
      ld s_fake = 0.0L;
      for (int k = 0; k < d; ++k) s_fake += embed[k] * ff[row][k];
      loss += softplus(s_fake + bias - log_kappa - static_cast<ld>(logpf_fake[row]));
    }
  }
  return loss;
}

}  // namespace refeval
