#pragma once

#include <random>
#include <string>
#include <vector>

namespace metacde {

// One few-shot regression task: a context set the estimator conditions on and
// a disjoint target set held out for evaluation/training loss. Rows are
// points; multi-dim x/y are stored row-major.
struct TaskDataset {
  int dim_x = 1, dim_y = 1;
  std::vector<double> ctx_x, ctx_y;
  std::vector<double> tgt_x, tgt_y;
  std::string source;

  int n_ctx() const { return dim_x ? static_cast<int>(ctx_x.size()) / dim_x : 0; }
  int n_tgt() const { return dim_x ? static_cast<int>(tgt_x.size()) / dim_x : 0; }

  // First n context points, same targets. n must not exceed n_ctx().
  TaskDataset with_context(int n) const;
  // All task responses (context + target), the pool the fake sampler fits.
  std::vector<double> pooled_y() const;
};

enum class CosineVariant { standard, hard };

struct CosineTaskParams {
  double a = 0, b = 0, sigma = 0;
};

// y ~ U(0,1); x = cos(a*y + b) + N(0, sigma^2). standard: a ~ U(8,12),
// b ~ U(0,pi); hard: a ~ U(4,14), b ~ U(-pi,pi). The map y -> x folds several
// y branches onto each x, which is what makes p(y|x) multimodal.
TaskDataset make_cosine_task(CosineVariant v, double sigma, int n_ctx, int n_tgt,
                             std::mt19937_64& rng, CosineTaskParams* out_params = nullptr);

// Ground-truth conditional density on a y grid, normalized to integrate to 1
// over [0,1] (y's prior support); zero outside. p(y|x) ~ N(x; cos(a*y+b), sigma^2).
std::vector<double> cosine_conditional_density(const CosineTaskParams& p, double x_star,
                                               const std::vector<double>& y_grid);

struct GpTaskInfo {
  double offset = 0.0;            // u, the shift applied to the second branch
  std::vector<char> branch;       // 1 where the point came from the offset branch
  std::vector<double> f1, f2;     // latent function draws at the task's x's
  double jitter_used = 0.0;
};

// Mixture of two unit-variance RBF GP draws (lengthscale 1) on x ~ U(-3,3);
// each point picks a branch with prob 1/2 and the second branch is shifted by
// u ~ U(1,3). No observation noise. Cholesky jitter starts at 1e-8 and
// escalates x10 up to 1e-4 before giving up.
TaskDataset make_gp_mixture_task(int n_ctx, int n_tgt, std::mt19937_64& rng,
                                 GpTaskInfo* info = nullptr);

// CSV ingestion. Header row required; x_cols/y_cols name the columns. With a
// task_col, rows group into tasks by that column's value in order of first
// appearance; otherwise the file is one task. All rows land in the context
// (callers split). Parse failures throw DataError naming row and column.
std::vector<TaskDataset> load_csv_tasks(const std::string& path,
                                        const std::vector<std::string>& x_cols,
                                        const std::vector<std::string>& y_cols,
                                        const std::string& task_col = "");

}  // namespace metacde
