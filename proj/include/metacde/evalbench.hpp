#pragma once

#include <functional>
#include <string>
#include <vector>

#include "metacde/datasets.hpp"
#include "metacde/meta.hpp"

namespace metacde {

// ---- baselines ----------------------------------------------------------------

// Conditioned KDE: Gaussian KDE over the y's whose x lies within eps of
// x_star. An empty window falls back to all context points (the marginal) and
// reports it. Density is renormalized on the grid like every other method.
DensityEstimate eps_kde_density(const TaskDataset& ctx, double x_star,
                                const std::vector<double>& grid, double eps, double bw,
                                bool* fell_back = nullptr);

struct EpsKdeParams {
  double eps = 0.0, bw = 0.0;
  double cv_loglik = 0.0;
};
// Pick (eps, bw) on the context by k-fold cross validation over the two grids;
// ties keep the first (smallest) cell. Default grids: eps and bw both 15
// points, eps in [0.1, 1], bw in [0.01, 1].
EpsKdeParams cv_eps_kde(const TaskDataset& ctx, int folds = 5,
                        const std::vector<double>& eps_grid = {},
                        const std::vector<double>& bw_grid = {});

DensityEstimate marginal_kde_density(const TaskDataset& ctx, const std::vector<double>& grid,
                                     double bw);
// Maximum-likelihood Gaussian over context y, on the grid. The unimodal
// control for multimodality checks.
DensityEstimate gaussian_fit_density(const TaskDataset& ctx, const std::vector<double>& grid);

// ---- paired test ---------------------------------------------------------------

struct WilcoxonResult {
  double p_value = 1.0;
  double w_plus = 0.0;  // rank sum of positive differences (mid-ranks on ties)
  int n_used = 0;       // non-zero differences
  bool exact = false;   // exact null enumeration (n <= 20) vs normal approx
};

// One-sided signed-rank test of H1: median(diff) > 0. Zeros are dropped;
// fewer than 5 non-zero differences is an error. n <= 20 enumerates the null
// exactly; larger n uses the normal approximation with continuity correction
// and the tie variance adjustment.
WilcoxonResult wilcoxon_signed_rank_greater(const std::vector<double>& diffs);

// ---- benchmark harness ----------------------------------------------------------

// A method fits per task on the context and then produces one density per
// query x on the shared grid.
struct EvalMethod {
  std::string name;
  std::function<std::function<DensityEstimate(double x_star)>(const TaskDataset& ctx,
                                                              const std::vector<double>& grid)>
      fit;
};

EvalMethod make_eps_kde_method();
EvalMethod make_marginal_kde_method();
EvalMethod make_gaussian_fit_method();
EvalMethod make_metacde_method(const MetaModel& m);
EvalMethod make_metann_method(const MetaNnModel& m);

struct TaskScore {
  double loglik = 0.0;
  int clamped = 0;
  bool failed = false;
  std::string error;
  double median_abs_log_normalizer = 0.0;
};

struct BenchmarkReport {
  std::vector<std::string> methods;
  std::vector<std::vector<TaskScore>> scores;  // [method][task]

  double mean_loglik(int method) const;
  double stddev_loglik(int method) const;
  // Paired one-sided test that `method` beats `other`; tasks where either
  // failed are dropped.
  WilcoxonResult compare(int method, int other) const;
};

// Evaluate every method on every task: context truncated to context_size
// points, grid built from those context y's (10% padding), held-out loglik
// summed over the task's targets. A method that throws marks that task failed
// and keeps going.
BenchmarkReport run_benchmark(const std::vector<EvalMethod>& methods,
                              const std::vector<TaskDataset>& tasks, int context_size,
                              int grid_points = 100);

// Count strict local maxima of a density on its grid (interior points that
// exceed both neighbors; plateaus count once at their left edge).
int count_local_maxima(const std::vector<double>& density_on_grid);

}  // namespace metacde
