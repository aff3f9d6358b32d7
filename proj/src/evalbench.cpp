#include "metacde/evalbench.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "metacde/errors.hpp"
#include "metacde/kernels.hpp"

namespace metacde {
namespace {

constexpr double kLogSqrtTwoPi = 0.9189385332046727;  // log sqrt(2*pi)

void require_1d(const TaskDataset& ctx, const char* who) {
  if (ctx.dim_x != 1 || ctx.dim_y != 1)
    throw DataError(std::string(who) + ": baseline works on 1-D x and y");
  if (ctx.n_ctx() < 1) throw DomainError(std::string(who) + ": empty context");
}

// log of a Gaussian KDE over `points` evaluated on every grid value.
std::vector<double> kde_raw_log(const std::vector<double>& points, const std::vector<double>& grid,
                                double bw) {
  if (!(bw > 0.0)) throw DomainError("kde: bandwidth must be > 0");
  const double inv2h2 = 1.0 / (2.0 * bw * bw);
  const double log_norm = std::log(static_cast<double>(points.size())) + std::log(bw) + kLogSqrtTwoPi;
  const auto& kt = kernels::active();
  std::vector<double> ex(points.size());
  std::vector<double> raw(grid.size());
  for (size_t g = 0; g < grid.size(); ++g) {
    for (size_t i = 0; i < points.size(); ++i) {
      const double d = grid[g] - points[i];
      ex[i] = -d * d * inv2h2;
    }
    const int m = static_cast<int>(points.size());
    const double shift = kt.max(m, ex.data());
    raw[g] = shift + std::log(kt.sum_exp_shifted(m, ex.data(), shift)) - log_norm;
  }
  return raw;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

DensityEstimate eps_kde_density(const TaskDataset& ctx, double x_star,
                                const std::vector<double>& grid, double eps, double bw,
                                bool* fell_back) {
  require_1d(ctx, "eps_kde_density");
  if (!(eps > 0.0)) throw DomainError("eps_kde_density: eps must be > 0");
  std::vector<double> window;
  for (int i = 0; i < ctx.n_ctx(); ++i)
    if (std::fabs(ctx.ctx_x[i] - x_star) <= eps) window.push_back(ctx.ctx_y[i]);
  const bool fb = window.empty();
  if (fb) window = ctx.ctx_y;  // marginal fallback
  if (fell_back) *fell_back = fb;
  return post_normalize(grid, kde_raw_log(window, grid, bw));
}

DensityEstimate marginal_kde_density(const TaskDataset& ctx, const std::vector<double>& grid,
                                     double bw) {
  require_1d(ctx, "marginal_kde_density");
  return post_normalize(grid, kde_raw_log(ctx.ctx_y, grid, bw));
}

DensityEstimate gaussian_fit_density(const TaskDataset& ctx, const std::vector<double>& grid) {
  require_1d(ctx, "gaussian_fit_density");
  const int n = ctx.n_ctx();
  double mean = std::accumulate(ctx.ctx_y.begin(), ctx.ctx_y.end(), 0.0) / n;
  double ss = 0.0;
  for (double y : ctx.ctx_y) ss += (y - mean) * (y - mean);
  double sd = std::sqrt(ss / n);  // MLE variance
  sd = std::max(sd, 1e-6);        // degenerate contexts keep a proper density
  std::vector<double> raw(grid.size());
  for (size_t g = 0; g < grid.size(); ++g) {
    const double z = (grid[g] - mean) / sd;
    raw[g] = -0.5 * z * z - std::log(sd) - kLogSqrtTwoPi;
  }
  return post_normalize(grid, raw);
}

EpsKdeParams cv_eps_kde(const TaskDataset& ctx, int folds, const std::vector<double>& eps_grid_in,
                        const std::vector<double>& bw_grid_in) {
  require_1d(ctx, "cv_eps_kde");
  const int n = ctx.n_ctx();
  if (n < 2) throw DomainError("cv_eps_kde: need at least 2 context points");
  folds = std::max(2, std::min(folds, n));
  const std::vector<double> eps_grid = eps_grid_in.empty() ? linspace(0.1, 1.0, 15) : eps_grid_in;
  const std::vector<double> bw_grid = bw_grid_in.empty() ? linspace(0.01, 1.0, 15) : bw_grid_in;

  // round-robin folds; each fold's points are held out once
  std::vector<TaskDataset> train(folds);
  std::vector<std::vector<std::pair<double, double>>> val(folds);
  for (int f = 0; f < folds; ++f) {
    train[f].dim_x = 1;
    train[f].dim_y = 1;
  }
  for (int i = 0; i < n; ++i)
    for (int f = 0; f < folds; ++f) {
      if (i % folds == f) {
        val[f].push_back({ctx.ctx_x[i], ctx.ctx_y[i]});
      } else {
        train[f].ctx_x.push_back(ctx.ctx_x[i]);
        train[f].ctx_y.push_back(ctx.ctx_y[i]);
      }
    }
  std::vector<std::vector<double>> grids(folds);
  for (int f = 0; f < folds; ++f) grids[f] = grid_from_values(train[f].ctx_y, 100);

  EpsKdeParams best;
  bool first = true;
  for (double eps : eps_grid)
    for (double bw : bw_grid) {
      double ll = 0.0;
      for (int f = 0; f < folds; ++f)
        for (const auto& [xv, yv] : val[f]) {
          DensityEstimate est = eps_kde_density(train[f], xv, grids[f], eps, bw);
          ll += interp_log_density(est, yv);
        }
      if (first || ll > best.cv_loglik) {
        best = {eps, bw, ll};
        first = false;
      }
    }
  return best;
}

// ---- Wilcoxon -------------------------------------------------------------------

WilcoxonResult wilcoxon_signed_rank_greater(const std::vector<double>& diffs) {
  std::vector<double> d;
  for (double v : diffs)
    if (v != 0.0) d.push_back(v);
  const int n = static_cast<int>(d.size());
  if (n < 5) throw DomainError("wilcoxon: need at least 5 non-zero differences, got " +
                               std::to_string(n));

  // mid-ranks of |d|
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return std::fabs(d[a]) < std::fabs(d[b]); });
  std::vector<double> rank(n);
  std::vector<int> tie_sizes;
  for (int i = 0; i < n;) {
    int j = i;
    while (j + 1 < n && std::fabs(d[order[j + 1]]) == std::fabs(d[order[i]])) ++j;
    const double r = 0.5 * (i + j) + 1.0;  // average of 1-based positions i+1..j+1
    for (int k = i; k <= j; ++k) rank[order[k]] = r;
    tie_sizes.push_back(j - i + 1);
    i = j + 1;
  }

  WilcoxonResult res;
  res.n_used = n;
  for (int i = 0; i < n; ++i)
    if (d[i] > 0.0) res.w_plus += rank[i];

  if (n <= 20) {
    // exact null: distribute 2*rank (integers) over all 2^n sign choices
    std::vector<long long> r2(n);
    long long total = 0;
    for (int i = 0; i < n; ++i) {
      r2[i] = std::llround(2.0 * rank[i]);
      total += r2[i];
    }
    std::vector<double> cnt(total + 1, 0.0);
    cnt[0] = 1.0;
    for (int i = 0; i < n; ++i)
      for (long long s = total - r2[i]; s >= 0; --s)
        if (cnt[s] != 0.0) cnt[s + r2[i]] += cnt[s];
    const long long thr = std::llround(2.0 * res.w_plus);
    double ge = 0.0;
    for (long long s = thr; s <= total; ++s) ge += cnt[s];
    res.p_value = ge / std::pow(2.0, n);
    res.exact = true;
  } else {
    const double nn = n;
    const double mu = nn * (nn + 1.0) / 4.0;
    double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
    for (int t : tie_sizes)
      var -= (static_cast<double>(t) * t * t - t) / 48.0;
    const double z = (res.w_plus - mu - 0.5) / std::sqrt(var);
    res.p_value = 0.5 * std::erfc(z / std::sqrt(2.0));
    res.exact = false;
  }
  return res;
}

// ---- methods ---------------------------------------------------------------------

EvalMethod make_eps_kde_method() {
  return {"eps-kde", [](const TaskDataset& ctx, const std::vector<double>& grid) {
            EpsKdeParams p = cv_eps_kde(ctx);
            TaskDataset c = ctx;
            std::vector<double> g = grid;
            return std::function<DensityEstimate(double)>([c, g, p](double x_star) {
              return eps_kde_density(c, x_star, g, p.eps, p.bw);
            });
          }};
}

EvalMethod make_marginal_kde_method() {
  return {"marginal-kde", [](const TaskDataset& ctx, const std::vector<double>& grid) {
            // bandwidth by the same CV grid, window fixed to everything
            EpsKdeParams p = cv_eps_kde(ctx, 5, {1e300}, {});
            TaskDataset c = ctx;
            std::vector<double> g = grid;
            return std::function<DensityEstimate(double)>(
                [c, g, p](double) { return marginal_kde_density(c, g, p.bw); });
          }};
}

EvalMethod make_gaussian_fit_method() {
  return {"gaussian-fit", [](const TaskDataset& ctx, const std::vector<double>& grid) {
            TaskDataset c = ctx;
            std::vector<double> g = grid;
            return std::function<DensityEstimate(double)>(
                [c, g](double) { return gaussian_fit_density(c, g); });
          }};
}

EvalMethod make_metacde_method(const MetaModel& m) {
  MetaModel copy = m;  // tensors share buffers; cheap and keeps the method self-contained
  return {"metacde", [copy](const TaskDataset& ctx, const std::vector<double>& grid) {
            TaskDataset c = ctx;
            std::vector<double> g = grid;
            return std::function<DensityEstimate(double)>(
                [copy, c, g](double x_star) { return predict_density(copy, c, x_star, g); });
          }};
}

EvalMethod make_metann_method(const MetaNnModel& m) {
  MetaNnModel copy = m;
  return {"metann", [copy](const TaskDataset& ctx, const std::vector<double>& grid) {
            TaskDataset c = ctx;
            std::vector<double> g = grid;
            return std::function<DensityEstimate(double)>(
                [copy, c, g](double x_star) { return predict_density(copy, c, x_star, g); });
          }};
}

// ---- harness ---------------------------------------------------------------------

double BenchmarkReport::mean_loglik(int method) const {
  double s = 0.0;
  int n = 0;
  for (const TaskScore& t : scores[method])
    if (!t.failed) {
      s += t.loglik;
      ++n;
    }
  return n ? s / n : 0.0;
}

double BenchmarkReport::stddev_loglik(int method) const {
  const double m = mean_loglik(method);
  double ss = 0.0;
  int n = 0;
  for (const TaskScore& t : scores[method])
    if (!t.failed) {
      ss += (t.loglik - m) * (t.loglik - m);
      ++n;
    }
  return n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
}

WilcoxonResult BenchmarkReport::compare(int method, int other) const {
  std::vector<double> diffs;
  for (size_t t = 0; t < scores[method].size(); ++t)
    if (!scores[method][t].failed && !scores[other][t].failed)
      diffs.push_back(scores[method][t].loglik - scores[other][t].loglik);
  return wilcoxon_signed_rank_greater(diffs);
}

BenchmarkReport run_benchmark(const std::vector<EvalMethod>& methods,
                              const std::vector<TaskDataset>& tasks, int context_size,
                              int grid_points) {
  if (methods.empty() || tasks.empty()) throw DomainError("run_benchmark: nothing to evaluate");
  BenchmarkReport report;
  for (const EvalMethod& m : methods) report.methods.push_back(m.name);
  report.scores.assign(methods.size(), {});
  for (auto& v : report.scores) v.resize(tasks.size());

  for (size_t ti = 0; ti < tasks.size(); ++ti) {
    const TaskDataset task = tasks[ti].with_context(context_size);
    const std::vector<double> grid = grid_from_values(task.ctx_y, grid_points);
    for (size_t mi = 0; mi < methods.size(); ++mi) {
      TaskScore& score = report.scores[mi][ti];
      try {
        auto predict = methods[mi].fit(task, grid);
        std::vector<double> normalizers;
        score.loglik = heldout_loglik(predict, task, &score.clamped, &normalizers);
        std::vector<double> abs_norm(normalizers.size());
        for (size_t i = 0; i < normalizers.size(); ++i) abs_norm[i] = std::fabs(normalizers[i]);
        score.median_abs_log_normalizer = median_of(abs_norm);
      } catch (const std::exception& e) {
        score.failed = true;
        score.error = e.what();
      }
    }
  }
  return report;
}

int count_local_maxima(const std::vector<double>& density_on_grid) {
  int count = 0;
  int dir = 0;  // sign of the last non-zero move
  for (size_t i = 1; i < density_on_grid.size(); ++i) {
    const double diff = density_on_grid[i] - density_on_grid[i - 1];
    const int s = diff > 0.0 ? 1 : diff < 0.0 ? -1 : 0;
    if (s == 0) continue;
    if (dir == 1 && s == -1) ++count;
    dir = s;
  }
  return count;
}

}  // namespace metacde
