#include "metacde/datasets.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "metacde/errors.hpp"
#include "metacde/linalg.hpp"

namespace metacde {

TaskDataset TaskDataset::with_context(int n) const {
  if (n < 1 || n > n_ctx())
    throw DomainError("with_context: " + std::to_string(n) + " of " + std::to_string(n_ctx()) +
                      " context points requested");
  TaskDataset t = *this;
  t.ctx_x.assign(ctx_x.begin(), ctx_x.begin() + static_cast<size_t>(n) * dim_x);
  t.ctx_y.assign(ctx_y.begin(), ctx_y.begin() + static_cast<size_t>(n) * dim_y);
  return t;
}

std::vector<double> TaskDataset::pooled_y() const {
  std::vector<double> all = ctx_y;
  all.insert(all.end(), tgt_y.begin(), tgt_y.end());
  return all;
}

TaskDataset make_cosine_task(CosineVariant v, double sigma, int n_ctx, int n_tgt,
                             std::mt19937_64& rng, CosineTaskParams* out_params) {
  if (n_ctx < 1 || n_tgt < 0) throw DomainError("make_cosine_task: bad sizes");
  if (!(sigma >= 0.0)) throw DomainError("make_cosine_task: sigma must be >= 0");
  CosineTaskParams p;
  p.sigma = sigma;
  if (v == CosineVariant::standard) {
    p.a = std::uniform_real_distribution<double>(8.0, 12.0)(rng);
    p.b = std::uniform_real_distribution<double>(0.0, std::numbers::pi)(rng);
  } else {
    p.a = std::uniform_real_distribution<double>(4.0, 14.0)(rng);
    p.b = std::uniform_real_distribution<double>(-std::numbers::pi, std::numbers::pi)(rng);
  }
  std::uniform_real_distribution<double> uy(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  TaskDataset t;
  t.source = v == CosineVariant::standard ? "cosine" : "cosine-hard";
  const int n = n_ctx + n_tgt;
  std::vector<double> xs(n), ys(n);
  for (int i = 0; i < n; ++i) {
    ys[i] = uy(rng);
    xs[i] = std::cos(p.a * ys[i] + p.b) + sigma * noise(rng);
  }
  t.ctx_x.assign(xs.begin(), xs.begin() + n_ctx);
  t.ctx_y.assign(ys.begin(), ys.begin() + n_ctx);
  t.tgt_x.assign(xs.begin() + n_ctx, xs.end());
  t.tgt_y.assign(ys.begin() + n_ctx, ys.end());
  if (out_params) *out_params = p;
  return t;
}

std::vector<double> cosine_conditional_density(const CosineTaskParams& p, double x_star,
                                               const std::vector<double>& y_grid) {
  if (y_grid.size() < 2) throw DomainError("cosine_conditional_density: need a grid");
  if (!(p.sigma > 0.0)) throw DomainError("cosine_conditional_density: sigma must be > 0");
  // Bayes with a flat prior on y in [0,1]: p(y|x*) ~ exp(-(x*-cos(ay+b))^2 / 2s^2) 1[0<=y<=1].
  std::vector<double> w(y_grid.size(), 0.0);
  double wmax = -1.0;
  for (size_t i = 0; i < y_grid.size(); ++i) {
    const double y = y_grid[i];
    if (y < 0.0 || y > 1.0) continue;
    const double r = x_star - std::cos(p.a * y + p.b);
    w[i] = std::exp(-r * r / (2.0 * p.sigma * p.sigma));
    wmax = std::max(wmax, w[i]);
  }
  if (!(wmax > 0.0)) throw DomainError("cosine_conditional_density: grid misses [0,1]");
  // trapezoid normalization over the grid
  double integral = 0.0;
  for (size_t i = 0; i + 1 < y_grid.size(); ++i)
    integral += 0.5 * (w[i] + w[i + 1]) * (y_grid[i + 1] - y_grid[i]);
  for (double& v : w) v /= integral;
  return w;
}

TaskDataset make_gp_mixture_task(int n_ctx, int n_tgt, std::mt19937_64& rng, GpTaskInfo* info) {
  if (n_ctx < 1 || n_tgt < 0) throw DomainError("make_gp_mixture_task: bad sizes");
  const int n = n_ctx + n_tgt;
  std::uniform_real_distribution<double> ux(-3.0, 3.0);
  std::normal_distribution<double> nz(0.0, 1.0);

  std::vector<double> xs(n);
  for (int i = 0; i < n; ++i) xs[i] = ux(rng);
  std::vector<double> z1(n), z2(n);
  for (int i = 0; i < n; ++i) z1[i] = nz(rng);
  for (int i = 0; i < n; ++i) z2[i] = nz(rng);
  const double u = std::uniform_real_distribution<double>(1.0, 3.0)(rng);
  std::vector<char> branch(n);
  std::uniform_real_distribution<double> ub(0.0, 1.0);
  for (int i = 0; i < n; ++i) branch[i] = ub(rng) < 0.5 ? 1 : 0;

  std::vector<double> k(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double d = xs[i] - xs[j];
      k[static_cast<size_t>(i) * n + j] = std::exp(-0.5 * d * d);
    }

  CholFactor f;
  double jitter = 1e-8;
  for (;;) {
    std::vector<double> kj = k;
    for (int i = 0; i < n; ++i) kj[static_cast<size_t>(i) * n + i] += jitter;
    try {
      f = cholesky(n, kj.data());
      break;
    } catch (const DefinitenessError&) {
      jitter *= 10.0;
      if (jitter > 1e-4) throw;
    }
  }

  auto lmul = [&](const std::vector<double>& z) {
    std::vector<double> out(n, 0.0);
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j <= i; ++j) s += f.l[static_cast<size_t>(i) * n + j] * z[j];
      out[i] = s;
    }
    return out;
  };
  std::vector<double> f1 = lmul(z1), f2 = lmul(z2);

  TaskDataset t;
  t.source = "gp-mixture";
  std::vector<double> ys(n);
  for (int i = 0; i < n; ++i) ys[i] = branch[i] ? f2[i] + u : f1[i];
  t.ctx_x.assign(xs.begin(), xs.begin() + n_ctx);
  t.ctx_y.assign(ys.begin(), ys.begin() + n_ctx);
  t.tgt_x.assign(xs.begin() + n_ctx, xs.end());
  t.tgt_y.assign(ys.begin() + n_ctx, ys.end());
  if (info) {
    info->offset = u;
    info->branch = std::move(branch);
    info->f1 = std::move(f1);
    info->f2 = std::move(f2);
    info->jitter_used = jitter;
  }
  return t;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  cells.push_back(cur);
  for (std::string& s : cells) {
    size_t b = s.find_first_not_of(" \t");
    size_t e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
  }
  return cells;
}

double parse_cell(const std::string& cell, int row, const std::string& col) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || p != last)
    throw DataError("csv: row " + std::to_string(row) + ", column '" + col +
                    "': cannot parse '" + cell + "' as a number");
  return v;
}

}  // namespace

std::vector<TaskDataset> load_csv_tasks(const std::string& path,
                                        const std::vector<std::string>& x_cols,
                                        const std::vector<std::string>& y_cols,
                                        const std::string& task_col) {
  if (x_cols.empty() || y_cols.empty()) throw DataError("csv: x/y column lists must be non-empty");
  std::ifstream in(path);
  if (!in) throw DataError("csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("csv: '" + path + "' is empty");
  const std::vector<std::string> header = split_csv_line(line);

  auto col_index = [&](const std::string& name) {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw DataError("csv: column '" + name + "' not found in '" + path + "'");
  };
  std::vector<int> xi, yi;
  for (const auto& c : x_cols) xi.push_back(col_index(c));
  for (const auto& c : y_cols) yi.push_back(col_index(c));
  const int ti = task_col.empty() ? -1 : col_index(task_col);

  std::vector<TaskDataset> tasks;
  std::vector<std::string> task_keys;
  auto task_for = [&](const std::string& key) -> TaskDataset& {
    for (size_t i = 0; i < task_keys.size(); ++i)
      if (task_keys[i] == key) return tasks[i];
    task_keys.push_back(key);
    TaskDataset t;
    t.dim_x = static_cast<int>(xi.size());
    t.dim_y = static_cast<int>(yi.size());
    t.source = key.empty() ? path : path + ":" + key;
    tasks.push_back(std::move(t));
    return tasks.back();
  };

  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw DataError("csv: row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                      " cells, header has " + std::to_string(header.size()));
    TaskDataset& t = task_for(ti < 0 ? "" : cells[ti]);
    for (size_t j = 0; j < xi.size(); ++j) t.ctx_x.push_back(parse_cell(cells[xi[j]], row, x_cols[j]));
    for (size_t j = 0; j < yi.size(); ++j) t.ctx_y.push_back(parse_cell(cells[yi[j]], row, y_cols[j]));
  }
  if (tasks.empty()) throw DataError("csv: '" + path + "' has no data rows");
  return tasks;
}

}  // namespace metacde
