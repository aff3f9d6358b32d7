#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "doctest.h"
#include "metacde/errors.hpp"
#include "metacde/meta.hpp"
#include "metacde/mlp.hpp"
#include "metacde/nce.hpp"
#include "metacde/rng.hpp"
#include "metacde/tensor.hpp"
#include "ref_eval.hpp"

using namespace metacde;

namespace {

MlpRef detached(const Mlp& net) {
  MlpRef r;
  r.weights = net.weights;
  r.biases = net.biases;
  return r;
}

std::vector<double> net_grad_flat(Tape& tape, const MlpRef& ref) {
  std::vector<double> g;
  for (size_t l = 0; l < ref.weights.size(); ++l) {
    const std::vector<double>& gw = tape.grad(ref.weights[l]);
    g.insert(g.end(), gw.begin(), gw.end());
    const std::vector<double>& gb = tape.grad(ref.biases[l]);
    g.insert(g.end(), gb.begin(), gb.end());
  }
  return g;
}

std::vector<int> spread_indices(int count, int want) {
  std::vector<int> idx;
  const int stride = std::max(1, count / want);
  for (int i = 0; i < count; i += stride) idx.push_back(i);
  if (idx.back() != count - 1) idx.push_back(count - 1);
  return idx;
}

struct Episode {
  ModelConfig cfg;
  TaskDataset task;
  std::vector<double> fake_y, lp_true, lp_fake;
};

Episode make_episode(int n_ctx, int n_tgt, std::uint64_t seed, const ModelConfig& cfg) {
  Episode e;
  e.cfg = cfg;
  std::mt19937_64 task_rng = seeded_rng(seed, rng_stream::misc);
  e.task = make_cosine_task(CosineVariant::standard, 0.1, n_ctx, n_tgt, task_rng);
  std::mt19937_64 fake_rng = seeded_rng(seed, rng_stream::fakes);
  draw_fakes(e.task, cfg, fake_rng, e.fake_y, e.lp_true, e.lp_fake);
  return e;
}

ModelConfig small_cfg() {
  ModelConfig cfg;
  cfg.feature_dim = 4;
  cfg.hidden = 6;
  cfg.hidden_layers = 2;
  cfg.ridge = 0.5;
  cfg.noise_ratio = 5;
  return cfg;
}

// Long-double mirror of the ablation loss: encode pairs, mean-pool, concat the
// query, project, then the same scored tail the reference episode uses.
refeval::ld metann_oracle(const refeval::Net& enc, const refeval::Net& proj,
                          const refeval::Net& ynet, const refeval::Net& norm, const Episode& e) {
  using refeval::ld;
  using refeval::Mat;
  const ModelConfig& cfg = e.cfg;
  const TaskDataset& task = e.task;
  const int n = task.n_ctx(), t = task.n_tgt(), d = cfg.feature_dim, kappa = cfg.noise_ratio;

  Mat pairs(n, std::vector<ld>(static_cast<size_t>(cfg.dim_x + cfg.dim_y)));
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < cfg.dim_x; ++k) pairs[i][k] = task.ctx_x[static_cast<size_t>(i) * cfg.dim_x + k];
    for (int k = 0; k < cfg.dim_y; ++k)
      pairs[i][static_cast<size_t>(cfg.dim_x) + k] = task.ctx_y[static_cast<size_t>(i) * cfg.dim_y + k];
  }
  Mat enc_out = refeval::forward(enc, pairs);
  std::vector<ld> pooled(enc_out[0].size(), 0.0L);
  for (const auto& row : enc_out)
    for (size_t k = 0; k < pooled.size(); ++k) pooled[k] += row[k];
  for (ld& v : pooled) v /= n;
  Mat proj_in(t);
  for (int j = 0; j < t; ++j) {
    proj_in[j] = pooled;
    for (int k = 0; k < cfg.dim_x; ++k)
      proj_in[j].push_back(task.tgt_x[static_cast<size_t>(j) * cfg.dim_x + k]);
  }
  Mat embeds = refeval::forward(proj, proj_in);
  Mat ft = refeval::forward(ynet, refeval::rows_of(task.tgt_y, cfg.dim_y));
  Mat ff = refeval::forward(ynet, refeval::rows_of(e.fake_y, cfg.dim_y));

  const ld log_kappa = std::log(static_cast<ld>(kappa));
  ld loss = 0.0L;
  for (int j = 0; j < t; ++j) {
    ld s_true = 0.0L;
    for (int k = 0; k < d; ++k) s_true += embeds[j][k] * ft[j][k];
    const ld bias = refeval::forward(norm, Mat{embeds[j]})[0][0];
    loss += refeval::softplus(-(s_true + bias - log_kappa - static_cast<ld>(e.lp_true[j])));
    for (int f = 0; f < kappa; ++f) {
      const int row = j * kappa + f;
      ld s_fake = 0.0L;
      for (int k = 0; k < d; ++k) s_fake += embeds[j][k] * ff[row][k];
      loss += refeval::softplus(s_fake + bias - log_kappa - static_cast<ld>(e.lp_fake[row]));
    }
  }
  return loss;
}

}  // namespace

TEST_SUITE("metalearn") {

TEST_CASE("episode loss matches the long-double reference pipeline") {
  ModelConfig cfg = small_cfg();
  Episode e = make_episode(5, 3, 77, cfg);
  std::mt19937_64 init_rng = seeded_rng(77, rng_stream::init);
  MetaModel m = metacde_init(cfg, init_rng);

  Tape tape;
  MlpRef xr = mlp_bind(m.x_net, tape), yr = mlp_bind(m.y_net, tape), nr = mlp_bind(m.norm_net, tape);
  Tensor loss = metacde_episode_loss(xr, yr, nr, cfg, e.task, e.fake_y, e.lp_true, e.lp_fake);
  REQUIRE(loss.value() > 0.0);

  const refeval::ld want = refeval::episode_loss(refeval::from_mlp(m.x_net), refeval::from_mlp(m.y_net),
                                                 refeval::from_mlp(m.norm_net), cfg, e.task, e.fake_y,
                                                 e.lp_true, e.lp_fake);
  REQUIRE(loss.value() == doctest::Approx(static_cast<double>(want)).epsilon(5e-12));

  // detached evaluation takes the same numeric path
  Tensor eager = metacde_episode_loss(detached(m.x_net), detached(m.y_net), detached(m.norm_net), cfg,
                                      e.task, e.fake_y, e.lp_true, e.lp_fake);
  REQUIRE(eager.value() == loss.value());
}

TEST_CASE("episode gradients match finite differences of the reference loss") {
  ModelConfig cfg = small_cfg();
  Episode e = make_episode(5, 3, 78, cfg);
  std::mt19937_64 init_rng = seeded_rng(78, rng_stream::init);
  MetaModel m = metacde_init(cfg, init_rng);

  Tape tape;
  MlpRef refs[3] = {mlp_bind(m.x_net, tape), mlp_bind(m.y_net, tape), mlp_bind(m.norm_net, tape)};
  Tensor loss = metacde_episode_loss(refs[0], refs[1], refs[2], cfg, e.task, e.fake_y, e.lp_true,
                                     e.lp_fake);
  tape.backward(loss);

  const Mlp* nets[3] = {&m.x_net, &m.y_net, &m.norm_net};
  const refeval::Net base[3] = {refeval::from_mlp(m.x_net), refeval::from_mlp(m.y_net),
                                refeval::from_mlp(m.norm_net)};
  auto eval = [&](int ni, int p, refeval::ld delta) {
    refeval::Net nudged[3] = {base[0], base[1], base[2]};
    refeval::add_param(nudged[ni], p, delta);
    return refeval::episode_loss(nudged[0], nudged[1], nudged[2], cfg, e.task, e.fake_y, e.lp_true,
                                 e.lp_fake);
  };

  const refeval::ld h = 1e-5L;
  for (int ni = 0; ni < 3; ++ni) {
    const std::vector<double> g = net_grad_flat(tape, refs[ni]);
    REQUIRE(static_cast<int>(g.size()) == refeval::param_count(base[ni]));
    (void)nets;
    for (int p : spread_indices(static_cast<int>(g.size()), 8)) {
      const double fd = static_cast<double>((eval(ni, p, h) - eval(ni, p, -h)) / (2.0L * h));
      const double tol = 1e-4 * std::max(std::fabs(fd), std::fabs(g[static_cast<size_t>(p)])) + 5e-6;
      REQUIRE(std::fabs(fd - g[static_cast<size_t>(p)]) <= tol);
    }
  }
}

TEST_CASE("ablation loss matches its oracle and its gradients check out") {
  ModelConfig cfg = small_cfg();
  Episode e = make_episode(6, 3, 79, cfg);
  std::mt19937_64 init_rng = seeded_rng(79, rng_stream::init);
  MetaNnModel m = metann_init(cfg, init_rng);

  Tape tape;
  MlpRef er = mlp_bind(m.enc_net, tape), pr = mlp_bind(m.proj_net, tape);
  MlpRef yr = mlp_bind(m.y_net, tape), nr = mlp_bind(m.norm_net, tape);
  Tensor loss = metann_episode_loss(er, pr, yr, nr, cfg, e.task, e.fake_y, e.lp_true, e.lp_fake);
  REQUIRE(loss.value() > 0.0);

  const refeval::Net base[4] = {refeval::from_mlp(m.enc_net), refeval::from_mlp(m.proj_net),
                                refeval::from_mlp(m.y_net), refeval::from_mlp(m.norm_net)};
  const refeval::ld want = metann_oracle(base[0], base[1], base[2], base[3], e);
  REQUIRE(loss.value() == doctest::Approx(static_cast<double>(want)).epsilon(5e-12));

  tape.backward(loss);
  auto eval = [&](int ni, int p, refeval::ld delta) {
    refeval::Net nudged[4] = {base[0], base[1], base[2], base[3]};
    refeval::add_param(nudged[ni], p, delta);
    return metann_oracle(nudged[0], nudged[1], nudged[2], nudged[3], e);
  };
  const MlpRef* refs[4] = {&er, &pr, &yr, &nr};
  const refeval::ld h = 1e-5L;
  for (int ni = 0; ni < 4; ++ni) {
    const std::vector<double> g = net_grad_flat(tape, *refs[ni]);
    for (int p : spread_indices(static_cast<int>(g.size()), 5)) {
      const double fd = static_cast<double>((eval(ni, p, h) - eval(ni, p, -h)) / (2.0L * h));
      const double tol = 1e-4 * std::max(std::fabs(fd), std::fabs(g[static_cast<size_t>(p)])) + 5e-6;
      REQUIRE(std::fabs(fd - g[static_cast<size_t>(p)]) <= tol);
    }
  }
}

TEST_CASE("encoder embedding is permutation invariant") {
  ModelConfig cfg = small_cfg();
  std::mt19937_64 rng = seeded_rng(80, rng_stream::init);
  MetaNnModel m = metann_init(cfg, rng);

  Tensor pairs = tensor_of({4, 2}, {0.1, 1.0, -0.4, 2.0, 0.7, -1.0, 0.3, 0.5});
  Tensor perm = tensor_of({4, 2}, {0.7, -1.0, 0.3, 0.5, 0.1, 1.0, -0.4, 2.0});
  Tensor query = tensor_of({2, 1}, {0.2, -0.6});
  Tensor a = metann_encode(detached(m.enc_net), detached(m.proj_net), pairs, query);
  Tensor b = metann_encode(detached(m.enc_net), detached(m.proj_net), perm, query);
  REQUIRE(a.rows() == 2);
  REQUIRE(a.cols() == cfg.feature_dim);
  for (int i = 0; i < a.numel(); ++i)
    REQUIRE(a.at(i) == doctest::Approx(b.at(i)).epsilon(1e-12));
}

TEST_CASE("fake batches are deterministic and carry the sampler's own densities") {
  ModelConfig cfg = small_cfg();
  std::mt19937_64 task_rng = seeded_rng(81, rng_stream::misc);
  TaskDataset task = make_cosine_task(CosineVariant::standard, 0.1, 6, 4, task_rng);

  std::vector<double> fy1, lt1, lf1, fy2, lt2, lf2;
  std::mt19937_64 r1 = seeded_rng(81, rng_stream::fakes), r2 = seeded_rng(81, rng_stream::fakes);
  draw_fakes(task, cfg, r1, fy1, lt1, lf1);
  draw_fakes(task, cfg, r2, fy2, lt2, lf2);
  REQUIRE(fy1 == fy2);
  REQUIRE(lt1 == lt2);
  REQUIRE(lf1 == lf2);
  REQUIRE(fy1.size() == static_cast<size_t>(task.n_tgt() * cfg.noise_ratio));
  REQUIRE(lt1.size() == static_cast<size_t>(task.n_tgt()));
  REQUIRE(lf1.size() == static_cast<size_t>(task.n_tgt() * cfg.noise_ratio));

  FakeSampler fs = fake_sampler_fit(task.pooled_y(), 1, cfg.bandwidth);
  for (int j = 0; j < task.n_tgt(); ++j) REQUIRE(lt1[static_cast<size_t>(j)] == fs.log_pdf1(task.tgt_y[static_cast<size_t>(j)]));
  for (size_t r = 0; r < lf1.size(); ++r) REQUIRE(lf1[r] == fs.log_pdf1(fy1[r]));
}

TEST_CASE("scored loss validates its batch shapes") {
  ModelConfig cfg = small_cfg();
  Episode e = make_episode(5, 3, 82, cfg);
  std::mt19937_64 rng = seeded_rng(82, rng_stream::init);
  MetaModel m = metacde_init(cfg, rng);
  Tensor embeds = tensor_zeros({e.task.n_tgt() + 1, cfg.feature_dim});
  REQUIRE_THROWS_AS(episode_scored_loss(embeds, detached(m.y_net), detached(m.norm_net), cfg, e.task,
                                        e.fake_y, e.lp_true, e.lp_fake),
                    DimensionError);
  Tensor ok = tensor_zeros({e.task.n_tgt(), cfg.feature_dim});
  std::vector<double> short_true(e.lp_true.begin(), e.lp_true.end() - 1);
  REQUIRE_THROWS_AS(episode_scored_loss(ok, detached(m.y_net), detached(m.norm_net), cfg, e.task,
                                        e.fake_y, short_true, e.lp_fake),
                    DimensionError);
}

TEST_CASE("training reduces the loss and is bit-for-bit repeatable") {
  ModelConfig cfg;
  cfg.feature_dim = 8;
  cfg.hidden = 10;
  cfg.hidden_layers = 2;
  cfg.ridge = 0.1;
  cfg.noise_ratio = 4;

  std::mt19937_64 pool_rng = seeded_rng(83, rng_stream::misc);
  std::vector<TaskDataset> pool;
  for (int i = 0; i < 6; ++i) pool.push_back(make_cosine_task(CosineVariant::standard, 0.1, 12, 8, pool_rng));
  TaskSource source = [&pool](long long idx) { return pool[static_cast<size_t>(idx % 6)]; };

  TrainConfig tc;
  tc.steps = 250;
  tc.tasks_per_step = 4;
  tc.learning_rate = 3e-3;
  tc.seed = 11;

  auto run = [&]() {
    std::mt19937_64 init_rng = seeded_rng(83, rng_stream::init);
    MetaModel m = metacde_init(cfg, init_rng);
    auto ep = make_episode_model(m);
    TrainTrace trace = train(*ep, source, tc);
    return std::make_pair(std::move(m), std::move(trace));
  };
  auto [m1, t1] = run();
  REQUIRE(t1.step_loss.size() == 250);
  for (double v : t1.step_loss) REQUIRE(std::isfinite(v));
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 20; ++i) {
    first += t1.step_loss[static_cast<size_t>(i)];
    last += t1.step_loss[static_cast<size_t>(230 + i)];
  }
  REQUIRE(last / 20.0 < first / 20.0 - 0.5);

  auto [m2, t2] = run();
  REQUIRE(t1.step_loss == t2.step_loss);
  for (size_t l = 0; l < m1.x_net.weights.size(); ++l) {
    const double* a = m1.x_net.weights[l].ptr();
    const double* b = m2.x_net.weights[l].ptr();
    for (int i = 0; i < m1.x_net.weights[l].numel(); ++i) REQUIRE(a[i] == b[i]);
  }
}

TEST_CASE("training reports steps through the callback and rejects bad configs") {
  ModelConfig cfg = small_cfg();
  std::mt19937_64 pool_rng = seeded_rng(84, rng_stream::misc);
  TaskDataset task = make_cosine_task(CosineVariant::standard, 0.1, 6, 4, pool_rng);
  TaskSource source = [&task](long long) { return task; };

  std::mt19937_64 init_rng = seeded_rng(84, rng_stream::init);
  MetaModel m = metacde_init(cfg, init_rng);
  auto ep = make_episode_model(m);
  TrainConfig tc;
  tc.steps = 7;
  tc.tasks_per_step = 2;
  std::vector<int> seen;
  std::vector<size_t> trace_sizes;
  TrainTrace trace = train(*ep, source, tc, [&](int step, const TrainTrace& tr) {
    seen.push_back(step);
    trace_sizes.push_back(tr.step_loss.size());
  });
  REQUIRE(seen == std::vector<int>({1, 2, 3, 4, 5, 6, 7}));
  REQUIRE(trace_sizes == std::vector<size_t>({1, 2, 3, 4, 5, 6, 7}));
  REQUIRE(trace.step_loss.size() == 7);

  TrainConfig bad = tc;
  bad.steps = 0;
  REQUIRE_THROWS_AS(train(*ep, source, bad), DomainError);
  bad = tc;
  bad.learning_rate = 0.0;
  REQUIRE_THROWS_AS(train(*ep, source, bad), DomainError);
}

TEST_CASE("non-finite training loss raises a numeric error naming the step") {
  ModelConfig cfg = small_cfg();
  TaskDataset poison;
  poison.ctx_x = {0.0};
  poison.ctx_y = {1e308};
  poison.tgt_x = {0.1};
  poison.tgt_y = {-1e308};
  TaskSource source = [&poison](long long) { return poison; };
  std::mt19937_64 init_rng = seeded_rng(85, rng_stream::init);
  MetaModel m = metacde_init(cfg, init_rng);
  auto ep = make_episode_model(m);
  TrainConfig tc;
  tc.steps = 3;
  tc.tasks_per_step = 1;
  try {
    train(*ep, source, tc);
    REQUIRE(false);
  } catch (const NumericError& e) {
    REQUIRE(std::string(e.what()).find("step 0") != std::string::npos);
  }
}

TEST_CASE("predicted densities integrate to one on their grid") {
  ModelConfig cfg = small_cfg();
  std::mt19937_64 rng = seeded_rng(86, rng_stream::init);
  MetaModel cde = metacde_init(cfg, rng);
  MetaNnModel nn = metann_init(cfg, rng);
  std::mt19937_64 task_rng = seeded_rng(86, rng_stream::misc);
  TaskDataset task = make_cosine_task(CosineVariant::standard, 0.1, 20, 5, task_rng);
  std::vector<double> grid = make_grid(-0.2, 1.2, 100);

  auto check = [&](const DensityEstimate& est) {
    REQUIRE(est.grid == grid);
    REQUIRE(est.log_density.size() == grid.size());
    REQUIRE(std::isfinite(est.raw_log_normalizer));
    const double step = (grid.back() - grid.front()) / (static_cast<double>(grid.size()) - 1);
    long double integral = 0.0L;
    for (double ld_ : est.log_density) integral += std::exp(static_cast<long double>(ld_));
    integral *= step;
    REQUIRE(static_cast<double>(integral) == doctest::Approx(1.0).epsilon(1e-9));
  };
  check(predict_density(cde, task, 0.3, grid));
  check(predict_density(nn, task, 0.3, grid));

  TaskDataset empty;
  REQUIRE_THROWS_AS(predict_density(cde, empty, 0.3, grid), DomainError);
  TaskDataset wide = task;
  wide.dim_x = 2;
  REQUIRE_THROWS_AS(predict_density(cde, wide, 0.3, grid), DataError);
  REQUIRE_THROWS_AS(predict_density(nn, wide, 0.3, grid), DataError);
}

TEST_CASE("grid construction pads and validates") {
  std::vector<double> g = make_grid(0.0, 1.0, 5);
  REQUIRE(g == std::vector<double>({0.0, 0.25, 0.5, 0.75, 1.0}));
  REQUIRE_THROWS_AS(make_grid(0.0, 1.0, 1), DomainError);
  REQUIRE_THROWS_AS(make_grid(1.0, 1.0, 5), DomainError);

  std::vector<double> fv = grid_from_values({3.0, 1.0, 2.0}, 11);
  REQUIRE(fv.size() == 11);
  REQUIRE(fv.front() == doctest::Approx(0.8).epsilon(1e-15));
  REQUIRE(fv.back() == doctest::Approx(3.2).epsilon(1e-15));

  std::vector<double> flat = grid_from_values({2.0, 2.0}, 3);
  REQUIRE(flat.front() == doctest::Approx(1.5).epsilon(1e-15));
  REQUIRE(flat.back() == doctest::Approx(2.5).epsilon(1e-15));
  REQUIRE_THROWS_AS(grid_from_values({}, 5), DomainError);
}

TEST_CASE("post normalization is exact on the grid and shift invariant") {
  std::vector<double> grid = make_grid(-1.0, 1.0, 100);
  std::vector<double> raw(grid.size());
  for (size_t i = 0; i < grid.size(); ++i) raw[i] = -3.0 * grid[i] * grid[i] + 0.4 * grid[i];

  DensityEstimate est = post_normalize(grid, raw);
  const double step = 2.0 / 99.0;
  long double integral = 0.0L;
  for (double v : est.log_density) integral += std::exp(static_cast<long double>(v));
  REQUIRE(static_cast<double>(integral * step) == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<double> shifted(raw);
  for (double& v : shifted) v += 7.5;
  DensityEstimate est2 = post_normalize(grid, shifted);
  for (size_t i = 0; i < grid.size(); ++i)
    REQUIRE(est2.log_density[i] == doctest::Approx(est.log_density[i]).epsilon(1e-12));
  REQUIRE(est2.raw_log_normalizer == doctest::Approx(est.raw_log_normalizer + 7.5).epsilon(1e-12));

  REQUIRE_THROWS_AS(post_normalize(grid, std::vector<double>(3, 0.0)), DimensionError);
  std::vector<double> with_inf(raw);
  with_inf[10] = std::numeric_limits<double>::infinity();
  REQUIRE_THROWS_AS(post_normalize(grid, with_inf), NumericError);
}

TEST_CASE("interpolated log density clamps at the grid edges") {
  DensityEstimate est;
  est.grid = {0.0, 1.0, 2.0};
  est.log_density = {0.0, 10.0, 20.0};
  int clamped = 0;
  REQUIRE(interp_log_density(est, 0.25, &clamped) == doctest::Approx(2.5).epsilon(1e-15));
  REQUIRE(interp_log_density(est, 1.5, &clamped) == doctest::Approx(15.0).epsilon(1e-15));
  REQUIRE(clamped == 0);
  REQUIRE(interp_log_density(est, -1.0, &clamped) == 0.0);
  REQUIRE(clamped == 1);
  REQUIRE(interp_log_density(est, 0.0, &clamped) == 0.0);
  REQUIRE(clamped == 1);  // exact edge is not a clamp
  REQUIRE(interp_log_density(est, 3.0, &clamped) == 20.0);
  REQUIRE(clamped == 2);
  REQUIRE(interp_log_density(est, 2.0, &clamped) == 20.0);
  REQUIRE(clamped == 2);
}

TEST_CASE("held-out log likelihood sums interpolated target densities") {
  DensityEstimate low;
  low.grid = {0.0, 1.0};
  low.log_density = {std::log(0.25), std::log(0.25)};
  low.raw_log_normalizer = 0.5;
  DensityEstimate high;
  high.grid = {0.0, 1.0};
  high.log_density = {std::log(2.0), std::log(2.0)};
  high.raw_log_normalizer = -1.5;

  TaskDataset task;
  task.ctx_x = {0.0};
  task.ctx_y = {0.0};
  task.tgt_x = {-1.0, 1.0, 1.0};
  task.tgt_y = {0.5, 0.25, 9.0};

  int clamped = 0;
  std::vector<double> norms;
  const double got = heldout_loglik([&](double x) { return x < 0 ? low : high; }, task, &clamped, &norms);
  REQUIRE(got == doctest::Approx(std::log(0.25) + 2.0 * std::log(2.0)).epsilon(1e-14));
  REQUIRE(clamped == 1);  // only y = 9 leaves the grid
  REQUIRE(norms == std::vector<double>({0.5, -1.5, -1.5}));

  TaskDataset no_targets = task;
  no_targets.tgt_x.clear();
  no_targets.tgt_y.clear();
  REQUIRE_THROWS_AS(heldout_loglik([&](double) { return low; }, no_targets, nullptr, nullptr),
                    DomainError);
  TaskDataset wide = task;
  wide.dim_x = 2;
  REQUIRE_THROWS_AS(heldout_loglik([&](double) { return low; }, wide, nullptr, nullptr), DataError);
}

}  // TEST_SUITE
