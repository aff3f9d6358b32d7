#include "metacde/meta.hpp"

#include <algorithm>
#include <cmath>

#include "metacde/cme.hpp"
#include "metacde/errors.hpp"
#include "metacde/kernels.hpp"
#include "metacde/rng.hpp"

namespace metacde {
namespace {

std::vector<int> net_dims(int in, int hidden, int layers, int out) {
  std::vector<int> dims{in};
  for (int i = 0; i < layers; ++i) dims.push_back(hidden);
  dims.push_back(out);
  return dims;
}

void check_cfg(const ModelConfig& cfg) {
  if (cfg.dim_x < 1 || cfg.dim_y < 1) throw DomainError("model config: dims must be >= 1");
  if (cfg.feature_dim < 1 || cfg.hidden < 1 || cfg.hidden_layers < 1)
    throw DomainError("model config: net sizes must be >= 1");
  if (!(cfg.ridge > 0.0)) throw DomainError("model config: ridge must be > 0");
  if (cfg.noise_ratio < 1) throw DomainError("model config: noise_ratio must be >= 1");
}

}  // namespace

MetaModel metacde_init(const ModelConfig& cfg, std::mt19937_64& rng) {
  check_cfg(cfg);
  MetaModel m;
  m.cfg = cfg;
  m.x_net = mlp_init(net_dims(cfg.dim_x, cfg.hidden, cfg.hidden_layers, cfg.feature_dim), rng);
  m.y_net = mlp_init(net_dims(cfg.dim_y, cfg.hidden, cfg.hidden_layers, cfg.feature_dim), rng);
  m.norm_net = mlp_init(net_dims(cfg.feature_dim, cfg.hidden, cfg.hidden_layers, 1), rng);
  return m;
}

void draw_fakes(const TaskDataset& task, const ModelConfig& cfg, std::mt19937_64& rng,
                std::vector<double>& fake_y, std::vector<double>& logpf_true,
                std::vector<double>& logpf_fake) {
  const int t = task.n_tgt();
  const int dy = task.dim_y;
  const int kappa = cfg.noise_ratio;
  if (t < 1) throw DomainError("draw_fakes: task has no target points");
  FakeSampler fs = fake_sampler_fit(task.pooled_y(), dy, cfg.bandwidth);
  fake_y.assign(static_cast<size_t>(t) * kappa * dy, 0.0);
  logpf_true.assign(t, 0.0);
  logpf_fake.assign(static_cast<size_t>(t) * kappa, 0.0);
  for (int j = 0; j < t; ++j) {
    logpf_true[j] = fs.log_pdf(task.tgt_y.data() + static_cast<size_t>(j) * dy);
    for (int c = 0; c < kappa; ++c) {
      double* row = fake_y.data() + (static_cast<size_t>(j) * kappa + c) * dy;
      fs.sample(rng, row);
      logpf_fake[static_cast<size_t>(j) * kappa + c] = fs.log_pdf(row);
    }
  }
}

Tensor episode_scored_loss(const Tensor& embeds, const MlpRef& y_net, const MlpRef& norm_net,
                           const ModelConfig& cfg, const TaskDataset& task,
                           const std::vector<double>& fake_y, const std::vector<double>& logpf_true,
                           const std::vector<double>& logpf_fake) {
  const int t = task.n_tgt();
  const int dy = task.dim_y;
  const int kappa = cfg.noise_ratio;
  if (embeds.rank() != 2 || embeds.rows() != t)
    throw DimensionError("episode_scored_loss: embeds must have one row per target");
  if (static_cast<int>(fake_y.size()) != t * kappa * dy ||
      static_cast<int>(logpf_true.size()) != t ||
      static_cast<int>(logpf_fake.size()) != t * kappa)
    throw DimensionError("episode_scored_loss: fake batch sizes do not match targets x kappa");

  Tensor true_feats = mlp_forward(y_net, tensor_of({t, dy}, task.tgt_y));
  Tensor fake_feats = mlp_forward(y_net, tensor_of({t * kappa, dy}, fake_y));

  Tensor s_true = rowwise_dot(embeds, true_feats);                       // {t}
  Tensor s_fake = rowwise_dot(repeat_rows(embeds, kappa), fake_feats);   // {t*kappa}

  Tensor bias = mlp_forward(norm_net, embeds);  // [t x 1], one bias per target x
  Tensor b_true = reshape(bias, {t});
  Tensor b_fake = reshape(repeat_rows(bias, kappa), {t * kappa});

  const double log_kappa = std::log(static_cast<double>(kappa));
  std::vector<double> off_true(logpf_true), off_fake(logpf_fake);
  for (double& v : off_true) v += log_kappa;
  for (double& v : off_fake) v += log_kappa;

  Tensor true_logits = sub(add(s_true, b_true), tensor_of({t}, off_true));
  Tensor fake_logits = sub(add(s_fake, b_fake), tensor_of({t * kappa}, off_fake));
  return nce_loss(true_logits, reshape(fake_logits, {t, kappa}));
}

Tensor metacde_episode_loss(const MlpRef& x_net, const MlpRef& y_net, const MlpRef& norm_net,
                            const ModelConfig& cfg, const TaskDataset& task,
                            const std::vector<double>& fake_y, const std::vector<double>& logpf_true,
                            const std::vector<double>& logpf_fake) {
  const int n = task.n_ctx(), t = task.n_tgt();
  Tensor ctx_x_feats = mlp_forward(x_net, tensor_of({n, task.dim_x}, task.ctx_x));
  Tensor ctx_y_feats = mlp_forward(y_net, tensor_of({n, task.dim_y}, task.ctx_y));
  CmeOperator op = cme_fit(ctx_x_feats, ctx_y_feats, cfg.ridge);
  Tensor query_feats = mlp_forward(x_net, tensor_of({t, task.dim_x}, task.tgt_x));
  Tensor embeds = cme_embed(op, query_feats);  // one solve for all targets
  return episode_scored_loss(embeds, y_net, norm_net, cfg, task, fake_y, logpf_true, logpf_fake);
}

// ---- episode model adapters --------------------------------------------------

namespace {

class MetaCdeEpisode final : public EpisodeModel {
 public:
  explicit MetaCdeEpisode(MetaModel& m) : m_(m) {}

  std::vector<Tensor*> params() override {
    std::vector<Tensor*> ps = mlp_params(m_.x_net);
    for (Tensor* p : mlp_params(m_.y_net)) ps.push_back(p);
    for (Tensor* p : mlp_params(m_.norm_net)) ps.push_back(p);
    return ps;
  }

  void bind(Tape& tape) override {
    x_ref_ = mlp_bind(m_.x_net, tape);
    y_ref_ = mlp_bind(m_.y_net, tape);
    norm_ref_ = mlp_bind(m_.norm_net, tape);
  }

  Tensor task_loss(const TaskDataset& task, std::mt19937_64& fake_rng) override {
    std::vector<double> fake_y, lp_true, lp_fake;
    draw_fakes(task, m_.cfg, fake_rng, fake_y, lp_true, lp_fake);
    return metacde_episode_loss(x_ref_, y_ref_, norm_ref_, m_.cfg, task, fake_y, lp_true, lp_fake);
  }

  std::vector<const std::vector<double>*> grads(Tape& tape) override {
    std::vector<const std::vector<double>*> gs;
    for (const MlpRef* ref : {&x_ref_, &y_ref_, &norm_ref_})
      for (size_t l = 0; l < ref->weights.size(); ++l) {
        gs.push_back(&tape.grad(ref->weights[l]));
        gs.push_back(&tape.grad(ref->biases[l]));
      }
    return gs;
  }

 private:
  MetaModel& m_;
  MlpRef x_ref_, y_ref_, norm_ref_;
};

}  // namespace

std::unique_ptr<EpisodeModel> make_episode_model(MetaModel& m) {
  return std::make_unique<MetaCdeEpisode>(m);
}

TrainTrace train(EpisodeModel& model, const TaskSource& source, const TrainConfig& cfg,
                 const std::function<void(int step, const TrainTrace&)>& on_step) {
  if (cfg.steps < 1 || cfg.tasks_per_step < 1)
    throw DomainError("train: steps and tasks_per_step must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw DomainError("train: learning rate must be > 0");
  Adam opt(model.params(), AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8});
  TrainTrace trace;
  trace.step_loss.reserve(cfg.steps);
  long long idx = 0;
  for (int step = 0; step < cfg.steps; ++step) {
    Tape tape;
    model.bind(tape);
    Tensor total;
    for (int b = 0; b < cfg.tasks_per_step; ++b, ++idx) {
      TaskDataset task = source(idx);
      std::mt19937_64 fake_rng = seeded_rng(cfg.seed, rng_stream::fakes, static_cast<std::uint64_t>(idx));
      Tensor loss = model.task_loss(task, fake_rng);
      total = b == 0 ? loss : add(total, loss);
    }
    const double step_mean = total.value() / cfg.tasks_per_step;
    if (!std::isfinite(step_mean))
      throw NumericError("training loss is not finite at step " + std::to_string(step));
    trace.step_loss.push_back(step_mean);
    tape.backward(total);
    opt.step(model.grads(tape));
    if (on_step) on_step(step + 1, trace);
  }
  return trace;
}

// ---- prediction ----------------------------------------------------------------

std::vector<double> make_grid(double lo, double hi, int points) {
  if (points < 2) throw DomainError("make_grid: need at least 2 points");
  if (!(hi > lo)) throw DomainError("make_grid: hi must exceed lo");
  std::vector<double> g(points);
  const double step = (hi - lo) / (points - 1);
  for (int i = 0; i < points; ++i) g[i] = lo + step * i;
  return g;
}

std::vector<double> grid_from_values(const std::vector<double>& values, int points) {
  if (values.empty()) throw DomainError("grid_from_values: empty value set");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double range = *mx - *mn;
  const double pad = range > 0.0 ? 0.1 * range : 0.5;
  return make_grid(*mn - pad, *mx + pad, points);
}

DensityEstimate post_normalize(const std::vector<double>& grid, const std::vector<double>& raw_log) {
  if (grid.size() != raw_log.size() || grid.size() < 2)
    throw DimensionError("post_normalize: grid and raw log density sizes differ or too small");
  const double step = (grid.back() - grid.front()) / (static_cast<double>(grid.size()) - 1);
  const auto& kt = kernels::active();
  const int n = static_cast<int>(raw_log.size());
  const double m = kt.max(n, raw_log.data());
  if (!std::isfinite(m)) throw NumericError("post_normalize: raw log density is not finite");
  const double log_integral = m + std::log(kt.sum_exp_shifted(n, raw_log.data(), m)) + std::log(step);
  DensityEstimate est;
  est.grid = grid;
  est.log_density.resize(n);
  for (int i = 0; i < n; ++i) est.log_density[i] = raw_log[i] - log_integral;
  est.raw_log_normalizer = log_integral;
  return est;
}

namespace {

// Score every grid point against one embedding and normalize.
DensityEstimate density_from_embedding(const Tensor& embed, const Mlp& y_net, const Mlp& norm_net,
                                       const std::vector<double>& grid) {
  const int g = static_cast<int>(grid.size());
  Tensor grid_feats = mlp_forward(y_net, tensor_of({g, 1}, grid));
  Tensor scores = matmul(grid_feats, embed, false, true);  // [g x 1]
  const double bias = mlp_forward(norm_net, embed).value();
  std::vector<double> raw(g);
  for (int i = 0; i < g; ++i) raw[i] = scores.at(i) + bias;
  return post_normalize(grid, raw);
}

void check_predict_inputs(const ModelConfig& cfg, const TaskDataset& ctx) {
  if (ctx.n_ctx() < 1) throw DomainError("predict_density: empty context");
  if (ctx.dim_y != 1) throw DataError("predict_density: grid evaluation needs a 1-D response");
  if (ctx.dim_x != cfg.dim_x || ctx.dim_y != cfg.dim_y)
    throw DataError("predict_density: task dims do not match the model");
}

}  // namespace

DensityEstimate predict_density(const MetaModel& m, const TaskDataset& ctx, double x_star,
                                const std::vector<double>& grid) {
  check_predict_inputs(m.cfg, ctx);
  const int n = ctx.n_ctx();
  Tensor ctx_x_feats = mlp_forward(m.x_net, tensor_of({n, 1}, ctx.ctx_x));
  Tensor ctx_y_feats = mlp_forward(m.y_net, tensor_of({n, 1}, ctx.ctx_y));
  CmeOperator op = cme_fit(ctx_x_feats, ctx_y_feats, m.cfg.ridge);
  Tensor star_feats = mlp_forward(m.x_net, tensor_of({1, 1}, {x_star}));
  Tensor embed = cme_embed(op, star_feats);  // [1 x d]
  return density_from_embedding(embed, m.y_net, m.norm_net, grid);
}

double interp_log_density(const DensityEstimate& est, double y, int* clamped) {
  const auto& g = est.grid;
  if (y <= g.front()) {
    if (clamped && y < g.front()) ++*clamped;
    return est.log_density.front();
  }
  if (y >= g.back()) {
    if (clamped && y > g.back()) ++*clamped;
    return est.log_density.back();
  }
  const auto it = std::upper_bound(g.begin(), g.end(), y);
  const size_t i = static_cast<size_t>(it - g.begin());
  const double frac = (y - g[i - 1]) / (g[i] - g[i - 1]);
  return est.log_density[i - 1] * (1.0 - frac) + est.log_density[i] * frac;
}

double heldout_loglik(const std::function<DensityEstimate(double x_star)>& predict,
                      const TaskDataset& task, int* clamped, std::vector<double>* raw_normalizers) {
  if (task.dim_x != 1 || task.dim_y != 1)
    throw DataError("heldout_loglik: grid evaluation needs 1-D x and y");
  if (task.n_tgt() < 1) throw DomainError("heldout_loglik: task has no targets");
  double total = 0.0;
  for (int j = 0; j < task.n_tgt(); ++j) {
    DensityEstimate est = predict(task.tgt_x[j]);
    total += interp_log_density(est, task.tgt_y[j], clamped);
    if (raw_normalizers) raw_normalizers->push_back(est.raw_log_normalizer);
  }
  return total;
}

}  // namespace metacde
