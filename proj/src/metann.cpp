#include <cmath>

#include "metacde/errors.hpp"
#include "metacde/meta.hpp"

namespace metacde {
namespace {

std::vector<int> net_dims(int in, int hidden, int layers, int out) {
  std::vector<int> dims{in};
  for (int i = 0; i < layers; ++i) dims.push_back(hidden);
  dims.push_back(out);
  return dims;
}

Tensor pair_matrix(const TaskDataset& ctx) {
  const int n = ctx.n_ctx();
  return concat_cols(tensor_of({n, ctx.dim_x}, ctx.ctx_x), tensor_of({n, ctx.dim_y}, ctx.ctx_y));
}

template <class Net>
Tensor encode_impl(const Net& enc_net, const Net& proj_net, const Tensor& ctx_pairs,
                   const Tensor& query_x) {
  if (ctx_pairs.rank() != 2 || query_x.rank() != 2)
    throw DimensionError("metann_encode: inputs must be rank-2");
  Tensor encoded = mlp_forward(enc_net, ctx_pairs);             // [n x h]
  Tensor pooled = reshape(mean(encoded, 0), {1, encoded.cols()});
  Tensor tiled = repeat_rows(pooled, query_x.rows());           // [t x h]
  return mlp_forward(proj_net, concat_cols(tiled, query_x));    // [t x d]
}

}  // namespace

MetaNnModel metann_init(const ModelConfig& cfg, std::mt19937_64& rng) {
  if (cfg.dim_x < 1 || cfg.dim_y < 1 || cfg.feature_dim < 1 || cfg.hidden < 1 ||
      cfg.hidden_layers < 1)
    throw DomainError("model config: sizes must be >= 1");
  if (!(cfg.ridge > 0.0)) throw DomainError("model config: ridge must be > 0");
  if (cfg.noise_ratio < 1) throw DomainError("model config: noise_ratio must be >= 1");
  MetaNnModel m;
  m.cfg = cfg;
  m.enc_net = mlp_init(net_dims(cfg.dim_x + cfg.dim_y, cfg.hidden, cfg.hidden_layers, cfg.hidden), rng);
  m.proj_net =
      mlp_init(net_dims(cfg.hidden + cfg.dim_x, cfg.hidden, cfg.hidden_layers, cfg.feature_dim), rng);
  m.y_net = mlp_init(net_dims(cfg.dim_y, cfg.hidden, cfg.hidden_layers, cfg.feature_dim), rng);
  m.norm_net = mlp_init(net_dims(cfg.feature_dim, cfg.hidden, cfg.hidden_layers, 1), rng);
  return m;
}

Tensor metann_encode(const MlpRef& enc_net, const MlpRef& proj_net, const Tensor& ctx_pairs,
                     const Tensor& query_x) {
  return encode_impl(enc_net, proj_net, ctx_pairs, query_x);
}

Tensor metann_episode_loss(const MlpRef& enc_net, const MlpRef& proj_net, const MlpRef& y_net,
                           const MlpRef& norm_net, const ModelConfig& cfg, const TaskDataset& task,
                           const std::vector<double>& fake_y, const std::vector<double>& logpf_true,
                           const std::vector<double>& logpf_fake) {
  Tensor embeds = metann_encode(enc_net, proj_net, pair_matrix(task),
                                tensor_of({task.n_tgt(), task.dim_x}, task.tgt_x));
  return episode_scored_loss(embeds, y_net, norm_net, cfg, task, fake_y, logpf_true, logpf_fake);
}

namespace {

class MetaNnEpisode final : public EpisodeModel {
 public:
  explicit MetaNnEpisode(MetaNnModel& m) : m_(m) {}

  std::vector<Tensor*> params() override {
    std::vector<Tensor*> ps = mlp_params(m_.enc_net);
    for (Tensor* p : mlp_params(m_.proj_net)) ps.push_back(p);
    for (Tensor* p : mlp_params(m_.y_net)) ps.push_back(p);
    for (Tensor* p : mlp_params(m_.norm_net)) ps.push_back(p);
    return ps;
  }

  void bind(Tape& tape) override {
    enc_ref_ = mlp_bind(m_.enc_net, tape);
    proj_ref_ = mlp_bind(m_.proj_net, tape);
    y_ref_ = mlp_bind(m_.y_net, tape);
    norm_ref_ = mlp_bind(m_.norm_net, tape);
  }

  Tensor task_loss(const TaskDataset& task, std::mt19937_64& fake_rng) override {
    std::vector<double> fake_y, lp_true, lp_fake;
    draw_fakes(task, m_.cfg, fake_rng, fake_y, lp_true, lp_fake);
    return metann_episode_loss(enc_ref_, proj_ref_, y_ref_, norm_ref_, m_.cfg, task, fake_y,
                               lp_true, lp_fake);
  }

  std::vector<const std::vector<double>*> grads(Tape& tape) override {
    std::vector<const std::vector<double>*> gs;
    for (const MlpRef* ref : {&enc_ref_, &proj_ref_, &y_ref_, &norm_ref_})
      for (size_t l = 0; l < ref->weights.size(); ++l) {
        gs.push_back(&tape.grad(ref->weights[l]));
        gs.push_back(&tape.grad(ref->biases[l]));
      }
    return gs;
  }

 private:
  MetaNnModel& m_;
  MlpRef enc_ref_, proj_ref_, y_ref_, norm_ref_;
};

// Detached forward needs plain-Mlp refs with the same call shape.
MlpRef detached_ref(const Mlp& net) {
  MlpRef r;
  r.weights = net.weights;
  r.biases = net.biases;
  return r;
}

}  // namespace

std::unique_ptr<EpisodeModel> make_episode_model(MetaNnModel& m) {
  return std::make_unique<MetaNnEpisode>(m);
}

DensityEstimate predict_density(const MetaNnModel& m, const TaskDataset& ctx, double x_star,
                                const std::vector<double>& grid) {
  if (ctx.n_ctx() < 1) throw DomainError("predict_density: empty context");
  if (ctx.dim_y != 1) throw DataError("predict_density: grid evaluation needs a 1-D response");
  if (ctx.dim_x != m.cfg.dim_x || ctx.dim_y != m.cfg.dim_y)
    throw DataError("predict_density: task dims do not match the model");
  Tensor embed = metann_encode(detached_ref(m.enc_net), detached_ref(m.proj_net), pair_matrix(ctx),
                               tensor_of({1, 1}, {x_star}));
  const int g = static_cast<int>(grid.size());
  Tensor grid_feats = mlp_forward(m.y_net, tensor_of({g, 1}, grid));
  Tensor scores = matmul(grid_feats, embed, false, true);
  const double bias = mlp_forward(m.norm_net, embed).value();
  std::vector<double> raw(g);
  for (int i = 0; i < g; ++i) raw[i] = scores.at(i) + bias;
  return post_normalize(grid, raw);
}

}  // namespace metacde
