#pragma once

#include <functional>
#include <memory>
#include <random>
#include <vector>

#include "metacde/datasets.hpp"
#include "metacde/mlp.hpp"
#include "metacde/nce.hpp"
#include "metacde/tensor.hpp"

namespace metacde {

struct ModelConfig {
  int dim_x = 1, dim_y = 1;
  int feature_dim = 32;
  int hidden = 64;
  int hidden_layers = 3;
  double ridge = 0.1;
  int noise_ratio = 10;     // fakes per real pair
  double bandwidth = 0.0;   // <= 0: Silverman per task
};

// Conditional density estimator scored through a conditional mean embedding:
// feature nets for x and y, a normalization net fed the embedding.
struct MetaModel {
  ModelConfig cfg;
  Mlp x_net, y_net, norm_net;
};
MetaModel metacde_init(const ModelConfig& cfg, std::mt19937_64& rng);

// Ablation: the embedding comes from a permutation-invariant encoder (encode
// each context pair, average, concatenate the query x, project) instead of
// the CME solve. Scoring/normalization tail identical to MetaModel.
struct MetaNnModel {
  ModelConfig cfg;
  Mlp enc_net, proj_net, y_net, norm_net;
};
MetaNnModel metann_init(const ModelConfig& cfg, std::mt19937_64& rng);

// Permutation-invariant context embedding for query points: encode each
// context pair, mean-pool, concatenate the query x, project. Taped when the
// refs are taped, eager otherwise.
Tensor metann_encode(const MlpRef& enc_net, const MlpRef& proj_net, const Tensor& ctx_pairs,
                     const Tensor& query_x);  // [n x dx+dy], [t x dx] -> [t x feature_dim]

// ---- training ---------------------------------------------------------------

struct TrainConfig {
  int steps = 1250;
  int tasks_per_step = 16;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
};

// index -> task; the trainer asks for indices 0, 1, 2, ... so a fixed pool
// cycles by modulus and a streamed source generates fresh tasks per index.
using TaskSource = std::function<TaskDataset(long long index)>;

struct TrainTrace {
  std::vector<double> step_loss;  // mean per-task loss at each step
};

// One model kind bound to the training loop: bind() registers parameters on
// the step's tape, task_loss() builds one task's loss on it.
class EpisodeModel {
 public:
  virtual ~EpisodeModel() = default;
  virtual std::vector<Tensor*> params() = 0;
  virtual void bind(Tape& tape) = 0;
  virtual Tensor task_loss(const TaskDataset& task, std::mt19937_64& fake_rng) = 0;
  virtual std::vector<const std::vector<double>*> grads(Tape& tape) = 0;
};
std::unique_ptr<EpisodeModel> make_episode_model(MetaModel& m);
std::unique_ptr<EpisodeModel> make_episode_model(MetaNnModel& m);

// Streamed meta-training: per step, sum the losses of tasks_per_step tasks on
// a fresh tape, backprop, one Adam step. Throws NumericError naming the step
// if the loss leaves the reals. on_step (when set) runs after each optimizer
// step with the 1-based step index; checkpoint cadence hangs off it.
TrainTrace train(EpisodeModel& model, const TaskSource& source, const TrainConfig& cfg,
                 const std::function<void(int step, const TrainTrace&)>& on_step = {});

// Deterministic-fakes episode losses; the ones the trainer draws for, and the
// finite-difference tests pin down. fake_y is [t*kappa x dy] target-major
// (kappa consecutive rows per target), logpf_* are fake-density logs for the
// true/fake rows. The nets must be bound to one tape (or all detached).
Tensor metacde_episode_loss(const MlpRef& x_net, const MlpRef& y_net, const MlpRef& norm_net,
                            const ModelConfig& cfg, const TaskDataset& task,
                            const std::vector<double>& fake_y, const std::vector<double>& logpf_true,
                            const std::vector<double>& logpf_fake);
Tensor metann_episode_loss(const MlpRef& enc_net, const MlpRef& proj_net, const MlpRef& y_net,
                           const MlpRef& norm_net, const ModelConfig& cfg, const TaskDataset& task,
                           const std::vector<double>& fake_y, const std::vector<double>& logpf_true,
                           const std::vector<double>& logpf_fake);

// Scoring/normalization tail shared by both model kinds: NCE loss from target
// embeddings. embeds is [t x feature_dim], one row per target point.
Tensor episode_scored_loss(const Tensor& embeds, const MlpRef& y_net, const MlpRef& norm_net,
                           const ModelConfig& cfg, const TaskDataset& task,
                           const std::vector<double>& fake_y, const std::vector<double>& logpf_true,
                           const std::vector<double>& logpf_fake);

// The trainer's fake batch for one task: kappa draws per target plus the fake
// log densities at true and fake points, in the layout episode losses expect.
void draw_fakes(const TaskDataset& task, const ModelConfig& cfg, std::mt19937_64& rng,
                std::vector<double>& fake_y, std::vector<double>& logpf_true,
                std::vector<double>& logpf_fake);

// ---- prediction ---------------------------------------------------------------

// Normalized conditional density on a fixed y grid. raw_log_normalizer is the
// log of the Riemann integral of the unnormalized density; values near 0 mean
// the learned normalizer b already put the density on scale.
struct DensityEstimate {
  std::vector<double> grid;
  std::vector<double> log_density;
  double raw_log_normalizer = 0.0;
};

// 100-point grid spanning [lo, hi]; make_grid pads a data range by 10% a side.
std::vector<double> make_grid(double lo, double hi, int points);
std::vector<double> grid_from_values(const std::vector<double>& values, int points);

// Renormalize raw log-density values on a grid (Riemann sum with the grid
// step). Returns the estimate and records log of the raw integral.
DensityEstimate post_normalize(const std::vector<double>& grid, const std::vector<double>& raw_log);

// p(y | x_star) for a 1-D response given this context. dim_y must be 1.
DensityEstimate predict_density(const MetaModel& m, const TaskDataset& ctx, double x_star,
                                const std::vector<double>& grid);
DensityEstimate predict_density(const MetaNnModel& m, const TaskDataset& ctx, double x_star,
                                const std::vector<double>& grid);

// log density at y by linear interpolation on the grid; outside the grid the
// edge value is used and *clamped is bumped when given.
double interp_log_density(const DensityEstimate& est, double y, int* clamped = nullptr);

// Sum of interpolated log densities of a task's targets under per-target
// estimates from `predict`.
double heldout_loglik(const std::function<DensityEstimate(double x_star)>& predict,
                      const TaskDataset& task, int* clamped = nullptr,
                      std::vector<double>* raw_normalizers = nullptr);

}  // namespace metacde
