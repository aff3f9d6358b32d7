#include "metacde/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "metacde/checkpoint.hpp"
#include "metacde/config.hpp"
#include "metacde/datasets.hpp"
#include "metacde/errors.hpp"
#include "metacde/evalbench.hpp"
#include "metacde/kernels.hpp"
#include "metacde/meta.hpp"
#include "metacde/rng.hpp"

namespace fs = std::filesystem;

namespace metacde {
namespace {

void apply_kernel_choice(const std::string& k) {
  if (k == "auto") kernels::select_lane(kernels::Lane::autodetect);
  else if (k == "scalar") kernels::select_lane(kernels::Lane::scalar);
  else kernels::select_lane(kernels::Lane::avx2);
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw DataError("write to '" + path.string() + "' failed");
}

// config echo as CSV/report comment lines, hash first
std::string commented_echo(const Config& c) {
  std::string out = "# config_hash " + config_hash(c) + "\n";
  std::istringstream in(config_echo(c));
  std::string line;
  while (std::getline(in, line)) out += line.empty() ? "#\n" : "# " + line + "\n";
  return out;
}

// ---- task plumbing --------------------------------------------------------------

TaskDataset gen_synth(const Config& c, std::mt19937_64& rng, int n_ctx, int n_tgt,
                      std::string* sidecar) {
  if (c.data.variant == DataVariant::cosine || c.data.variant == DataVariant::cosine_hard) {
    const CosineVariant v =
        c.data.variant == DataVariant::cosine ? CosineVariant::standard : CosineVariant::hard;
    CosineTaskParams p;
    TaskDataset t = make_cosine_task(v, c.data.sigma, n_ctx, n_tgt, rng, &p);
    if (sidecar)
      *sidecar = "variant " + std::string(to_string(c.data.variant)) + "\na " + format_double(p.a) +
                 "\nb " + format_double(p.b) + "\nsigma " + format_double(p.sigma) + "\nn_ctx " +
                 std::to_string(n_ctx) + "\nn_tgt " + std::to_string(n_tgt) + "\n";
    return t;
  }
  if (c.data.variant == DataVariant::gp) {
    GpTaskInfo info;
    TaskDataset t = make_gp_mixture_task(n_ctx, n_tgt, rng, &info);
    if (sidecar)
      *sidecar = "variant gp\nu " + format_double(info.offset) + "\njitter " +
                 format_double(info.jitter_used) + "\nn_ctx " + std::to_string(n_ctx) + "\nn_tgt " +
                 std::to_string(n_tgt) + "\n";
    return t;
  }
  throw ConfigError("task generation needs a synthetic data variant, not csv");
}

// CSV tasks come in as all-context; carve out ctx/tgt by row order and drop
// the rest so sizes are uniform across tasks.
std::vector<TaskDataset> load_and_split_csv(const Config& c, int n_ctx, int n_tgt) {
  std::vector<TaskDataset> raw =
      load_csv_tasks(c.data.csv_path, c.data.x_cols, c.data.y_cols, c.data.task_col);
  std::vector<TaskDataset> out;
  out.reserve(raw.size());
  for (const TaskDataset& t : raw) {
    if (t.n_ctx() < n_ctx + n_tgt)
      throw DataError("csv task '" + t.source + "' has " + std::to_string(t.n_ctx()) +
                      " rows, needs " + std::to_string(n_ctx + n_tgt));
    TaskDataset s;
    s.dim_x = t.dim_x;
    s.dim_y = t.dim_y;
    s.source = t.source;
    s.ctx_x.assign(t.ctx_x.begin(), t.ctx_x.begin() + static_cast<long>(n_ctx) * t.dim_x);
    s.ctx_y.assign(t.ctx_y.begin(), t.ctx_y.begin() + static_cast<long>(n_ctx) * t.dim_y);
    s.tgt_x.assign(t.ctx_x.begin() + static_cast<long>(n_ctx) * t.dim_x,
                   t.ctx_x.begin() + static_cast<long>(n_ctx + n_tgt) * t.dim_x);
    s.tgt_y.assign(t.ctx_y.begin() + static_cast<long>(n_ctx) * t.dim_y,
                   t.ctx_y.begin() + static_cast<long>(n_ctx + n_tgt) * t.dim_y);
    out.push_back(std::move(s));
  }
  return out;
}

TaskSource make_train_source(const Config& c) {
  if (c.data.variant == DataVariant::csv) {
    auto tasks = load_and_split_csv(c, c.train.context_size, c.train.target_size);
    return [tasks](long long i) { return tasks[static_cast<size_t>(i) % tasks.size()]; };
  }
  return [c](long long i) {
    const long long idx = c.data.pool > 0 ? i % c.data.pool : i;
    std::mt19937_64 rng = seeded_rng(c.train.seed, rng_stream::misc, static_cast<std::uint64_t>(idx));
    return gen_synth(c, rng, c.train.context_size, c.train.target_size, nullptr);
  };
}

// Held-out tasks for eval/cv: synthetic variants draw from the eval seed's own
// stream; csv uses the file's tasks (contexts sized for the largest request).
std::vector<TaskDataset> make_eval_tasks(const Config& c, std::uint64_t seed) {
  const int max_ctx = *std::max_element(c.eval.context_sizes.begin(), c.eval.context_sizes.end());
  if (c.data.variant == DataVariant::csv) {
    auto tasks = load_and_split_csv(c, std::max(max_ctx, c.train.context_size), c.train.target_size);
    if (static_cast<int>(tasks.size()) > c.eval.test_tasks) tasks.resize(c.eval.test_tasks);
    return tasks;
  }
  std::vector<TaskDataset> tasks;
  tasks.reserve(c.eval.test_tasks);
  for (int i = 0; i < c.eval.test_tasks; ++i) {
    std::mt19937_64 rng = seeded_rng(seed, rng_stream::eval_tasks, static_cast<std::uint64_t>(i));
    tasks.push_back(gen_synth(c, rng, std::max(max_ctx, c.train.context_size), c.train.target_size, nullptr));
  }
  return tasks;
}

// ---- train ----------------------------------------------------------------------

struct TrainedModel {
  ModelKind kind = ModelKind::metacde;
  MetaModel cde;
  MetaNnModel nn;
  TrainTrace trace;
};

void save_trained(const fs::path& path, const TrainedModel& m) {
  if (m.kind == ModelKind::metacde) save_checkpoint(path.string(), m.cde);
  else save_checkpoint(path.string(), m.nn);
}

TrainedModel train_model(const Config& c, const TaskSource& source, const fs::path& ckpt_dir) {
  TrainedModel out;
  out.kind = c.kind;
  TrainConfig tc;
  tc.steps = c.train.steps;
  tc.tasks_per_step = c.train.tasks_per_step;
  tc.learning_rate = c.train.learning_rate;
  tc.seed = c.train.seed;
  std::function<void(int, const TrainTrace&)> cadence;
  std::mt19937_64 init_rng = seeded_rng(c.train.seed, rng_stream::init);
  if (c.kind == ModelKind::metacde) {
    out.cde = metacde_init(c.model, init_rng);
    if (!ckpt_dir.empty())
      cadence = [&out, &c, &ckpt_dir](int step, const TrainTrace&) {
        if (step % c.train.checkpoint_every == 0 && step != c.train.steps)
          save_checkpoint((ckpt_dir / ("checkpoint_" + std::to_string(step) + ".ckpt")).string(), out.cde);
      };
    auto ep = make_episode_model(out.cde);
    out.trace = train(*ep, source, tc, cadence);
  } else {
    out.nn = metann_init(c.model, init_rng);
    if (!ckpt_dir.empty())
      cadence = [&out, &c, &ckpt_dir](int step, const TrainTrace&) {
        if (step % c.train.checkpoint_every == 0 && step != c.train.steps)
          save_checkpoint((ckpt_dir / ("checkpoint_" + std::to_string(step) + ".ckpt")).string(), out.nn);
      };
    auto ep = make_episode_model(out.nn);
    out.trace = train(*ep, source, tc, cadence);
  }
  return out;
}

std::function<DensityEstimate(double)> predictor(const TrainedModel& m, const TaskDataset& ctx,
                                                 const std::vector<double>& grid) {
  if (m.kind == ModelKind::metacde)
    return [&m, ctx, grid](double xs) { return predict_density(m.cde, ctx, xs, grid); };
  return [&m, ctx, grid](double xs) { return predict_density(m.nn, ctx, xs, grid); };
}

double validation_loglik(const TrainedModel& m, const Config& c,
                         const std::vector<TaskDataset>& val_tasks) {
  double total = 0.0;
  for (const TaskDataset& t : val_tasks) {
    const TaskDataset task = t.with_context(std::min(c.train.context_size, t.n_ctx()));
    const std::vector<double> grid = grid_from_values(task.ctx_y, c.eval.grid_points);
    total += heldout_loglik(predictor(m, task, grid), task);
  }
  return total / static_cast<double>(val_tasks.size());
}

int cmd_train(const std::string& cfg_path, const std::string& out_dir, bool do_cv, int steps_override) {
  Config c = load_config(cfg_path);
  if (steps_override > 0) c.train.steps = steps_override;
  fs::create_directories(out_dir);
  const TaskSource source = make_train_source(c);

  TrainedModel best;
  if (do_cv) {
    // sweep ridge x hidden x bandwidth on held-out tasks; intermediate
    // checkpoints stay off so only the winning model is persisted
    const std::vector<double> bw_cells =
        c.cv.bandwidth.empty() ? std::vector<double>{c.model.bandwidth} : c.cv.bandwidth;
    const std::vector<TaskDataset> val_tasks = make_eval_tasks(c, c.train.seed);
    std::string report = commented_echo(c);
    report += "ridge,hidden,bandwidth,val_mean_loglik,selected\n";
    struct Cell {
      double ridge, bw, loglik;
      int hidden;
    };
    std::vector<Cell> cells;
    double best_ll = 0.0;
    bool have_best = false;
    for (double ridge : c.cv.ridge)
      for (int hidden : c.cv.hidden)
        for (double bw : bw_cells) {
          Config cc = c;
          cc.model.ridge = ridge;
          cc.model.hidden = hidden;
          cc.model.bandwidth = bw;
          TrainedModel m = train_model(cc, source, {});
          const double ll = validation_loglik(m, cc, val_tasks);
          cells.push_back({ridge, bw, ll, hidden});
          if (!have_best || ll > best_ll) {
            best = std::move(m);
            best_ll = ll;
            have_best = true;
            c.model.ridge = ridge;
            c.model.hidden = hidden;
            c.model.bandwidth = bw;
          }
        }
    for (const Cell& cell : cells) {
      const bool sel = cell.ridge == c.model.ridge && cell.hidden == c.model.hidden &&
                       cell.bw == c.model.bandwidth;
      report += format_double(cell.ridge) + "," + std::to_string(cell.hidden) + "," +
                (cell.bw > 0.0 ? format_double(cell.bw) : std::string("silverman")) + "," +
                format_double(cell.loglik) + "," + (sel ? "1" : "0") + "\n";
    }
    report += "# selected ridge=" + format_double(c.model.ridge) +
              " hidden=" + std::to_string(c.model.hidden) + " bandwidth=" +
              (c.model.bandwidth > 0.0 ? format_double(c.model.bandwidth) : std::string("silverman")) +
              "\n";
    write_text_file(fs::path(out_dir) / "cv_report.csv", report);
  } else {
    best = train_model(c, source, out_dir);
  }

  std::string trace = commented_echo(c);
  trace += "step,mean_loss\n";
  for (size_t i = 0; i < best.trace.step_loss.size(); ++i)
    trace += std::to_string(i + 1) + "," + format_double(best.trace.step_loss[i]) + "\n";
  write_text_file(fs::path(out_dir) / "trace.csv", trace);
  save_trained(fs::path(out_dir) / "model.ckpt", best);
  return 0;
}

// ---- eval -----------------------------------------------------------------------

EvalMethod method_for(const LoadedModel& m, const std::string& name) {
  if (m.kind == ModelKind::metacde) {
    EvalMethod em = make_metacde_method(m.cde);
    em.name = name;
    return em;
  }
  EvalMethod em = make_metann_method(m.nn);
  em.name = name;
  return em;
}

std::string sanitize(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

int cmd_eval(const std::string& cfg_path, const std::string& model_path,
             const std::string& model2_path, const std::string& out_dir) {
  Config c = load_config(cfg_path);
  LoadedModel m1 = load_checkpoint(model_path);
  const ModelConfig& mc = m1.kind == ModelKind::metacde ? m1.cde.cfg : m1.nn.cfg;
  if (mc.dim_x != c.model.dim_x || mc.dim_y != c.model.dim_y)
    throw DataError("checkpoint dims (" + std::to_string(mc.dim_x) + "," + std::to_string(mc.dim_y) +
                    ") do not match the data section");

  std::vector<EvalMethod> methods;
  methods.push_back(method_for(m1, to_string(m1.kind)));
  LoadedModel m2;
  if (!model2_path.empty()) {
    m2 = load_checkpoint(model2_path);
    std::string name = to_string(m2.kind);
    if (name == methods[0].name) name += "-2";
    methods.push_back(method_for(m2, name));
  }
  methods.push_back(make_eps_kde_method());
  methods.push_back(make_marginal_kde_method());
  methods.push_back(make_gaussian_fit_method());

  const std::vector<TaskDataset> tasks = make_eval_tasks(c, c.eval.seed);
  fs::create_directories(out_dir);

  std::string summary = commented_echo(c);
  summary += "tasks: " + std::to_string(tasks.size()) + "\n";
  for (int n_ctx : c.eval.context_sizes) {
    BenchmarkReport report = run_benchmark(methods, tasks, n_ctx, c.eval.grid_points);

    std::string csv = commented_echo(c);
    csv += "# context_size " + std::to_string(n_ctx) + "\n";
    csv += "method,task,loglik,clamped,median_abs_log_normalizer,failed,error\n";
    for (size_t mi = 0; mi < report.methods.size(); ++mi)
      for (size_t ti = 0; ti < report.scores[mi].size(); ++ti) {
        const TaskScore& s = report.scores[mi][ti];
        csv += report.methods[mi] + "," + std::to_string(ti) + "," + format_double(s.loglik) + "," +
               std::to_string(s.clamped) + "," + format_double(s.median_abs_log_normalizer) + "," +
               (s.failed ? "1" : "0") + "," + sanitize(s.error) + "\n";
      }
    write_text_file(fs::path(out_dir) / ("eval_ctx" + std::to_string(n_ctx) + ".csv"), csv);

    summary += "\n[context " + std::to_string(n_ctx) + "]\n";
    for (size_t mi = 0; mi < report.methods.size(); ++mi)
      summary += report.methods[mi] + ": mean " + format_double(report.mean_loglik(mi)) + " sd " +
                 format_double(report.stddev_loglik(mi)) + "\n";
    for (size_t mi = 1; mi < report.methods.size(); ++mi) {
      summary += "wilcoxon " + report.methods[0] + " > " + report.methods[mi] + ": ";
      try {
        const WilcoxonResult w = report.compare(0, static_cast<int>(mi));
        summary += "p = " + format_double(w.p_value) + (w.exact ? " (exact" : " (normal approx") +
                   ", n=" + std::to_string(w.n_used) + ")\n";
      } catch (const DomainError&) {
        summary += "insufficient-n\n";
      }
    }
  }
  write_text_file(fs::path(out_dir) / "summary.txt", summary);
  return 0;
}

// ---- density --------------------------------------------------------------------

int cmd_density(const std::string& model_path, const std::string& context_path,
                const std::vector<double>& x_stars, const std::string& out_dir, int grid_points,
                const std::vector<std::string>& x_cols, const std::vector<std::string>& y_cols) {
  LoadedModel m = load_checkpoint(model_path);
  const ModelConfig& mc = m.kind == ModelKind::metacde ? m.cde.cfg : m.nn.cfg;
  std::vector<TaskDataset> tasks = load_csv_tasks(context_path, x_cols, y_cols);
  const TaskDataset& ctx = tasks.front();
  if (ctx.dim_x != mc.dim_x || ctx.dim_y != mc.dim_y)
    throw DataError("context columns do not match the checkpoint dims");
  if (mc.dim_x != 1) throw DataError("density export works on 1-D x");
  const std::vector<double> grid = grid_from_values(ctx.ctx_y, grid_points);
  fs::create_directories(out_dir);

  // effective settings block, hashed into each artifact
  std::string eff = "model " + std::string(to_string(m.kind)) + "\n";
  eff += "dim_x " + std::to_string(mc.dim_x) + "\ndim_y " + std::to_string(mc.dim_y) + "\n";
  eff += "feature_dim " + std::to_string(mc.feature_dim) + "\nhidden " + std::to_string(mc.hidden) +
         "\nlayers " + std::to_string(mc.hidden_layers) + "\nridge " + format_double(mc.ridge) +
         "\nnoise_ratio " + std::to_string(mc.noise_ratio) + "\nbandwidth " +
         format_double(mc.bandwidth) + "\n";
  eff += "context " + context_path + "\ngrid_points " + std::to_string(grid_points) + "\n";

  for (size_t i = 0; i < x_stars.size(); ++i) {
    const double xs = x_stars[i];
    DensityEstimate est;
    if (m.kind == ModelKind::metacde) est = predict_density(m.cde, ctx, xs, grid);
    else est = predict_density(m.nn, ctx, xs, grid);
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(eff + "x_star " + format_double(xs) + "\n")));
    std::string out = "# x_star " + format_double(xs) + "\n";
    out += "# grid_points " + std::to_string(grid_points) + "\n";
    out += "# log_normalizer " + format_double(est.raw_log_normalizer) + "\n";
    out += "# model_kind " + std::string(to_string(m.kind)) + "\n";
    out += std::string("# config_hash ") + hash + "\n";
    out += "y,log_density,density\n";
    for (size_t g = 0; g < grid.size(); ++g)
      out += format_double(grid[g]) + "," + format_double(est.log_density[g]) + "," +
             format_double(std::exp(est.log_density[g])) + "\n";
    write_text_file(fs::path(out_dir) / ("density_" + std::to_string(i) + ".csv"), out);
  }
  return 0;
}

// ---- gen ------------------------------------------------------------------------

int cmd_gen(const std::string& cfg_path, const std::string& out_dir, int count, long long seed_opt) {
  Config c = load_config(cfg_path);
  if (c.data.variant == DataVariant::csv)
    throw ConfigError("gen needs a synthetic data variant, not csv");
  if (c.data.x_cols.size() != 1 || c.data.y_cols.size() != 1)
    throw ConfigError("gen writes 1-D tasks; x_cols and y_cols must each name one column");
  if (count < 1) throw ConfigError("gen: count must be >= 1");
  fs::create_directories(out_dir);
  const std::uint64_t seed = seed_opt >= 0 ? static_cast<std::uint64_t>(seed_opt) : c.eval.seed;

  for (int i = 0; i < count; ++i) {
    std::mt19937_64 rng = seeded_rng(seed, rng_stream::eval_tasks, static_cast<std::uint64_t>(i));
    std::string sidecar;
    TaskDataset t =
        gen_synth(c, rng, c.train.context_size, c.train.target_size, &sidecar);
    std::string csv = c.data.x_cols[0] + "," + c.data.y_cols[0] + "\n";
    for (int r = 0; r < t.n_ctx(); ++r)
      csv += format_double(t.ctx_x[r]) + "," + format_double(t.ctx_y[r]) + "\n";
    for (int r = 0; r < t.n_tgt(); ++r)
      csv += format_double(t.tgt_x[r]) + "," + format_double(t.tgt_y[r]) + "\n";
    write_text_file(fs::path(out_dir) / ("task_" + std::to_string(i) + ".csv"), csv);
    sidecar += "seed " + std::to_string(seed) + "\ntask_index " + std::to_string(i) + "\n";
    sidecar += "config_hash " + config_hash(c) + "\n";
    write_text_file(fs::path(out_dir) / ("task_" + std::to_string(i) + "_params.txt"), sidecar);
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"meta-learned conditional density estimation"};
  app.require_subcommand(1);

  std::string kernels_choice = "auto";
  const auto add_kernels = [&kernels_choice](CLI::App* cmd) {
    cmd->add_option("--kernels", kernels_choice, "compute lane: auto, scalar, avx2")
        ->check(CLI::IsMember({"auto", "scalar", "avx2"}));
  };

  auto* tr = app.add_subcommand("train", "train a model and write checkpoints plus a loss trace");
  std::string tr_config, tr_out;
  bool tr_cv = false;
  int tr_steps = -1;
  tr->add_option("--config", tr_config, "config file")->required();
  tr->add_option("--out", tr_out, "output directory")->required();
  tr->add_flag("--cv", tr_cv, "sweep the [cv] grids, keep the best cell (no cadence checkpoints)");
  tr->add_option("--steps", tr_steps, "override train.steps");
  add_kernels(tr);

  auto* ev = app.add_subcommand("eval", "benchmark a checkpoint against the baselines");
  std::string ev_config, ev_model, ev_model2, ev_out;
  ev->add_option("--config", ev_config, "config file")->required();
  ev->add_option("--model", ev_model, "checkpoint to evaluate")->required();
  ev->add_option("--model2", ev_model2, "second checkpoint (e.g. the ablation)");
  ev->add_option("--out-dir", ev_out, "output directory")->required();
  add_kernels(ev);

  auto* de = app.add_subcommand("density", "export conditional density grids for query points");
  std::string de_model, de_context, de_out;
  std::vector<double> de_xstars;
  int de_grid = 100;
  std::vector<std::string> de_xcols{"x"}, de_ycols{"y"};
  de->add_option("--model", de_model, "checkpoint")->required();
  de->add_option("--context", de_context, "context CSV")->required();
  de->add_option("--x-star", de_xstars, "query x (repeatable)")->required();
  de->add_option("--out-dir", de_out, "output directory")->required();
  de->add_option("--grid-points", de_grid, "grid resolution");
  de->add_option("--x-cols", de_xcols, "context CSV x columns");
  de->add_option("--y-cols", de_ycols, "context CSV y columns");
  add_kernels(de);

  auto* ge = app.add_subcommand("gen", "write synthetic task CSVs with oracle parameter sidecars");
  std::string ge_config, ge_out;
  int ge_count = 1;
  long long ge_seed = -1;
  ge->add_option("--config", ge_config, "config file")->required();
  ge->add_option("--out-dir", ge_out, "output directory")->required();
  ge->add_option("--count", ge_count, "number of tasks")->required();
  ge->add_option("--seed", ge_seed, "task stream seed (default: eval.seed)");
  add_kernels(ge);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    apply_kernel_choice(kernels_choice);
    if (tr->parsed()) return cmd_train(tr_config, tr_out, tr_cv, tr_steps);
    if (ev->parsed()) return cmd_eval(ev_config, ev_model, ev_model2, ev_out);
    if (de->parsed()) return cmd_density(de_model, de_context, de_xstars, de_out, de_grid, de_xcols, de_ycols);
    return cmd_gen(ge_config, ge_out, ge_count, ge_seed);
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const DefinitenessError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace metacde
