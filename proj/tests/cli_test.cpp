#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("metacde_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
  std::string sub(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_cli(const std::string& args, std::string* output = nullptr) {
  static int counter = 0;
  const std::string log =
      (fs::temp_directory_path() /
       ("metacde_cli_log_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + ".txt"))
          .string();
  const std::string cmd = std::string(METACDE_CLI_PATH) + " " + args + " >" + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (output) *output = read_text(log);
  std::error_code ec;
  fs::remove(log, ec);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Tiny-but-real settings so every command finishes in well under a second.
// extra opens its own sections; the base text stops inside [train].
std::string tiny_config(const std::string& extra = "") {
  return
      "[model]\n"
      "feature_dim = 4\n"
      "hidden = 6\n"
      "layers = 2\n"
      "noise_ratio = 2\n"
      "[train]\n"
      "steps = 6\n"
      "tasks_per_step = 2\n"
      "context_size = 8\n"
      "target_size = 6\n"
      "seed = 3\n" +
      extra;
}

const char* kSmallEval = "[eval]\ngrid_points = 32\ntest_tasks = 6\ncontext_sizes = 5,9\n";

std::vector<std::string> data_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') out.push_back(line);
  return out;
}

double sidecar_value(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (line.rfind(key + " ", 0) == 0) return std::strtod(line.c_str() + key.size() + 1, nullptr);
  return NAN;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("train writes a checkpoint and a full loss trace, deterministically") {
  TempDir dir;
  write_text(dir.sub("cfg.ini"), tiny_config());

  REQUIRE(run_cli("train --config " + dir.sub("cfg.ini") + " --out " + dir.sub("run1")) == 0);
  REQUIRE(fs::exists(dir.path / "run1" / "model.ckpt"));
  REQUIRE(fs::exists(dir.path / "run1" / "trace.csv"));

  const std::string trace = read_text(dir.sub("run1/trace.csv"));
  CHECK(trace.rfind("# config_hash ", 0) == 0);
  const auto rows = data_lines(trace);
  REQUIRE(rows.size() == 7);  // header + one row per step
  CHECK(rows[0] == "step,mean_loss");
  CHECK(rows[1].rfind("1,", 0) == 0);
  CHECK(rows[6].rfind("6,", 0) == 0);
  for (size_t i = 1; i < rows.size(); ++i) {
    const double loss = std::strtod(rows[i].c_str() + rows[i].find(',') + 1, nullptr);
    CHECK(std::isfinite(loss));
  }

  REQUIRE(run_cli("train --config " + dir.sub("cfg.ini") + " --out " + dir.sub("run2")) == 0);
  CHECK(read_text(dir.sub("run1/model.ckpt")) == read_text(dir.sub("run2/model.ckpt")));
}

TEST_CASE("--steps overrides the config") {
  TempDir dir;
  write_text(dir.sub("cfg.ini"), tiny_config());
  REQUIRE(run_cli("train --config " + dir.sub("cfg.ini") + " --out " + dir.sub("out") + " --steps 1") == 0);
  CHECK(data_lines(read_text(dir.sub("out/trace.csv"))).size() == 2);
}

TEST_CASE("checkpoint cadence skips the final step") {
  TempDir dir;
  write_text(dir.sub("cfg.ini"), "[train]\nsteps = 4\ntasks_per_step = 2\ncontext_size = 8\n"
                                 "target_size = 6\ncheckpoint_every = 2\n"
                                 "[model]\nfeature_dim = 4\nhidden = 6\nlayers = 2\nnoise_ratio = 2\n");
  REQUIRE(run_cli("train --config " + dir.sub("cfg.ini") + " --out " + dir.sub("out")) == 0);
  CHECK(fs::exists(dir.path / "out" / "checkpoint_2.ckpt"));
  CHECK(!fs::exists(dir.path / "out" / "checkpoint_4.ckpt"));
  CHECK(fs::exists(dir.path / "out" / "model.ckpt"));
}

TEST_CASE("usage and config problems exit 2") {
  TempDir dir;
  write_text(dir.sub("bad.ini"), "[train]\nsteps = 0\n");
  std::string err;
  CHECK(run_cli("train --config " + dir.sub("bad.ini") + " --out " + dir.sub("out"), &err) == 2);
  CHECK(err.find("train.steps") != std::string::npos);
  CHECK(run_cli("train --config " + dir.sub("missing.ini") + " --out " + dir.sub("out")) == 2);
  CHECK(run_cli("train --config " + dir.sub("bad.ini")) == 2);   // missing required --out
  CHECK(run_cli("") == 2);                                        // subcommand required
  CHECK(run_cli("--help") == 0);
  write_text(dir.sub("ok.ini"), tiny_config());
  CHECK(run_cli("train --config " + dir.sub("ok.ini") + " --out " + dir.sub("out") +
                " --steps 1 --kernels turbo") == 2);
  CHECK(run_cli("train --config " + dir.sub("ok.ini") + " --out " + dir.sub("out") +
                " --steps 1 --kernels scalar") == 0);
}

TEST_CASE("eval benchmarks the checkpoint against the baselines") {
  TempDir dir;
  write_text(dir.sub("cfg.ini"), tiny_config(kSmallEval));
  write_text(dir.sub("cfg_nn.ini"), "[model]\nkind = metann\nfeature_dim = 4\nhidden = 6\nlayers = 2\n"
                                    "noise_ratio = 2\n[train]\nsteps = 6\ntasks_per_step = 2\n"
                                    "context_size = 8\ntarget_size = 6\nseed = 3\n");
  REQUIRE(run_cli("train --config " + dir.sub("cfg.ini") + " --out " + dir.sub("m1")) == 0);
  REQUIRE(run_cli("train --config " + dir.sub("cfg_nn.ini") + " --out " + dir.sub("m2")) == 0);

  REQUIRE(run_cli("eval --config " + dir.sub("cfg.ini") + " --model " + dir.sub("m1/model.ckpt") +
                  " --model2 " + dir.sub("m2/model.ckpt") + " --out-dir " + dir.sub("ev")) == 0);
  REQUIRE(fs::exists(dir.path / "ev" / "eval_ctx5.csv"));
  REQUIRE(fs::exists(dir.path / "ev" / "eval_ctx9.csv"));
  REQUIRE(fs::exists(dir.path / "ev" / "summary.txt"));

  const auto rows = data_lines(read_text(dir.sub("ev/eval_ctx5.csv")));
  REQUIRE(rows.size() == 1 + 5 * 6);  // header + 5 methods x 6 tasks
  CHECK(rows[0] == "method,task,loglik,clamped,median_abs_log_normalizer,failed,error");
  CHECK(rows[1].rfind("metacde,0,", 0) == 0);

  const std::string summary = read_text(dir.sub("ev/summary.txt"));
  CHECK(summary.find("tasks: 6") != std::string::npos);
  CHECK(summary.find("[context 5]") != std::string::npos);
  CHECK(summary.find("[context 9]") != std::string::npos);
  for (const char* name : {"metacde", "metann", "eps-kde", "marginal-kde", "gaussian-fit"})
    CHECK(summary.find(std::string(name) + ": mean ") != std::string::npos);
  CHECK(summary.find("wilcoxon metacde > metann: p = ") != std::string::npos);
  CHECK(summary.find("(exact, n=6)") != std::string::npos);
  CHECK(summary.find("insufficient-n") == std::string::npos);

  CHECK(run_cli("eval --config " + dir.sub("cfg.ini") + " --model " + dir.sub("nope.ckpt") +
                " --out-dir " + dir.sub("ev2")) == 2);
}

TEST_CASE("a single eval task cannot support the signed-rank test") {
  TempDir dir;
  write_text(dir.sub("cfg.ini"),
             tiny_config("[eval]\ngrid_points = 32\ntest_tasks = 1\ncontext_sizes = 5\n"));
  REQUIRE(run_cli("train --config " + dir.sub("cfg.ini") + " --out " + dir.sub("m") + " --steps 2") == 0);
  REQUIRE(run_cli("eval --config " + dir.sub("cfg.ini") + " --model " + dir.sub("m/model.ckpt") +
                  " --out-dir " + dir.sub("ev")) == 0);
  const std::string summary = read_text(dir.sub("ev/summary.txt"));
  CHECK(summary.find("insufficient-n") != std::string::npos);
}

TEST_CASE("eval rejects a checkpoint whose dims do not match the data") {
  TempDir dir;
  write_text(dir.sub("cfg.ini"), tiny_config());
  REQUIRE(run_cli("train --config " + dir.sub("cfg.ini") + " --out " + dir.sub("m") + " --steps 1") == 0);
  write_text(dir.sub("cfg2.ini"),
             "[data]\nvariant = csv\ncsv_path = unused.csv\nx_cols = a,b\ny_cols = c\n");
  std::string err;
  CHECK(run_cli("eval --config " + dir.sub("cfg2.ini") + " --model " + dir.sub("m/model.ckpt") +
                " --out-dir " + dir.sub("ev"), &err) == 2);
  CHECK(err.find("checkpoint dims") != std::string::npos);
}

TEST_CASE("density exports normalized grids per query point") {
  TempDir dir;
  write_text(dir.sub("cfg.ini"), tiny_config());
  REQUIRE(run_cli("train --config " + dir.sub("cfg.ini") + " --out " + dir.sub("m")) == 0);

  std::string ctx = "x,y\n";
  for (int i = 0; i < 20; ++i)
    ctx += std::to_string(std::cos(0.7 * i)) + "," + std::to_string(i / 20.0) + "\n";
  write_text(dir.sub("ctx.csv"), ctx);

  REQUIRE(run_cli("density --model " + dir.sub("m/model.ckpt") + " --context " + dir.sub("ctx.csv") +
                  " --x-star 0.2 --x-star 0.7 --out-dir " + dir.sub("d") + " --grid-points 64") == 0);
  std::vector<std::string> hashes;
  for (int i = 0; i < 2; ++i) {
    const std::string name = "d/density_" + std::to_string(i) + ".csv";
    REQUIRE(fs::exists(dir.path / ("d") / ("density_" + std::to_string(i) + ".csv")));
    const std::string text = read_text(dir.sub(name));
    CHECK(text.find("# x_star ") != std::string::npos);
    CHECK(text.find("# model_kind metacde") != std::string::npos);
    const size_t hash_at = text.find("# config_hash ");
    REQUIRE(hash_at != std::string::npos);
    hashes.push_back(text.substr(hash_at + 14, 16));

    const auto rows = data_lines(text);
    REQUIRE(rows.size() == 1 + 64);
    CHECK(rows[0] == "y,log_density,density");
    std::vector<double> grid, density;
    for (size_t r = 1; r < rows.size(); ++r) {
      const char* p = rows[r].c_str();
      char* end = nullptr;
      grid.push_back(std::strtod(p, &end));
      REQUIRE(*end == ',');
      std::strtod(end + 1, &end);  // skip log_density
      REQUIRE(*end == ',');
      density.push_back(std::strtod(end + 1, nullptr));
    }
    const double step = grid[1] - grid[0];
    double integral = 0.0;
    for (double d : density) integral += d * step;
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK(hashes[0] != hashes[1]);  // the query point is part of the artifact hash

  CHECK(run_cli("density --model " + dir.sub("nope.ckpt") + " --context " + dir.sub("ctx.csv") +
                " --x-star 0.2 --out-dir " + dir.sub("d2")) == 2);
}

TEST_CASE("gen writes task CSVs with oracle sidecars, reproducibly") {
  TempDir dir;
  write_text(dir.sub("cfg.ini"), tiny_config());
  REQUIRE(run_cli("gen --config " + dir.sub("cfg.ini") + " --out-dir " + dir.sub("g1") +
                  " --count 3 --seed 5") == 0);
  for (int i = 0; i < 3; ++i) {
    REQUIRE(fs::exists(dir.path / "g1" / ("task_" + std::to_string(i) + ".csv")));
    REQUIRE(fs::exists(dir.path / "g1" / ("task_" + std::to_string(i) + "_params.txt")));
  }
  const auto rows = data_lines(read_text(dir.sub("g1/task_0.csv")));
  REQUIRE(rows.size() == size_t(1 + 8 + 6));  // header + context + target rows
  CHECK(rows[0] == "x,y");

  const std::string sidecar = read_text(dir.sub("g1/task_0_params.txt"));
  CHECK(sidecar.find("variant cosine\n") != std::string::npos);
  CHECK(sidecar.find("seed 5\n") != std::string::npos);
  CHECK(sidecar.find("task_index 0\n") != std::string::npos);
  CHECK(sidecar.find("config_hash ") != std::string::npos);
  const double a = sidecar_value(sidecar, "a");
  CHECK(a >= 8.0);
  CHECK(a <= 12.0);
  CHECK(sidecar_value(sidecar, "sigma") == 0.1);

  REQUIRE(run_cli("gen --config " + dir.sub("cfg.ini") + " --out-dir " + dir.sub("g2") +
                  " --count 3 --seed 5") == 0);
  CHECK(read_text(dir.sub("g1/task_1.csv")) == read_text(dir.sub("g2/task_1.csv")));
  REQUIRE(run_cli("gen --config " + dir.sub("cfg.ini") + " --out-dir " + dir.sub("g3") +
                  " --count 1 --seed 6") == 0);
  CHECK(read_text(dir.sub("g1/task_0.csv")) != read_text(dir.sub("g3/task_0.csv")));
}

TEST_CASE("cross-validation sweeps the grid and reports the winner") {
  TempDir dir;
  write_text(dir.sub("cfg.ini"),
             tiny_config("[eval]\ngrid_points = 32\ntest_tasks = 5\ncontext_sizes = 5\n"
                         "[cv]\nridge = 0.5,0.05\nhidden = 6\n"));
  REQUIRE(run_cli("train --config " + dir.sub("cfg.ini") + " --out " + dir.sub("out") +
                  " --cv --steps 4") == 0);
  REQUIRE(fs::exists(dir.path / "out" / "cv_report.csv"));
  REQUIRE(fs::exists(dir.path / "out" / "model.ckpt"));
  CHECK(!fs::exists(dir.path / "out" / "checkpoint_2.ckpt"));

  const std::string report = read_text(dir.sub("out/cv_report.csv"));
  CHECK(report.find("# selected ridge=") != std::string::npos);
  const auto rows = data_lines(report);
  REQUIRE(rows.size() == 1 + 2);  // header + one row per cell
  CHECK(rows[0] == "ridge,hidden,bandwidth,val_mean_loglik,selected");
  int selected = 0;
  for (size_t r = 1; r < rows.size(); ++r)
    if (rows[r].size() >= 2 && rows[r].substr(rows[r].size() - 2) == ",1") ++selected;
  CHECK(selected == 1);
}

TEST_CASE("a numeric blowup during training exits 3") {
  TempDir dir;
  std::string csv = "x,y\n";
  for (int i = 0; i < 8; ++i)
    csv += std::to_string(i) + "," + (i % 2 ? "-1e308" : "1e308") + "\n";
  write_text(dir.sub("poison.csv"), csv);
  write_text(dir.sub("cfg.ini"),
             "[model]\nfeature_dim = 4\nhidden = 6\nlayers = 2\nnoise_ratio = 2\n"
             "[train]\nsteps = 2\ntasks_per_step = 1\ncontext_size = 4\ntarget_size = 4\n"
             "[data]\nvariant = csv\ncsv_path = " + dir.sub("poison.csv") + "\n");
  std::string err;
  CHECK(run_cli("train --config " + dir.sub("cfg.ini") + " --out " + dir.sub("out"), &err) == 3);
  CHECK(err.find("not finite") != std::string::npos);
}

}  // TEST_SUITE
