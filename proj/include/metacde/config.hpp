#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "metacde/meta.hpp"

namespace metacde {

// Sectioned key-value configuration. Format:
//
//   [section]
//   key = value          # full-line comments only, first non-space char '#'
//   list = 15,30,50
//
// Unknown sections or keys are rejected with the line number; so are duplicate
// keys and values that fail to parse. Every key has a default, so an empty
// document is a valid config. Defaults are the member initializers below.

enum class ModelKind { metacde, metann };
enum class DataVariant { cosine, cosine_hard, gp, csv };

struct TrainSection {
  int steps = 1250;
  int tasks_per_step = 16;
  int context_size = 50;
  int target_size = 80;
  double learning_rate = 1e-3;
  unsigned long long seed = 1;
  int checkpoint_every = 500;
};

struct DataSection {
  DataVariant variant = DataVariant::cosine;
  double sigma = 0.1;    // observation noise for the cosine variants
  int pool = 0;          // 0 streams fresh tasks; >0 cycles a fixed pool
  std::string csv_path;  // required when variant = csv
  std::vector<std::string> x_cols{"x"};  // CSV column names
  std::vector<std::string> y_cols{"y"};
  std::string task_col;  // empty: whole file is one task
};

struct EvalSection {
  int grid_points = 100;
  int test_tasks = 30;
  std::vector<int> context_sizes{15, 30, 50};
  unsigned long long seed = 99;
};

// Hyperparameter sweep grids for `train --cv`. An empty bandwidth list keeps
// the model's bandwidth policy out of the sweep.
struct CvSection {
  std::vector<double> ridge{1.0, 0.1, 0.01};
  std::vector<int> hidden{32, 64};
  std::vector<double> bandwidth;
};

struct Config {
  ModelKind kind = ModelKind::metacde;
  ModelConfig model;  // dims filled in from the data section during validation
  TrainSection train;
  DataSection data;
  EvalSection eval;
  CvSection cv;
};

// Parse + validate. Throws ConfigError naming the line for syntax problems and
// the key for semantic ones.
Config parse_config_text(const std::string& text);
Config load_config(const std::string& path);

// Canonical text form: every section, every key, fixed order, effective
// values. Parses back to an equal config; hashed into output artifacts.
std::string config_echo(const Config& cfg);

std::uint64_t fnv1a64(std::string_view bytes);

// 16 lowercase hex digits of fnv1a64(config_echo(cfg)).
std::string config_hash(const Config& cfg);

// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double v);

const char* to_string(ModelKind k);
const char* to_string(DataVariant v);

}  // namespace metacde
