#include "metacde/config.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "metacde/errors.hpp"

namespace metacde {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad(int line, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

double parse_double(std::string_view v, int line) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad(line, "cannot parse number '" + std::string(v) + "'");
  return out;
}

long long parse_ll(std::string_view v, int line) {
  long long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad(line, "cannot parse integer '" + std::string(v) + "'");
  return out;
}

int parse_int(std::string_view v, int line) {
  long long out = parse_ll(v, line);
  if (out < -(1LL << 31) || out >= (1LL << 31)) bad(line, "integer out of range '" + std::string(v) + "'");
  return static_cast<int>(out);
}

std::string parse_name(std::string_view v, int line) {
  (void)line;
  return std::string(v);
}

unsigned long long parse_ull(std::string_view v, int line) {
  unsigned long long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad(line, "cannot parse seed '" + std::string(v) + "'");
  return out;
}

template <typename T, typename F>
std::vector<T> parse_list(std::string_view v, int line, F parse_one) {
  std::vector<T> out;
  if (trim(v).empty()) return out;
  size_t start = 0;
  while (true) {
    size_t comma = v.find(',', start);
    std::string_view item = trim(v.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (item.empty()) bad(line, "empty list element");
    out.push_back(parse_one(item, line));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void semantic(const std::string& what) { throw ConfigError("config: " + what); }

void validate(Config& c) {
  if (c.model.feature_dim < 1) semantic("model.feature_dim must be >= 1");
  if (c.model.hidden < 1) semantic("model.hidden must be >= 1");
  if (c.model.hidden_layers < 1) semantic("model.layers must be >= 1");
  if (!(c.model.ridge > 0.0)) semantic("model.ridge must be > 0");
  if (c.model.noise_ratio < 1) semantic("model.noise_ratio must be >= 1");
  if (c.model.bandwidth < 0.0) semantic("model.bandwidth must be a positive number or 'silverman'");
  if (c.train.steps < 1) semantic("train.steps must be >= 1");
  if (c.train.tasks_per_step < 1) semantic("train.tasks_per_step must be >= 1");
  if (c.train.context_size < 1) semantic("train.context_size must be >= 1");
  if (c.train.target_size < 1) semantic("train.target_size must be >= 1");
  if (!(c.train.learning_rate > 0.0)) semantic("train.learning_rate must be > 0");
  if (c.train.checkpoint_every < 1) semantic("train.checkpoint_every must be >= 1");
  if (!(c.data.sigma > 0.0)) semantic("data.sigma must be > 0");
  if (c.data.pool < 0) semantic("data.pool must be >= 0");
  if (c.eval.grid_points < 2) semantic("eval.grid_points must be >= 2");
  if (c.eval.test_tasks < 1) semantic("eval.test_tasks must be >= 1");
  if (c.eval.context_sizes.empty()) semantic("eval.context_sizes must not be empty");
  for (int n : c.eval.context_sizes)
    if (n < 1) semantic("eval.context_sizes entries must be >= 1");
  for (double r : c.cv.ridge)
    if (!(r > 0.0)) semantic("cv.ridge entries must be > 0");
  for (int h : c.cv.hidden)
    if (h < 1) semantic("cv.hidden entries must be >= 1");
  for (double b : c.cv.bandwidth)
    if (!(b > 0.0)) semantic("cv.bandwidth entries must be > 0");
  if (c.cv.ridge.empty() || c.cv.hidden.empty()) semantic("cv.ridge and cv.hidden must not be empty");

  if (c.data.variant == DataVariant::csv) {
    if (c.data.csv_path.empty()) semantic("data.csv_path is required when data.variant = csv");
    if (c.data.x_cols.empty() || c.data.y_cols.empty()) semantic("data.x_cols and data.y_cols must not be empty");
    c.model.dim_x = static_cast<int>(c.data.x_cols.size());
    c.model.dim_y = static_cast<int>(c.data.y_cols.size());
  } else {
    c.model.dim_x = 1;
    c.model.dim_y = 1;
  }
}

}  // namespace

const char* to_string(ModelKind k) { return k == ModelKind::metacde ? "metacde" : "metann"; }

const char* to_string(DataVariant v) {
  switch (v) {
    case DataVariant::cosine: return "cosine";
    case DataVariant::cosine_hard: return "cosine-hard";
    case DataVariant::gp: return "gp";
    default: return "csv";
  }
}

Config parse_config_text(const std::string& text) {
  Config c;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::set<std::string> seen;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') bad(line_no, "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section != "model" && section != "train" && section != "data" && section != "eval" &&
          section != "cv")
        bad(line_no, "unknown section [" + section + "]");
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string_view::npos) bad(line_no, "expected 'key = value'");
    if (section.empty()) bad(line_no, "key before any [section]");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) bad(line_no, "empty key");
    if (!seen.insert(section + "." + key).second) bad(line_no, "duplicate key '" + key + "'");

    bool known = true;
    if (section == "model") {
      if (key == "kind") {
        if (value == "metacde") c.kind = ModelKind::metacde;
        else if (value == "metann") c.kind = ModelKind::metann;
        else bad(line_no, "model.kind must be metacde or metann");
      } else if (key == "feature_dim") c.model.feature_dim = parse_int(value, line_no);
      else if (key == "hidden") c.model.hidden = parse_int(value, line_no);
      else if (key == "layers") c.model.hidden_layers = parse_int(value, line_no);
      else if (key == "ridge") c.model.ridge = parse_double(value, line_no);
      else if (key == "noise_ratio") c.model.noise_ratio = parse_int(value, line_no);
      else if (key == "bandwidth") c.model.bandwidth = value == "silverman" ? 0.0 : parse_double(value, line_no);
      else known = false;
    } else if (section == "train") {
      if (key == "steps") c.train.steps = parse_int(value, line_no);
      else if (key == "tasks_per_step") c.train.tasks_per_step = parse_int(value, line_no);
      else if (key == "context_size") c.train.context_size = parse_int(value, line_no);
      else if (key == "target_size") c.train.target_size = parse_int(value, line_no);
      else if (key == "learning_rate") c.train.learning_rate = parse_double(value, line_no);
      else if (key == "seed") c.train.seed = parse_ull(value, line_no);
      else if (key == "checkpoint_every") c.train.checkpoint_every = parse_int(value, line_no);
      else known = false;
    } else if (section == "data") {
      if (key == "variant") {
        if (value == "cosine") c.data.variant = DataVariant::cosine;
        else if (value == "cosine-hard") c.data.variant = DataVariant::cosine_hard;
        else if (value == "gp") c.data.variant = DataVariant::gp;
        else if (value == "csv") c.data.variant = DataVariant::csv;
        else bad(line_no, "data.variant must be cosine, cosine-hard, gp, or csv");
      } else if (key == "sigma") c.data.sigma = parse_double(value, line_no);
      else if (key == "pool") c.data.pool = parse_int(value, line_no);
      else if (key == "csv_path") c.data.csv_path = std::string(value);
      else if (key == "x_cols") c.data.x_cols = parse_list<std::string>(value, line_no, parse_name);
      else if (key == "y_cols") c.data.y_cols = parse_list<std::string>(value, line_no, parse_name);
      else if (key == "task_col") c.data.task_col = std::string(value);
      else known = false;
    } else if (section == "eval") {
      if (key == "grid_points") c.eval.grid_points = parse_int(value, line_no);
      else if (key == "test_tasks") c.eval.test_tasks = parse_int(value, line_no);
      else if (key == "context_sizes") c.eval.context_sizes = parse_list<int>(value, line_no, parse_int);
      else if (key == "seed") c.eval.seed = parse_ull(value, line_no);
      else known = false;
    } else {  // cv
      if (key == "ridge") c.cv.ridge = parse_list<double>(value, line_no, parse_double);
      else if (key == "hidden") c.cv.hidden = parse_list<int>(value, line_no, parse_int);
      else if (key == "bandwidth") c.cv.bandwidth = parse_list<double>(value, line_no, parse_double);
      else known = false;
    }
    if (!known) bad(line_no, "unknown key '" + key + "' in section [" + section + "]");
  }
  validate(c);
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string format_double(double v) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;
}

namespace {

template <typename T, typename F>
std::string join(const std::vector<T>& v, F one) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += one(v[i]);
  }
  return out;
}

std::string fmt_int(int v) { return std::to_string(v); }
std::string fmt_name(const std::string& v) { return v; }

}  // namespace

std::string config_echo(const Config& c) {
  std::ostringstream out;
  out << "[model]\n"
      << "kind = " << to_string(c.kind) << "\n"
      << "feature_dim = " << c.model.feature_dim << "\n"
      << "hidden = " << c.model.hidden << "\n"
      << "layers = " << c.model.hidden_layers << "\n"
      << "ridge = " << format_double(c.model.ridge) << "\n"
      << "noise_ratio = " << c.model.noise_ratio << "\n"
      << "bandwidth = "
      << (c.model.bandwidth > 0.0 ? format_double(c.model.bandwidth) : std::string("silverman")) << "\n"
      << "\n[train]\n"
      << "steps = " << c.train.steps << "\n"
      << "tasks_per_step = " << c.train.tasks_per_step << "\n"
      << "context_size = " << c.train.context_size << "\n"
      << "target_size = " << c.train.target_size << "\n"
      << "learning_rate = " << format_double(c.train.learning_rate) << "\n"
      << "seed = " << c.train.seed << "\n"
      << "checkpoint_every = " << c.train.checkpoint_every << "\n"
      << "\n[data]\n"
      << "variant = " << to_string(c.data.variant) << "\n"
      << "sigma = " << format_double(c.data.sigma) << "\n"
      << "pool = " << c.data.pool << "\n"
      << "csv_path = " << c.data.csv_path << "\n"
      << "x_cols = " << join(c.data.x_cols, fmt_name) << "\n"
      << "y_cols = " << join(c.data.y_cols, fmt_name) << "\n"
      << "task_col = " << c.data.task_col << "\n"
      << "\n[eval]\n"
      << "grid_points = " << c.eval.grid_points << "\n"
      << "test_tasks = " << c.eval.test_tasks << "\n"
      << "context_sizes = " << join(c.eval.context_sizes, fmt_int) << "\n"
      << "seed = " << c.eval.seed << "\n"
      << "\n[cv]\n"
      << "ridge = " << join(c.cv.ridge, format_double) << "\n"
      << "hidden = " << join(c.cv.hidden, fmt_int) << "\n"
      << "bandwidth = " << join(c.cv.bandwidth, format_double) << "\n";
  return out.str();
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string config_hash(const Config& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(config_echo(cfg))));
  return buf;
}

}  // namespace metacde
