#include "metacde/checkpoint.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "metacde/errors.hpp"

namespace metacde {
namespace {

constexpr const char* kMagic = "METACDE-CKPT 1";

void append_g17(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

void write_net_line(std::string& out, const char* name, const Mlp& net) {
  out += "net ";
  out += name;
  for (int d : net.dims) {
    out += ' ';
    out += std::to_string(d);
  }
  out += '\n';
}

void write_net_params(std::string& out, const char* name, const Mlp& net) {
  for (size_t l = 0; l + 1 < net.dims.size(); ++l) {
    const int rows = net.dims[l + 1], cols = net.dims[l];
    out += "tensor ";
    out += name;
    out += ".w" + std::to_string(l) + " " + std::to_string(rows) + " " + std::to_string(cols) + "\n";
    const double* w = net.weights[l].ptr();
    for (int r = 0; r < rows; ++r) {
      for (int cidx = 0; cidx < cols; ++cidx) {
        if (cidx) out += ' ';
        append_g17(out, w[r * cols + cidx]);
      }
      out += '\n';
    }
    out += "tensor ";
    out += name;
    out += ".b" + std::to_string(l) + " " + std::to_string(rows) + "\n";
    const double* b = net.biases[l].ptr();
    for (int r = 0; r < rows; ++r) {
      if (r) out += ' ';
      append_g17(out, b[r]);
    }
    out += '\n';
  }
}

std::string arch_block(const ModelConfig& cfg, ModelKind kind) {
  std::string out;
  out += kMagic;
  out += '\n';
  out += std::string("kind ") + to_string(kind) + "\n";
  out += "dim_x " + std::to_string(cfg.dim_x) + "\n";
  out += "dim_y " + std::to_string(cfg.dim_y) + "\n";
  out += "feature_dim " + std::to_string(cfg.feature_dim) + "\n";
  out += "hidden " + std::to_string(cfg.hidden) + "\n";
  out += "layers " + std::to_string(cfg.hidden_layers) + "\n";
  out += "ridge ";
  append_g17(out, cfg.ridge);
  out += '\n';
  out += "noise_ratio " + std::to_string(cfg.noise_ratio) + "\n";
  out += "bandwidth ";
  append_g17(out, cfg.bandwidth);
  out += '\n';
  return out;
}

std::string finish(std::string body) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(body)));
  body += std::string("hash fnv1a64 ") + buf + "\n";
  return body;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("checkpoint: cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw DataError("checkpoint: write to '" + path + "' failed");
}

// ---- loading ---------------------------------------------------------------

struct Reader {
  const std::string& text;
  size_t pos = 0;
  int line_no = 0;

  bool next(std::string& line) {
    if (pos >= text.size()) return false;
    size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    line.assign(text, pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    return true;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError("checkpoint line " + std::to_string(line_no) + ": " + what);
  }
};

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

long long expect_int_line(Reader& r, const std::string& key) {
  std::string line;
  if (!r.next(line)) r.fail("unexpected end of file, expected '" + key + "'");
  auto toks = split_ws(line);
  if (toks.size() != 2 || toks[0] != key) r.fail("expected '" + key + " <value>'");
  long long v = 0;
  auto [p, ec] = std::from_chars(toks[1].data(), toks[1].data() + toks[1].size(), v);
  if (ec != std::errc() || p != toks[1].data() + toks[1].size()) r.fail("bad integer '" + toks[1] + "'");
  return v;
}

double expect_double_line(Reader& r, const std::string& key) {
  std::string line;
  if (!r.next(line)) r.fail("unexpected end of file, expected '" + key + "'");
  auto toks = split_ws(line);
  if (toks.size() != 2 || toks[0] != key) r.fail("expected '" + key + " <value>'");
  double v = 0.0;
  auto [p, ec] = std::from_chars(toks[1].data(), toks[1].data() + toks[1].size(), v);
  if (ec != std::errc() || p != toks[1].data() + toks[1].size()) r.fail("bad number '" + toks[1] + "'");
  return v;
}

void expect_net_line(Reader& r, const std::string& name, const std::vector<int>& dims) {
  std::string line;
  if (!r.next(line)) r.fail("unexpected end of file, expected net '" + name + "'");
  auto toks = split_ws(line);
  if (toks.size() < 2 || toks[0] != "net" || toks[1] != name) r.fail("expected 'net " + name + " ...'");
  if (toks.size() != dims.size() + 2) r.fail("net '" + name + "' has wrong layer count");
  for (size_t i = 0; i < dims.size(); ++i)
    if (std::to_string(dims[i]) != toks[i + 2])
      r.fail("net '" + name + "' dims do not match the architecture block");
}

void read_values(Reader& r, int rows, int cols, double* out) {
  for (int row = 0; row < rows; ++row) {
    std::string line;
    if (!r.next(line)) r.fail("unexpected end of file inside tensor values");
    const char* p = line.data();
    const char* end = p + line.size();
    for (int c = 0; c < cols; ++c) {
      while (p < end && *p == ' ') ++p;
      double v = 0.0;
      auto [np, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) r.fail("bad value in tensor row");
      p = np;
      out[row * cols + c] = v;
    }
    while (p < end && *p == ' ') ++p;
    if (p != end) r.fail("extra values in tensor row");
  }
}

void read_net_params(Reader& r, const std::string& name, Mlp& net) {
  for (size_t l = 0; l + 1 < net.dims.size(); ++l) {
    const int rows = net.dims[l + 1], cols = net.dims[l];
    std::string line;
    if (!r.next(line)) r.fail("unexpected end of file, expected tensor for '" + name + "'");
    auto toks = split_ws(line);
    const std::string wname = name + ".w" + std::to_string(l);
    if (toks.size() != 4 || toks[0] != "tensor" || toks[1] != wname ||
        toks[2] != std::to_string(rows) || toks[3] != std::to_string(cols))
      r.fail("expected 'tensor " + wname + " " + std::to_string(rows) + " " + std::to_string(cols) + "'");
    read_values(r, rows, cols, net.weights[l].ptr());

    if (!r.next(line)) r.fail("unexpected end of file, expected bias for '" + name + "'");
    toks = split_ws(line);
    const std::string bname = name + ".b" + std::to_string(l);
    if (toks.size() != 3 || toks[0] != "tensor" || toks[1] != bname || toks[2] != std::to_string(rows))
      r.fail("expected 'tensor " + bname + " " + std::to_string(rows) + "'");
    read_values(r, 1, rows, net.biases[l].ptr());
  }
}

}  // namespace

std::string checkpoint_text(const MetaModel& m) {
  std::string body = arch_block(m.cfg, ModelKind::metacde);
  write_net_line(body, "x_net", m.x_net);
  write_net_line(body, "y_net", m.y_net);
  write_net_line(body, "norm_net", m.norm_net);
  write_net_params(body, "x_net", m.x_net);
  write_net_params(body, "y_net", m.y_net);
  write_net_params(body, "norm_net", m.norm_net);
  return finish(std::move(body));
}

std::string checkpoint_text(const MetaNnModel& m) {
  std::string body = arch_block(m.cfg, ModelKind::metann);
  write_net_line(body, "enc_net", m.enc_net);
  write_net_line(body, "proj_net", m.proj_net);
  write_net_line(body, "y_net", m.y_net);
  write_net_line(body, "norm_net", m.norm_net);
  write_net_params(body, "enc_net", m.enc_net);
  write_net_params(body, "proj_net", m.proj_net);
  write_net_params(body, "y_net", m.y_net);
  write_net_params(body, "norm_net", m.norm_net);
  return finish(std::move(body));
}

void save_checkpoint(const std::string& path, const MetaModel& m) { write_file(path, checkpoint_text(m)); }

void save_checkpoint(const std::string& path, const MetaNnModel& m) { write_file(path, checkpoint_text(m)); }

LoadedModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  // hash line must be the final line and cover everything before it
  const std::string tag = "hash fnv1a64 ";
  size_t hash_at = text.rfind("\nhash fnv1a64 ");
  if (hash_at == std::string::npos) throw DataError("checkpoint: missing hash line");
  ++hash_at;  // point at 'h'
  const std::string body = text.substr(0, hash_at);
  std::string hash_line = text.substr(hash_at);
  if (!hash_line.empty() && hash_line.back() == '\n') hash_line.pop_back();
  if (hash_line.find('\n') != std::string::npos) throw DataError("checkpoint: content after hash line");
  char expect[17];
  std::snprintf(expect, sizeof expect, "%016llx", static_cast<unsigned long long>(fnv1a64(body)));
  if (hash_line != tag + expect) throw DataError("checkpoint: content hash mismatch");

  Reader r{body};
  std::string line;
  if (!r.next(line) || line != kMagic) throw DataError("checkpoint: bad magic line");
  if (!r.next(line)) r.fail("unexpected end of file, expected 'kind'");
  auto toks = split_ws(line);
  if (toks.size() != 2 || toks[0] != "kind") r.fail("expected 'kind <metacde|metann>'");
  LoadedModel out;
  if (toks[1] == "metacde") out.kind = ModelKind::metacde;
  else if (toks[1] == "metann") out.kind = ModelKind::metann;
  else r.fail("unknown model kind '" + toks[1] + "'");

  ModelConfig cfg;
  cfg.dim_x = static_cast<int>(expect_int_line(r, "dim_x"));
  cfg.dim_y = static_cast<int>(expect_int_line(r, "dim_y"));
  cfg.feature_dim = static_cast<int>(expect_int_line(r, "feature_dim"));
  cfg.hidden = static_cast<int>(expect_int_line(r, "hidden"));
  cfg.hidden_layers = static_cast<int>(expect_int_line(r, "layers"));
  cfg.ridge = expect_double_line(r, "ridge");
  cfg.noise_ratio = static_cast<int>(expect_int_line(r, "noise_ratio"));
  cfg.bandwidth = expect_double_line(r, "bandwidth");
  if (cfg.dim_x < 1 || cfg.dim_y < 1 || cfg.feature_dim < 1 || cfg.hidden < 1 ||
      cfg.hidden_layers < 1 || !(cfg.ridge > 0.0) || cfg.noise_ratio < 1 || cfg.bandwidth < 0.0)
    r.fail("architecture block fails validation");

  // Materialize the right shapes first, then stream parameters into them.
  std::mt19937_64 scratch(0);
  if (out.kind == ModelKind::metacde) {
    out.cde = metacde_init(cfg, scratch);
    expect_net_line(r, "x_net", out.cde.x_net.dims);
    expect_net_line(r, "y_net", out.cde.y_net.dims);
    expect_net_line(r, "norm_net", out.cde.norm_net.dims);
    read_net_params(r, "x_net", out.cde.x_net);
    read_net_params(r, "y_net", out.cde.y_net);
    read_net_params(r, "norm_net", out.cde.norm_net);
  } else {
    out.nn = metann_init(cfg, scratch);
    expect_net_line(r, "enc_net", out.nn.enc_net.dims);
    expect_net_line(r, "proj_net", out.nn.proj_net.dims);
    expect_net_line(r, "y_net", out.nn.y_net.dims);
    expect_net_line(r, "norm_net", out.nn.norm_net.dims);
    read_net_params(r, "enc_net", out.nn.enc_net);
    read_net_params(r, "proj_net", out.nn.proj_net);
    read_net_params(r, "y_net", out.nn.y_net);
    read_net_params(r, "norm_net", out.nn.norm_net);
  }
  if (r.next(line)) r.fail("trailing content after parameters");
  return out;
}

}  // namespace metacde
