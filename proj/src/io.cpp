#include "moeguide/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "moeguide/error.hpp"

namespace moeguide::io {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write file '" + path.string() + "'");
  out << content;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

namespace {

class LineReader {
 public:
  explicit LineReader(const std::string& text) : in_(text) {}

  std::string next(const char* what) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return line;
    }
    throw IoError(std::string("unexpected end of file while reading ") + what);
  }

  bool done() {
    std::string line;
    const auto pos = in_.tellg();
    while (std::getline(in_, line)) {
      if (!line.empty() && line != "\r") {
        in_.seekg(pos);
        return false;
      }
    }
    return true;
  }

  /// Reads "<key> <values...>" and returns the value stream.
  std::istringstream keyed(const std::string& key) {
    const std::string line = next(key.c_str());
    std::istringstream ls(line);
    std::string got;
    ls >> got;
    if (got != key) fail("expected '" + key + "', found '" + got + "'");
    return ls;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw IoError("line " + std::to_string(line_no_) + ": " + msg);
  }

 private:
  std::istringstream in_;
  int line_no_ = 0;
};

template <class T>
std::vector<T> read_all(std::istringstream& ls) {
  std::vector<T> out;
  T v;
  while (ls >> v) out.push_back(v);
  return out;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw IoError("malformed number '" + s + "'");
  }
  if (used != s.size()) throw IoError("malformed number '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream ss(s);
  while (std::getline(ss, cur, sep)) parts.push_back(cur);
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

void expect_header(LineReader& r, const std::string& magic) {
  const std::string line = r.next("header");
  if (line.rfind(magic, 0) != 0) r.fail("not a " + magic + " file");
}

}  // namespace

std::string serialize_world(const env::GridWorld& w) {
  std::ostringstream out;
  const auto coords = [&](const env::Cell& c) {
    std::string s;
    for (std::size_t k = 0; k < w.rank(); ++k) s += (k ? " " : "") + std::to_string(c[k]);
    return s;
  };
  out << "moeguide-world v1\n";
  out << "dims";
  for (int d : w.dims()) out << ' ' << d;
  out << "\nseed " << w.seed() << "\n";
  out << "wall_density " << format_double(w.wall_density()) << "\n";
  out << "max_steps " << w.max_steps() << "\n";
  out << "start " << coords(w.start()) << "\n";
  out << "goal " << coords(w.goal()) << "\n";
  out << "walls " << w.walls().size() << "\n";
  for (const auto& c : w.walls()) out << coords(c) << "\n";
  return out.str();
}

env::GridWorld parse_world(const std::string& text) {
  LineReader r(text);
  expect_header(r, "moeguide-world v1");
  auto ls = r.keyed("dims");
  const auto dims = read_all<int>(ls);
  if (dims.size() != 2 && dims.size() != 3) r.fail("dims must have 2 or 3 entries");
  std::uint64_t seed = 0;
  r.keyed("seed") >> seed;
  std::string density_s;
  r.keyed("wall_density") >> density_s;
  int max_steps = 0;
  r.keyed("max_steps") >> max_steps;
  const auto read_cell = [&](std::istringstream& s) {
    const auto v = read_all<int>(s);
    if (v.size() != dims.size()) r.fail("cell has wrong number of coordinates");
    env::Cell c{0, 0, 0};
    for (std::size_t k = 0; k < v.size(); ++k) c[k] = v[k];
    return c;
  };
  auto s1 = r.keyed("start");
  const env::Cell start = read_cell(s1);
  auto s2 = r.keyed("goal");
  const env::Cell goal = read_cell(s2);
  std::size_t n_walls = 0;
  r.keyed("walls") >> n_walls;
  std::set<env::Cell> walls;
  for (std::size_t i = 0; i < n_walls; ++i) {
    std::istringstream ws(r.next("wall cell"));
    walls.insert(read_cell(ws));
  }
  try {
    return env::GridWorld(dims, std::move(walls), start, goal, max_steps, parse_double(density_s), seed);
  } catch (const ConfigError& e) {
    throw IoError(std::string("invalid world file: ") + e.what());
  }
}

std::string serialize_demos(const moe::DemoSet& d) {
  d.validate();
  if (std::any_of(d.source_tag.begin(), d.source_tag.end(), [](unsigned char c) { return std::isspace(c); }))
    throw IoError("demo source tag must not contain whitespace: '" + d.source_tag + "'");
  std::ostringstream out;
  const std::size_t dim = d.state_dim();
  out << "moeguide-demos v1 state_dim=" << dim << " gap=" << d.gap << " records=" << d.records.size()
      << " source=" << (d.source_tag.empty() ? "-" : d.source_tag) << "\n";
  out << "episode_id,step_index";
  for (std::size_t j = 0; j < dim; ++j) out << ",s" << j;
  out << "\n";
  for (const auto& rec : d.records) {
    out << rec.episode_id << ',' << rec.step_index;
    for (double v : rec.state) out << ',' << format_double(v);
    out << "\n";
  }
  return out.str();
}

moe::DemoSet parse_demos(const std::string& text) {
  LineReader r(text);
  const std::string header = r.next("header");
  std::istringstream hs(header);
  std::string magic, version;
  hs >> magic >> version;
  if (magic != "moeguide-demos" || version != "v1") r.fail("not a moeguide-demos v1 file");
  moe::DemoSet d;
  std::size_t dim = 0;
  std::size_t n_records = 0;
  bool have_dim = false, have_records = false;
  std::string field;
  while (hs >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) r.fail("malformed header field '" + field + "'");
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    try {
      if (key == "state_dim") {
        dim = std::stoul(value);
        have_dim = true;
      } else if (key == "gap") {
        d.gap = std::stoul(value);
      } else if (key == "records") {
        n_records = std::stoul(value);
        have_records = true;
      } else if (key == "source") {
        d.source_tag = value == "-" ? "" : value;
      }
    } catch (const std::exception&) {
      r.fail("malformed header value for '" + key + "'");
    }
  }
  if (!have_dim || !have_records) r.fail("header must declare state_dim and records");
  r.next("column header");
  for (std::size_t i = 0; i < n_records; ++i) {
    const auto parts = split(r.next("record"), ',');
    if (parts.size() != dim + 2)
      r.fail("record has " + std::to_string(parts.size()) + " fields, expected " + std::to_string(dim + 2));
    moe::DemoRecord rec;
    try {
      rec.episode_id = std::stoll(parts[0]);
      rec.step_index = std::stoll(parts[1]);
    } catch (const std::exception&) {
      r.fail("malformed episode or step index");
    }
    for (std::size_t j = 0; j < dim; ++j) rec.state.push_back(parse_double(parts[j + 2]));
    d.records.push_back(std::move(rec));
  }
  return d;
}

namespace {

void write_net(std::ostream& out, const nn::DenseNet& net) {
  out << "moeguide-net v1\n";
  out << "dims";
  for (auto d : net.layer_dims()) out << ' ' << d;
  out << "\nactivations";
  for (const auto& L : net.layers()) out << ' ' << nn::to_string(L.activation);
  out << "\ninit " << nn::to_string(net.init_scheme()) << "\n";
  const auto p = net.parameters();
  out << "params " << p.size() << "\n";
  for (std::size_t i = 0; i < p.size(); ++i) {
    out << format_double(p[i]) << ((i % 8 == 7 || i + 1 == p.size()) ? '\n' : ' ');
  }
}

nn::DenseNet read_net(LineReader& r) {
  expect_header(r, "moeguide-net v1");
  auto ds = r.keyed("dims");
  const auto dims = read_all<std::size_t>(ds);
  auto as = r.keyed("activations");
  std::vector<nn::Activation> acts;
  for (const auto& tag : read_all<std::string>(as)) acts.push_back(nn::activation_from_string(tag));
  std::string init_tag;
  r.keyed("init") >> init_tag;
  const auto init = nn::init_scheme_from_string(init_tag);
  std::size_t n = 0;
  r.keyed("params") >> n;
  nn::DenseNet net;
  try {
    net = nn::DenseNet(dims, acts);
  } catch (const ShapeError& e) {
    r.fail(e.what());
  }
  if (net.parameter_count() != n) r.fail("parameter count does not match dims");
  net.set_init_scheme(init);
  auto params = net.parameters();
  std::size_t filled = 0;
  while (filled < n) {
    std::istringstream ls(r.next("parameters"));
    std::string tok;
    while (ls >> tok) {
      if (filled >= n) r.fail("too many parameter values");
      params[filled++] = parse_double(tok);
    }
  }
  return net;
}

void write_values(std::ostream& out, const char* key, const std::vector<double>& v) {
  out << key;
  for (double x : v) out << ' ' << format_double(x);
  out << "\n";
}

std::vector<double> read_values(LineReader& r, const std::string& key) {
  auto ls = r.keyed(key);
  std::vector<double> out;
  for (const auto& tok : read_all<std::string>(ls)) out.push_back(parse_double(tok));
  return out;
}

}  // namespace

std::string serialize_net(const nn::DenseNet& net) {
  std::ostringstream out;
  write_net(out, net);
  return out.str();
}

nn::DenseNet parse_net(const std::string& text) {
  LineReader r(text);
  return read_net(r);
}

std::string serialize_model(const moe::MoEModel& m) {
  std::ostringstream out;
  const auto& a = m.arch();
  out << "moeguide-moe v1\n";
  out << "state_dim " << m.state_dim() << "\n";
  out << "num_experts " << m.num_experts() << "\n";
  out << "bottleneck " << a.bottleneck << "\n";
  out << "expert_hidden " << a.expert_hidden << "\n";
  out << "gate_hidden " << a.gate_hidden << "\n";
  out << "top_k " << a.top_k << "\n";
  out << "init " << nn::to_string(a.init) << "\n";
  write_values(out, "normalizer_mean", m.normalizer().mean);
  write_values(out, "normalizer_std", m.normalizer().stddev);
  for (const auto& e : m.experts()) write_net(out, e);
  write_net(out, m.gate());
  out << "end\n";
  return out.str();
}

moe::MoEModel parse_model(const std::string& text) {
  LineReader r(text);
  expect_header(r, "moeguide-moe v1");
  moe::MoEArch a;
  std::size_t state_dim = 0;
  r.keyed("state_dim") >> state_dim;
  r.keyed("num_experts") >> a.num_experts;
  r.keyed("bottleneck") >> a.bottleneck;
  r.keyed("expert_hidden") >> a.expert_hidden;
  r.keyed("gate_hidden") >> a.gate_hidden;
  r.keyed("top_k") >> a.top_k;
  std::string init_tag;
  r.keyed("init") >> init_tag;
  a.init = nn::init_scheme_from_string(init_tag);
  moe::Normalizer norm;
  norm.mean = read_values(r, "normalizer_mean");
  norm.stddev = read_values(r, "normalizer_std");
  if (norm.mean.size() != norm.stddev.size()) r.fail("normalizer mean/std lengths differ");
  if (a.num_experts == 0 || a.num_experts > 4096) r.fail("implausible num_experts");
  std::vector<nn::DenseNet> experts;
  for (std::size_t i = 0; i < a.num_experts; ++i) experts.push_back(read_net(r));
  nn::DenseNet gate = read_net(r);
  if (r.next("end marker") != "end") r.fail("missing end marker");
  try {
    moe::MoEModel m(a, std::move(experts), std::move(gate), std::move(norm));
    if (m.state_dim() != state_dim) r.fail("state_dim does not match expert dims");
    return m;
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("invalid checkpoint: ") + e.what());
  }
}

CsvTable& CsvTable::row() {
  rows_.emplace_back();
  return *this;
}
CsvTable& CsvTable::add(double v) {
  rows_.back().push_back(format_double(v));
  return *this;
}
CsvTable& CsvTable::add(std::size_t v) {
  rows_.back().push_back(std::to_string(v));
  return *this;
}
CsvTable& CsvTable::add(long long v) {
  rows_.back().push_back(std::to_string(v));
  return *this;
}
CsvTable& CsvTable::add(const std::string& v) {
  rows_.back().push_back(v);
  return *this;
}

std::string CsvTable::str() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < header_.size(); ++i) out << (i ? "," : "") << header_[i];
  out << "\n";
  for (const auto& r : rows_) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
    out << "\n";
  }
  return out.str();
}

}  // namespace moeguide::io
