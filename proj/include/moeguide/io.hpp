#pragma once

// Text file formats. Every format starts with a versioned header line and
// writes doubles with 17 significant digits, so save -> load -> save is
// byte-identical.

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "moeguide/envs.hpp"
#include "moeguide/moe.hpp"
#include "moeguide/nn.hpp"

namespace moeguide::io {

std::string format_double(double v);

std::string read_text_file(const std::filesystem::path& path);
/// Creates parent directories as needed.
void write_text_file(const std::filesystem::path& path, const std::string& content);

// World file:
//   moeguide-world v1
//   dims 25 25
//   seed 7
//   wall_density 0.20000000000000001
//   max_steps 2000
//   start 0 0
//   goal 24 24
//   walls 118
//   3 0
//   ...
std::string serialize_world(const env::GridWorld& world);
env::GridWorld parse_world(const std::string& text);

// Demo file:
//   moeguide-demos v1 state_dim=2 gap=4 records=10 source=gridworld_bfs
//   episode_id,step_index,s0,s1,...
//   0,0,0,0
//   0,5,0.125,0.083333333333333329
std::string serialize_demos(const moe::DemoSet& demos);
moe::DemoSet parse_demos(const std::string& text);

// Network container:
//   moeguide-net v1
//   dims 2 64 1
//   activations relu identity
//   init orthogonal
//   params 257
//   <values, 8 per line, row-major weights then bias per layer>
std::string serialize_net(const nn::DenseNet& net);
nn::DenseNet parse_net(const std::string& text);

// MoE checkpoint: header, architecture and normalizer lines, then one
// network container per expert followed by the gate.
std::string serialize_model(const moe::MoEModel& model);
moe::MoEModel parse_model(const std::string& text);

inline void save_world(const std::filesystem::path& p, const env::GridWorld& w) {
  write_text_file(p, serialize_world(w));
}
inline env::GridWorld load_world(const std::filesystem::path& p) { return parse_world(read_text_file(p)); }
inline void save_demos(const std::filesystem::path& p, const moe::DemoSet& d) {
  write_text_file(p, serialize_demos(d));
}
inline moe::DemoSet load_demos(const std::filesystem::path& p) { return parse_demos(read_text_file(p)); }
inline void save_model(const std::filesystem::path& p, const moe::MoEModel& m) {
  write_text_file(p, serialize_model(m));
}
inline moe::MoEModel load_model(const std::filesystem::path& p) { return parse_model(read_text_file(p)); }

/// CSV with a fixed header. Numbers go through format_double unless they
/// are integers.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  CsvTable& row();
  CsvTable& add(double v);
  CsvTable& add(std::size_t v);
  CsvTable& add(long long v);
  CsvTable& add(const std::string& v);

  std::size_t rows() const { return rows_.size(); }
  std::string str() const;
  void save(const std::filesystem::path& path) const { write_text_file(path, str()); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace moeguide::io
