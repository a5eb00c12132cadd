#pragma once

// Experiment configuration: one JSON document with nested sections.
//
// {
//   "seed": 1,
//   "world":    {"kind": "grid2d", "dims": [25, 25], "wall_density": 0.2,
//                "max_steps": 2000, "file": ""},
//   "demos":    {"gap": 4, "episodes": 1, "file": ""},
//   "moe":      {"num_experts": 2, "bottleneck": 1, "expert_hidden": 64,
//                "gate_hidden": 32, "top_k": 0, "init": "glorot_uniform",
//                "epochs": 3000, "lr": 0.001, "batch_size": 0, "model_file": ""},
//   "mapping":  {"l_min": 0.01, "l_max": 0.1, "steepness": 20, "scale": 1,
//                "falloff": "exponential"},
//   "decay":    {"beta0": 1, "decay": 1, "mode": "reward_sum"},
//   "agent":    {"kind": "moe_guide", "steps": 2000, "episodes": 500,
//                "max_episode_steps": 50, "alpha": 0.5, "gamma": 0.99,
//                "epsilon_start": 1, "epsilon_end": 0.05,
//                "epsilon_anneal": 0.5, "episodic_novelty": false,
//                "chain_variant": "table", "beta": 10},
//   "landscape": {"l_max": 1, "slice_stride": 2},
//   "ablation": {"expert_counts": [1, 2, 5, 11], "match_budget": false},
//   "outputs":  {"directory": "out"}
// }
//
// Every section and key is optional; missing keys take the defaults above.
// Unknown keys are rejected. Relative file paths resolve against the
// directory of the config file. A relative output directory resolves
// against $MOEGUIDE_OUT_ROOT when that variable is set.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "moeguide/agents.hpp"
#include "moeguide/moe.hpp"
#include "moeguide/shaping.hpp"

namespace moeguide::config {

struct WorldSection {
  std::string kind = "grid2d";  // grid2d, grid3d
  std::vector<int> dims{25, 25};
  double wall_density = 0.2;
  int max_steps = 2000;
  std::string file;
  bool operator==(const WorldSection&) const = default;
};

struct DemoSection {
  std::size_t gap = 0;
  std::size_t episodes = 1;
  std::string file;
  bool operator==(const DemoSection&) const = default;
};

struct MoESection {
  std::size_t num_experts = 2;
  std::size_t bottleneck = 1;
  std::size_t expert_hidden = 64;
  std::size_t gate_hidden = 32;
  std::size_t top_k = 0;
  std::string init = "glorot_uniform";
  std::size_t epochs = 3000;
  double lr = 1e-3;
  std::size_t batch_size = 0;  // 0: automatic
  std::string model_file;
  bool operator==(const MoESection&) const = default;
};

struct DecaySection {
  double beta0 = 1.0;
  double decay = 1.0;
  std::string mode = "reward_sum";
  bool operator==(const DecaySection&) const = default;
};

struct AgentSection {
  std::string kind = "moe_guide";  // moe_guide, random, count, rnd, icm
  std::size_t steps = 2000;
  std::size_t episodes = 500;
  std::size_t max_episode_steps = 50;
  double alpha = 0.5;
  double gamma = 0.99;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_anneal = 0.5;
  bool episodic_novelty = false;
  std::string chain_variant = "table";  // table, prose
  double beta = 10.0;                   // intrinsic weight for verify-mdp
  bool operator==(const AgentSection&) const = default;
};

struct LandscapeSection {
  double l_max = 1.0;
  std::size_t slice_stride = 2;
  bool operator==(const LandscapeSection&) const = default;
};

struct AblationSection {
  std::vector<std::size_t> expert_counts{1, 2, 5, 11};
  bool match_budget = false;
  bool operator==(const AblationSection&) const = default;
};

struct OutputSection {
  std::string directory = "out";
  bool operator==(const OutputSection&) const = default;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  WorldSection world;
  DemoSection demos;
  MoESection moe;
  shaping::MappingConfig mapping;
  DecaySection decay;
  AgentSection agent;
  LandscapeSection landscape;
  AblationSection ablation;
  OutputSection outputs;

  /// Directory used to resolve relative file paths (not serialized).
  std::filesystem::path base_dir;

  /// Range checks per section; throws ConfigError naming the key.
  void validate() const;

  moe::MoEArch arch() const;
  moe::TrainConfig train_config() const;
  shaping::DecaySchedule decay_schedule() const;
  shaping::IntegrationMode integration_mode() const;
  agents::QLearnConfig qlearn_config() const;

  std::filesystem::path resolve(const std::string& file) const;
  std::filesystem::path output_dir() const;

  bool operator==(const ExperimentConfig& o) const;
};

/// Parses and validates. Referenced files must exist.
ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& cfg);

}  // namespace moeguide::config
