#include "moeguide/config.hpp"

#include <cstdlib>
#include <json.hpp>
#include <set>

#include "moeguide/error.hpp"
#include "moeguide/io.hpp"

namespace moeguide::config {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Reads section keys into fields, rejecting unknown keys and type errors.
class SectionReader {
 public:
  SectionReader(const json& root, std::string name) : name_(std::move(name)) {
    if (!root.contains(name_)) return;
    node_ = &root.at(name_);
    if (!node_->is_object()) throw ConfigError(name_ + ": section must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    known_.insert(key);
    if (node_ == nullptr || !node_->contains(key)) return;
    try {
      const json& v = node_->at(key);
      if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer() && !v.is_number_unsigned()) throw ConfigError("");
        if (v.get<long long>() < 0) throw ConfigError("");
      }
      if constexpr (std::is_same_v<T, int>) {
        if (!v.is_number_integer()) throw ConfigError("");
      }
      out = v.get<T>();
    } catch (const std::exception&) {
      throw ConfigError(name_ + "." + key + ": wrong type or out of range");
    }
  }

  void finish() const {
    if (node_ == nullptr) return;
    for (const auto& [key, value] : node_->items()) {
      if (!known_.contains(key)) throw ConfigError(name_ + "." + key + ": unknown key");
    }
  }

 private:
  std::string name_;
  const json* node_ = nullptr;
  std::set<std::string> known_;
};

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

void ExperimentConfig::validate() const {
  require(world.kind == "grid2d" || world.kind == "grid3d", "world.kind must be grid2d or grid3d");
  require(world.dims.size() == (world.kind == "grid2d" ? 2u : 3u), "world.dims length does not match world.kind");
  for (int d : world.dims) require(d >= 2, "world.dims entries must be >= 2");
  require(world.wall_density >= 0.0 && world.wall_density < 1.0, "world.wall_density must lie in [0, 1)");
  require(world.max_steps >= 1, "world.max_steps must be >= 1");
  require(demos.episodes >= 1, "demos.episodes must be >= 1");
  require(moe.num_experts >= 1, "moe.num_experts must be >= 1");
  require(moe.bottleneck >= 1, "moe.bottleneck must be >= 1");
  require(moe.expert_hidden >= 1, "moe.expert_hidden must be >= 1");
  require(moe.gate_hidden >= 1, "moe.gate_hidden must be >= 1");
  require(moe.init == "glorot_uniform" || moe.init == "orthogonal", "moe.init must be glorot_uniform or orthogonal");
  require(moe.epochs >= 1, "moe.epochs must be >= 1");
  require(moe.lr > 0.0, "moe.lr must be > 0");
  mapping.validate();
  decay_schedule();
  integration_mode();
  require(agent.kind == "moe_guide" || agent.kind == "random" || agent.kind == "count" || agent.kind == "rnd" ||
              agent.kind == "icm",
          "agent.kind must be one of moe_guide, random, count, rnd, icm");
  require(agent.alpha > 0.0 && agent.alpha <= 1.0, "agent.alpha must lie in (0, 1]");
  require(agent.gamma >= 0.0 && agent.gamma < 1.0, "agent.gamma must lie in [0, 1)");
  require(agent.epsilon_start >= 0.0 && agent.epsilon_start <= 1.0, "agent.epsilon_start must lie in [0, 1]");
  require(agent.epsilon_end >= 0.0 && agent.epsilon_end <= 1.0, "agent.epsilon_end must lie in [0, 1]");
  require(agent.epsilon_anneal >= 0.0 && agent.epsilon_anneal <= 1.0, "agent.epsilon_anneal must lie in [0, 1]");
  require(agent.chain_variant == "table" || agent.chain_variant == "prose",
          "agent.chain_variant must be table or prose");
  require(agent.beta >= 0.0, "agent.beta must be >= 0");
  require(landscape.l_max > 0.0, "landscape.l_max must be > 0");
  require(landscape.slice_stride >= 1, "landscape.slice_stride must be >= 1");
  require(!ablation.expert_counts.empty(), "ablation.expert_counts must not be empty");
  for (auto n : ablation.expert_counts) require(n >= 1, "ablation.expert_counts entries must be >= 1");
  require(!outputs.directory.empty(), "outputs.directory must not be empty");
}

moe::MoEArch ExperimentConfig::arch() const {
  moe::MoEArch a;
  a.num_experts = moe.num_experts;
  a.bottleneck = moe.bottleneck;
  a.expert_hidden = moe.expert_hidden;
  a.gate_hidden = moe.gate_hidden;
  a.top_k = moe.top_k;
  a.init = nn::init_scheme_from_string(moe.init);
  return a;
}

moe::TrainConfig ExperimentConfig::train_config() const {
  moe::TrainConfig t;
  t.epochs = moe.epochs;
  t.learning_rate = moe.lr;
  if (moe.batch_size > 0) t.batch_size = moe.batch_size;
  t.seed = seed;
  return t;
}

shaping::DecaySchedule ExperimentConfig::decay_schedule() const {
  return shaping::DecaySchedule::multiplicative(decay.beta0, decay.decay);
}

shaping::IntegrationMode ExperimentConfig::integration_mode() const {
  return shaping::integration_mode_from_string(decay.mode);
}

agents::QLearnConfig ExperimentConfig::qlearn_config() const {
  agents::QLearnConfig q;
  q.episodes = agent.episodes;
  q.max_episode_steps = agent.max_episode_steps;
  q.alpha = agent.alpha;
  q.epsilon = {agent.epsilon_start, agent.epsilon_end, agent.epsilon_anneal};
  q.decay = decay_schedule();
  q.mode = integration_mode();
  q.episodic_novelty = agent.episodic_novelty;
  q.seed = seed;
  return q;
}

fs::path ExperimentConfig::resolve(const std::string& file) const {
  const fs::path p(file);
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

fs::path ExperimentConfig::output_dir() const {
  const fs::path p(outputs.directory);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("MOEGUIDE_OUT_ROOT"); root != nullptr && *root != '\0') {
    return fs::path(root) / p;
  }
  return p;
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  return seed == o.seed && world == o.world && demos == o.demos && moe == o.moe && mapping == o.mapping &&
         decay == o.decay && agent == o.agent && landscape == o.landscape && ablation == o.ablation &&
         outputs == o.outputs;
}

ExperimentConfig parse_config(const std::string& text, const fs::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config root must be an object");
  static const std::set<std::string> sections{"seed",  "world", "demos",     "moe",      "mapping",
                                              "decay", "agent", "landscape", "ablation", "outputs"};
  for (const auto& [key, value] : root.items()) {
    if (!sections.contains(key)) throw ConfigError(key + ": unknown section");
  }
  ExperimentConfig c;
  c.base_dir = base_dir;
  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned() && !(root["seed"].is_number_integer() && root["seed"].get<long long>() >= 0))
      throw ConfigError("seed: must be a non-negative integer");
    c.seed = root["seed"].get<std::uint64_t>();
  }
  {
    SectionReader r(root, "world");
    r.get("kind", c.world.kind);
    r.get("dims", c.world.dims);
    r.get("wall_density", c.world.wall_density);
    r.get("max_steps", c.world.max_steps);
    r.get("file", c.world.file);
    r.finish();
  }
  {
    SectionReader r(root, "demos");
    r.get("gap", c.demos.gap);
    r.get("episodes", c.demos.episodes);
    r.get("file", c.demos.file);
    r.finish();
  }
  {
    SectionReader r(root, "moe");
    r.get("num_experts", c.moe.num_experts);
    r.get("bottleneck", c.moe.bottleneck);
    r.get("expert_hidden", c.moe.expert_hidden);
    r.get("gate_hidden", c.moe.gate_hidden);
    r.get("top_k", c.moe.top_k);
    r.get("init", c.moe.init);
    r.get("epochs", c.moe.epochs);
    r.get("lr", c.moe.lr);
    r.get("batch_size", c.moe.batch_size);
    r.get("model_file", c.moe.model_file);
    r.finish();
  }
  {
    SectionReader r(root, "mapping");
    r.get("l_min", c.mapping.l_min);
    r.get("l_max", c.mapping.l_max);
    r.get("steepness", c.mapping.steepness);
    r.get("scale", c.mapping.scale);
    std::string falloff = shaping::to_string(c.mapping.falloff);
    r.get("falloff", falloff);
    c.mapping.falloff = shaping::falloff_from_string(falloff);
    r.finish();
  }
  {
    SectionReader r(root, "decay");
    r.get("beta0", c.decay.beta0);
    r.get("decay", c.decay.decay);
    r.get("mode", c.decay.mode);
    r.finish();
  }
  {
    SectionReader r(root, "agent");
    r.get("kind", c.agent.kind);
    r.get("steps", c.agent.steps);
    r.get("episodes", c.agent.episodes);
    r.get("max_episode_steps", c.agent.max_episode_steps);
    r.get("alpha", c.agent.alpha);
    r.get("gamma", c.agent.gamma);
    r.get("epsilon_start", c.agent.epsilon_start);
    r.get("epsilon_end", c.agent.epsilon_end);
    r.get("epsilon_anneal", c.agent.epsilon_anneal);
    r.get("episodic_novelty", c.agent.episodic_novelty);
    r.get("chain_variant", c.agent.chain_variant);
    r.get("beta", c.agent.beta);
    r.finish();
  }
  {
    SectionReader r(root, "landscape");
    r.get("l_max", c.landscape.l_max);
    r.get("slice_stride", c.landscape.slice_stride);
    r.finish();
  }
  {
    SectionReader r(root, "ablation");
    r.get("expert_counts", c.ablation.expert_counts);
    r.get("match_budget", c.ablation.match_budget);
    r.finish();
  }
  {
    SectionReader r(root, "outputs");
    r.get("directory", c.outputs.directory);
    r.finish();
  }
  c.validate();
  const auto check_file = [&](const std::string& key, const std::string& file) {
    if (!file.empty() && !fs::exists(c.resolve(file))) {
      throw ConfigError(key + ": file '" + c.resolve(file).string() + "' does not exist");
    }
  };
  check_file("world.file", c.world.file);
  check_file("demos.file", c.demos.file);
  check_file("moe.model_file", c.moe.model_file);
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = io::read_text_file(path);
  } catch (const IoError&) {
    throw ConfigError("cannot read config file '" + path.string() + "'");
  }
  return parse_config(text, path.parent_path());
}

std::string serialize_config(const ExperimentConfig& c) {
  json root;
  root["seed"] = c.seed;
  root["world"] = {{"kind", c.world.kind},
                   {"dims", c.world.dims},
                   {"wall_density", c.world.wall_density},
                   {"max_steps", c.world.max_steps},
                   {"file", c.world.file}};
  root["demos"] = {{"gap", c.demos.gap}, {"episodes", c.demos.episodes}, {"file", c.demos.file}};
  root["moe"] = {{"num_experts", c.moe.num_experts},
                 {"bottleneck", c.moe.bottleneck},
                 {"expert_hidden", c.moe.expert_hidden},
                 {"gate_hidden", c.moe.gate_hidden},
                 {"top_k", c.moe.top_k},
                 {"init", c.moe.init},
                 {"epochs", c.moe.epochs},
                 {"lr", c.moe.lr},
                 {"batch_size", c.moe.batch_size},
                 {"model_file", c.moe.model_file}};
  root["mapping"] = {{"l_min", c.mapping.l_min},
                     {"l_max", c.mapping.l_max},
                     {"steepness", c.mapping.steepness},
                     {"scale", c.mapping.scale},
                     {"falloff", shaping::to_string(c.mapping.falloff)}};
  root["decay"] = {{"beta0", c.decay.beta0}, {"decay", c.decay.decay}, {"mode", c.decay.mode}};
  root["agent"] = {{"kind", c.agent.kind},
                   {"steps", c.agent.steps},
                   {"episodes", c.agent.episodes},
                   {"max_episode_steps", c.agent.max_episode_steps},
                   {"alpha", c.agent.alpha},
                   {"gamma", c.agent.gamma},
                   {"epsilon_start", c.agent.epsilon_start},
                   {"epsilon_end", c.agent.epsilon_end},
                   {"epsilon_anneal", c.agent.epsilon_anneal},
                   {"episodic_novelty", c.agent.episodic_novelty},
                   {"chain_variant", c.agent.chain_variant},
                   {"beta", c.agent.beta}};
  root["landscape"] = {{"l_max", c.landscape.l_max}, {"slice_stride", c.landscape.slice_stride}};
  root["ablation"] = {{"expert_counts", c.ablation.expert_counts}, {"match_budget", c.ablation.match_budget}};
  root["outputs"] = {{"directory", c.outputs.directory}};
  return root.dump(2) + "\n";
}

}  // namespace moeguide::config
