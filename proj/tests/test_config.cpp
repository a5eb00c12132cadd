#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include "moeguide/config.hpp"
#include "moeguide/error.hpp"
#include "moeguide/io.hpp"

using namespace moeguide;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = MOEGUIDE_CONFIG_DIR;

std::string error_of(const std::string& text) {
  try {
    config::parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("empty document yields validated defaults") {
    const auto c = config::parse_config("{}");
    CHECK(c.seed == 0);
    CHECK(c.world.dims == std::vector<int>{25, 25});
    CHECK(c.moe.epochs == 3000);
    CHECK(c.mapping == shaping::MappingConfig{});
    CHECK(c.ablation.expert_counts == std::vector<std::size_t>{1, 2, 5, 11});
    CHECK(c.arch() == moe::MoEArch{});
    CHECK_FALSE(c.train_config().batch_size.has_value());
  }

  TEST_CASE("every fixture parses and round-trips through serialization") {
    std::size_t n = 0;
    for (const auto& entry : fs::directory_iterator(kConfigs)) {
      if (entry.path().extension() != ".json") continue;
      ++n;
      CAPTURE(entry.path().string());
      const auto a = config::load_config(entry.path());
      const auto text = config::serialize_config(a);
      const auto b = config::parse_config(text, a.base_dir);
      CHECK(a == b);
      CHECK(config::serialize_config(b) == text);
    }
    CHECK(n >= 4);
  }

  TEST_CASE("fixture values reach the typed sections") {
    const auto c = config::load_config(kConfigs / "chain_decay.json");
    CHECK(c.agent.gamma == 0.5);
    CHECK(c.decay_schedule() == shaping::DecaySchedule::multiplicative(10.0, 0.999));
    const auto q = c.qlearn_config();
    CHECK(q.episodes == 500);
    CHECK(q.epsilon.end == 0.05);
    CHECK(q.mode == shaping::IntegrationMode::RewardSum);
  }

  TEST_CASE("unknown keys and sections are rejected by name") {
    CHECK(error_of(R"({"moe": {"num_expert": 2}})").find("moe.num_expert") != std::string::npos);
    CHECK(error_of(R"({"agents": {}})").find("agents") != std::string::npos);
    CHECK(error_of(R"({"mapping": 3})").find("mapping") != std::string::npos);
  }

  TEST_CASE("type and range errors name the key") {
    CHECK(error_of(R"({"moe": {"epochs": "many"}})").find("moe.epochs") != std::string::npos);
    CHECK(error_of(R"({"moe": {"epochs": -3}})").find("moe.epochs") != std::string::npos);
    CHECK(error_of(R"({"moe": {"epochs": 0}})").find("moe.epochs") != std::string::npos);
    CHECK(error_of(R"({"mapping": {"l_min": 0.5, "l_max": 0.1}})").find("mapping.l_max") != std::string::npos);
    CHECK(error_of(R"({"mapping": {"falloff": "cubic"}})").find("mapping.falloff") != std::string::npos);
    CHECK(error_of(R"({"decay": {"decay": 1.5}})").find("decay.decay") != std::string::npos);
    CHECK(error_of(R"({"decay": {"mode": "mix"}})").find("decay.mode") != std::string::npos);
    CHECK(error_of(R"({"agent": {"kind": "ppo"}})").find("agent.kind") != std::string::npos);
    CHECK(error_of(R"({"agent": {"gamma": 1.0}})").find("agent.gamma") != std::string::npos);
    CHECK(error_of(R"({"world": {"kind": "grid3d"}})").find("world.dims") != std::string::npos);
    CHECK(error_of(R"({"landscape": {"l_max": 0}})").find("landscape.l_max") != std::string::npos);
    CHECK(error_of(R"({"seed": -1})").find("seed") != std::string::npos);
    CHECK(error_of("{not json").find("JSON") != std::string::npos);
  }

  TEST_CASE("referenced files must exist and resolve against the config directory") {
    const auto dir = fs::temp_directory_path() / "moeguide_config_files";
    fs::remove_all(dir);
    io::write_text_file(dir / "demos.txt", "placeholder");
    io::write_text_file(dir / "ok.json", R"({"demos": {"file": "demos.txt"}})");
    io::write_text_file(dir / "bad.json", R"({"moe": {"model_file": "nowhere.ckpt"}})");
    const auto ok = config::load_config(dir / "ok.json");
    CHECK(ok.resolve(ok.demos.file) == dir / "demos.txt");
    try {
      config::load_config(dir / "bad.json");
      FAIL("missing file accepted");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("moe.model_file") != std::string::npos);
      CHECK(std::string(e.what()).find("nowhere.ckpt") != std::string::npos);
    }
    CHECK_THROWS_WITH_AS(config::load_config(dir / "absent.json"), doctest::Contains("absent.json"), ConfigError);
    fs::remove_all(dir);
  }

  TEST_CASE("relative output directories honor the output root variable") {
    auto c = config::parse_config(R"({"outputs": {"directory": "run1"}})");
    ::unsetenv("MOEGUIDE_OUT_ROOT");
    CHECK(c.output_dir() == fs::path("run1"));
    ::setenv("MOEGUIDE_OUT_ROOT", "/tmp/root", 1);
    CHECK(c.output_dir() == fs::path("/tmp/root/run1"));
    c.outputs.directory = "/abs";
    CHECK(c.output_dir() == fs::path("/abs"));
    ::unsetenv("MOEGUIDE_OUT_ROOT");
  }
}
