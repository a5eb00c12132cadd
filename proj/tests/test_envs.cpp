#include <doctest.h>

#include <algorithm>
#include <cstdlib>

#include "moeguide/envs.hpp"
#include "moeguide/error.hpp"

using namespace moeguide;
using env::Cell;

namespace {

int manhattan(const Cell& a, const Cell& b) {
  return std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]) + std::abs(a[2] - b[2]);
}

}  // namespace

TEST_SUITE("envs") {
  TEST_CASE("moves are blocked by walls and bounds") {
    const env::GridWorld w({3, 3}, {{1, 0, 0}}, {0, 0, 0}, {2, 2, 0}, 10, 0.0, 0);
    CHECK(w.num_actions() == 4);
    CHECK(w.move({0, 0, 0}, 0) == Cell{0, 0, 0});  // wall at (1, 0)
    CHECK(w.move({0, 0, 0}, 1) == Cell{0, 0, 0});  // out of bounds
    CHECK(w.move({0, 0, 0}, 2) == Cell{0, 1, 0});
    CHECK(w.move({0, 1, 0}, 3) == Cell{0, 0, 0});
    CHECK_THROWS_AS(w.move({0, 0, 0}, 4), std::out_of_range);
    CHECK(w.open_cells().size() == 8);
  }

  TEST_CASE("cell indexing round-trips and encoding is in the unit box") {
    const env::GridWorld w({4, 3, 5}, {}, {0, 0, 0}, {3, 2, 4}, 10, 0.0, 0);
    CHECK(w.num_cells() == 60);
    for (std::size_t i = 0; i < w.num_cells(); ++i) CHECK(w.index(w.cell_at(i)) == i);
    const auto e = w.encode({3, 1, 4});
    CHECK(e == std::vector<double>{1.0, 0.5, 1.0});
  }

  TEST_CASE("invalid worlds are rejected") {
    CHECK_THROWS_AS(env::GridWorld({1, 4}, {}, {0, 0, 0}, {0, 3, 0}, 10, 0.0, 0), ConfigError);
    CHECK_THROWS_AS(env::GridWorld({3, 3}, {{0, 0, 0}}, {0, 0, 0}, {2, 2, 0}, 10, 0.0, 0), ConfigError);
    CHECK_THROWS_AS(env::make_gridworld({5, 5}, 1.0, 0), ConfigError);
    CHECK_THROWS_AS(env::make_gridworld({6, 6}, 0.95, 0, 100, 3), std::runtime_error);
  }

  TEST_CASE("generated worlds connect start and goal and are seed-stable") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto w = env::make_gridworld({25, 25}, 0.2, seed);
      CHECK(w.start() == Cell{0, 0, 0});
      CHECK(w.goal() == Cell{24, 24, 0});
      const auto reach = env::flood_fill(w, w.start());
      CHECK(std::find(reach.begin(), reach.end(), w.goal()) != reach.end());
      CHECK(w == env::make_gridworld({25, 25}, 0.2, seed));
    }
    CHECK_FALSE(env::make_gridworld({25, 25}, 0.2, 1) == env::make_gridworld({25, 25}, 0.2, 2));
  }

  TEST_CASE("shortest path is contiguous and minimal on an open grid") {
    const env::GridWorld w({6, 4}, {}, {0, 0, 0}, {5, 3, 0}, 100, 0.0, 0);
    Rng rng(3);
    const auto path = env::shortest_path(w, &rng);
    CHECK(path.size() == 9);
    CHECK(path.front() == w.start());
    CHECK(path.back() == w.goal());
    for (std::size_t i = 1; i < path.size(); ++i) CHECK(manhattan(path[i - 1], path[i]) == 1);
  }

  TEST_CASE("step rewards and termination") {
    const env::GridWorld w({2, 2}, {}, {0, 0, 0}, {1, 1, 0}, 3, 0.0, 0);
    auto r = env::step_grid(w, {1, 0, 0}, 2, 1);
    CHECK(r.next == Cell{1, 1, 0});
    CHECK(r.r_env == 1.0);
    CHECK(r.done);
    r = env::step_grid(w, {0, 0, 0}, 1, 3);
    CHECK(r.r_env == 0.0);
    CHECK(r.done);
    r = env::step_grid(w, {0, 0, 0}, 0, 1);
    CHECK_FALSE(r.done);
  }

  TEST_CASE("expert demos follow the path with the requested gap") {
    const auto w = env::make_gridworld({10, 10}, 0.2, 4);
    const auto full = env::generate_expert_demo(w, 0, 1);
    const auto sparse = env::generate_expert_demo(w, 3, 1);
    CHECK(full.records.size() == 19);  // shortest path has 18 moves
    CHECK(sparse.records.size() == 5);
    CHECK(sparse.records[1].state == full.records[4].state);
    CHECK(full.source_tag == "gridworld_bfs");
    CHECK(env::generate_expert_demo(w, 0, 1, 3).records.size() == 57);
  }

  TEST_CASE("3D expert path is contiguous and sweeps the longest axis") {
    const std::vector<int> dims{8, 20, 6};
    const auto cells = env::expert_path_cells_3d(dims, 5);
    CHECK(cells.front()[1] == 0);
    CHECK(cells.back()[1] == 19);
    for (std::size_t i = 1; i < cells.size(); ++i) CHECK(manhattan(cells[i - 1], cells[i]) == 1);
    for (const auto& c : cells) CHECK((c[0] >= 0 && c[0] < 8 && c[2] >= 0 && c[2] < 6));
    CHECK(env::expert_path_3d(dims, 5).records.size() == cells.size());
    CHECK_THROWS_AS(env::expert_path_cells_3d({5, 5}, 0), ConfigError);
  }

  TEST_CASE("chain MDP layout") {
    const auto m = env::chain_mdp();
    CHECK(m.next_state(0, 0) == 1);
    CHECK(m.next_state(0, 1) == 0);
    CHECK(m.next_state(3, 1) == 2);
    CHECK(m.next_state(4, 0) == 5);
    CHECK(m.terminal[5]);
    CHECK(m.r_env == std::vector<double>{0, 0, 0, 0, 0, 10});
    CHECK(m.r_int == std::vector<double>{1, 1, 1, 0, 0, 1});
    CHECK(env::chain_mdp(0.99, env::ChainVariant::Prose).r_int == std::vector<double>{1, 1, 0, 0, 0, 1});
  }

  TEST_CASE("rollout stops at the terminal state") {
    const auto m = env::chain_mdp();
    const auto t = env::rollout(m, 0, {0, 0, 0, 0, 0, 0, 0});
    CHECK(t.steps.size() == 5);
    CHECK(t.termination == "terminal");
    CHECK(t.r_env_sum() == 10.0);
    CHECK(t.r_int_sum() == 3.0);  // S2, S3, S6
    CHECK(t.start_bonus == 1.0);
    const auto loop = env::rollout(m, 0, {1, 1, 1});
    CHECK(loop.termination == "max_steps");
    CHECK(loop.r_int_sum() == 3.0);
  }

  TEST_CASE("MDP validation") {
    auto m = env::chain_mdp();
    m.transition[2][0] = {{3, 0.7}};
    CHECK_THROWS_AS(m.validate(), ShapeError);
    m = env::chain_mdp();
    m.gamma = 1.0;
    CHECK_THROWS_AS(m.validate(), ConfigError);
  }
}
