#pragma once

// Desk-scale environments: 2D/3D gridworlds with random walls, the six-state
// chain MDP, and a generic finite MDP container.

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "moeguide/moe.hpp"

namespace moeguide::env {

using Cell = std::array<int, 3>;  // z = 0 for 2D worlds

class GridWorld {
 public:
  GridWorld() = default;
  /// `dims` has 2 or 3 entries, each >= 2. Walls must not contain start/goal.
  GridWorld(std::vector<int> dims, std::set<Cell> walls, Cell start, Cell goal, int max_steps, double wall_density,
            std::uint64_t seed);

  std::size_t rank() const { return dims_.size(); }
  const std::vector<int>& dims() const { return dims_; }
  const std::set<Cell>& walls() const { return walls_; }
  const Cell& start() const { return start_; }
  const Cell& goal() const { return goal_; }
  int max_steps() const { return max_steps_; }
  double wall_density() const { return wall_density_; }
  std::uint64_t seed() const { return seed_; }

  /// 2 actions per axis: 2k moves +1 along axis k, 2k+1 moves -1.
  int num_actions() const { return 2 * static_cast<int>(rank()); }
  std::size_t num_cells() const;

  bool in_bounds(const Cell& c) const;
  bool is_wall(const Cell& c) const { return walls_.contains(c); }
  bool is_open(const Cell& c) const { return in_bounds(c) && !is_wall(c); }

  /// Cell reached by `action`; blocked or out-of-bounds moves stay put.
  Cell move(const Cell& c, int action) const;

  /// Coordinates scaled to [0, 1] per axis.
  moe::Vector encode(const Cell& c) const;

  std::size_t index(const Cell& c) const;
  Cell cell_at(std::size_t index) const;
  std::vector<Cell> open_cells() const;

  bool operator==(const GridWorld&) const = default;

 private:
  std::vector<int> dims_;
  std::set<Cell> walls_;
  Cell start_{0, 0, 0};
  Cell goal_{0, 0, 0};
  int max_steps_ = 1000;
  double wall_density_ = 0.0;
  std::uint64_t seed_ = 0;
};

/// Random walls at the given density, start at the origin corner and goal
/// at the far corner. Wall sets are redrawn until start reaches goal.
GridWorld make_gridworld(std::vector<int> dims, double wall_density, std::uint64_t seed, int max_steps = 1000,
                         int max_retries = 1000);

/// Cells reachable from `from` by 4/6-connected moves.
std::vector<Cell> flood_fill(const GridWorld& world, const Cell& from);

/// A shortest start->goal path (breadth-first). Ties between equally short
/// predecessors are broken by `rng` when given, else by action order.
std::vector<Cell> shortest_path(const GridWorld& world, Rng* rng = nullptr);

struct StepResult {
  Cell next;
  double r_env = 0.0;
  bool done = false;
};

/// One move; r_env is 1 on entering the goal and 0 otherwise. `steps_taken`
/// counts this step; done at the goal or when it reaches max_steps.
StepResult step_grid(const GridWorld& world, const Cell& cell, int action, int steps_taken = 1);

/// Shortest path, encoded as states, subsampled with stride gap+1.
moe::DemoSet generate_expert_demo(const GridWorld& world, std::size_t gap, std::uint64_t seed,
                                  std::size_t episodes = 1);

/// Continuous path through a 3D grid: random waypoints joined by
/// axis-aligned unit steps, sweeping the longest axis end to end.
std::vector<Cell> expert_path_cells_3d(const std::vector<int>& dims, std::uint64_t seed);
moe::DemoSet expert_path_3d(const std::vector<int>& dims, std::uint64_t seed);

/// Finite MDP with state-indexed reward channels. Rewards are granted on
/// entering a state; terminal states are absorbing with zero reward.
struct TabularMDP {
  using Outcome = std::pair<std::size_t, double>;  // (next state, probability)

  std::size_t n_states = 0;
  std::size_t n_actions = 0;
  std::vector<std::vector<std::vector<Outcome>>> transition;  // [s][a]
  std::vector<double> r_env;
  std::vector<double> r_int;
  std::vector<bool> terminal;
  double gamma = 0.99;

  /// Throws ShapeError / ConfigError on violated invariants.
  void validate() const;

  /// Deterministic successor; throws if the transition is stochastic.
  std::size_t next_state(std::size_t s, std::size_t a) const;
};

enum class ChainVariant {
  Table,  // intrinsic +1 at S1, S2, S3, S6
  Prose,  // intrinsic +1 at S1, S2, S6
};

/// Six states S1..S6 (indices 0..5); a0 moves right, a1 moves left (S1 stays
/// on a1). Extrinsic +10 at S6, which is terminal.
TabularMDP chain_mdp(double gamma = 0.99, ChainVariant variant = ChainVariant::Table);

struct Transition {
  std::size_t state = 0;
  std::size_t action = 0;
  double r_env = 0.0;
  double r_int = 0.0;
  std::size_t next_state = 0;
};

struct Trajectory {
  std::vector<Transition> steps;
  std::uint64_t seed = 0;
  double start_bonus = 0.0;  // intrinsic reward of the initial state
  std::string termination;   // "terminal", "max_steps"

  double r_env_sum() const;
  double r_int_sum() const;  // over transitions; excludes start_bonus
};

/// Follows an action sequence on a deterministic MDP until it ends or a
/// terminal state is entered.
Trajectory rollout(const TabularMDP& mdp, std::size_t start, const std::vector<std::size_t>& actions);

}  // namespace moeguide::env
