#include "moeguide/envs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "moeguide/error.hpp"

namespace moeguide::env {

GridWorld::GridWorld(std::vector<int> dims, std::set<Cell> walls, Cell start, Cell goal, int max_steps,
                     double wall_density, std::uint64_t seed)
    : dims_(std::move(dims)),
      walls_(std::move(walls)),
      start_(start),
      goal_(goal),
      max_steps_(max_steps),
      wall_density_(wall_density),
      seed_(seed) {
  if (dims_.size() != 2 && dims_.size() != 3) throw ConfigError("world.dims must have 2 or 3 entries");
  for (int d : dims_) {
    if (d < 2) throw ConfigError("world.dims entries must be >= 2");
  }
  if (max_steps_ < 1) throw ConfigError("world.max_steps must be >= 1");
  if (!(wall_density_ >= 0.0 && wall_density_ < 1.0)) throw ConfigError("world.wall_density must lie in [0, 1)");
  if (!in_bounds(start_) || !in_bounds(goal_)) throw ConfigError("world start/goal out of bounds");
  if (is_wall(start_) || is_wall(goal_)) throw ConfigError("world start/goal must not be walls");
  for (const auto& w : walls_) {
    if (!in_bounds(w)) throw ConfigError("world wall cell out of bounds");
  }
}

std::size_t GridWorld::num_cells() const {
  std::size_t n = 1;
  for (int d : dims_) n *= static_cast<std::size_t>(d);
  return n;
}

bool GridWorld::in_bounds(const Cell& c) const {
  for (std::size_t k = 0; k < 3; ++k) {
    const int extent = k < dims_.size() ? dims_[k] : 1;
    if (c[k] < 0 || c[k] >= extent) return false;
  }
  return true;
}

Cell GridWorld::move(const Cell& c, int action) const {
  if (action < 0 || action >= num_actions()) {
    throw std::out_of_range("invalid action index " + std::to_string(action));
  }
  Cell next = c;
  next[static_cast<std::size_t>(action / 2)] += (action % 2 == 0) ? 1 : -1;
  return is_open(next) ? next : c;
}

moe::Vector GridWorld::encode(const Cell& c) const {
  moe::Vector v(rank());
  for (std::size_t k = 0; k < rank(); ++k) v[k] = static_cast<double>(c[k]) / (dims_[k] - 1);
  return v;
}

std::size_t GridWorld::index(const Cell& c) const {
  const std::size_t w = static_cast<std::size_t>(dims_[0]);
  const std::size_t h = static_cast<std::size_t>(dims_[1]);
  return static_cast<std::size_t>(c[0]) + w * (static_cast<std::size_t>(c[1]) + h * static_cast<std::size_t>(c[2]));
}

Cell GridWorld::cell_at(std::size_t i) const {
  const std::size_t w = static_cast<std::size_t>(dims_[0]);
  const std::size_t h = static_cast<std::size_t>(dims_[1]);
  return {static_cast<int>(i % w), static_cast<int>((i / w) % h), static_cast<int>(i / (w * h))};
}

std::vector<Cell> GridWorld::open_cells() const {
  std::vector<Cell> out;
  for (std::size_t i = 0; i < num_cells(); ++i) {
    const Cell c = cell_at(i);
    if (!is_wall(c)) out.push_back(c);
  }
  return out;
}

std::vector<Cell> flood_fill(const GridWorld& world, const Cell& from) {
  std::vector<Cell> reached;
  if (!world.is_open(from)) return reached;
  std::vector<bool> seen(world.num_cells(), false);
  std::deque<Cell> frontier{from};
  seen[world.index(from)] = true;
  while (!frontier.empty()) {
    const Cell c = frontier.front();
    frontier.pop_front();
    reached.push_back(c);
    for (int a = 0; a < world.num_actions(); ++a) {
      const Cell n = world.move(c, a);
      if (n == c || seen[world.index(n)]) continue;
      seen[world.index(n)] = true;
      frontier.push_back(n);
    }
  }
  return reached;
}

GridWorld make_gridworld(std::vector<int> dims, double wall_density, std::uint64_t seed, int max_steps,
                         int max_retries) {
  if (!(wall_density >= 0.0 && wall_density < 1.0)) throw ConfigError("world.wall_density must lie in [0, 1)");
  const Cell start{0, 0, 0};
  Cell goal{0, 0, 0};
  for (std::size_t k = 0; k < dims.size() && k < 3; ++k) goal[k] = dims[k] - 1;
  const GridWorld open(dims, {}, start, goal, max_steps, wall_density, seed);
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(attempt)));
    std::set<Cell> walls;
    for (std::size_t i = 0; i < open.num_cells(); ++i) {
      const Cell c = open.cell_at(i);
      const bool wall = rng.uniform() < wall_density;
      if (wall && c != start && c != goal) walls.insert(c);
    }
    GridWorld world(dims, std::move(walls), start, goal, max_steps, wall_density, seed);
    const auto reach = flood_fill(world, start);
    if (std::find(reach.begin(), reach.end(), goal) != reach.end()) return world;
  }
  std::ostringstream msg;
  msg << "could not generate a connected world after " << max_retries << " attempts (density " << wall_density << ")";
  throw std::runtime_error(msg.str());
}

std::vector<Cell> shortest_path(const GridWorld& world, Rng* rng) {
  std::vector<int> dist(world.num_cells(), -1);
  std::deque<Cell> frontier{world.start()};
  dist[world.index(world.start())] = 0;
  while (!frontier.empty()) {
    const Cell c = frontier.front();
    frontier.pop_front();
    if (c == world.goal()) break;
    for (int a = 0; a < world.num_actions(); ++a) {
      const Cell n = world.move(c, a);
      if (n == c || dist[world.index(n)] >= 0) continue;
      dist[world.index(n)] = dist[world.index(c)] + 1;
      frontier.push_back(n);
    }
  }
  if (dist[world.index(world.goal())] < 0) throw std::runtime_error("goal is unreachable from start");
  std::vector<Cell> path{world.goal()};
  Cell c = world.goal();
  while (c != world.start()) {
    std::vector<Cell> preds;
    for (int a = 0; a < world.num_actions(); ++a) {
      const Cell n = world.move(c, a);
      if (n != c && dist[world.index(n)] == dist[world.index(c)] - 1) preds.push_back(n);
    }
    c = rng != nullptr ? preds[rng->below(preds.size())] : preds.front();
    path.push_back(c);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

StepResult step_grid(const GridWorld& world, const Cell& cell, int action, int steps_taken) {
  if (!world.is_open(cell)) throw std::invalid_argument("step_grid: cell is a wall or out of bounds");
  StepResult r;
  r.next = world.move(cell, action);
  if (r.next == world.goal()) {
    r.r_env = 1.0;
    r.done = true;
  }
  if (steps_taken >= world.max_steps()) r.done = true;
  return r;
}

moe::DemoSet generate_expert_demo(const GridWorld& world, std::size_t gap, std::uint64_t seed, std::size_t episodes) {
  moe::DemoSet full;
  full.source_tag = "gridworld_bfs";
  for (std::size_t e = 0; e < episodes; ++e) {
    Rng rng(mix_seed(seed, e));
    const auto path = shortest_path(world, &rng);
    for (std::size_t i = 0; i < path.size(); ++i) {
      full.records.push_back({static_cast<std::int64_t>(e), static_cast<std::int64_t>(i), world.encode(path[i])});
    }
  }
  return moe::subsample_demos(full, gap);
}

std::vector<Cell> expert_path_cells_3d(const std::vector<int>& dims, std::uint64_t seed) {
  if (dims.size() != 3) throw ConfigError("expert path needs 3D world.dims");
  for (int d : dims) {
    if (d < 2) throw ConfigError("world.dims entries must be >= 2");
  }
  Rng rng(seed);
  const std::size_t main_axis = static_cast<std::size_t>(std::max_element(dims.begin(), dims.end()) - dims.begin());
  const int n_waypoints = 4;
  std::vector<Cell> waypoints;
  for (int w = 0; w < n_waypoints; ++w) {
    Cell c{};
    for (std::size_t k = 0; k < 3; ++k) {
      if (k == main_axis) {
        c[k] = static_cast<int>(std::lround(static_cast<double>(w) * (dims[k] - 1) / (n_waypoints - 1)));
      } else {
        c[k] = static_cast<int>(rng.below(static_cast<std::uint64_t>(dims[k])));
      }
    }
    waypoints.push_back(c);
  }
  std::vector<Cell> path{waypoints.front()};
  for (std::size_t w = 1; w < waypoints.size(); ++w) {
    Cell cur = path.back();
    const Cell& target = waypoints[w];
    while (cur != target) {
      std::vector<std::size_t> axes;
      for (std::size_t k = 0; k < 3; ++k) {
        if (cur[k] != target[k]) axes.push_back(k);
      }
      const std::size_t k = axes[rng.below(axes.size())];
      cur[k] += target[k] > cur[k] ? 1 : -1;
      path.push_back(cur);
    }
  }
  return path;
}

moe::DemoSet expert_path_3d(const std::vector<int>& dims, std::uint64_t seed) {
  const auto cells = expert_path_cells_3d(dims, seed);
  const GridWorld box(dims, {}, {0, 0, 0}, {dims[0] - 1, dims[1] - 1, dims[2] - 1}, 1, 0.0, seed);
  moe::DemoSet demos;
  demos.source_tag = "expert_path_3d";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    demos.records.push_back({0, static_cast<std::int64_t>(i), box.encode(cells[i])});
  }
  return demos;
}

void TabularMDP::validate() const {
  if (n_states == 0 || n_actions == 0) throw ShapeError("MDP needs at least one state and one action");
  if (transition.size() != n_states || r_env.size() != n_states || r_int.size() != n_states ||
      terminal.size() != n_states) {
    throw ShapeError("MDP tables must have n_states rows");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("agent.gamma must lie in [0, 1)");
  for (std::size_t s = 0; s < n_states; ++s) {
    if (transition[s].size() != n_actions) throw ShapeError("MDP transition row has wrong action count");
    for (std::size_t a = 0; a < n_actions; ++a) {
      double total = 0.0;
      if (transition[s][a].empty()) throw ShapeError("MDP transition with no outcome");
      for (const auto& [next, p] : transition[s][a]) {
        if (next >= n_states) throw ShapeError("MDP transition target out of range");
        if (!(p >= 0.0)) throw ShapeError("MDP transition probability negative");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-9) throw ShapeError("MDP transition probabilities do not sum to 1");
    }
  }
}

std::size_t TabularMDP::next_state(std::size_t s, std::size_t a) const {
  const auto& outs = transition.at(s).at(a);
  if (outs.size() != 1) throw std::logic_error("next_state called on a stochastic transition");
  return outs.front().first;
}

TabularMDP chain_mdp(double gamma, ChainVariant variant) {
  TabularMDP m;
  m.n_states = 6;
  m.n_actions = 2;
  m.gamma = gamma;
  m.transition.assign(6, std::vector<std::vector<TabularMDP::Outcome>>(2));
  for (std::size_t s = 0; s < 6; ++s) {
    m.transition[s][0] = {{std::min<std::size_t>(s + 1, 5), 1.0}};
    m.transition[s][1] = {{s == 0 ? 0 : s - 1, 1.0}};
  }
  m.r_env = {0, 0, 0, 0, 0, 10};
  if (variant == ChainVariant::Table) {
    m.r_int = {1, 1, 1, 0, 0, 1};
  } else {
    m.r_int = {1, 1, 0, 0, 0, 1};
  }
  m.terminal = {false, false, false, false, false, true};
  m.validate();
  return m;
}

double Trajectory::r_env_sum() const {
  double total = 0.0;
  for (const auto& t : steps) total += t.r_env;
  return total;
}

double Trajectory::r_int_sum() const {
  double total = 0.0;
  for (const auto& t : steps) total += t.r_int;
  return total;
}

Trajectory rollout(const TabularMDP& mdp, std::size_t start, const std::vector<std::size_t>& actions) {
  Trajectory traj;
  traj.start_bonus = mdp.r_int.at(start);
  traj.termination = "max_steps";
  std::size_t s = start;
  for (std::size_t a : actions) {
    if (mdp.terminal[s]) break;
    const std::size_t next = mdp.next_state(s, a);
    traj.steps.push_back({s, a, mdp.r_env[next], mdp.r_int[next], next});
    s = next;
    if (mdp.terminal[s]) {
      traj.termination = "terminal";
      break;
    }
  }
  return traj;
}

}  // namespace moeguide::env
