#pragma once

// Tabular dynamic programming, Q-learning with a state-only bonus, and the
// greedy intrinsic explorer used on gridworlds.

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "moeguide/envs.hpp"
#include "moeguide/exec.hpp"
#include "moeguide/shaping.hpp"

namespace moeguide::agents {

using env::TabularMDP;

// Which rewards value iteration and policy evaluation see.
struct RewardChannel {
  enum class Kind { EnvOnly, Total, IntOnly };
  Kind kind = Kind::EnvOnly;
  double beta = 0.0;  // weight of r_int for Total and IntOnly

  static RewardChannel env_only() { return {Kind::EnvOnly, 0.0}; }
  static RewardChannel total(double beta) { return {Kind::Total, beta}; }
  static RewardChannel int_only(double beta) { return {Kind::IntOnly, beta}; }

  /// Reward for entering state s.
  double reward(const TabularMDP& mdp, std::size_t s) const;
};

/// Actions whose Q-value is within this relative tolerance of the best are
/// treated as tied.
inline constexpr double kTieTolerance = 1e-9;

using PolicySet = std::vector<std::set<std::size_t>>;  // optimal actions per state

struct ValueIterationResult {
  std::vector<double> values;
  std::vector<std::vector<double>> q;  // [s][a]
  PolicySet policy;
  std::size_t iterations = 0;
  double residual = 0.0;  // sup-norm change of the last sweep
};

/// Q(s, a) = sum_s' P(s'|s,a) (R(s') + gamma V(s')) for every pair; terminal
/// rows are zero. Serial and OpenMP variants agree bit for bit.
std::vector<std::vector<double>> bellman_q(const TabularMDP& mdp, const RewardChannel& channel,
                                           const std::vector<double>& values, Exec exec);

/// Synchronous Bellman backups until the sup-norm change drops below `tol`.
ValueIterationResult value_iteration(const TabularMDP& mdp, const RewardChannel& channel, double tol = 1e-12,
                                     Exec exec = Exec::Parallel, std::size_t max_iterations = 1'000'000);

PolicySet greedy_sets(const std::vector<std::vector<double>>& q);

/// Stochastic policy table pi[s][a].
using Policy = std::vector<std::vector<double>>;

/// Uniform over the actions of each policy set.
Policy uniform_over(const PolicySet& sets, std::size_t n_actions);

/// Exact V^pi via a dense linear solve of (I - gamma P_pi) V = R_pi.
std::vector<double> evaluate_policy(const TabularMDP& mdp, const Policy& pi, const RewardChannel& channel);

struct InvarianceReport {
  bool policies_equal = true;
  std::vector<std::size_t> diff_states;
  PolicySet env_policy;
  PolicySet total_policy;
  std::vector<double> v_env_optimal;
  // V_env of the total-reward-optimal policy (uniform over its ties).
  std::vector<double> v_env_of_total_policy;
  double v_env_gap = 0.0;  // max over states of the difference
};

/// Compares greedy policy sets under r_env and r_env + beta * r_int on `mdp`
/// with discount `gamma` and the supplied intrinsic table.
InvarianceReport verify_invariance(const TabularMDP& mdp, const std::vector<double>& r_int, double beta, double gamma,
                                   double tol = 1e-12);

struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.05;
  double anneal_fraction = 0.5;  // fraction of episodes over which to anneal

  double at(std::size_t episode, std::size_t episodes) const;
};

struct QLearnConfig {
  std::size_t episodes = 500;
  std::size_t max_episode_steps = 50;
  double alpha = 0.5;
  EpsilonSchedule epsilon;
  shaping::DecaySchedule decay;
  shaping::IntegrationMode mode = shaping::IntegrationMode::RewardSum;
  bool episodic_novelty = false;  // intrinsic reward once per state per episode
  std::size_t start_state = 0;
  std::uint64_t seed = 0;
};

struct CurveRow {
  std::size_t step = 0;  // cumulative environment steps at episode end
  std::size_t episode = 0;
  double r_env_sum = 0.0;
  double r_int_sum = 0.0;  // unweighted intrinsic reward collected
  double beta = 0.0;       // beta at episode end
  double coverage = 0.0;   // fraction of states visited in the episode
};

struct QLearnResult {
  std::vector<std::vector<double>> q;
  std::vector<CurveRow> curve;
  PolicySet greedy;
};

/// Epsilon-greedy Q-learning on the MDP's own r_env and r_int tables. Beta
/// decays once per environment step. RewardSum adds beta_t r_int(s') to the
/// TD reward; TDAdditive adds beta_t r_int(s) outside the TD error.
QLearnResult q_learn(const TabularMDP& mdp, const QLearnConfig& cfg);

/// States visited by following the first action of each greedy set from
/// `start` for at most `limit` steps; stops at a terminal state.
std::vector<std::size_t> greedy_rollout(const TabularMDP& mdp, const PolicySet& policy, std::size_t start,
                                        std::size_t limit);

/// True if some sequence of greedy choices (any tie) leads from start to a
/// terminal state.
bool greedy_reaches_terminal(const TabularMDP& mdp, const PolicySet& policy, std::size_t start);

/// Picks uniformly among the indices whose value is within tolerance of the
/// maximum.
std::size_t argmax_random(const std::vector<double>& values, Rng& rng);
std::vector<std::size_t> argmax_set(const std::vector<double>& values);

// ---------------------------------------------------------------- explorer

/// Intrinsic reward source for the greedy gridworld explorer.
class BonusSource {
 public:
  virtual ~BonusSource() = default;
  virtual std::string name() const = 0;
  /// Bonus the agent would get for the move, without side effects.
  virtual double peek(const env::Cell& from, int action, const env::Cell& to) = 0;
  /// Bonus for the move actually taken; updates internal state.
  virtual double observe(const env::Cell& from, int action, const env::Cell& to) = 0;
  /// Called once with the start cell before the first step.
  virtual void begin_episode(const env::Cell& start) = 0;
};

/// Shaped similarity reward, granted once per state per episode.
class MoEGuideBonus final : public BonusSource {
 public:
  MoEGuideBonus(const env::GridWorld& world, const moe::MoEModel& model, shaping::MappingConfig mapping,
                shaping::DecaySchedule decay);

  std::string name() const override { return "moe_guide"; }
  double peek(const env::Cell& from, int action, const env::Cell& to) override;
  double observe(const env::Cell& from, int action, const env::Cell& to) override;
  void begin_episode(const env::Cell& start) override;

  /// Unmasked mapped loss of a cell, before beta (cached).
  double raw_bonus(const env::Cell& c) const { return bonus_[world_->index(c)]; }

 private:
  const env::GridWorld* world_;
  shaping::DecaySchedule decay_;
  std::vector<double> bonus_;  // map_loss(L(cell)) for every cell
  shaping::NoveltyMask mask_{1.0};
  std::uint64_t t_ = 0;
};

struct ExplorerTrace {
  std::vector<env::Cell> cells;  // cells[0] is the start
  std::vector<int> actions;
  std::vector<double> rewards;  // intrinsic reward per step
  double demo_coverage = 0.0;   // fraction of demo cells visited
  double cell_coverage = 0.0;   // fraction of open cells visited
};

/// At every step, peeks the bonus of each action's successor, chooses
/// uniformly among the maximizers, and observes the chosen move. Extrinsic
/// reward is ignored and the goal does not end the walk.
ExplorerTrace greedy_intrinsic_explore(const env::GridWorld& world, BonusSource& bonus, std::size_t max_steps,
                                       std::uint64_t seed, const std::vector<env::Cell>& demo_cells = {});

}  // namespace moeguide::agents
