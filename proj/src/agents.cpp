#include "moeguide/agents.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "moeguide/error.hpp"
#include "moeguide/kernels.hpp"

namespace moeguide::agents {

double RewardChannel::reward(const TabularMDP& mdp, std::size_t s) const {
  switch (kind) {
    case Kind::EnvOnly:
      return mdp.r_env[s];
    case Kind::Total:
      return mdp.r_env[s] + beta * mdp.r_int[s];
    case Kind::IntOnly:
      return beta * mdp.r_int[s];
  }
  return 0.0;
}

std::vector<std::vector<double>> bellman_q(const TabularMDP& mdp, const RewardChannel& channel,
                                           const std::vector<double>& values, Exec exec) {
  std::vector<std::vector<double>> q(mdp.n_states, std::vector<double>(mdp.n_actions, 0.0));
  const auto row = [&](std::size_t s) {
    if (mdp.terminal[s]) return;
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      double acc = 0.0;
      for (const auto& [next, p] : mdp.transition[s][a]) {
        acc += p * (channel.reward(mdp, next) + mdp.gamma * values[next]);
      }
      q[s][a] = acc;
    }
  };
  if (exec == Exec::Serial) {
    for (std::size_t s = 0; s < mdp.n_states; ++s) row(s);
  } else {
    const auto n = static_cast<long long>(mdp.n_states);
#pragma omp parallel for schedule(static)
    for (long long s = 0; s < n; ++s) row(static_cast<std::size_t>(s));
  }
  return q;
}

std::vector<std::size_t> argmax_set(const std::vector<double>& values) {
  std::vector<std::size_t> out;
  if (values.empty()) return out;
  const double best = *std::max_element(values.begin(), values.end());
  const double slack = kTieTolerance * std::max(1.0, std::abs(best));
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] >= best - slack) out.push_back(i);
  }
  return out;
}

std::size_t argmax_random(const std::vector<double>& values, Rng& rng) {
  const auto set = argmax_set(values);
  return set.size() == 1 ? set.front() : set[rng.below(set.size())];
}

PolicySet greedy_sets(const std::vector<std::vector<double>>& q) {
  PolicySet sets(q.size());
  for (std::size_t s = 0; s < q.size(); ++s) {
    const auto best = argmax_set(q[s]);
    sets[s] = std::set<std::size_t>(best.begin(), best.end());
  }
  return sets;
}

ValueIterationResult value_iteration(const TabularMDP& mdp, const RewardChannel& channel, double tol, Exec exec,
                                     std::size_t max_iterations) {
  mdp.validate();
  ValueIterationResult r;
  r.values.assign(mdp.n_states, 0.0);
  std::vector<double> next(mdp.n_states, 0.0);
  while (r.iterations < max_iterations) {
    const auto q = bellman_q(mdp, channel, r.values, exec);
    double residual = 0.0;
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
      next[s] = mdp.terminal[s] ? 0.0 : *std::max_element(q[s].begin(), q[s].end());
      residual = std::max(residual, std::abs(next[s] - r.values[s]));
    }
    r.values.swap(next);
    ++r.iterations;
    r.residual = residual;
    if (!std::isfinite(residual)) throw NonFiniteError("value iteration diverged");
    if (residual < tol) break;
  }
  r.q = bellman_q(mdp, channel, r.values, exec);
  r.policy = greedy_sets(r.q);
  return r;
}

Policy uniform_over(const PolicySet& sets, std::size_t n_actions) {
  Policy pi(sets.size(), std::vector<double>(n_actions, 0.0));
  for (std::size_t s = 0; s < sets.size(); ++s) {
    if (sets[s].empty()) {
      std::fill(pi[s].begin(), pi[s].end(), 1.0 / static_cast<double>(n_actions));
      continue;
    }
    for (std::size_t a : sets[s]) pi[s][a] = 1.0 / static_cast<double>(sets[s].size());
  }
  return pi;
}

std::vector<double> evaluate_policy(const TabularMDP& mdp, const Policy& pi, const RewardChannel& channel) {
  mdp.validate();
  if (pi.size() != mdp.n_states) throw ShapeError("policy has wrong number of states");
  const auto n = static_cast<Eigen::Index>(mdp.n_states);
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    if (mdp.terminal[s]) continue;
    if (pi[s].size() != mdp.n_actions) throw ShapeError("policy row has wrong action count");
    const auto row = static_cast<Eigen::Index>(s);
    for (std::size_t a = 0; a < mdp.n_actions; ++a) {
      if (pi[s][a] == 0.0) continue;
      for (const auto& [next, p] : mdp.transition[s][a]) {
        const double w = pi[s][a] * p;
        b(row) += w * channel.reward(mdp, next);
        A(row, static_cast<Eigen::Index>(next)) -= mdp.gamma * w;
      }
    }
  }
  const Eigen::VectorXd v = A.partialPivLu().solve(b);
  return std::vector<double>(v.data(), v.data() + v.size());
}

InvarianceReport verify_invariance(const TabularMDP& mdp_in, const std::vector<double>& r_int, double beta,
                                   double gamma, double tol) {
  TabularMDP mdp = mdp_in;
  mdp.r_int = r_int;
  mdp.gamma = gamma;
  mdp.validate();
  InvarianceReport rep;
  const auto env = value_iteration(mdp, RewardChannel::env_only(), tol);
  const auto total = value_iteration(mdp, RewardChannel::total(beta), tol);
  rep.env_policy = env.policy;
  rep.total_policy = total.policy;
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    if (env.policy[s] != total.policy[s]) rep.diff_states.push_back(s);
  }
  rep.policies_equal = rep.diff_states.empty();
  rep.v_env_optimal = evaluate_policy(mdp, uniform_over(env.policy, mdp.n_actions), RewardChannel::env_only());
  rep.v_env_of_total_policy =
      evaluate_policy(mdp, uniform_over(total.policy, mdp.n_actions), RewardChannel::env_only());
  for (std::size_t s = 0; s < mdp.n_states; ++s) {
    rep.v_env_gap = std::max(rep.v_env_gap, rep.v_env_optimal[s] - rep.v_env_of_total_policy[s]);
  }
  return rep;
}

double EpsilonSchedule::at(std::size_t episode, std::size_t episodes) const {
  const double horizon = anneal_fraction * static_cast<double>(episodes);
  if (horizon <= 0.0) return end;
  const double frac = std::min(1.0, static_cast<double>(episode) / horizon);
  return start + (end - start) * frac;
}

namespace {

std::size_t sample_next(const TabularMDP& mdp, std::size_t s, std::size_t a, Rng& rng) {
  const auto& outs = mdp.transition[s][a];
  if (outs.size() == 1) return outs.front().first;
  double u = rng.uniform();
  for (const auto& [next, p] : outs) {
    if (u < p) return next;
    u -= p;
  }
  return outs.back().first;
}

}  // namespace

QLearnResult q_learn(const TabularMDP& mdp, const QLearnConfig& cfg) {
  mdp.validate();
  cfg.decay.validate();
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) throw ConfigError("agent.alpha must lie in (0, 1]");
  if (cfg.start_state >= mdp.n_states) throw ConfigError("agent.start_state out of range");
  Rng rng(cfg.seed);
  QLearnResult res;
  res.q.assign(mdp.n_states, std::vector<double>(mdp.n_actions, 0.0));
  std::uint64_t t = 0;
  std::vector<bool> visited(mdp.n_states);
  std::vector<bool> rewarded(mdp.n_states);
  for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
    const double eps = cfg.epsilon.at(ep, cfg.episodes);
    std::fill(visited.begin(), visited.end(), false);
    std::fill(rewarded.begin(), rewarded.end(), false);
    std::size_t s = cfg.start_state;
    visited[s] = true;
    CurveRow row;
    row.episode = ep;
    // The start state's intrinsic reward is granted on arrival.
    row.r_int_sum = mdp.r_int[s];
    if (cfg.mode == shaping::IntegrationMode::RewardSum) rewarded[s] = true;
    for (std::size_t k = 0; k < cfg.max_episode_steps && !mdp.terminal[s]; ++k) {
      const std::size_t a =
          rng.uniform() < eps ? static_cast<std::size_t>(rng.below(mdp.n_actions)) : argmax_random(res.q[s], rng);
      const std::size_t next = sample_next(mdp, s, a, rng);
      const double beta = shaping::beta_at(cfg.decay, t);
      const std::size_t bonus_state = cfg.mode == shaping::IntegrationMode::RewardSum ? next : s;
      double r_int = mdp.r_int[bonus_state];
      if (cfg.episodic_novelty && rewarded[bonus_state]) r_int = 0.0;
      rewarded[bonus_state] = true;
      visited[next] = true;
      const auto rec = shaping::combine_reward(mdp.r_env[next], beta * r_int, cfg.mode);
      const double max_next = mdp.terminal[next] ? 0.0 : *std::max_element(res.q[next].begin(), res.q[next].end());
      double& qsa = res.q[s][a];
      qsa = shaping::q_update(qsa, cfg.alpha, mdp.gamma, max_next, rec);
      if (!std::isfinite(qsa)) {
        throw NonFiniteError("non-finite Q entry at step " + std::to_string(t));
      }
      row.r_env_sum += mdp.r_env[next];
      row.r_int_sum += r_int;
      row.beta = beta;
      ++t;
      s = next;
    }
    row.step = static_cast<std::size_t>(t);
    row.coverage =
        static_cast<double>(std::count(visited.begin(), visited.end(), true)) / static_cast<double>(mdp.n_states);
    res.curve.push_back(row);
  }
  res.greedy = greedy_sets(res.q);
  return res;
}

std::vector<std::size_t> greedy_rollout(const TabularMDP& mdp, const PolicySet& policy, std::size_t start,
                                        std::size_t limit) {
  std::vector<std::size_t> states{start};
  std::size_t s = start;
  for (std::size_t k = 0; k < limit && !mdp.terminal[s]; ++k) {
    s = mdp.transition[s][*policy[s].begin()].front().first;
    states.push_back(s);
  }
  return states;
}

bool greedy_reaches_terminal(const TabularMDP& mdp, const PolicySet& policy, std::size_t start) {
  std::vector<bool> seen(mdp.n_states, false);
  std::vector<std::size_t> stack{start};
  seen[start] = true;
  while (!stack.empty()) {
    const std::size_t s = stack.back();
    stack.pop_back();
    if (mdp.terminal[s]) return true;
    for (std::size_t a : policy[s]) {
      for (const auto& [next, p] : mdp.transition[s][a]) {
        if (p > 0.0 && !seen[next]) {
          seen[next] = true;
          stack.push_back(next);
        }
      }
    }
  }
  return false;
}

MoEGuideBonus::MoEGuideBonus(const env::GridWorld& world, const moe::MoEModel& model, shaping::MappingConfig mapping,
                             shaping::DecaySchedule decay)
    : world_(&world), decay_(decay) {
  mapping.validate();
  decay.validate();
  std::vector<moe::Vector> states;
  states.reserve(world.num_cells());
  for (std::size_t i = 0; i < world.num_cells(); ++i) states.push_back(world.encode(world.cell_at(i)));
  const auto losses = kernels::batch_loss(model, states, Exec::Parallel);
  bonus_.resize(losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i) bonus_[i] = shaping::map_loss(losses[i], mapping);
}

namespace {
moe::Vector as_key(const env::Cell& c) {
  return {static_cast<double>(c[0]), static_cast<double>(c[1]), static_cast<double>(c[2])};
}
}  // namespace

double MoEGuideBonus::peek(const env::Cell&, int, const env::Cell& to) {
  if (mask_.visited(as_key(to))) return 0.0;
  return shaping::beta_at(decay_, t_) * bonus_[world_->index(to)];
}

double MoEGuideBonus::observe(const env::Cell&, int, const env::Cell& to) {
  const double beta = shaping::beta_at(decay_, t_);
  ++t_;
  if (!mask_.mark(as_key(to))) return 0.0;
  return beta * bonus_[world_->index(to)];
}

void MoEGuideBonus::begin_episode(const env::Cell& start) {
  mask_.reset();
  t_ = 0;
  mask_.mark(as_key(start));
}

ExplorerTrace greedy_intrinsic_explore(const env::GridWorld& world, BonusSource& bonus, std::size_t max_steps,
                                       std::uint64_t seed, const std::vector<env::Cell>& demo_cells) {
  Rng rng(seed);
  ExplorerTrace trace;
  env::Cell cur = world.start();
  trace.cells.push_back(cur);
  bonus.begin_episode(cur);
  std::vector<bool> seen(world.num_cells(), false);
  seen[world.index(cur)] = true;
  std::vector<double> values(static_cast<std::size_t>(world.num_actions()));
  for (std::size_t step = 0; step < max_steps; ++step) {
    for (int a = 0; a < world.num_actions(); ++a) {
      values[static_cast<std::size_t>(a)] = bonus.peek(cur, a, world.move(cur, a));
    }
    const int a = static_cast<int>(argmax_random(values, rng));
    const env::Cell next = world.move(cur, a);
    trace.rewards.push_back(bonus.observe(cur, a, next));
    trace.actions.push_back(a);
    trace.cells.push_back(next);
    seen[world.index(next)] = true;
    cur = next;
  }
  const auto open = world.open_cells();
  std::size_t open_seen = 0;
  for (const auto& c : open) open_seen += seen[world.index(c)] ? 1 : 0;
  trace.cell_coverage = open.empty() ? 0.0 : static_cast<double>(open_seen) / static_cast<double>(open.size());
  if (!demo_cells.empty()) {
    std::set<env::Cell> unique(demo_cells.begin(), demo_cells.end());
    std::size_t hit = 0;
    for (const auto& c : unique) hit += seen[world.index(c)] ? 1 : 0;
    trace.demo_coverage = static_cast<double>(hit) / static_cast<double>(unique.size());
  }
  return trace;
}

}  // namespace moeguide::agents
