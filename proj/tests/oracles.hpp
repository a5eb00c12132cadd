#pragma once

// Reference implementations used only by tests. They are written from the
// defining formulas and share no code paths with the library beyond plain
// data types.

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <vector>

#include "moeguide/envs.hpp"
#include "moeguide/rng.hpp"

namespace oracle {

/// g(L) written directly from its definition.
inline double map_loss(double loss, double l_min, double l_max, double steepness, double scale, bool linear) {
  if (loss <= l_min) return scale;
  if (loss >= l_max) return 0.0;
  const double x = (loss - l_min) / (l_max - l_min);
  const double f = linear ? 1.0 - x : std::exp(-steepness * x);
  return scale * std::min(1.0, std::max(0.0, f));
}

/// Central finite differences of a scalar function of a parameter vector.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> p, double h = 1e-6) {
  std::vector<double> g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + h;
    const double up = f(p);
    p[i] = keep - h;
    const double down = f(p);
    p[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// Max over entries of |a - b| / max(|a|, |b|, floor).
inline double max_relative_error(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

/// Reward for entering s under weights (w_env, w_int).
inline double reward(const moeguide::env::TabularMDP& m, std::size_t s, double w_env, double w_int) {
  return w_env * m.r_env[s] + w_int * m.r_int[s];
}

/// Iterative evaluation of a stochastic policy pi[s][a] until the sup-norm
/// change is below tol.
inline std::vector<double> evaluate_iteratively(const moeguide::env::TabularMDP& m,
                                                const std::vector<std::vector<double>>& pi, double w_env, double w_int,
                                                double tol = 1e-14) {
  std::vector<double> v(m.n_states, 0.0), next(m.n_states, 0.0);
  for (int it = 0; it < 1'000'000; ++it) {
    double delta = 0.0;
    for (std::size_t s = 0; s < m.n_states; ++s) {
      double acc = 0.0;
      if (!m.terminal[s]) {
        for (std::size_t a = 0; a < m.n_actions; ++a) {
          for (const auto& [sp, p] : m.transition[s][a]) {
            acc += pi[s][a] * p * (reward(m, sp, w_env, w_int) + m.gamma * v[sp]);
          }
        }
      }
      next[s] = acc;
      delta = std::max(delta, std::abs(next[s] - v[s]));
    }
    v.swap(next);
    if (delta < tol) break;
  }
  return v;
}

struct BruteForceResult {
  std::vector<double> v_star;
  std::vector<std::set<std::size_t>> optimal_actions;
};

/// Enumerates every deterministic policy of a small MDP, evaluates each one
/// iteratively, takes the state-wise best values and reads off the actions
/// whose one-step lookahead attains them.
inline BruteForceResult brute_force_optimal(const moeguide::env::TabularMDP& m, double w_env, double w_int,
                                            double tie_tol = 1e-9) {
  std::size_t n_policies = 1;
  for (std::size_t s = 0; s < m.n_states; ++s) n_policies *= m.n_actions;
  BruteForceResult r;
  r.v_star.assign(m.n_states, -1e300);
  for (std::size_t code = 0; code < n_policies; ++code) {
    std::vector<std::vector<double>> pi(m.n_states, std::vector<double>(m.n_actions, 0.0));
    std::size_t c = code;
    for (std::size_t s = 0; s < m.n_states; ++s) {
      pi[s][c % m.n_actions] = 1.0;
      c /= m.n_actions;
    }
    const auto v = evaluate_iteratively(m, pi, w_env, w_int);
    for (std::size_t s = 0; s < m.n_states; ++s) r.v_star[s] = std::max(r.v_star[s], v[s]);
  }
  r.optimal_actions.resize(m.n_states);
  for (std::size_t s = 0; s < m.n_states; ++s) {
    std::vector<double> q(m.n_actions, 0.0);
    if (!m.terminal[s]) {
      for (std::size_t a = 0; a < m.n_actions; ++a) {
        for (const auto& [sp, p] : m.transition[s][a])
          q[a] += p * (reward(m, sp, w_env, w_int) + m.gamma * r.v_star[sp]);
      }
    }
    const double best = *std::max_element(q.begin(), q.end());
    for (std::size_t a = 0; a < m.n_actions; ++a) {
      if (best - q[a] <= tie_tol * std::max(1.0, std::abs(best))) r.optimal_actions[s].insert(a);
    }
  }
  return r;
}

/// Random MDP with stochastic transitions and a terminal state.
inline moeguide::env::TabularMDP random_mdp(moeguide::Rng& rng, std::size_t n, std::size_t a, double gamma) {
  moeguide::env::TabularMDP m;
  m.n_states = n;
  m.n_actions = a;
  m.gamma = gamma;
  m.transition.assign(n, std::vector<std::vector<moeguide::env::TabularMDP::Outcome>>(a));
  m.r_env.resize(n);
  m.r_int.resize(n);
  m.terminal.assign(n, false);
  m.terminal[n - 1] = true;
  for (std::size_t s = 0; s < n; ++s) {
    m.r_env[s] = rng.uniform(-1.0, 1.0);
    m.r_int[s] = rng.uniform(0.0, 1.0);
    for (std::size_t k = 0; k < a; ++k) {
      if (m.terminal[s]) {
        m.transition[s][k] = {{s, 1.0}};
        continue;
      }
      std::vector<double> w(n);
      double total = 0.0;
      for (auto& x : w) total += (x = rng.uniform());
      for (std::size_t sp = 0; sp < n; ++sp) m.transition[s][k].push_back({sp, w[sp] / total});
    }
  }
  return m;
}

inline std::vector<std::vector<double>> random_policy(moeguide::Rng& rng, std::size_t n, std::size_t a) {
  std::vector<std::vector<double>> pi(n, std::vector<double>(a));
  for (auto& row : pi) {
    double total = 0.0;
    for (auto& x : row) total += (x = rng.uniform() + 1e-3);
    for (auto& x : row) x /= total;
  }
  return pi;
}

}  // namespace oracle
