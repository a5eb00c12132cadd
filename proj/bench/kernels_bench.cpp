// Serial vs OpenMP timings for the batch kernels.

#include <chrono>
#include <cstdio>
#include <numeric>

#include "moeguide/agents.hpp"
#include "moeguide/kernels.hpp"

using namespace moeguide;

namespace {

template <class F>
double best_ms(F&& f, int reps = 5) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

void report(const char* name, double serial, double parallel, bool equal) {
  std::printf("%-22s serial %9.3f ms  parallel %9.3f ms  speedup %5.2fx  %s\n", name, serial, parallel,
              serial / parallel, equal ? "bitwise-equal" : "MISMATCH");
}

env::TabularMDP random_mdp(std::size_t n, std::size_t a, Rng& rng) {
  env::TabularMDP m;
  m.n_states = n;
  m.n_actions = a;
  m.gamma = 0.95;
  m.transition.assign(n, std::vector<std::vector<env::TabularMDP::Outcome>>(a));
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t k = 0; k < a; ++k) {
      for (int j = 0; j < 4; ++j) m.transition[s][k].push_back({rng.below(n), 0.25});
    }
  }
  m.r_env.resize(n);
  m.r_int.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    m.r_env[s] = rng.uniform();
    m.r_int[s] = rng.uniform();
  }
  m.terminal.assign(n, false);
  return m;
}

}  // namespace

int main() {
  std::printf("threads: %d\n", max_threads());
  Rng rng(42);
  const std::size_t d = 3;
  moe::MoEArch arch;
  arch.num_experts = 5;
  std::vector<moe::Vector> states(8192, moe::Vector(d));
  for (auto& s : states) {
    for (auto& v : s) v = rng.uniform();
  }
  moe::MoEModel model(d, arch, rng);
  model.set_normalizer(moe::Normalizer::fit(states));

  std::vector<double> ls, lp;
  const double bs = best_ms([&] { ls = kernels::batch_loss(model, states, Exec::Serial); });
  const double bp = best_ms([&] { lp = kernels::batch_loss(model, states, Exec::Parallel); });
  report("batch_loss", bs, bp, ls == lp);

  std::vector<moe::Vector> normalized;
  for (const auto& s : states) normalized.push_back(model.normalize(s));
  std::vector<std::size_t> idx(states.size());
  std::iota(idx.begin(), idx.end(), 0);
  kernels::GradientWorkspace ws(model);
  auto gs = model.zero_gradients();
  auto gp = model.zero_gradients();
  double lsum_s = 0, lsum_p = 0;
  const double gs_ms =
      best_ms([&] { lsum_s = kernels::accumulate_gradients(model, normalized, idx, gs, ws, Exec::Serial); });
  const double gp_ms =
      best_ms([&] { lsum_p = kernels::accumulate_gradients(model, normalized, idx, gp, ws, Exec::Parallel); });
  report("accumulate_gradients", gs_ms, gp_ms, lsum_s == lsum_p && gs.experts == gp.experts && gs.gate == gp.gate);

  const auto mdp = random_mdp(20000, 4, rng);
  const std::vector<double> v(mdp.n_states, 1.0);
  const auto ch = agents::RewardChannel::total(0.5);
  std::vector<std::vector<double>> qs, qp;
  const double qs_ms = best_ms([&] { qs = agents::bellman_q(mdp, ch, v, Exec::Serial); });
  const double qp_ms = best_ms([&] { qp = agents::bellman_q(mdp, ch, v, Exec::Parallel); });
  report("bellman_q", qs_ms, qp_ms, qs == qp);
  return 0;
}
