#include <doctest.h>
#include <omp.h>

#include <numeric>

#include "moeguide/agents.hpp"
#include "moeguide/error.hpp"
#include "moeguide/kernels.hpp"
#include "oracles.hpp"

using namespace moeguide;

namespace {

moe::MoEModel model_for(std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  moe::MoEArch a;
  a.num_experts = 3;
  moe::MoEModel m(d, a, rng);
  moe::Normalizer n;
  n.mean.assign(d, 0.5);
  n.stddev.assign(d, 0.3);
  m.set_normalizer(n);
  return m;
}

std::vector<moe::Vector> states_for(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<moe::Vector> s(n, moe::Vector(d));
  for (auto& v : s)
    for (auto& x : v) x = rng.uniform();
  return s;
}

struct ThreadGuard {
  int saved = omp_get_max_threads();
  ~ThreadGuard() { omp_set_num_threads(saved); }
};

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("batch loss is bitwise equal across execution modes and thread counts") {
    ThreadGuard guard;
    const auto m = model_for(3, 1);
    const auto s = states_for(333, 3, 2);
    const auto ref = kernels::batch_loss(m, s, Exec::Serial);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(ref[i] == m.loss(s[i]));
    for (int t : {1, 2, 3, 4}) {
      omp_set_num_threads(t);
      CHECK(kernels::batch_loss(m, s, Exec::Parallel) == ref);
    }
  }

  TEST_CASE("gradient accumulation is bitwise equal across execution modes and thread counts") {
    ThreadGuard guard;
    const auto m = model_for(2, 3);
    auto s = states_for(150, 2, 4);
    for (auto& v : s) v = m.normalize(v);
    std::vector<std::size_t> idx(s.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::reverse(idx.begin(), idx.end());
    kernels::GradientWorkspace ws(m);
    auto ref = m.zero_gradients();
    const double ref_loss = kernels::accumulate_gradients(m, s, idx, ref, ws, Exec::Serial);

    auto naive = m.zero_gradients();
    double naive_loss = 0.0;
    for (auto i : idx) naive_loss += m.accumulate_gradient(s[i], naive);
    CHECK(ref_loss == doctest::Approx(naive_loss).epsilon(1e-12));
    CHECK(ref.gate[0] == doctest::Approx(naive.gate[0]).epsilon(1e-10));

    for (int t : {1, 2, 4}) {
      omp_set_num_threads(t);
      auto par = m.zero_gradients();
      CHECK(kernels::accumulate_gradients(m, s, idx, par, ws, Exec::Parallel) == ref_loss);
      CHECK(par.experts == ref.experts);
      CHECK(par.gate == ref.gate);
    }
  }

  TEST_CASE("errors inside parallel regions reach the caller") {
    const auto m = model_for(3, 5);
    auto s = states_for(64, 3, 6);
    s[40] = {1.0, 2.0};
    CHECK_THROWS_AS(kernels::batch_loss(m, s, Exec::Parallel), ShapeError);
    CHECK_THROWS_AS(kernels::batch_loss(m, s, Exec::Serial), ShapeError);
  }

  TEST_CASE("Bellman backup is bitwise equal across execution modes") {
    ThreadGuard guard;
    Rng rng(7);
    const auto mdp = oracle::random_mdp(rng, 40, 3, 0.9);
    std::vector<double> v(40);
    for (auto& x : v) x = rng.normal();
    const auto ch = agents::RewardChannel::total(0.7);
    const auto ref = agents::bellman_q(mdp, ch, v, Exec::Serial);
    for (int t : {1, 3}) {
      omp_set_num_threads(t);
      CHECK(agents::bellman_q(mdp, ch, v, Exec::Parallel) == ref);
    }
  }
}
