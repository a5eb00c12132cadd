#include <doctest.h>

#include <cmath>

#include "moeguide/baselines.hpp"
#include "moeguide/error.hpp"

using namespace moeguide;
using baselines::BaselineBonus;
using baselines::BaselineKind;
using baselines::BaselineTransition;

TEST_SUITE("baselines") {
  TEST_CASE("running statistics follow the parallel update rule") {
    baselines::RunningMeanStd rms(1);
    CHECK(rms.mean()[0] == 0.0);
    CHECK(rms.var()[0] == 1.0);
    const std::vector<std::vector<double>> xs{{1.0}, {3.0}, {5.0}, {7.0}};
    for (const auto& x : xs) rms.update(x);
    CHECK(rms.count() == doctest::Approx(4.0001));
    CHECK(rms.mean()[0] == doctest::Approx(16.0 / 4.0001));
    CHECK(rms.var()[0] == doctest::Approx(5.0).epsilon(1e-3));
  }

  TEST_CASE("count bonus is 1/sqrt(1+n) with n counted before the visit") {
    BaselineBonus b(BaselineKind::CountBased, 2, 4, 0);
    const std::vector<double> s{0.0, 0.0}, t{1.0, 0.0};
    for (int n = 0; n < 10; ++n) {
      const BaselineTransition tr{s, 0, t};
      CHECK(b.peek(tr) == 1.0 / std::sqrt(1.0 + n));
      CHECK(b.observe(tr) == 1.0 / std::sqrt(1.0 + n));
    }
    CHECK(b.count(t) == 10);
    b.visit(s);
    CHECK(b.count(s) == 1);
  }

  TEST_CASE("random bonus is uniform on [0, 1) and seeded") {
    BaselineBonus a(BaselineKind::Random, 2, 4, 9), b(BaselineKind::Random, 2, 4, 9);
    const std::vector<double> s{0.0, 0.0};
    for (int i = 0; i < 50; ++i) {
      const double x = a.observe({s, 0, s});
      CHECK(x == b.observe({s, 0, s}));
      CHECK(x >= 0.0);
      CHECK(x < 1.0);
    }
  }

  TEST_CASE("RND prediction error shrinks on a repeated state") {
    BaselineBonus b(BaselineKind::RND, 3, 4, 5);
    const std::vector<double> s{0.2, 0.4, 0.6}, other{0.9, 0.1, 0.3};
    const BaselineTransition tr{s, 0, s};
    const double first_raw = b.raw_error(tr);
    const double first = b.observe(tr);
    for (int i = 0; i < 500; ++i) b.observe(tr);
    CHECK(b.raw_error(tr) < first_raw);
    CHECK(b.peek(tr) < first);
    CHECK(b.target().layer_dims() == std::vector<std::size_t>{3, 32, 16});
    CHECK(b.raw_error({s, 0, other}) > b.raw_error(tr));
  }

  TEST_CASE("ICM forward error shrinks on a repeated transition") {
    BaselineBonus b(BaselineKind::ICMForward, 2, 4, 6);
    const std::vector<double> s{0.1, 0.2}, n{0.2, 0.2};
    const BaselineTransition tr{s, 0, n};
    const double first = b.raw_error(tr);
    for (int i = 0; i < 300; ++i) b.observe(tr);
    CHECK(b.raw_error(tr) < first);
    CHECK_THROWS_AS(b.observe({s, 7, n}), std::out_of_range);
  }

  TEST_CASE("peek leaves learned state unchanged") {
    BaselineBonus b(BaselineKind::RND, 2, 4, 7);
    const std::vector<double> s{0.5, 0.5};
    const BaselineTransition tr{s, 0, s};
    b.observe(tr);
    const double p1 = b.peek(tr);
    const double p2 = b.peek(tr);
    CHECK(p1 == p2);
  }

  TEST_CASE("kind names round-trip") {
    for (auto k : {BaselineKind::Random, BaselineKind::CountBased, BaselineKind::RND, BaselineKind::ICMForward}) {
      CHECK(baselines::baseline_kind_from_string(baselines::to_string(k)) == k);
    }
    CHECK_THROWS_AS(baselines::baseline_kind_from_string("curiosity"), ConfigError);
  }

  TEST_CASE("explorer adapter counts grid cells") {
    const auto w = env::make_gridworld({6, 6}, 0.0, 1);
    baselines::BaselineExplorerBonus bonus(w, BaselineKind::CountBased, 1);
    const auto trace = agents::greedy_intrinsic_explore(w, bonus, 200, 3);
    CHECK(trace.cell_coverage == 1.0);
    CHECK(bonus.name() == "count");
  }
}
