#include <doctest.h>

#include <cmath>

#include "moeguide/error.hpp"
#include "moeguide/nn.hpp"
#include "oracles.hpp"

using namespace moeguide;
using nn::Activation;
using nn::DenseNet;

TEST_SUITE("nn") {
  TEST_CASE("forward matches a hand-computed two-layer net") {
    DenseNet net({2, 2, 1}, {Activation::ReLU, Activation::Identity});
    auto w0 = net.weights(0);
    w0[0] = 1.0;
    w0[1] = -1.0;
    w0[2] = 0.5;
    w0[3] = 0.5;
    net.bias(0)[0] = 0.1;
    net.bias(0)[1] = -2.0;
    net.weights(1)[0] = 2.0;
    net.weights(1)[1] = 3.0;
    net.bias(1)[0] = 0.25;
    const std::vector<double> x{1.0, 0.5};
    // hidden = relu([1 - 0.5 + 0.1, 0.5 + 0.25 - 2]) = [0.6, 0]
    const auto y = net.forward(x);
    REQUIRE(y.size() == 1);
    CHECK(y[0] == doctest::Approx(2.0 * 0.6 + 0.25));
  }

  TEST_CASE("parameter layout is weights then bias per layer") {
    DenseNet net({3, 4, 2}, {Activation::Tanh, Activation::Identity});
    CHECK(net.parameter_count() == 3 * 4 + 4 + 4 * 2 + 2);
    CHECK(net.layers()[0].weight_offset == 0);
    CHECK(net.layers()[0].bias_offset == 12);
    CHECK(net.layers()[1].weight_offset == 16);
    CHECK(net.layer_of(15) == 0);
    CHECK(net.layer_of(16) == 1);
  }

  TEST_CASE("wrong input width raises an input-shape error") {
    Rng rng(1);
    DenseNet net({3, 5, 2}, {Activation::ReLU, Activation::Identity}, nn::InitScheme::UniformGlorot, rng);
    const std::vector<double> x{1.0, 2.0};
    CHECK_THROWS_WITH_AS(net.forward(x), doctest::Contains("input-shape error"), ShapeError);
  }

  TEST_CASE("parameter and input gradients match finite differences") {
    Rng rng(11);
    const std::vector<std::vector<Activation>> acts{{Activation::Tanh, Activation::Identity},
                                                    {Activation::ReLU, Activation::Tanh},
                                                    {Activation::Identity, Activation::Identity}};
    for (const auto& a : acts) {
      DenseNet net({3, 6, 2}, a, nn::InitScheme::UniformGlorot, rng);
      std::vector<double> x(3), target(2);
      for (auto& v : x) v = rng.uniform(-1, 1);
      for (auto& v : target) v = rng.uniform(-1, 1);
      const auto y = net.forward(x);
      std::vector<double> grads(net.parameter_count(), 0.0);
      DenseNet::Tape tape;
      net.forward(x, tape);
      const auto dx = net.backward(tape, nn::mse_grad(y, target), grads);

      const std::vector<double> p0(net.parameters().begin(), net.parameters().end());
      const auto fd = oracle::fd_gradient(
          [&](const std::vector<double>& p) {
            DenseNet copy = net;
            std::copy(p.begin(), p.end(), copy.parameters().begin());
            return nn::mse(copy.forward(x), target);
          },
          p0);
      CHECK(oracle::max_relative_error(grads, fd) < 1e-5);
      const auto fdx =
          oracle::fd_gradient([&](const std::vector<double>& xi) { return nn::mse(net.forward(xi), target); }, x);
      CHECK(oracle::max_relative_error(dx, fdx) < 1e-5);
    }
  }

  TEST_CASE("mse and its gradient") {
    const std::vector<double> a{1.0, 2.0, 4.0}, b{0.0, 2.0, 1.0};
    CHECK(nn::mse(a, b) == doctest::Approx((1.0 + 0.0 + 9.0) / 3.0));
    const auto g = nn::mse_grad(a, b);
    CHECK(g[0] == doctest::Approx(2.0 / 3.0));
    CHECK(g[1] == 0.0);
    CHECK(g[2] == doctest::Approx(2.0));
  }

  TEST_CASE("softmax is stable and on the simplex") {
    const std::vector<double> logits{1000.0, 1001.0, 999.0};
    const auto w = nn::softmax(logits);
    double total = 0.0;
    for (double v : w) {
      CHECK(std::isfinite(v));
      total += v;
    }
    CHECK(total == doctest::Approx(1.0));
    CHECK(w[1] > w[0]);
    CHECK(w[0] > w[2]);
  }

  TEST_CASE("orthogonal fill gives orthonormal rows or columns") {
    Rng rng(5);
    for (auto [rows, cols] : std::vector<std::pair<std::size_t, std::size_t>>{{4, 9}, {9, 4}, {6, 6}}) {
      std::vector<double> w(rows * cols);
      nn::orthogonal_fill(w, rows, cols, rng);
      const bool by_rows = rows <= cols;
      const std::size_t n = by_rows ? rows : cols;
      const std::size_t len = by_rows ? cols : rows;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          double dot = 0.0;
          for (std::size_t k = 0; k < len; ++k) {
            const double a = by_rows ? w[i * cols + k] : w[k * cols + i];
            const double b = by_rows ? w[j * cols + k] : w[k * cols + j];
            dot += a * b;
          }
          CHECK(dot == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-10));
        }
      }
    }
  }

  TEST_CASE("same seed gives identical initialization") {
    Rng a(99), b(99), c(100);
    const DenseNet n1({4, 8, 2}, {Activation::ReLU, Activation::Identity}, nn::InitScheme::Orthogonal, a);
    const DenseNet n2({4, 8, 2}, {Activation::ReLU, Activation::Identity}, nn::InitScheme::Orthogonal, b);
    const DenseNet n3({4, 8, 2}, {Activation::ReLU, Activation::Identity}, nn::InitScheme::Orthogonal, c);
    CHECK(n1 == n2);
    CHECK_FALSE(n1 == n3);
    for (double v : n1.bias(0)) CHECK(v == 0.0);
  }

  TEST_CASE("first Adam step moves each parameter by lr times the gradient sign") {
    DenseNet net({2, 1}, {Activation::Identity});
    nn::AdamState st(net.parameter_count(), 0.01, "probe");
    const std::vector<double> g{0.5, -3.0, 1e-3};
    nn::adam_step(net, g, st);
    CHECK(net.parameters()[0] == doctest::Approx(-0.01).epsilon(1e-6));
    CHECK(net.parameters()[1] == doctest::Approx(0.01).epsilon(1e-6));
    CHECK(net.parameters()[2] == doctest::Approx(-0.01).epsilon(1e-4));
    CHECK(st.step_count == 1);
  }

  TEST_CASE("Adam rejects non-finite gradients without touching state") {
    Rng rng(3);
    DenseNet net({2, 3, 1}, {Activation::ReLU, Activation::Identity}, nn::InitScheme::UniformGlorot, rng);
    const DenseNet before = net;
    nn::AdamState st(net.parameter_count(), 0.01, "expert 0");
    const nn::AdamState st_before = st;
    std::vector<double> g(net.parameter_count(), 0.1);
    g[net.layers()[1].bias_offset] = std::nan("");
    CHECK_THROWS_WITH_AS(nn::adam_step(net, g, st), doctest::Contains("expert 0 layer 1"), NonFiniteError);
    CHECK(net == before);
    CHECK(st == st_before);
  }
}
