#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "jeit/errors.hpp"
#include "jeit/numerics.hpp"
#include "jeit/tape.hpp"
#include "support.hpp"

using namespace jeit;
using testing::random_tensor;

TEST_CASE("tensor shape must match data") {
  CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5)), DimensionError);
  const Tensor t({2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK(t.at(1, 2) == 6);
  CHECK(Tensor::scalar(4.0).item() == 4.0);
}

TEST_CASE("affine examples") {
  SUBCASE("identity") {
    const Tensor y = affine(Tensor::vector({1, 2}), Tensor::identity(2), Tensor::vector({0, 0}));
    CHECK(y == Tensor::vector({1, 2}));
  }
  SUBCASE("diagonal with bias") {
    const Tensor y = affine(Tensor::vector({1, 1}), Tensor::matrix(2, 2, {2, 0, 0, 3}),
                            Tensor::vector({1, -1}));
    CHECK(y == Tensor::vector({3, 2}));
  }
  SUBCASE("zero input passes the bias through") {
    const Tensor y = affine(Tensor({3}), random_tensor({2, 3}, 4), Tensor::vector({5, 5}));
    CHECK(y == Tensor::vector({5, 5}));
  }
  SUBCASE("row-wise over a matrix") {
    const Tensor x = Tensor::matrix(2, 2, {1, 0, 0, 1});
    const Tensor y = affine(x, Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6}), Tensor::vector({0, 1, 2}));
    CHECK(y == Tensor::matrix(2, 3, {1, 4, 7, 2, 5, 8}));
  }
  SUBCASE("mismatch names both shapes") {
    try {
      affine(Tensor::vector({1, 2, 3}), Tensor::identity(2), Tensor::vector({0, 0}));
      FAIL("expected a dimension error");
    } catch (const DimensionError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("[3]") != std::string::npos);
      CHECK(msg.find("[2x2]") != std::string::npos);
    }
  }
}

TEST_CASE("sigmoid") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(std::abs(sigmoid(40.0) - 1.0) < 1e-15);
  CHECK(sigmoid(std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(std::isfinite(sigmoid(-700.0)));
  CHECK(sigmoid(-700.0) >= 0.0);
  for (double x = -30.0; x <= 30.0; x += 0.37) {
    CHECK(std::abs(sigmoid(x) + sigmoid(-x) - 1.0) <= 1e-15);
  }
  CHECK(log_sigmoid(-800.0) == doctest::Approx(-800.0));
  CHECK(log_sigmoid(0.0) == doctest::Approx(std::log(0.5)));
}

TEST_CASE("log_add_exp") {
  CHECK(log_add_exp(std::log(2.0), std::log(3.0)) == doctest::Approx(std::log(5.0)));
  const double ninf = -std::numeric_limits<double>::infinity();
  CHECK(log_add_exp(ninf, 1.5) == 1.5);
  CHECK(log_add_exp(ninf, ninf) == ninf);
  CHECK(log_add_exp(1000.0, 1000.0) == doctest::Approx(1000.0 + std::log(2.0)));
}

TEST_CASE("log_softmax examples") {
  const Tensor u = log_softmax(Tensor::vector({0, 0, 0, 0}));
  for (double v : u.data()) CHECK(v == doctest::Approx(std::log(0.25)));

  const Tensor a = log_softmax(Tensor::vector({7.5, 7.5, 7.5}));
  const Tensor b = log_softmax(Tensor::vector({0, 0, 0}));
  for (std::size_t i = 0; i < 3; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-15));

  const Tensor c = log_softmax(Tensor::vector({std::log(2.0), 0.0}));
  CHECK(c[0] == doctest::Approx(std::log(2.0 / 3.0)).epsilon(1e-14));
  CHECK(c[1] == doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-14));

  CHECK_THROWS_AS(log_softmax(Tensor(Tensor::Shape{0})), DomainError);
}

TEST_CASE("log_softmax normalizes random inputs, including extreme ones") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> len(1, 40);
  std::normal_distribution<double> n(0.0, 50.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> v(static_cast<std::size_t>(len(rng)));
    for (double& x : v) x = n(rng);
    const Tensor out = log_softmax(Tensor::vector(v));
    double s = 0.0;
    for (double x : out.data()) s += std::exp(x);
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
}

TEST_CASE("matmul kernels agree with a naive product") {
  const std::size_t n = 3, k = 4, m = 5;
  const Tensor A = random_tensor({n, k}, 1), B = random_tensor({k, m}, 2);
  Tensor Bt({m, k});
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < m; ++j) Bt.at(j, i) = B.at(i, j);
  Tensor At({k, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) At.at(j, i) = A.at(i, j);

  Tensor expect({n, m});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t l = 0; l < k; ++l) expect.at(i, j) += A.at(i, l) * B.at(l, j);

  Tensor c1({n, m}), c2({n, m}), c3({n, m});
  matmul_nn(A.ptr(), n, k, B.ptr(), m, c1.ptr(), false);
  matmul_nt(A.ptr(), n, k, Bt.ptr(), m, c2.ptr(), false);
  matmul_tn(At.ptr(), k, n, B.ptr(), m, c3.ptr(), false);
  for (std::size_t i = 0; i < n * m; ++i) {
    CHECK(c1[i] == doctest::Approx(expect[i]).epsilon(1e-13));
    CHECK(c2[i] == doctest::Approx(expect[i]).epsilon(1e-13));
    CHECK(c3[i] == doctest::Approx(expect[i]).epsilon(1e-13));
  }
  matmul_nn(A.ptr(), n, k, B.ptr(), m, c1.ptr(), true);
  for (std::size_t i = 0; i < n * m; ++i) CHECK(c1[i] == doctest::Approx(2 * expect[i]));
}

TEST_CASE("tape walks operations in reverse recording order") {
  Tape tape;
  Var x = tape.parameter(Tensor::vector({1, 2}));
  Var W = tape.parameter(Tensor::identity(2));
  Var b = tape.parameter(Tensor::vector({0, 0}));
  Var h = tanh(tape, affine(tape, x, W, b));
  Var loss = sum_squares(tape, h);
  tape.backward(loss);
  const auto& trace = tape.backward_trace();
  REQUIRE(trace.size() == tape.op_count());
  for (std::size_t i = 0; i + 1 < trace.size(); ++i) CHECK(trace[i] > trace[i + 1]);
}

TEST_CASE("parameters off the loss path get exactly zero gradient") {
  Tape tape;
  Var used = tape.parameter(Tensor::vector({0.3, -0.2}));
  Var unused = tape.parameter(Tensor::vector({5, 6, 7}));
  Var side = sum_squares(tape, unused);
  (void)side;
  Var loss = sum_squares(tape, used);
  tape.backward(loss);
  CHECK(tape.grad(unused) == Tensor({3}));
  CHECK(tape.grad(used) == Tensor::vector({0.6, -0.4}));
}

TEST_CASE("backward needs a scalar target") {
  Tape tape;
  Var x = tape.parameter(Tensor::vector({1, 2}));
  CHECK_THROWS_AS(tape.backward(x), DimensionError);
}

TEST_CASE("affine backward matches finite differences on random 5x5 instances") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ParamList params = {{"x", random_tensor({5}, seed * 3 + 1)},
                              {"W", random_tensor({5, 5}, seed * 3 + 2)},
                              {"b", random_tensor({5}, seed * 3 + 3)}};
    const TapeFunction f = [](Tape& tape, std::span<const Var> v) {
      return sum_squares(tape, tanh(tape, affine(tape, v[0], v[1], v[2])));
    };
    const GradCheckResult r = grad_check(f, params, 1e-5, seed);
    CHECK(r.coordinates == 35);
    CHECK(r.max_rel_error < 1e-6);
  }
}

TEST_CASE("grad_check examples") {
  const ParamList params = {{"a", random_tensor({4, 6}, 1)}, {"b", random_tensor({9}, 2)},
                            {"c", random_tensor({50}, 3)}};
  SUBCASE("sum of squares") {
    const TapeFunction f = [](Tape& tape, std::span<const Var> v) {
      const std::vector<Var> terms = {sum_squares(tape, v[0]), sum_squares(tape, v[1]),
                                      sum_squares(tape, v[2])};
      const std::vector<double> w(3, 1.0);
      return linear_combination(tape, terms, w);
    };
    const GradCheckResult r = grad_check(f, params, 1e-5, 0, 64);
    CHECK(r.coordinates >= 64);
    CHECK(r.max_rel_error < 1e-6);
  }
  SUBCASE("constant") {
    const TapeFunction f = [](Tape& tape, std::span<const Var>) {
      return tape.constant(Tensor::scalar(3.0));
    };
    CHECK(grad_check(f, params, 1e-5).max_rel_error == 0.0);
  }
  SUBCASE("fewer coordinates than requested checks them all") {
    const ParamList small = {{"x", random_tensor({3}, 9)}};
    const TapeFunction f = [](Tape& tape, std::span<const Var> v) {
      return sum_squares(tape, v[0]);
    };
    CHECK(grad_check(f, small, 1e-5, 0, 64).coordinates == 3);
  }
  SUBCASE("eps out of range") {
    const TapeFunction f = [](Tape& tape, std::span<const Var> v) {
      return sum_squares(tape, v[0]);
    };
    CHECK_THROWS_AS(grad_check(f, params, 1e-2), DomainError);
    CHECK_THROWS_AS(grad_check(f, params, 1e-9), DomainError);
  }
  SUBCASE("non-finite loss") {
    const TapeFunction f = [](Tape& tape, std::span<const Var>) {
      return tape.constant(Tensor::scalar(std::nan("")));
    };
    CHECK_THROWS_AS(grad_check(f, params, 1e-5), NumericError);
  }
}

TEST_CASE("recorded ops: concat, gather, element, linear combination") {
  const ParamList params = {{"a", random_tensor({3, 2}, 5)},
                            {"b", random_tensor({3, 4}, 6)},
                            {"table", random_tensor({5, 3}, 7)}};
  const TapeFunction f = [](Tape& tape, std::span<const Var> v) {
    Var ab = concat_cols(tape, v[0], v[1]);
    Var rows = gather_rows(tape, v[2], {4, 0, 4});
    Var e = element(tape, sum_squares(tape, tanh(tape, ab)), 0);
    Var g = sum_squares(tape, rows);
    const std::vector<Var> terms = {e, g};
    const std::vector<double> w = {0.7, -1.3};
    return linear_combination(tape, terms, w);
  };
  CHECK(grad_check(f, params, 1e-5).max_rel_error < 1e-6);

  Tape tape;
  Var a = tape.constant(Tensor({2, 2}));
  Var b = tape.constant(Tensor({3, 2}));
  CHECK_THROWS_AS(concat_cols(tape, a, b), DimensionError);
  CHECK_THROWS_AS(gather_rows(tape, a, {2}), ContractError);
}

TEST_CASE("tape replay is bit-identical") {
  const ParamList params = {{"x", random_tensor({4}, 1)}, {"W", random_tensor({3, 4}, 2)},
                            {"b", random_tensor({3}, 3)}};
  auto run = [&] {
    Tape tape;
    std::vector<Var> v;
    for (const auto& [name, t] : params) v.push_back(tape.parameter(t));
    Var loss = sum_squares(tape, tanh(tape, affine(tape, v[0], v[1], v[2])));
    tape.backward(loss);
    std::vector<double> out{tape.value(loss).item()};
    for (Var p : v) {
      const Tensor g = tape.grad(p);
      out.insert(out.end(), g.data().begin(), g.data().end());
    }
    return out;
  };
  CHECK(run() == run());
}
