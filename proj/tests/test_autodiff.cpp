#include <doctest.h>

#include <cmath>

#include "reinflect/autodiff.hpp"
#include "reinflect/errors.hpp"
#include "reinflect/rng.hpp"
#include "support/gradcheck.hpp"

using namespace reinflect;
using reinflect::testing::max_gradient_error;
using reinflect::testing::project;
using reinflect::testing::random_tensor;

namespace {

constexpr int kInstances = 50;
constexpr double kOpTolerance = 1e-6;

// Worst error of `f` over kInstances random draws of inputs with the given shapes.
double worst_over_instances(const std::vector<Tensor::Shape>& shapes, const reinflect::testing::ScalarFn& f,
                            std::uint64_t seed, double bound = 1.0) {
  Rng rng(seed);
  double worst = 0.0;
  for (int n = 0; n < kInstances; ++n) {
    std::vector<Tensor> inputs;
    for (const auto& s : shapes) inputs.push_back(random_tensor(s, rng, bound));
    worst = std::max(worst, max_gradient_error(f, inputs));
  }
  return worst;
}

}  // namespace

TEST_CASE("tensor construction checks element counts") {
  CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5)), DimensionError);
  CHECK_THROWS_AS(Tensor::matrix({{1, 2}, {3}}), DimensionError);
  const Tensor m = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m.at(1, 2) == 6);
  CHECK(Tensor::identity(3).at(1, 1) == 1.0);
  CHECK(Tensor::identity(3).at(0, 1) == 0.0);
  CHECK(Tensor::scalar(2.5).item() == 2.5);
  CHECK_THROWS_AS(m.item(), DimensionError);
  CHECK(Tensor::vector({1.0, NAN}).all_finite() == false);
}

TEST_CASE("matmul forward values") {
  Graph g;
  const Expr a = g.constant(Tensor::matrix({{1, 2}, {3, 4}}));
  const Expr b = g.constant(Tensor::matrix({{5}, {6}}));
  CHECK(matmul(a, b).value() == Tensor::matrix({{17}, {39}}));
  CHECK(matmul(g.constant(Tensor::vector({1, 1})), a).value() == Tensor::vector({4, 6}));
  CHECK(matmul(a, g.constant(Tensor::vector({1, 0}))).value() == Tensor::vector({1, 3}));
  CHECK_THROWS_AS(matmul(a, g.constant(Tensor::matrix({{1, 2, 3}}))), DimensionError);
}

TEST_CASE("gradient of sum(A·B) for 3x4·4x2") {
  const auto f = [](Graph&, const std::vector<Expr>& x) { return sum(matmul(x[0], x[1])); };
  CHECK(worst_over_instances({{3, 4}, {4, 2}}, f, 1) <= kOpTolerance);
  // d sum(AB) / dA[i][k] = sum_j B[k][j]
  Graph g;
  const Expr a = g.variable(Tensor({3, 4}, 0.5));
  const Expr b = g.variable(Tensor::matrix(4, 2, {1, 2, 3, 4, 5, 6, 7, 8}));
  g.backward(sum(matmul(a, b)));
  CHECK(a.grad().at(2, 0) == doctest::Approx(3.0));
  CHECK(a.grad().at(0, 3) == doctest::Approx(15.0));
}

TEST_CASE("matmul gradients, vector operand forms") {
  const auto row = [](Graph&, const std::vector<Expr>& x) { return project(matmul(x[0], x[1]), 7); };
  CHECK(worst_over_instances({{4}, {4, 3}}, row, 2) <= kOpTolerance);
  const auto col = [](Graph&, const std::vector<Expr>& x) { return project(matmul(x[0], x[1]), 8); };
  CHECK(worst_over_instances({{3, 4}, {4}}, col, 3) <= kOpTolerance);
  const auto mat = [](Graph&, const std::vector<Expr>& x) { return project(matmul(x[0], x[1]), 9); };
  CHECK(worst_over_instances({{2, 5}, {5, 3}}, mat, 4) <= kOpTolerance);
}

TEST_CASE("elementwise op gradients") {
  const Tensor::Shape s{2, 3};
  CHECK(worst_over_instances({s, s}, [](Graph&, const std::vector<Expr>& x) { return project(add(x[0], x[1]), 11); },
                             5) <= kOpTolerance);
  CHECK(worst_over_instances({s, s}, [](Graph&, const std::vector<Expr>& x) { return project(sub(x[0], x[1]), 12); },
                             6) <= kOpTolerance);
  CHECK(worst_over_instances({s, s}, [](Graph&, const std::vector<Expr>& x) { return project(mul(x[0], x[1]), 13); },
                             7) <= kOpTolerance);
  CHECK(worst_over_instances({s}, [](Graph&, const std::vector<Expr>& x) { return project(tanh(x[0]), 14); }, 8, 3.0) <=
        kOpTolerance);
  CHECK(worst_over_instances({s}, [](Graph&, const std::vector<Expr>& x) { return project(sigmoid(x[0]), 15); }, 9,
                             4.0) <= kOpTolerance);
  CHECK(worst_over_instances({s}, [](Graph&, const std::vector<Expr>& x) { return project(one_minus(x[0]), 16); },
                             10) <= kOpTolerance);
  CHECK(worst_over_instances({s, s, s},
                             [](Graph&, const std::vector<Expr>& x) { return project(add_n(x), 17); }, 11) <=
        kOpTolerance);
}

TEST_CASE("tanh gradient at fixed point") {
  const auto f = [](Graph&, const std::vector<Expr>& x) { return sum(tanh(x[0])); };
  CHECK(max_gradient_error(f, {Tensor::vector({0.3, -1.2})}) <= kOpTolerance);
  Graph g;
  const Expr x = g.variable(Tensor::vector({0.3, -1.2}));
  g.backward(sum(tanh(x)));
  CHECK(x.grad()[0] == doctest::Approx(1 - std::tanh(0.3) * std::tanh(0.3)).epsilon(1e-12));
  CHECK(x.grad()[1] == doctest::Approx(1 - std::tanh(-1.2) * std::tanh(-1.2)).epsilon(1e-12));
}

TEST_CASE("softmax and neg_log_softmax gradients") {
  CHECK(worst_over_instances({{5}}, [](Graph&, const std::vector<Expr>& x) { return project(softmax(x[0]), 21); }, 12,
                             3.0) <= kOpTolerance);
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(worst_over_instances({{5}}, [k](Graph&, const std::vector<Expr>& x) { return neg_log_softmax(x[0], k); },
                               13 + k, 3.0) <= kOpTolerance);
  }
}

TEST_CASE("structural op gradients") {
  CHECK(worst_over_instances({{3}, {2}},
                             [](Graph&, const std::vector<Expr>& x) { return project(concat(x[0], x[1]), 31); }, 20) <=
        kOpTolerance);
  CHECK(worst_over_instances({{2, 3}, {2, 4}},
                             [](Graph&, const std::vector<Expr>& x) { return project(concat(x[0], x[1]), 32); }, 21) <=
        kOpTolerance);
  CHECK(worst_over_instances({{5, 3}},
                             [](Graph&, const std::vector<Expr>& x) {
                               return add(project(lookup(x[0], 2), 33), project(lookup(x[0], 2), 34));
                             },
                             22) <= kOpTolerance);
  CHECK(worst_over_instances({{4}, {4}, {4}},
                             [](Graph&, const std::vector<Expr>& x) { return project(stack_rows(x), 35); }, 23) <=
        kOpTolerance);
  CHECK(worst_over_instances({{3, 4}, {4}},
                             [](Graph&, const std::vector<Expr>& x) {
                               return project(add_row_broadcast(x[0], x[1]), 36);
                             },
                             24) <= kOpTolerance);
  CHECK(worst_over_instances({{3, 2}}, [](Graph&, const std::vector<Expr>& x) { return sum(x[0]); }, 25) <=
        kOpTolerance);
}

TEST_CASE("lookup gradient of a 5x3 table touches only the used row") {
  Graph g;
  const Expr table = g.variable(Tensor({5, 3}, 0.1));
  g.backward(sum(lookup(table, 3)));
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 3; ++c) CHECK(table.grad().at(r, c) == (r == 3 ? 1.0 : 0.0));
}

TEST_CASE("reused nodes accumulate gradient") {
  Graph g;
  const Expr x = g.variable(Tensor::vector({2.0}));
  g.backward(sum(mul(x, x)));
  CHECK(x.grad()[0] == doctest::Approx(4.0));
}

TEST_CASE("numerically extreme inputs stay finite") {
  Graph g;
  const Expr big = g.constant(Tensor::vector({800.0, -800.0, 0.0}));
  CHECK(sigmoid(big).value().all_finite());
  CHECK(sigmoid(big).value()[0] == doctest::Approx(1.0));
  CHECK(sigmoid(big).value()[1] == doctest::Approx(0.0));
  const Tensor p = softmax(big).value();
  CHECK(p.all_finite());
  CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0));
  CHECK(std::isfinite(neg_log_softmax(big, 1).value().item()));
  CHECK(neg_log_softmax(big, 1).value().item() == doctest::Approx(1600.0));
}

TEST_CASE("neg_log_softmax equals -log softmax") {
  Rng rng(99);
  for (int n = 0; n < 50; ++n) {
    Graph g;
    const Expr x = g.constant(random_tensor({6}, rng, 5.0));
    const std::size_t k = rng.below(6);
    CHECK(neg_log_softmax(x, k).value().item() == doctest::Approx(-std::log(softmax(x).value()[k])).epsilon(1e-12));
  }
}

TEST_CASE("error reporting") {
  Graph g;
  const Expr a = g.variable(Tensor::vector({1, 2}));
  const Expr b = g.variable(Tensor::vector({1, 2, 3}));
  CHECK_THROWS_AS(add(a, b), DimensionError);
  CHECK_THROWS_AS(lookup(g.constant(Tensor({5, 3})), 5), VocabularyError);
  CHECK_THROWS_AS(neg_log_softmax(a, 2), VocabularyError);
  CHECK_THROWS_AS(softmax(g.constant(Tensor({2, 2}))), DimensionError);
  CHECK_THROWS_AS(g.backward(a), DimensionError);
  const Expr s = sum(a);
  g.backward(s);
  CHECK_THROWS_AS(g.backward(s), InputError);

  Graph other;
  CHECK_THROWS_AS(add(a, other.constant(Tensor::vector({1, 2}))), InputError);
}

TEST_CASE("inference graphs compute values without gradients") {
  Graph g(false);
  const Expr x = g.variable(Tensor::vector({0.5, -0.5}));
  const Expr y = sum(tanh(x));
  CHECK(y.value().item() == doctest::Approx(0.0));
  CHECK_FALSE(g.requires_grad(y.id()));
}

TEST_CASE("parameter leaves read external storage") {
  Tensor w = Tensor::vector({1.0, 2.0});
  Graph g;
  const Expr p = g.parameter(w);
  CHECK(&p.value() == &w);
  g.backward(sum(mul(p, p)));
  CHECK(p.grad() == Tensor::vector({2.0, 4.0}));
}
