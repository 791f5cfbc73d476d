#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hgcn/grad_check.hpp"
#include "hgcn/tape.hpp"

using namespace hgcn;

namespace {

Tensor random_tensor(Shape s, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor t(std::move(s), 0.0, true);
  for (double& v : t.values) v = d(rng);
  return t;
}

// Weighted sum so every output coordinate gets a distinct upstream gradient.
Var reduce(Tape& tape, Var y) {
  std::vector<double> w(y.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.3 + 0.1 * static_cast<double>(i % 7);
  return sum(mul(y, tape.constant(y.shape(), w)));
}

void expect_gradients(const ScalarProgram& program, std::vector<NamedTensor> params, double tol = 1e-6) {
  const auto report = grad_check(program, params, GradCheckOptions{1e-5, tol, 1e-8});
  for (const auto& p : report.params) {
    EXPECT_LT(p.max_rel_error, tol) << p.name << " worst index " << p.worst_index << " analytic " << p.analytic
                                    << " numeric " << p.numeric;
  }
}

}  // namespace

TEST(Tensor, ShapeAndValuesAgree) {
  Tensor t(Shape{2, 3}, 1.5);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_THROW(Tensor(Shape{2, 2}, std::vector<double>{1.0, 2.0}), ShapeError);
  Tensor row(Shape{4});
  EXPECT_EQ(row.rows(), 1u);
  EXPECT_EQ(row.cols(), 4u);
}

TEST(Primitives, ReluExample) {
  Tape tape;
  Var y = relu(tape.constant(Shape{3}, {-1.0, 0.0, 2.0}));
  EXPECT_EQ(std::vector<double>(y.values().begin(), y.values().end()), (std::vector<double>{0.0, 0.0, 2.0}));
}

TEST(Primitives, MaskedSoftmaxSingleUnmaskedEntry) {
  Tape tape;
  const std::uint8_t mask[] = {1, 0};
  for (double a : {-30.0, 0.0, 4.2}) {
    Var y = masked_softmax(tape.constant(Shape{1, 2}, {a, 123.0}), mask);
    EXPECT_EQ(y.values()[0], 1.0);
    EXPECT_EQ(y.values()[1], 0.0);
  }
}

TEST(Primitives, MaskedSoftmaxRowsAndZeros) {
  std::mt19937_64 rng(3);
  Tape tape;
  Tensor x = random_tensor(Shape{4, 5}, rng, -5, 5);
  std::vector<std::uint8_t> mask(20);
  for (std::size_t i = 0; i < 20; ++i) mask[i] = (i % 5 == 0) || (i * 7 % 3 == 1);
  Var y = masked_softmax(tape.constant(x), mask);
  for (std::size_t r = 0; r < 4; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 5; ++c) {
      const double v = y.values()[r * 5 + c];
      if (!mask[r * 5 + c]) EXPECT_EQ(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Primitives, MaskedSoftmaxRejectsFullyMaskedRow) {
  Tape tape;
  const std::uint8_t mask[] = {0, 0};
  EXPECT_THROW(masked_softmax(tape.constant(Shape{1, 2}, {1.0, 2.0}), mask), std::invalid_argument);
}

TEST(Primitives, LogsumexpOfZeros) {
  Tape tape;
  Var y = logsumexp(tape.constant(Shape{3}, {0.0, 0.0, 0.0}));
  EXPECT_NEAR(y.item(), 1.0986122886681098, 1e-15);
  EXPECT_NEAR(y.item(), std::log(std::exp(0.0) * 3), 1e-15);
}

TEST(Primitives, LogsumexpIsStableForLargeInputs) {
  Tape tape;
  Var y = logsumexp(tape.constant(Shape{2}, {1000.0, 1000.0}));
  EXPECT_NEAR(y.item(), 1000.0 + std::log(2.0), 1e-9);
}

TEST(Primitives, ShapeMismatchNamesPrimitiveAndShapes) {
  Tape tape;
  Var a = tape.constant(Tensor(Shape{2, 3}));
  Var b = tape.constant(Tensor(Shape{2, 3}));
  try {
    matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("matmul"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[2, 3]"), std::string::npos) << msg;
  }
  EXPECT_THROW(add(a, tape.constant(Tensor(Shape{3, 2}))), ShapeError);
  EXPECT_THROW(mul(a, tape.constant(Tensor(Shape{2, 2}))), ShapeError);
  EXPECT_THROW(concat(a, tape.constant(Tensor(Shape{3, 3}))), ShapeError);
}

TEST(Backward, SumGivesOnes) {
  Tensor x(Shape{2, 3}, 0.7, true);
  Tape tape;
  tape.backward(sum(tape.param(x)));
  ASSERT_TRUE(x.has_grad());
  for (double g : x.grad) EXPECT_EQ(g, 1.0);
}

TEST(Backward, RepeatedCallsAccumulate) {
  std::mt19937_64 rng(5);
  Tensor w = random_tensor(Shape{1, 4}, rng);
  Tensor x = random_tensor(Shape{1, 4}, rng);
  Tape tape;
  Var loss = sum(mul(sigmoid(tape.param(w)), tape.param(x)));
  tape.backward(loss);
  const auto once = w.grad;
  tape.backward(loss);
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_EQ(w.grad[i], 2.0 * once[i]);
}

TEST(Backward, RejectsNonScalarLoss) {
  Tensor x(Shape{2}, 1.0, true);
  Tape tape;
  EXPECT_THROW(tape.backward(tape.param(x)), std::invalid_argument);
}

TEST(Backward, SigmoidChainMatchesFiniteDifferences) {
  std::mt19937_64 rng(9);
  Tensor w = random_tensor(Shape{1, 5}, rng);
  Tensor x = random_tensor(Shape{1, 5}, rng);
  expect_gradients([&](Tape& t) { return sum(mul(sigmoid(t.param(w)), t.param(x))); }, {{"w", &w}, {"x", &x}});
}

TEST(GradCheck, QuadraticIsExact) {
  Tensor x(Shape{1}, 3.0, true);
  const auto report = grad_check([&](Tape& t) { return sum(mul(t.param(x), t.param(x))); }, {{"x", &x}},
                                 GradCheckOptions{1e-5, 1e-8, 1e-8});
  EXPECT_TRUE(report.passed);
  EXPECT_NEAR(x.grad[0], 6.0, 1e-12);
  EXPECT_LT(report.max_rel_error, 1e-8);
  EXPECT_EQ(x.values[0], 3.0);
}

TEST(GradCheck, DeadReluReportsZeroBothWays) {
  Tensor x(Shape{3}, std::vector<double>{-1.0, -2.0, -0.5}, true);
  const auto report = grad_check([&](Tape& t) { return sum(relu(t.param(x))); }, {{"x", &x}});
  EXPECT_TRUE(report.passed);
  EXPECT_EQ(report.params[0].analytic, 0.0);
  EXPECT_EQ(report.params[0].numeric, 0.0);
  for (double g : x.grad) EXPECT_EQ(g, 0.0);
}

TEST(GradCheck, DetectsNondeterminism) {
  Tensor x(Shape{1}, 1.0, true);
  int calls = 0;
  EXPECT_THROW(grad_check([&](Tape& t) { return scale(t.param(x), 1.0 + 1e-3 * ++calls); }, {{"x", &x}}),
               NondeterministicError);
}

TEST(GradCheck, ForwardIsDeterministic) {
  std::mt19937_64 a(42), b(42);
  Tensor x = random_tensor(Shape{3, 3}, a);
  Tensor y = random_tensor(Shape{3, 3}, b);
  EXPECT_EQ(x.values, y.values);
  Tape t1, t2;
  EXPECT_EQ(sum(tanh(matmul(t1.param(x), t1.param(x)))).item(), sum(tanh(matmul(t2.param(y), t2.param(y)))).item());
}

// Every primitive against central differences on random inputs.
class PrimitiveGradients : public ::testing::Test {
 protected:
  std::mt19937_64 rng{17};
};

TEST_F(PrimitiveGradients, Matmul) {
  Tensor a = random_tensor(Shape{3, 4}, rng), b = random_tensor(Shape{4, 2}, rng);
  expect_gradients([&](Tape& t) { return reduce(t, matmul(t.param(a), t.param(b))); }, {{"a", &a}, {"b", &b}});
}

TEST_F(PrimitiveGradients, MatmulTransposed) {
  Tensor a = random_tensor(Shape{3, 4}, rng), b = random_tensor(Shape{5, 4}, rng);
  expect_gradients([&](Tape& t) { return reduce(t, matmul_nt(t.param(a), t.param(b))); }, {{"a", &a}, {"b", &b}});
}

TEST_F(PrimitiveGradients, AddWithBroadcastAndSub) {
  Tensor a = random_tensor(Shape{3, 4}, rng), b = random_tensor(Shape{4}, rng), c = random_tensor(Shape{3, 4}, rng);
  expect_gradients([&](Tape& t) { return reduce(t, sub(add(t.param(a), t.param(b)), t.param(c))); },
                   {{"a", &a}, {"b", &b}, {"c", &c}});
}

TEST_F(PrimitiveGradients, MulAndScale) {
  Tensor a = random_tensor(Shape{2, 3}, rng), b = random_tensor(Shape{2, 3}, rng);
  expect_gradients([&](Tape& t) { return reduce(t, scale(mul(t.param(a), t.param(b)), -1.7)); },
                   {{"a", &a}, {"b", &b}});
}

TEST_F(PrimitiveGradients, ElementwiseNonlinearities) {
  Tensor a = random_tensor(Shape{2, 4}, rng, -2, 2);
  for (double& v : a.values)
    if (std::abs(v) < 0.05) v = 0.3;  // stay away from the relu kink
  Tensor p = random_tensor(Shape{2, 4}, rng, 0.2, 3.0);
  expect_gradients([&](Tape& t) { return reduce(t, sigmoid(t.param(a))); }, {{"a", &a}});
  expect_gradients([&](Tape& t) { return reduce(t, hgcn::tanh(t.param(a))); }, {{"a", &a}});
  expect_gradients([&](Tape& t) { return reduce(t, relu(t.param(a))); }, {{"a", &a}});
  expect_gradients([&](Tape& t) { return reduce(t, hgcn::exp(t.param(a))); }, {{"a", &a}});
  expect_gradients([&](Tape& t) { return reduce(t, hgcn::log(t.param(p))); }, {{"p", &p}});
}

TEST_F(PrimitiveGradients, LogsumexpAllAxes) {
  Tensor a = random_tensor(Shape{3, 4}, rng, -3, 3);
  Tensor v = random_tensor(Shape{5}, rng, -3, 3);
  expect_gradients([&](Tape& t) { return reduce(t, logsumexp(t.param(a), 1)); }, {{"a", &a}});
  expect_gradients([&](Tape& t) { return reduce(t, logsumexp(t.param(a), 0)); }, {{"a", &a}});
  expect_gradients([&](Tape& t) { return reduce(t, logsumexp(t.param(v))); }, {{"v", &v}});
}

TEST_F(PrimitiveGradients, MaskedSoftmax) {
  Tensor a = random_tensor(Shape{3, 4}, rng, -2, 2);
  const std::vector<std::uint8_t> mask = {1, 0, 1, 1, 0, 1, 0, 0, 1, 1, 1, 1};
  expect_gradients([&](Tape& t) { return reduce(t, masked_softmax(t.param(a), mask)); }, {{"a", &a}});
  expect_gradients([&](Tape& t) { return reduce(t, softmax(t.param(a))); }, {{"a", &a}});
}

TEST_F(PrimitiveGradients, StructuralOps) {
  Tensor a = random_tensor(Shape{4, 3}, rng), b = random_tensor(Shape{4, 2}, rng);
  const std::vector<std::size_t> rows = {0, 2, 3};
  const std::vector<int> ids = {3, 0, 3, 1};
  expect_gradients([&](Tape& t) { return reduce(t, concat(t.param(a), t.param(b))); }, {{"a", &a}, {"b", &b}});
  expect_gradients([&](Tape& t) { return reduce(t, mean_rows(t.param(a), rows)); }, {{"a", &a}});
  expect_gradients([&](Tape& t) { return reduce(t, gather_rows(t.param(a), ids)); }, {{"a", &a}});
  expect_gradients([&](Tape& t) { return reduce(t, slice_cols(t.param(a), 1, 2)); }, {{"a", &a}});
  expect_gradients(
      [&](Tape& t) {
        Var x = t.param(a);
        std::vector<Var> r = {row(x, 2), row(x, 0)};
        return reduce(t, stack_rows(r));
      },
      {{"a", &a}});
  expect_gradients([&](Tape& t) { return pick(t.param(a), 5); }, {{"a", &a}});
}

TEST_F(PrimitiveGradients, LayerNorm) {
  Tensor x = random_tensor(Shape{3, 5}, rng, -2, 2);
  Tensor g = random_tensor(Shape{5}, rng, 0.5, 1.5), b = random_tensor(Shape{5}, rng);
  expect_gradients([&](Tape& t) { return reduce(t, layer_norm(t.param(x), t.param(g), t.param(b))); },
                   {{"x", &x}, {"g", &g}, {"b", &b}});
}

TEST_F(PrimitiveGradients, SquaredL2AndScatter) {
  Tensor a = random_tensor(Shape{2, 3}, rng), b = random_tensor(Shape{4}, rng);
  Tensor v = random_tensor(Shape{3, 1}, rng);
  const std::vector<std::pair<std::size_t, std::size_t>> pos = {{0, 1}, {2, 2}, {1, 0}};
  expect_gradients(
      [&](Tape& t) {
        std::vector<Var> ps = {t.param(a), t.param(b)};
        return squared_l2(ps);
      },
      {{"a", &a}, {"b", &b}});
  expect_gradients([&](Tape& t) { return reduce(t, scatter(t.param(v), pos, 3, 3)); }, {{"v", &v}});
}

TEST(Primitives, ScatterLeavesAbsentEntriesExactlyZero) {
  Tape tape;
  const std::vector<std::pair<std::size_t, std::size_t>> pos = {{0, 1}, {1, 0}};
  Var y = scatter(tape.constant(Shape{2, 1}, {0.25, 0.75}), pos, 2, 2);
  EXPECT_EQ(std::vector<double>(y.values().begin(), y.values().end()), (std::vector<double>{0.0, 0.25, 0.75, 0.0}));
  const std::vector<std::pair<std::size_t, std::size_t>> dup = {{0, 1}, {0, 1}};
  EXPECT_THROW(scatter(tape.constant(Shape{2, 1}, {1.0, 1.0}), dup, 2, 2), std::invalid_argument);
}

TEST(Primitives, DropoutZeroRateIsIdentityAndRateScales) {
  std::mt19937_64 rng(1);
  Tape tape;
  Var x = tape.constant(Tensor(Shape{1, 1000}, 1.0));
  EXPECT_EQ(dropout(x, 0.0, rng).id(), x.id());
  Var y = dropout(x, 0.5, rng);
  for (double v : y.values()) EXPECT_TRUE(v == 0.0 || v == 2.0);
}
