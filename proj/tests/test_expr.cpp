#include <doctest.h>

#include <conicert/expr.hpp>

#include "expr_gen.hpp"
#include "test_util.hpp"

using namespace conicert;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {
VectorXd vec1(double a) { return VectorXd::Constant(1, a); }
VectorXd vec2(double a, double b) {
  VectorXd v(2);
  v << a, b;
  return v;
}
}  // namespace

TEST_CASE("eval_jet: pinned values") {
  // x1^2 at x = 3.
  ExpressionAst sq;
  sq.root = add_pow(sq, add_var(sq, 1), 2);
  SecondOrderJet j = eval_jet(sq, vec1(3));
  CHECK(j.value == doctest::Approx(9.0));
  CHECK(j.gradient(0) == doctest::Approx(6.0));
  CHECK(j.hessian(0, 0) == doctest::Approx(2.0));

  // x1 * x2 at (2, 5).
  ExpressionAst prod;
  prod.root = add_binary(prod, NodeKind::Mul, add_var(prod, 1), add_var(prod, 2));
  j = eval_jet(prod, vec2(2, 5));
  CHECK(j.value == doctest::Approx(10.0));
  CHECK(j.gradient(0) == doctest::Approx(5.0));
  CHECK(j.gradient(1) == doctest::Approx(2.0));
  MatrixXd expected(2, 2);
  expected << 0, 1, 1, 0;
  CHECK((j.hessian - expected).norm() <= 1e-14);
}

TEST_CASE("eval_jet: transcendental expression matches finite differences") {
  // sin(x1) + exp(x2) * x1 at (0.7, -0.3).
  ExpressionAst e = parse_expression("sin(x1) + exp(x2) * x1");
  VectorXd x = vec2(0.7, -0.3);
  SecondOrderJet j = eval_jet(e, x);

  const double expected_value = std::sin(0.7) + std::exp(-0.3) * 0.7;
  CHECK(j.value == doctest::Approx(expected_value).epsilon(1e-12));

  auto f = [&](const VectorXd& y) { return eval_value(e, y); };
  VectorXd fd_g = testutil::fd_gradient(f, x, 1e-5);
  MatrixXd fd_h = testutil::fd_hessian(f, x, 1e-4);
  CHECK((j.gradient - fd_g).norm() <= 1e-6 * std::max(1.0, fd_g.norm()));
  CHECK((j.hessian - fd_h).norm() <= 1e-5 * std::max(1.0, fd_h.norm()));
}

TEST_CASE("eval_jet: power edge cases") {
  ExpressionAst e;
  e.root = add_pow(e, add_var(e, 1), 0);
  SecondOrderJet j = eval_jet(e, vec1(4));
  CHECK(j.value == 1.0);
  CHECK(j.gradient(0) == 0.0);
  CHECK(j.hessian(0, 0) == 0.0);

  ExpressionAst lin;
  lin.root = add_pow(lin, add_var(lin, 1), 1);
  j = eval_jet(lin, vec1(4));
  CHECK(j.value == 4.0);
  CHECK(j.gradient(0) == 1.0);
  CHECK(j.hessian(0, 0) == 0.0);

  // x^3 at 0: value, gradient and Hessian all vanish.
  ExpressionAst cub;
  cub.root = add_pow(cub, add_var(cub, 1), 3);
  j = eval_jet(cub, vec1(0));
  CHECK(j.value == 0.0);
  CHECK(j.gradient(0) == 0.0);
  CHECK(j.hessian(0, 0) == 0.0);

  // x^2 at 0 still has curvature 2.
  ExpressionAst sq;
  sq.root = add_pow(sq, add_var(sq, 1), 2);
  j = eval_jet(sq, vec1(0));
  CHECK(j.hessian(0, 0) == doctest::Approx(2.0));

  // Negative exponent: x^-2 at 3.
  ExpressionAst inv = parse_expression("x1^-2");
  j = eval_jet(inv, vec1(3));
  CHECK(j.value == doctest::Approx(1.0 / 9.0));
  CHECK(j.gradient(0) == doctest::Approx(-2.0 / 27.0));
  CHECK(j.hessian(0, 0) == doctest::Approx(6.0 / 81.0));
}

TEST_CASE("eval_jet: domain errors identify the offending operation") {
  CHECK_THROWS_AS(eval_value(parse_expression("log(x1)"), vec1(-1)), std::domain_error);
  CHECK_THROWS_AS(eval_value(parse_expression("sqrt(x1)"), vec1(-2)), std::domain_error);
  CHECK_THROWS_AS(eval_value(parse_expression("1 / x1"), vec1(0)), std::domain_error);
  CHECK_THROWS_AS(eval_value(parse_expression("x1^-1"), vec1(0)), std::domain_error);
  try {
    eval_value(parse_expression("log(x1)"), vec1(-1));
    CHECK(false);
  } catch (const std::domain_error& err) {
    CHECK(std::string(err.what()).find("log") != std::string::npos);
  }
  // Too few variables for the expression.
  CHECK_THROWS_AS(eval_value(parse_expression("x3"), vec2(1, 2)), std::invalid_argument);
}

TEST_CASE("eval_jet: 50 random expressions match finite differences") {
  auto gen = testutil::rng(31);
  int done = 0;
  while (done < 50) {
    const int n = 1 + static_cast<int>(done % 3);
    ExpressionAst e = testutil::random_expression(gen, n, 4);
    VectorXd x = testutil::random_vector(gen, n, 2.0);
    SecondOrderJet j = eval_jet(e, x);
    // Exact structural symmetry of the Hessian.
    CHECK((j.hessian - j.hessian.transpose()).norm() == 0.0);

    auto f = [&](const VectorXd& y) { return eval_value(e, y); };
    CHECK(j.value == doctest::Approx(f(x)).epsilon(1e-13));
    VectorXd fd_g = testutil::fd_gradient(f, x, 1e-5);
    MatrixXd fd_h = testutil::fd_hessian(f, x, 1e-4);
    CHECK((j.gradient - fd_g).norm() <= 1e-5 * std::max(1.0, fd_g.norm()));
    CHECK((j.hessian - fd_h).norm() <= 1e-4 * std::max(1.0, fd_h.norm()));

    // First-order path agrees with the full jet.
    VectorXd g1(n);
    const double v1 = eval_value_grad(e, x, g1);
    CHECK(v1 == j.value);
    CHECK((g1 - j.gradient).norm() == 0.0);
    ++done;
  }
}

TEST_CASE("parser: precedence and associativity") {
  // Multiplication binds tighter than addition.
  ExpressionAst a = parse_expression("x1 + 2 * x2");
  ExpressionAst b = parse_expression("x1 + (2 * x2)");
  CHECK(ast_equal(a, b));
  CHECK(!ast_equal(a, parse_expression("(x1 + 2) * x2")));

  // Power binds tighter than unary minus.
  CHECK(eval_value(parse_expression("-x1^2"), vec1(3)) == doctest::Approx(-9.0));
  CHECK(eval_value(parse_expression("(-x1)^2"), vec1(3)) == doctest::Approx(9.0));

  // Left associativity of subtraction and division.
  CHECK(eval_value(parse_expression("8 - 3 - 2"), vec1(0)) == doctest::Approx(3.0));
  CHECK(eval_value(parse_expression("8 / 2 / 2"), vec1(0)) == doctest::Approx(2.0));

  // Whitespace-insensitive, including newlines inside an expression.
  CHECK(ast_equal(parse_expression("x1+\n  2*x2"), a));
}

TEST_CASE("parser: numeric literals") {
  CHECK(eval_value(parse_expression("1e-3"), vec1(0)) == doctest::Approx(1e-3));
  CHECK(eval_value(parse_expression(".5"), vec1(0)) == doctest::Approx(0.5));
  CHECK(eval_value(parse_expression("2.5e+2"), vec1(0)) == doctest::Approx(250.0));
  CHECK(eval_value(parse_expression("3.25"), vec1(0)) == doctest::Approx(3.25));
}

TEST_CASE("parser: errors carry line and column") {
  auto expect_error = [&](const std::string& text, int line, const std::string& fragment) {
    try {
      parse_expression(text);
      CHECK_MESSAGE(false, "expected a parse error for: " << text);
    } catch (const ParseError& err) {
      CHECK(err.line == line);
      CHECK(err.col >= 1);
      CHECK(std::string(err.what()).find(fragment) != std::string::npos);
    }
  };
  expect_error("x1 + ", 1, "expected");
  expect_error("(x1 + x2", 1, ")");
  expect_error("x0", 1, "x0");              // variable indices start at 1
  expect_error("y1 + 2", 1, "y1");          // unknown symbol
  expect_error("x1 ^ 2.5", 1, "integer");   // fractional exponent
  expect_error("x1 @ x2", 1, "@");          // stray character
  expect_error("sin x1", 1, "(");           // function call needs parentheses
  expect_error("x1 +\n* 2", 2, "*");        // line tracking
}

TEST_CASE("parser: keywords are reserved inside expressions") {
  CHECK_THROWS_AS(parse_expression("x1 + cone"), ParseError);
  CHECK_THROWS_AS(parse_expression("minimize"), ParseError);
}

TEST_CASE("serialization round-trips the AST") {
  auto gen = testutil::rng(32);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + trial % 3;
    ExpressionAst e = testutil::random_expression(gen, n, 4);
    const std::string text = serialize_expression(e);
    ExpressionAst back = parse_expression(text);
    CHECK(ast_equal(e, back));
    // And the serialized form is stable.
    CHECK(serialize_expression(back) == text);
  }
  // Constants round-trip bit-exactly through the printed form.
  ExpressionAst c;
  c.root = add_const(c, 0.1 + 0.2);
  ExpressionAst back = parse_expression(serialize_expression(c));
  CHECK(back.nodes[back.root].value == 0.1 + 0.2);
}
