#pragma once

#include <random>

#include <conicert/expr.hpp>

// Random expression generator for differentiation tests. Every generated
// expression is smooth and domain-safe on [-2, 2]^n: log and sqrt arguments
// are forced positive, denominators are bounded away from zero.
namespace testutil {

inline int random_expr_node(conicert::ExpressionAst& ast, std::mt19937_64& gen, int n,
                            int depth) {
  using conicert::NodeKind;
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  std::uniform_int_distribution<int> var_pick(1, n);
  if (depth <= 0) {
    if (std::uniform_int_distribution<int>(0, 2)(gen) == 0)
      return add_const(ast, coef(gen));
    return add_var(ast, var_pick(gen));
  }
  switch (std::uniform_int_distribution<int>(0, 9)(gen)) {
    case 0:
      return add_binary(ast, NodeKind::Add, random_expr_node(ast, gen, n, depth - 1),
                        random_expr_node(ast, gen, n, depth - 1));
    case 1:
      return add_binary(ast, NodeKind::Sub, random_expr_node(ast, gen, n, depth - 1),
                        random_expr_node(ast, gen, n, depth - 1));
    case 2:
      return add_binary(ast, NodeKind::Mul, random_expr_node(ast, gen, n, depth - 1),
                        random_expr_node(ast, gen, n, depth - 1));
    case 3: {
      // Denominator e^2 + 1 keeps the quotient smooth everywhere.
      int den = random_expr_node(ast, gen, n, depth - 2);
      den = add_binary(ast, NodeKind::Add, add_pow(ast, den, 2), add_const(ast, 1.0));
      return add_binary(ast, NodeKind::Div, random_expr_node(ast, gen, n, depth - 1), den);
    }
    case 4:
      return add_unary(ast, NodeKind::Sin, random_expr_node(ast, gen, n, depth - 1));
    case 5:
      return add_unary(ast, NodeKind::Cos, random_expr_node(ast, gen, n, depth - 1));
    case 6: {
      // Scale the exponent argument down to dodge overflow in nested exp.
      int arg = random_expr_node(ast, gen, n, depth - 2);
      arg = add_binary(ast, NodeKind::Mul, add_const(ast, 0.25), arg);
      return add_unary(ast, NodeKind::Exp, arg);
    }
    case 7: {
      int arg = random_expr_node(ast, gen, n, depth - 2);
      arg = add_binary(ast, NodeKind::Add, add_pow(ast, arg, 2), add_const(ast, 0.5));
      return add_unary(ast, NodeKind::Log, arg);
    }
    case 8: {
      int arg = random_expr_node(ast, gen, n, depth - 2);
      arg = add_binary(ast, NodeKind::Add, add_pow(ast, arg, 2), add_const(ast, 0.5));
      return add_unary(ast, NodeKind::Sqrt, arg);
    }
    default: {
      std::uniform_int_distribution<int> exp_pick(0, 3);
      return add_pow(ast, random_expr_node(ast, gen, n, depth - 1), exp_pick(gen));
    }
  }
}

inline conicert::ExpressionAst random_expression(std::mt19937_64& gen, int n, int depth = 4) {
  conicert::ExpressionAst ast;
  ast.root = random_expr_node(ast, gen, n, depth);
  return ast;
}

}  // namespace testutil
