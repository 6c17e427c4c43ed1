#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace conicert {

enum class NodeKind { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Sin, Cos, Exp, Log, Sqrt };

// One node of a pooled expression tree. Children are pool indices and always
// precede their parent, so a forward sweep over the pool is an evaluation
// order.
struct ExprNode {
  NodeKind kind = NodeKind::Const;
  int a = -1;        // first child
  int b = -1;        // second child (binary ops only)
  double value = 0;  // Const payload
  int var = 0;       // Var payload, 1-based
  int exponent = 0;  // Pow payload
};

struct ExpressionAst {
  std::vector<ExprNode> nodes;
  int root = -1;
  int max_var = 0;  // highest variable index referenced (1-based)
};

// Pool builders; each returns the index of the freshly appended node.
int add_const(ExpressionAst& ast, double value);
int add_var(ExpressionAst& ast, int var_one_based);
int add_unary(ExpressionAst& ast, NodeKind kind, int a);
int add_binary(ExpressionAst& ast, NodeKind kind, int a, int b);
int add_pow(ExpressionAst& ast, int a, int exponent);

// Value, gradient, and exactly symmetric Hessian at a point.
struct SecondOrderJet {
  double value = 0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

// Full second-order forward propagation.
SecondOrderJet eval_jet(const ExpressionAst& expr, const Eigen::VectorXd& x);

// Value only — the cheap path for line searches.
double eval_value(const ExpressionAst& expr, const Eigen::VectorXd& x);

// Value plus gradient; grad is resized to x.size().
double eval_value_grad(const ExpressionAst& expr, const Eigen::VectorXd& x,
                       Eigen::VectorXd& grad);

// Parse error with its source position (1-based).
struct ParseError : std::runtime_error {
  int line = 0;
  int col = 0;
  ParseError(const std::string& message, int line_, int col_)
      : std::runtime_error(message), line(line_), col(col_) {}
};

// Parses a standalone arithmetic expression; the entire string must be
// consumed. Grammar: + - * / ^ with usual precedence, unary minus, integer
// exponents, parentheses, sin/cos/exp/log/sqrt calls, variables x1..xn.
ExpressionAst parse_expression(const std::string& text);

// Canonical text form; parse_expression(serialize_expression(e)) is
// structurally identical to e and serialization is a fixed point.
std::string serialize_expression(const ExpressionAst& expr);

// Structural equality of the trees reachable from the roots.
bool ast_equal(const ExpressionAst& a, const ExpressionAst& b);

}  // namespace conicert
