#include <conicert/expr.hpp>

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "parse_internal.hpp"

namespace conicert {

namespace {

const char* op_name(NodeKind k) {
  switch (k) {
    case NodeKind::Const: return "constant";
    case NodeKind::Var: return "variable";
    case NodeKind::Add: return "+";
    case NodeKind::Sub: return "-";
    case NodeKind::Mul: return "*";
    case NodeKind::Div: return "/";
    case NodeKind::Neg: return "negation";
    case NodeKind::Pow: return "^";
    case NodeKind::Sin: return "sin";
    case NodeKind::Cos: return "cos";
    case NodeKind::Exp: return "exp";
    case NodeKind::Log: return "log";
    case NodeKind::Sqrt: return "sqrt";
  }
  return "?";
}

[[noreturn]] void domain_fail(NodeKind kind, int node, const std::string& detail) {
  std::ostringstream os;
  os << detail << " in '" << op_name(kind) << "' (node " << node << " of the expression)";
  throw std::domain_error(os.str());
}

void validate_structure(const ExpressionAst& expr) {
  const int count = static_cast<int>(expr.nodes.size());
  if (expr.root < 0 || expr.root >= count)
    throw std::logic_error("expression root index out of range");
  for (int i = 0; i < count; ++i) {
    const ExprNode& nd = expr.nodes[i];
    const bool needs_a = nd.kind != NodeKind::Const && nd.kind != NodeKind::Var;
    const bool needs_b = nd.kind == NodeKind::Add || nd.kind == NodeKind::Sub ||
                         nd.kind == NodeKind::Mul || nd.kind == NodeKind::Div;
    if (needs_a && (nd.a < 0 || nd.a >= i))
      throw std::logic_error("expression node order violated: child must precede parent");
    if (needs_b && (nd.b < 0 || nd.b >= i))
      throw std::logic_error("expression node order violated: child must precede parent");
    if (nd.kind == NodeKind::Var && nd.var < 1)
      throw std::logic_error("variable index must be at least 1");
  }
}

// Forward second-order sweep. ORDER selects how much is propagated.
template <int ORDER>
void eval_core(const ExpressionAst& expr, const Eigen::VectorXd& x, std::vector<double>& val,
               std::vector<Eigen::VectorXd>& grad, std::vector<Eigen::MatrixXd>& hess) {
  validate_structure(expr);
  const int n = static_cast<int>(x.size());
  if (expr.max_var > n) {
    std::ostringstream os;
    os << "expression references x" << expr.max_var << " but only " << n
       << " variable values were provided";
    throw std::invalid_argument(os.str());
  }
  const int count = static_cast<int>(expr.nodes.size());
  val.assign(count, 0.0);
  if constexpr (ORDER >= 1) grad.assign(count, Eigen::VectorXd::Zero(n));
  if constexpr (ORDER >= 2) hess.assign(count, Eigen::MatrixXd::Zero(n, n));

  for (int i = 0; i < count; ++i) {
    const ExprNode& nd = expr.nodes[i];
    switch (nd.kind) {
      case NodeKind::Const:
        val[i] = nd.value;
        break;
      case NodeKind::Var:
        val[i] = x(nd.var - 1);
        if constexpr (ORDER >= 1) grad[i](nd.var - 1) = 1.0;
        break;
      case NodeKind::Add:
        val[i] = val[nd.a] + val[nd.b];
        if constexpr (ORDER >= 1) grad[i] = grad[nd.a] + grad[nd.b];
        if constexpr (ORDER >= 2) hess[i] = hess[nd.a] + hess[nd.b];
        break;
      case NodeKind::Sub:
        val[i] = val[nd.a] - val[nd.b];
        if constexpr (ORDER >= 1) grad[i] = grad[nd.a] - grad[nd.b];
        if constexpr (ORDER >= 2) hess[i] = hess[nd.a] - hess[nd.b];
        break;
      case NodeKind::Neg:
        val[i] = -val[nd.a];
        if constexpr (ORDER >= 1) grad[i] = -grad[nd.a];
        if constexpr (ORDER >= 2) hess[i] = -hess[nd.a];
        break;
      case NodeKind::Mul:
        val[i] = val[nd.a] * val[nd.b];
        if constexpr (ORDER >= 1)
          grad[i] = val[nd.a] * grad[nd.b] + val[nd.b] * grad[nd.a];
        if constexpr (ORDER >= 2)
          hess[i] = val[nd.a] * hess[nd.b] + val[nd.b] * hess[nd.a] +
                    grad[nd.a] * grad[nd.b].transpose() +
                    grad[nd.b] * grad[nd.a].transpose();
        break;
      case NodeKind::Div: {
        const double b = val[nd.b];
        if (b == 0.0) domain_fail(nd.kind, i, "division by zero");
        // a / b as a * (1/b), propagating the reciprocal's derivatives.
        const double r = 1.0 / b;
        val[i] = val[nd.a] * r;
        if constexpr (ORDER >= 1) {
          const Eigen::VectorXd gr = -(r * r) * grad[nd.b];
          grad[i] = r * grad[nd.a] + val[nd.a] * gr;
          if constexpr (ORDER >= 2) {
            const Eigen::MatrixXd outer_b = grad[nd.b] * grad[nd.b].transpose();
            const Eigen::MatrixXd hr = -(r * r) * hess[nd.b] + (2 * r * r * r) * outer_b;
            hess[i] = r * hess[nd.a] + val[nd.a] * hr +
                      grad[nd.a] * gr.transpose() + gr * grad[nd.a].transpose();
          }
        }
        break;
      }
      case NodeKind::Pow: {
        const double v = val[nd.a];
        const int k = nd.exponent;
        if (k == 0) {
          val[i] = 1.0;
          break;
        }
        if (v == 0.0 && k < 0) domain_fail(nd.kind, i, "zero base with negative exponent");
        val[i] = std::pow(v, k);
        if constexpr (ORDER >= 1) {
          const double d1 = k * std::pow(v, k - 1);
          grad[i] = d1 * grad[nd.a];
          if constexpr (ORDER >= 2) {
            const double d2 = double(k) * (k - 1) * std::pow(v, k - 2);
            const Eigen::MatrixXd outer = grad[nd.a] * grad[nd.a].transpose();
            hess[i] = d1 * hess[nd.a] + d2 * outer;
          }
        }
        break;
      }
      case NodeKind::Sin:
      case NodeKind::Cos:
      case NodeKind::Exp:
      case NodeKind::Log:
      case NodeKind::Sqrt: {
        const double v = val[nd.a];
        double u = 0, d1 = 0, d2 = 0;
        switch (nd.kind) {
          case NodeKind::Sin:
            u = std::sin(v); d1 = std::cos(v); d2 = -u;
            break;
          case NodeKind::Cos:
            u = std::cos(v); d1 = -std::sin(v); d2 = -u;
            break;
          case NodeKind::Exp:
            u = std::exp(v); d1 = u; d2 = u;
            break;
          case NodeKind::Log:
            if (v <= 0.0) {
              std::ostringstream os;
              os << "log of nonpositive value " << v;
              domain_fail(nd.kind, i, os.str());
            }
            u = std::log(v); d1 = 1.0 / v; d2 = -1.0 / (v * v);
            break;
          default:  // Sqrt
            if (v < 0.0) {
              std::ostringstream os;
              os << "sqrt of negative value " << v;
              domain_fail(nd.kind, i, os.str());
            }
            if (v == 0.0 && ORDER >= 1)
              domain_fail(nd.kind, i, "sqrt differentiated at zero");
            u = std::sqrt(v);
            if (v > 0.0) {
              d1 = 0.5 / u;
              d2 = -0.25 / (u * v);
            }
            break;
        }
        val[i] = u;
        if constexpr (ORDER >= 1) {
          grad[i] = d1 * grad[nd.a];
          if constexpr (ORDER >= 2) {
            const Eigen::MatrixXd outer = grad[nd.a] * grad[nd.a].transpose();
            hess[i] = d1 * hess[nd.a] + d2 * outer;
          }
        }
        break;
      }
    }
  }
}

}  // namespace

int add_const(ExpressionAst& ast, double value) {
  ExprNode nd;
  nd.kind = NodeKind::Const;
  nd.value = value;
  ast.nodes.push_back(nd);
  return static_cast<int>(ast.nodes.size()) - 1;
}

int add_var(ExpressionAst& ast, int var_one_based) {
  if (var_one_based < 1) throw std::invalid_argument("variable indices start at x1");
  ExprNode nd;
  nd.kind = NodeKind::Var;
  nd.var = var_one_based;
  ast.nodes.push_back(nd);
  ast.max_var = std::max(ast.max_var, var_one_based);
  return static_cast<int>(ast.nodes.size()) - 1;
}

int add_unary(ExpressionAst& ast, NodeKind kind, int a) {
  ExprNode nd;
  nd.kind = kind;
  nd.a = a;
  ast.nodes.push_back(nd);
  return static_cast<int>(ast.nodes.size()) - 1;
}

int add_binary(ExpressionAst& ast, NodeKind kind, int a, int b) {
  ExprNode nd;
  nd.kind = kind;
  nd.a = a;
  nd.b = b;
  ast.nodes.push_back(nd);
  return static_cast<int>(ast.nodes.size()) - 1;
}

int add_pow(ExpressionAst& ast, int a, int exponent) {
  ExprNode nd;
  nd.kind = NodeKind::Pow;
  nd.a = a;
  nd.exponent = exponent;
  ast.nodes.push_back(nd);
  return static_cast<int>(ast.nodes.size()) - 1;
}

SecondOrderJet eval_jet(const ExpressionAst& expr, const Eigen::VectorXd& x) {
  std::vector<double> val;
  std::vector<Eigen::VectorXd> grad;
  std::vector<Eigen::MatrixXd> hess;
  eval_core<2>(expr, x, val, grad, hess);
  SecondOrderJet jet;
  jet.value = val[expr.root];
  jet.gradient = grad[expr.root];
  jet.hessian = hess[expr.root];
  return jet;
}

double eval_value(const ExpressionAst& expr, const Eigen::VectorXd& x) {
  std::vector<double> val;
  std::vector<Eigen::VectorXd> grad;
  std::vector<Eigen::MatrixXd> hess;
  eval_core<0>(expr, x, val, grad, hess);
  return val[expr.root];
}

double eval_value_grad(const ExpressionAst& expr, const Eigen::VectorXd& x,
                       Eigen::VectorXd& grad_out) {
  std::vector<double> val;
  std::vector<Eigen::VectorXd> grad;
  std::vector<Eigen::MatrixXd> hess;
  eval_core<1>(expr, x, val, grad, hess);
  grad_out = grad[expr.root];
  return val[expr.root];
}

// ---------------------------------------------------------------------------
// Lexing and parsing
// ---------------------------------------------------------------------------

namespace detail {

void fail_at(const Token& tok, const std::string& msg) {
  std::ostringstream os;
  os << "parse error at line " << tok.line << ", column " << tok.col << ": " << msg;
  throw ParseError(os.str(), tok.line, tok.col);
}

bool is_keyword(const std::string& s) {
  return s == "vars" || s == "minimize" || s == "cone" || s == "lorentz" || s == "psd" ||
         s == "eq";
}

std::vector<Token> lex(const std::string& text) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  size_t i = 0;
  const size_t len = text.size();
  auto advance = [&](size_t by) {
    for (size_t k = 0; k < by; ++k) {
      if (text[i + k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    i += by;
  };
  while (i < len) {
    const char c = text[i];
    if (c == '#') {
      size_t j = i;
      while (j < len && text[j] != '\n') ++j;
      advance(j - i);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    Token tok;
    tok.line = line;
    tok.col = col;
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < len && std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
      const char* begin = text.c_str() + i;
      char* end = nullptr;
      tok.num = std::strtod(begin, &end);
      const size_t used = static_cast<size_t>(end - begin);
      tok.kind = TokKind::Number;
      tok.text = text.substr(i, used);
      advance(used);
      out.push_back(std::move(tok));
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < len && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_'))
        ++j;
      tok.kind = TokKind::Ident;
      tok.text = text.substr(i, j - i);
      advance(j - i);
      out.push_back(std::move(tok));
      continue;
    }
    if (std::string("+-*/^(),:").find(c) != std::string::npos) {
      tok.kind = TokKind::Punct;
      tok.text = std::string(1, c);
      advance(1);
      out.push_back(std::move(tok));
      continue;
    }
    std::ostringstream os;
    os << "unexpected character '" << c << "'";
    ParseError err(std::string("parse error at line ") + std::to_string(line) + ", column " +
                       std::to_string(col) + ": " + os.str(),
                   line, col);
    throw err;
  }
  Token end_tok;
  end_tok.kind = TokKind::End;
  end_tok.line = line;
  end_tok.col = col;
  out.push_back(end_tok);
  return out;
}

namespace {

int parse_sum(ExpressionAst& ast, TokenStream& ts);

bool is_function(const std::string& s) {
  return s == "sin" || s == "cos" || s == "exp" || s == "log" || s == "sqrt";
}

NodeKind function_kind(const std::string& s) {
  if (s == "sin") return NodeKind::Sin;
  if (s == "cos") return NodeKind::Cos;
  if (s == "exp") return NodeKind::Exp;
  if (s == "log") return NodeKind::Log;
  return NodeKind::Sqrt;
}

int parse_atom(ExpressionAst& ast, TokenStream& ts) {
  const Token& tok = ts.peek();
  if (tok.kind == TokKind::Number) {
    ts.get();
    return add_const(ast, tok.num);
  }
  if (tok.kind == TokKind::Ident) {
    if (is_function(tok.text)) {
      const std::string name = tok.text;
      ts.get();
      if (!ts.at_punct('('))
        fail_at(ts.peek(), "expected '(' after function name '" + name + "'");
      ts.get();
      const int arg = parse_sum(ast, ts);
      if (!ts.at_punct(')'))
        fail_at(ts.peek(), "expected ')' to close the argument of '" + name + "'");
      ts.get();
      return add_unary(ast, function_kind(name), arg);
    }
    if (is_keyword(tok.text))
      fail_at(tok, "unexpected keyword '" + tok.text + "' inside an expression");
    if (tok.text.size() >= 2 && tok.text[0] == 'x' &&
        tok.text.find_first_not_of("0123456789", 1) == std::string::npos) {
      const long idx = std::strtol(tok.text.c_str() + 1, nullptr, 10);
      if (idx < 1)
        fail_at(tok, "invalid variable '" + tok.text + "'; variable indices start at x1");
      if (idx > 1000000)
        fail_at(tok, "variable index in '" + tok.text + "' is unreasonably large");
      ts.get();
      return add_var(ast, static_cast<int>(idx));
    }
    fail_at(tok, "unknown symbol '" + tok.text + "'");
  }
  if (tok.kind == TokKind::Punct && tok.text == "(") {
    ts.get();
    const int inner = parse_sum(ast, ts);
    if (!ts.at_punct(')')) fail_at(ts.peek(), "expected ')'");
    ts.get();
    return inner;
  }
  if (tok.kind == TokKind::End)
    fail_at(tok, "expected a number, variable, function call, or '('");
  fail_at(tok, "unexpected '" + tok.text + "'; expected a number, variable, function call, or '('");
}

int parse_power(ExpressionAst& ast, TokenStream& ts) {
  const int base = parse_atom(ast, ts);
  if (!ts.at_punct('^')) return base;
  ts.get();
  int sign = 1;
  if (ts.at_punct('-')) {
    ts.get();
    sign = -1;
  }
  const Token& tok = ts.peek();
  if (tok.kind != TokKind::Number ||
      tok.text.find_first_of(".eE") != std::string::npos)
    fail_at(tok, "exponent must be an integer literal");
  ts.get();
  return add_pow(ast, base, sign * static_cast<int>(tok.num));
}

int parse_unary(ExpressionAst& ast, TokenStream& ts) {
  if (ts.at_punct('+')) {
    ts.get();
    return parse_unary(ast, ts);
  }
  if (ts.at_punct('-')) {
    ts.get();
    const int inner = parse_unary(ast, ts);
    // Fold a negated literal into a negative constant so that serialized
    // negative numbers parse back to the identical tree.
    if (ast.nodes[inner].kind == NodeKind::Const) {
      ast.nodes[inner].value = -ast.nodes[inner].value;
      return inner;
    }
    return add_unary(ast, NodeKind::Neg, inner);
  }
  return parse_power(ast, ts);
}

int parse_product(ExpressionAst& ast, TokenStream& ts) {
  int lhs = parse_unary(ast, ts);
  while (ts.at_punct('*') || ts.at_punct('/')) {
    const bool mul = ts.get().text == "*";
    const int rhs = parse_unary(ast, ts);
    lhs = add_binary(ast, mul ? NodeKind::Mul : NodeKind::Div, lhs, rhs);
  }
  return lhs;
}

int parse_sum(ExpressionAst& ast, TokenStream& ts) {
  int lhs = parse_product(ast, ts);
  while (ts.at_punct('+') || ts.at_punct('-')) {
    const bool add = ts.get().text == "+";
    const int rhs = parse_product(ast, ts);
    lhs = add_binary(ast, add ? NodeKind::Add : NodeKind::Sub, lhs, rhs);
  }
  return lhs;
}

}  // namespace

int parse_expression_into(ExpressionAst& ast, TokenStream& ts) {
  return parse_sum(ast, ts);
}

}  // namespace detail

ExpressionAst parse_expression(const std::string& text) {
  detail::TokenStream ts;
  ts.toks = detail::lex(text);
  ExpressionAst ast;
  ast.root = detail::parse_expression_into(ast, ts);
  if (!ts.at_end())
    detail::fail_at(ts.peek(), "unexpected trailing input '" + ts.peek().text + "'");
  return ast;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

std::string print_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Precedence levels: sum 1, product 2, unary minus 3, power 4, atom 5.
int node_prec(const ExprNode& nd) {
  switch (nd.kind) {
    case NodeKind::Add:
    case NodeKind::Sub: return 1;
    case NodeKind::Mul:
    case NodeKind::Div: return 2;
    case NodeKind::Neg: return 3;
    case NodeKind::Pow: return 4;
    case NodeKind::Const:
      return nd.value < 0 ? 3 : 5;  // "-2" binds like a negation
    default: return 5;
  }
}

void print_node(const ExpressionAst& ast, int i, int min_prec, std::string& out) {
  const ExprNode& nd = ast.nodes[i];
  const int prec = node_prec(nd);
  const bool wrap = prec < min_prec;
  if (wrap) out += "(";
  switch (nd.kind) {
    case NodeKind::Const:
      out += print_double(nd.value);
      break;
    case NodeKind::Var:
      out += "x" + std::to_string(nd.var);
      break;
    case NodeKind::Add:
      print_node(ast, nd.a, 1, out);
      out += " + ";
      print_node(ast, nd.b, 2, out);
      break;
    case NodeKind::Sub:
      print_node(ast, nd.a, 1, out);
      out += " - ";
      print_node(ast, nd.b, 2, out);
      break;
    case NodeKind::Mul:
      print_node(ast, nd.a, 2, out);
      out += " * ";
      print_node(ast, nd.b, 3, out);
      break;
    case NodeKind::Div:
      print_node(ast, nd.a, 2, out);
      out += " / ";
      print_node(ast, nd.b, 3, out);
      break;
    case NodeKind::Neg:
      out += "-";
      print_node(ast, nd.a, 3, out);
      break;
    case NodeKind::Pow:
      print_node(ast, nd.a, 5, out);
      out += "^" + std::to_string(nd.exponent);
      break;
    case NodeKind::Sin:
    case NodeKind::Cos:
    case NodeKind::Exp:
    case NodeKind::Log:
    case NodeKind::Sqrt:
      out += op_name(nd.kind);
      out += "(";
      print_node(ast, nd.a, 1, out);
      out += ")";
      break;
  }
  if (wrap) out += ")";
}

bool node_equal(const ExpressionAst& a, int ia, const ExpressionAst& b, int ib) {
  const ExprNode& na = a.nodes[ia];
  const ExprNode& nb = b.nodes[ib];
  if (na.kind != nb.kind) return false;
  switch (na.kind) {
    case NodeKind::Const: return na.value == nb.value;
    case NodeKind::Var: return na.var == nb.var;
    case NodeKind::Pow:
      return na.exponent == nb.exponent && node_equal(a, na.a, b, nb.a);
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div:
      return node_equal(a, na.a, b, nb.a) && node_equal(a, na.b, b, nb.b);
    default:
      return node_equal(a, na.a, b, nb.a);
  }
}

}  // namespace

std::string serialize_expression(const ExpressionAst& expr) {
  if (expr.root < 0 || expr.root >= static_cast<int>(expr.nodes.size()))
    throw std::logic_error("cannot serialize an expression without a valid root");
  std::string out;
  print_node(expr, expr.root, 1, out);
  return out;
}

bool ast_equal(const ExpressionAst& a, const ExpressionAst& b) {
  if (a.root < 0 || b.root < 0) return a.root == b.root;
  return node_equal(a, a.root, b, b.root);
}

}  // namespace conicert
