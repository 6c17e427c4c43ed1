#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include <conicert/cones.hpp>
#include <conicert/expr.hpp>

namespace conicert {

// One conic constraint block given by entry expressions: a Lorentz block
// lists its dim coordinates, a PSD block lists the dim*(dim+1)/2 lower
// triangle entries row-major.
struct ConeBlockExprs {
  BlockKind kind = BlockKind::Lorentz;
  int dim = 0;
  std::vector<ExpressionAst> entries;
};

// minimize f(x)  subject to  g_i(x) in K_i for every block,  h(x) = 0.
struct ProblemInstance {
  int n = 0;
  ExpressionAst objective;
  std::vector<ConeBlockExprs> blocks;
  std::vector<ExpressionAst> equalities;

  int p() const { return static_cast<int>(equalities.size()); }
  ConeSpec cone_spec() const;
};

// Parses the problem file format: sections `vars n`, `minimize <expr>`,
// repeated `cone lorentz m: e1, ..., em` / `cone psd m: <lower triangle,
// row-major>`, repeated `eq: <expr>`; `#` starts a comment; whitespace and
// newlines are interchangeable. Throws ParseError with line/column.
ProblemInstance parse_problem(const std::string& text);

// Canonical text form; parsing it back yields a structurally identical
// instance, and serialization of that is character-identical.
std::string serialize_problem(const ProblemInstance& inst);

// Constraint evaluation.
std::vector<BlockPoint> eval_g(const ProblemInstance& inst, const Eigen::VectorXd& x);
Eigen::VectorXd eval_h(const ProblemInstance& inst, const Eigen::VectorXd& x);

// Directional derivative of g: block-wise Dg(x)[d].
std::vector<BlockPoint> eval_Dg_apply(const ProblemInstance& inst, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& d);

// Adjoint Dg(x)*[w] = (<d_i g(x), w>)_i, summed over blocks.
Eigen::VectorXd eval_Dg_adjoint(const ProblemInstance& inst, const Eigen::VectorXd& x,
                                const std::vector<BlockPoint>& w);

// Second-order adjoint D^2 g(x)*[w] = [<d_i d_j g(x), w>]_ij, exactly symmetric.
Eigen::MatrixXd eval_D2g_adjoint(const ProblemInstance& inst, const Eigen::VectorXd& x,
                                 const std::vector<BlockPoint>& w);

// grad_x L = grad f(x) - Dg(x)*[omega] + Dh(x)^T mu.
Eigen::VectorXd lagrangian_grad(const ProblemInstance& inst, const Eigen::VectorXd& x,
                                const std::vector<BlockPoint>& omega,
                                const Eigen::VectorXd& mu);

// hess_x L = hess f(x) - D^2 g(x)*[omega] + sum_j mu_j hess h_j(x).
Eigen::MatrixXd lagrangian_hess(const ProblemInstance& inst, const Eigen::VectorXd& x,
                                const std::vector<BlockPoint>& omega,
                                const Eigen::VectorXd& mu);

// Phi(x) = (1/2)(||h(x)||^2 + sum_i ||Pi_{K_i}(-g_i(x))||^2), the squared
// constraint violation, and its everywhere-valid gradient
// Dh(x)^T h(x) - Dg(x)*[Pi_K(-g(x))].
double infeasibility_phi(const ProblemInstance& inst, const Eigen::VectorXd& x);
Eigen::VectorXd infeasibility_phi_grad(const ProblemInstance& inst, const Eigen::VectorXd& x);

// Everything the solver needs at one point, evaluated in a single pass:
// objective value/gradient, block values with their packed-entry Jacobians,
// and equality values with their Jacobian.
struct FirstOrderEval {
  double f = 0;
  Eigen::VectorXd grad_f;
  std::vector<BlockPoint> g;
  std::vector<Eigen::MatrixXd> Dg;  // per block: entries x n
  Eigen::VectorXd h;
  Eigen::MatrixXd Dh;  // p x n
};
FirstOrderEval eval_first_order(const ProblemInstance& inst, const Eigen::VectorXd& x);

}  // namespace conicert
