#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <conicert/problem.hpp>

namespace conicert {

// Outer-loop schedule and inner-solve budgets for the external penalty method.
struct SolverConfig {
  double rho0 = 1.0;        // initial penalty weight
  double rho_mult = 10.0;   // geometric growth factor, > 1
  double inner_eps0 = 1e-2; // inner stationarity schedule eps_k = inner_eps0 / rho_k
  double outer_tol = 1e-8;  // stop when the combined KKT residual falls below this
  int max_outer = 25;
  int max_inner = 5000;
  // Optional regularizer (1/4)||x - c||^4 added to the penalty function; off by
  // default, exposed so tests can reproduce the centered construction.
  std::optional<Eigen::VectorXd> quartic_center;

  void validate() const;  // throws std::invalid_argument
};

// Per-block complementarity diagnostics. `detail` is the block-specific
// alignment measure: for a Lorentz block, ||omega|| when g is interior, or the
// angular defect || omega_bar/||omega_bar|| + g_bar/||g_bar|| || at a boundary
// point (the multiplier tail must be antiparallel to the constraint tail);
// for a PSD block, sum_i |lambda_i(g) nu_i| with nu read in g's eigenframe.
// `misalignment` is ||g w - w g||_F for PSD blocks and 0 for Lorentz blocks.
struct BlockDiagnostic {
  double complementarity = 0.0;  // |<g_i(x), omega_i>|
  double detail = 0.0;
  double misalignment = 0.0;
};

struct AkktDiagnostics {
  double stationarity = 0.0;  // ||grad_x L(x, omega, mu)||
  std::vector<BlockDiagnostic> blocks;

  double complementarity_max() const;
  double max_residual() const;  // max of stationarity and complementarity_max()
};

// One outer iteration of the penalty loop.
struct IterateRow {
  int k = 0;
  double rho = 0.0;
  Eigen::VectorXd x;
  std::vector<BlockPoint> omega;  // rho * Pi_K(-g(x)), one entry per block
  Eigen::VectorXd mu;             // rho * h(x)
  double stationarity = 0.0;
  double phi = 0.0;
  AkktDiagnostics diagnostics;
  int inner_iters = 0;
  bool inner_incomplete = false;
};
using IterateTrace = std::vector<IterateRow>;

enum class SolveStatus {
  ConvergedKkt,
  AkktUnboundedMultipliers,  // multiplier norm grew past 1e8
  InfeasibleStationary,      // Phi stalls above tolerance with grad Phi -> 0
  BudgetExhausted,
};

std::string to_string(SolveStatus status);

struct SolveResult {
  Eigen::VectorXd x;
  std::vector<BlockPoint> omega;
  Eigen::VectorXd mu;
  IterateTrace trace;
  SolveStatus status = SolveStatus::BudgetExhausted;
};

// F(x) = f(x) + [ (1/4)||x - c||^4 ] + rho * Phi(x), with the gradient
// grad f + ||x - c||^2 (x - c) + rho * grad Phi. Throws std::invalid_argument
// for rho <= 0 or a misshaped center; domain errors from the expressions
// propagate.
std::pair<double, Eigen::VectorXd> penalty_value_grad(
    const ProblemInstance& inst, const Eigen::VectorXd& x, double rho,
    const std::optional<Eigen::VectorXd>& quartic_center = std::nullopt);

// Value-only evaluation of the same function (used by the line search).
double penalty_value(const ProblemInstance& inst, const Eigen::VectorXd& x, double rho,
                     const std::optional<Eigen::VectorXd>& quartic_center = std::nullopt);

struct InnerResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd grad;
  int iters = 0;
  bool incomplete = false;  // budget or line search gave out before eps_k
};

// Quasi-Newton descent (BFGS with an Armijo line search, steepest-descent
// fallback) on F(.; rho) until ||grad F|| <= eps_k. F is C^1 with Lipschitz
// gradient but not C^2, so no Newton steps are taken on it. Points where an
// expression leaves its domain are treated as +infinity by the line search;
// a start point outside the domain throws std::runtime_error.
InnerResult inner_minimize(const ProblemInstance& inst, double rho,
                           const Eigen::VectorXd& x_start, double eps_k,
                           const SolverConfig& config);

// omega = rho * Pi_K(-g(x)) per block, mu = rho * h(x).
std::pair<std::vector<BlockPoint>, Eigen::VectorXd> multiplier_estimates(
    const ProblemInstance& inst, const Eigen::VectorXd& x, double rho);

// Stationarity, complementarity, and frame-alignment diagnostics for a
// candidate primal-dual triple; all entries tend to 0 along a convergent
// penalty trajectory.
AkktDiagnostics akkt_residual(const ProblemInstance& inst, const Eigen::VectorXd& x,
                              const std::vector<BlockPoint>& omega,
                              const Eigen::VectorXd& mu);

// d^T [ hess_x L(x, rho Pi(-g), rho h) + rho sum_i Dg_i^T V_i Dg_i
//       + rho Dh^T Dh ] d, where each V_i is an element of the projection's
// Clarke generalized Jacobian at -g_i(x). Where the subdifferential is
// multivalued, theta in [0, 1] interpolates between the extreme generators
// (PSD blocks use it as the rank-deficient-pair coefficient); negative theta
// behaves as 0. Requires |theta| <= 1.
double curvature_probe(const ProblemInstance& inst, const Eigen::VectorXd& x, double rho,
                       const Eigen::VectorXd& d, double theta);

// Outer penalty loop: minimize F(.; rho_k), form multiplier estimates, record
// the trace row, and stop on the combined residual
// max(||grad_x L||, Phi^(1/2), complementarity diagnostics) <= outer_tol.
SolveResult solve(const ProblemInstance& inst, const Eigen::VectorXd& x0,
                  const SolverConfig& config = {});

}  // namespace conicert
