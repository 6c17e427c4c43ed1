#pragma once

// Shared NLP-reduction machinery: a seeded generator of scalar-cone problem
// instances whose KKT point sits at the origin by construction, plus an
// independent reduced-Hessian second-order oracle (full-pivot LU kernel,
// orthonormalized by QR). Used by the certificate tests and the acceptance
// suite so both compare against the same source of truth.

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <conicert/problem.hpp>

namespace nlptest {

// Formats a double so that parsing the text recovers the exact value.
inline std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Sign-aware affine expression text c + sum_i a_i x_i.
inline std::string affine_text(const Eigen::RowVectorXd& a, double c) {
  std::string s = num(c);
  for (int i = 0; i < a.size(); ++i) {
    const double k = a(i);
    if (k == 0.0) continue;
    s += (k < 0 ? " - " : " + ") + num(std::abs(k)) + "*x" + std::to_string(i + 1);
  }
  return s;
}

// Quadratic objective text c0^T x + (1/2) x^T Q x for symmetric Q.
inline std::string quadratic_text(const Eigen::VectorXd& c0, const Eigen::MatrixXd& Q) {
  std::string s = "0";
  const int n = static_cast<int>(c0.size());
  for (int i = 0; i < n; ++i) {
    if (c0(i) != 0.0) s += (c0(i) < 0 ? " - " : " + ") + num(std::abs(c0(i))) + "*x" + std::to_string(i + 1);
    for (int j = i; j < n; ++j) {
      const double q = (i == j) ? 0.5 * Q(i, i) : Q(i, j);
      if (q == 0.0) continue;
      s += (q < 0 ? " - " : " + ") + num(std::abs(q));
      s += "*x" + std::to_string(i + 1);
      s += (i == j) ? "^2" : ("*x" + std::to_string(j + 1));
    }
  }
  return s;
}

// Random NLP instance with all blocks scalar: active rows a_i^T x, inactive
// rows a_j^T x + c_j, equalities b_k^T x, and an objective whose gradient at
// the origin closes the KKT system for the drawn multipliers.
struct NlpFixture {
  conicert::ProblemInstance inst;
  Eigen::VectorXd x;                        // the KKT point (origin)
  std::vector<conicert::BlockPoint> omega;  // per block
  Eigen::VectorXd mu;                       // per equality
  Eigen::MatrixXd active_rows;              // stacked active gradients
  Eigen::MatrixXd eq_rows;                  // stacked equality gradients
  Eigen::MatrixXd hess;                     // objective Hessian = Lagrangian Hessian
};

inline NlpFixture random_nlp(std::mt19937_64& rng, int n, int k_act, int k_eq, int k_inact) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> pos(0.3, 2.0);
  std::uniform_real_distribution<double> sym(-1.5, 1.5);

  NlpFixture fx;
  fx.active_rows.resize(k_act, n);
  for (int i = 0; i < k_act; ++i)
    for (int j = 0; j < n; ++j) fx.active_rows(i, j) = gauss(rng);
  fx.eq_rows.resize(k_eq, n);
  for (int i = 0; i < k_eq; ++i)
    for (int j = 0; j < n; ++j) fx.eq_rows(i, j) = gauss(rng);
  Eigen::MatrixXd inact(k_inact, n);
  for (int i = 0; i < k_inact; ++i)
    for (int j = 0; j < n; ++j) inact(i, j) = gauss(rng);

  Eigen::VectorXd w_act(k_act);
  for (int i = 0; i < k_act; ++i) w_act(i) = (i % 3 == 2) ? 0.0 : pos(rng);
  fx.mu.resize(k_eq);
  for (int i = 0; i < k_eq; ++i) fx.mu(i) = sym(rng);

  Eigen::MatrixXd B(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) B(i, j) = sym(rng);
  fx.hess = 0.5 * (B + B.transpose());

  // Stationarity at the origin: grad f = sum omega_i a_i - sum mu_k b_k.
  Eigen::VectorXd c0 = Eigen::VectorXd::Zero(n);
  if (k_act > 0) c0 += fx.active_rows.transpose() * w_act;
  if (k_eq > 0) c0 -= fx.eq_rows.transpose() * fx.mu;

  std::string text = "vars " + std::to_string(n) + "\n";
  text += "minimize " + quadratic_text(c0, fx.hess) + "\n";
  for (int i = 0; i < k_act; ++i)
    text += "cone lorentz 1: " + affine_text(fx.active_rows.row(i), 0.0) + "\n";
  for (int i = 0; i < k_inact; ++i)
    text += "cone lorentz 1: " + affine_text(inact.row(i), pos(rng)) + "\n";
  for (int i = 0; i < k_eq; ++i) text += "eq: " + affine_text(fx.eq_rows.row(i), 0.0) + "\n";

  fx.inst = conicert::parse_problem(text);
  fx.x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < k_act; ++i)
    fx.omega.push_back(conicert::BlockPoint::lorentz(Eigen::VectorXd::Constant(1, w_act(i))));
  for (int i = 0; i < k_inact; ++i)
    fx.omega.push_back(conicert::BlockPoint::lorentz(Eigen::VectorXd::Zero(1)));
  return fx;
}

// Independent reduced-Hessian oracle: null space of the stacked active and
// equality gradients via a full-pivot LU kernel, orthonormalized by QR.
struct NlpOracle {
  bool holds;
  double min_eig;  // +inf when the null space is trivial
  int dim;
};

inline NlpOracle nlp_reduced_hessian_oracle(const NlpFixture& fx, double tol) {
  const int n = static_cast<int>(fx.x.size());
  const int rows = static_cast<int>(fx.active_rows.rows() + fx.eq_rows.rows());
  Eigen::MatrixXd R(rows, n);
  if (fx.active_rows.rows() > 0) R.topRows(fx.active_rows.rows()) = fx.active_rows;
  if (fx.eq_rows.rows() > 0) R.bottomRows(fx.eq_rows.rows()) = fx.eq_rows;

  Eigen::MatrixXd N;
  if (rows == 0) {
    N = Eigen::MatrixXd::Identity(n, n);
  } else {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(R);
    const Eigen::MatrixXd ker = lu.kernel();
    if (lu.dimensionOfKernel() == 0) {
      return {true, std::numeric_limits<double>::infinity(), 0};
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(ker);
    N = Eigen::MatrixXd(qr.householderQ()) *
        Eigen::MatrixXd::Identity(n, static_cast<int>(ker.cols()));
  }
  if (N.cols() == 0) return {true, std::numeric_limits<double>::infinity(), 0};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(N.transpose() * fx.hess * N);
  const double mn = es.eigenvalues().minCoeff();
  return {mn >= -tol, mn, static_cast<int>(N.cols())};
}

}  // namespace nlptest
