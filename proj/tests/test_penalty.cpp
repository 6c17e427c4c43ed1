#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>

#include <conicert/penalty.hpp>
#include <conicert/problem.hpp>

#include "test_util.hpp"

using namespace conicert;

namespace {

// Minimum of (x1+1)^2 + x2^2 over the Lorentz cone sits at the apex (0,0)
// with multiplier omega* = grad f(0,0) = (2,0) on the boundary ray.
const char* kApexText = R"(vars 2
minimize (x1 + 1)^2 + x2^2
cone lorentz 2: x1, x2
)";

// Unconstrained strictly convex quadratic; gradient zero at exactly (4, -2).
const char* kQuadText = R"(vars 2
minimize (x1 - 3)^2 + 2*(x2 + 1)^2 + x1*x2
)";

// Unconstrained minimizer (1,2) is strictly inside the shifted cone.
const char* kInteriorText = R"(vars 2
minimize (x1 - 1)^2 + (x2 - 2)^2
cone lorentz 2: x1 + 5, x2
)";

// g(x) = -1 - x1^2 can never reach [0, inf): the infeasibility Phi has a
// positive infimum 1/2 attained at x1 = 0 where grad Phi vanishes.
const char* kInfeasibleText = R"(vars 1
minimize x1^2
cone lorentz 1: -1 - x1^2
)";

// Feasible only at x1 = 0, where no bounded multiplier can cancel grad f = 1;
// the penalty path drives omega_k = rho_k x_k^2 = (rho_k/4)^(1/3) to infinity.
const char* kNoKktText = R"(vars 1
minimize x1
cone lorentz 1: -x1^2
)";

const char* kMixedText = R"(vars 3
minimize x1^2 + exp(x2) - x3
cone lorentz 2: x1 + 1, x2 * x3
cone psd 2: x1 + 1, x2, x3 + 2
eq: x1 + x2 + x3 - 1
eq: x1 - x2
)";

const char* kL3IdentityText = R"(vars 3
minimize 0
cone lorentz 3: x1, x2, x3
)";

const char* kPsdIdentityText = R"(vars 2
minimize 0
cone psd 2: x1, x2, x1
)";

const char* kScalarConeText = R"(vars 1
minimize x1^2
cone lorentz 1: 2*x1 + 1
)";

Eigen::VectorXd vec1(double a) {
  Eigen::VectorXd v(1);
  v << a;
  return v;
}

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

Eigen::VectorXd vec3(double a, double b, double c) {
  Eigen::VectorXd v(3);
  v << a, b, c;
  return v;
}

double row_residual(const IterateRow& row) {
  return std::max(row.stationarity,
                  std::max(std::sqrt(row.phi), row.diagnostics.complementarity_max()));
}

}  // namespace

TEST_CASE("penalty value and gradient: pinned fixtures") {
  const ProblemInstance apex = parse_problem(kApexText);
  const ProblemInstance quad = parse_problem(kQuadText);

  SUBCASE("feasible point of an unconstrained instance gives (f, grad f)") {
    const Eigen::VectorXd x = vec2(2.0, 1.0);
    const auto [value, grad] = penalty_value_grad(quad, x, 7.0);
    // f(2,1) = 1 + 8 + 2 = 11, grad f = (2(x1-3)+x2, 4(x2+1)+x1) = (-1, 10).
    CHECK(value == doctest::Approx(11.0).epsilon(1e-14));
    CHECK(grad(0) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(grad(1) == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(penalty_value(quad, x, 7.0) == doctest::Approx(11.0).epsilon(1e-14));
  }

  SUBCASE("apex instance at (0,2) with rho = 1") {
    const auto [value, grad] = penalty_value_grad(apex, vec2(0.0, 2.0), 1.0);
    // f = 5, Phi = 1/2 ||Pi((0,-2))||^2 = 1/2 ||(1,-1)||^2 = 1, so F = 6;
    // grad = (2,4) + (-1,1) = (1,5).
    CHECK(value == doctest::Approx(6.0).epsilon(1e-14));
    CHECK(grad(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(grad(1) == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(penalty_value(apex, vec2(0.0, 2.0), 1.0) == doctest::Approx(6.0).epsilon(1e-14));
  }

  SUBCASE("quartic term centered at x contributes nothing") {
    const Eigen::VectorXd x = vec2(0.3, -1.2);
    const auto [plain_v, plain_g] = penalty_value_grad(apex, x, 2.0);
    const auto [cent_v, cent_g] = penalty_value_grad(apex, x, 2.0, x);
    CHECK(cent_v == doctest::Approx(plain_v).epsilon(1e-15));
    CHECK((cent_g - plain_g).norm() == doctest::Approx(0.0).epsilon(1e-15));
  }

  SUBCASE("quartic term away from its center, pinned by hand") {
    const Eigen::VectorXd x = vec2(2.0, 1.0);
    const Eigen::VectorXd c = vec2(1.0, -1.0);
    const auto [plain_v, plain_g] = penalty_value_grad(quad, x, 7.0);
    const auto [cent_v, cent_g] = penalty_value_grad(quad, x, 7.0, c);
    // ||x-c||^2 = 5: value gains 25/4, gradient gains 5*(1,2) = (5,10).
    CHECK(cent_v - plain_v == doctest::Approx(6.25).epsilon(1e-13));
    CHECK(cent_g(0) - plain_g(0) == doctest::Approx(5.0).epsilon(1e-13));
    CHECK(cent_g(1) - plain_g(1) == doctest::Approx(10.0).epsilon(1e-13));
    CHECK(penalty_value(quad, x, 7.0, c) == doctest::Approx(cent_v).epsilon(1e-14));
  }

  SUBCASE("misshaped quartic center is rejected") {
    CHECK_THROWS_AS(penalty_value_grad(quad, vec2(0, 0), 1.0, vec3(0, 0, 0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(penalty_value_grad(quad, vec2(0, 0), 0.0), std::invalid_argument);
  }
}

TEST_CASE("penalty gradient matches the independently assembled formula") {
  const ProblemInstance inst = parse_problem(kMixedText);
  auto gen = testutil::rng(501);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXd x = testutil::random_vector(gen, 3, 2.0);
    for (double rho : {1.0, 10.0, 1000.0}) {
      const auto [value, grad] = penalty_value_grad(inst, x, rho);

      // Independent assembly: grad f + Dh^T (rho h) - Dg*[rho Pi(-g)].
      Eigen::VectorXd grad_f(3);
      eval_value_grad(inst.objective, x, grad_f);
      const Eigen::VectorXd h = eval_h(inst, x);
      std::vector<BlockPoint> w;
      for (const BlockPoint& gb : eval_g(inst, x)) w.push_back(project_block(gb.negated()).scaled(rho));
      Eigen::VectorXd assembled = grad_f - eval_Dg_adjoint(inst, x, w);
      const Eigen::MatrixXd Dh = eval_first_order(inst, x).Dh;
      assembled += Dh.transpose() * (rho * h);

      CHECK((grad - assembled).norm() <= 1e-12 * std::max(1.0, assembled.norm()));
    }
  }
}

TEST_CASE("penalty gradient agrees with finite differences away from kinks") {
  const ProblemInstance inst = parse_problem(kMixedText);
  auto gen = testutil::rng(777);
  int accepted = 0;
  while (accepted < 20) {
    const Eigen::VectorXd x = testutil::random_vector(gen, 3, 2.0);
    bool smooth = true;
    for (const BlockPoint& gb : eval_g(inst, x)) {
      const BlockPoint w = gb.negated();
      if (std::abs(block_interior_margin(w)) < 0.05 ||
          std::abs(block_interior_margin(w.negated())) < 0.05) {
        smooth = false;
        break;
      }
    }
    if (!smooth) continue;
    ++accepted;
    const double rho = 3.5;
    const auto [value, grad] = penalty_value_grad(inst, x, rho);
    const Eigen::VectorXd fd = testutil::fd_gradient(
        [&](const Eigen::VectorXd& p) { return penalty_value(inst, p, rho); }, x, 1e-6);
    CHECK((grad - fd).norm() <= 1e-5 * std::max(1.0, grad.norm()));
  }
}

TEST_CASE("inner_minimize returns a stationary start unchanged in zero iterations") {
  const ProblemInstance quad = parse_problem(kQuadText);
  const Eigen::VectorXd x0 = vec2(4.0, -2.0);  // exact minimizer
  SolverConfig config;
  const InnerResult res = inner_minimize(quad, 1.0, x0, 1e-6, config);
  CHECK(res.iters == 0);
  CHECK_FALSE(res.incomplete);
  CHECK(res.x == x0);
  CHECK(res.grad.norm() == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("inner_minimize reaches the requested stationarity on the apex penalty") {
  const ProblemInstance apex = parse_problem(kApexText);
  SolverConfig config;
  const double rho = 10.0;
  const double eps = 1e-3;
  const InnerResult res = inner_minimize(apex, rho, vec2(1.0, 1.0), eps, config);
  CHECK_FALSE(res.incomplete);

  // Re-evaluate independently: the contract is on the true gradient.
  const auto [value, grad] = penalty_value_grad(apex, res.x, rho);
  CHECK(grad.norm() <= eps);

  // Analytic minimizer: along x2 = 0 in the reflected-cone region,
  // F = (x1+1)^2 + 5 x1^2, so x1* = -1/6 and F* = 5/6.
  CHECK((res.x - vec2(-1.0 / 6.0, 0.0)).norm() <= 2e-4);
  CHECK(res.value <= 5.0 / 6.0 + 1e-8);
}

TEST_CASE("inner_minimize finds the analytic minimizer of a strictly convex quadratic") {
  const ProblemInstance quad = parse_problem(kQuadText);
  SolverConfig config;
  const InnerResult res = inner_minimize(quad, 1.0, vec2(-3.0, 5.0), 1e-10, config);
  CHECK_FALSE(res.incomplete);
  CHECK((res.x - vec2(4.0, -2.0)).norm() <= 1e-8);
}

TEST_CASE("inner_minimize backtracks through domain errors in the line search") {
  const ProblemInstance inst = parse_problem("vars 1\nminimize log(x1) + (x1 - 2)^2\n");
  SolverConfig config;
  const InnerResult res = inner_minimize(inst, 1.0, vec1(5.0), 1e-9, config);
  CHECK_FALSE(res.incomplete);
  // 1/x + 2(x-2) = 0 at x = 1 + sqrt(2)/2 (the root with positive curvature).
  CHECK(res.x(0) == doctest::Approx(1.0 + std::sqrt(2.0) / 2.0).epsilon(1e-7));
}

TEST_CASE("inner_minimize rejects a start outside the objective domain") {
  const ProblemInstance inst = parse_problem("vars 1\nminimize log(x1)\n");
  SolverConfig config;
  bool threw = false;
  try {
    inner_minimize(inst, 1.0, vec1(-1.0), 1e-6, config);
  } catch (const std::runtime_error& err) {
    threw = true;
    CHECK(std::string(err.what()).find("start") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("solver config validation") {
  SolverConfig config;
  CHECK_NOTHROW(config.validate());
  SolverConfig bad_mult = config;
  bad_mult.rho_mult = 1.0;
  CHECK_THROWS_AS(bad_mult.validate(), std::invalid_argument);
  SolverConfig bad_rho = config;
  bad_rho.rho0 = 0.0;
  CHECK_THROWS_AS(bad_rho.validate(), std::invalid_argument);
  SolverConfig bad_tol = config;
  bad_tol.outer_tol = -1e-8;
  CHECK_THROWS_AS(bad_tol.validate(), std::invalid_argument);
  SolverConfig bad_outer = config;
  bad_outer.max_outer = 0;
  CHECK_THROWS_AS(bad_outer.validate(), std::invalid_argument);
  SolverConfig bad_inner = config;
  bad_inner.max_inner = 0;
  CHECK_THROWS_AS(bad_inner.validate(), std::invalid_argument);
  SolverConfig bad_eps = config;
  bad_eps.inner_eps0 = 0.0;
  CHECK_THROWS_AS(bad_eps.validate(), std::invalid_argument);
}

TEST_CASE("solve status names") {
  CHECK(to_string(SolveStatus::ConvergedKkt) == "converged_kkt");
  CHECK(to_string(SolveStatus::AkktUnboundedMultipliers) == "akkt_unbounded_multipliers");
  CHECK(to_string(SolveStatus::InfeasibleStationary) == "infeasible_stationary");
  CHECK(to_string(SolveStatus::BudgetExhausted) == "budget_exhausted");
}

TEST_CASE("solve converges immediately when started at an interior minimizer") {
  const ProblemInstance inst = parse_problem(kInteriorText);
  const SolveResult res = solve(inst, vec2(1.0, 2.0));
  CHECK(res.status == SolveStatus::ConvergedKkt);
  CHECK(res.trace.size() == 1);
  CHECK((res.x - vec2(1.0, 2.0)).norm() <= 1e-9);
  CHECK(res.omega.size() == 1);
  CHECK(res.omega[0].norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("solve drives the apex problem to its boundary KKT point") {
  const ProblemInstance inst = parse_problem(kApexText);
  const SolveResult res = solve(inst, vec2(1.0, 1.0));
  REQUIRE(res.status == SolveStatus::ConvergedKkt);
  CHECK(res.x.norm() <= 1e-5);
  REQUIRE(res.omega.size() == 1);
  CHECK((res.omega[0].data - vec2(2.0, 0.0)).norm() <= 1e-4);
  CHECK(res.mu.size() == 0);

  REQUIRE(!res.trace.empty());
  CHECK(row_residual(res.trace.back()) <= 1e-8);

  SolverConfig config;
  double expected_rho = config.rho0;
  double prev_phi = std::numeric_limits<double>::infinity();
  double prev_res = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < res.trace.size(); ++k) {
    const IterateRow& row = res.trace[k];
    CHECK(row.k == static_cast<int>(k));
    CHECK(row.rho == doctest::Approx(expected_rho).epsilon(1e-12));
    expected_rho *= config.rho_mult;
    CHECK_FALSE(row.inner_incomplete);

    // Multiplier membership invariant: omega_k is rho_k times a projection.
    REQUIRE(row.omega.size() == 1);
    CHECK(block_interior_margin(row.omega[0]) >= -1e-10);

    // Feasibility measure is nonincreasing across outer iterations.
    CHECK(row.phi <= prev_phi + 1e-12);
    prev_phi = row.phi;

    // AKKT diagnostics decrease monotonically along the trace.
    const double r = row_residual(row);
    CHECK(r <= 0.9 * prev_res + 1e-12);
    prev_res = r;
  }
}

TEST_CASE("solve with a quartic center at the solution still converges") {
  const ProblemInstance inst = parse_problem(kApexText);
  SolverConfig config;
  config.quartic_center = vec2(0.0, 0.0);
  const SolveResult res = solve(inst, vec2(1.0, 1.0), config);
  CHECK(res.status == SolveStatus::ConvergedKkt);
  CHECK(res.x.norm() <= 1e-5);
  CHECK((res.omega[0].data - vec2(2.0, 0.0)).norm() <= 1e-4);
}

TEST_CASE("solve flags an infeasible instance as infeasible-stationary") {
  const ProblemInstance inst = parse_problem(kInfeasibleText);
  const SolveResult res = solve(inst, vec1(0.5));
  CHECK(res.status == SolveStatus::InfeasibleStationary);
  // Phi's infimum 1/2 is attained at x1 = 0.
  CHECK(std::abs(res.x(0)) <= 1e-4);
  REQUIRE(!res.trace.empty());
  CHECK(res.trace.back().phi == doctest::Approx(0.5).epsilon(1e-6));
  double prev_phi = std::numeric_limits<double>::infinity();
  for (const IterateRow& row : res.trace) {
    CHECK(row.phi <= prev_phi + 1e-12);
    prev_phi = row.phi;
  }
}

TEST_CASE("solve reports unbounded multipliers when no bounded KKT pair exists") {
  const ProblemInstance inst = parse_problem(kNoKktText);
  SolverConfig config;
  config.rho_mult = 100.0;
  config.max_outer = 14;
  config.outer_tol = 1e-10;
  const SolveResult res = solve(inst, vec1(0.5), config);
  CHECK(res.status == SolveStatus::AkktUnboundedMultipliers);
  REQUIRE(res.omega.size() == 1);
  CHECK(res.omega[0].norm() > 1e8);
  // The minimizers of F_k approach the feasible point x = 0 from below.
  CHECK(res.x(0) < 0.0);
  CHECK(std::abs(res.x(0)) <= 1e-4);
}

TEST_CASE("multiplier estimates follow the penalty formulas") {
  const ProblemInstance inst = parse_problem(kMixedText);
  const Eigen::VectorXd x = vec3(0.4, -0.3, 1.2);
  const double rho = 25.0;
  const auto [omega, mu] = multiplier_estimates(inst, x, rho);
  REQUIRE(omega.size() == 2);
  const std::vector<BlockPoint> g = eval_g(inst, x);
  for (std::size_t b = 0; b < g.size(); ++b) {
    const BlockPoint expected = project_block(g[b].negated()).scaled(rho);
    CHECK((omega[b].data - expected.data).norm() <= 1e-12 * std::max(1.0, expected.norm()));
    CHECK(block_interior_margin(omega[b]) >= -1e-10);
  }
  const Eigen::VectorXd h = eval_h(inst, x);
  CHECK((mu - rho * h).norm() <= 1e-12 * std::max(1.0, mu.norm()));
}

TEST_CASE("akkt_residual: exact KKT point with complementary pair is all zeros") {
  const ProblemInstance apex = parse_problem(kApexText);
  std::vector<BlockPoint> omega = {BlockPoint::lorentz(vec2(2.0, 0.0))};
  const AkktDiagnostics diag = akkt_residual(apex, vec2(0.0, 0.0), omega, Eigen::VectorXd(0));
  CHECK(diag.stationarity == doctest::Approx(0.0).epsilon(1e-14));
  REQUIRE(diag.blocks.size() == 1);
  CHECK(diag.blocks[0].complementarity == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(diag.blocks[0].detail == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(diag.blocks[0].misalignment == 0.0);
  CHECK(diag.max_residual() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("akkt_residual: zero multipliers at a feasible point reduce to the plain gradient") {
  const ProblemInstance inst = parse_problem(kMixedText);
  const Eigen::VectorXd x = vec3(0.5, 0.5, 0.0);
  std::vector<BlockPoint> omega = {BlockPoint::lorentz(vec2(0.0, 0.0)), BlockPoint::psd_zero(2)};
  Eigen::VectorXd mu(2);
  mu << 0.3, -0.7;
  const AkktDiagnostics diag = akkt_residual(inst, x, omega, mu);

  Eigen::VectorXd grad_f(3);
  eval_value_grad(inst.objective, x, grad_f);
  const Eigen::MatrixXd Dh = eval_first_order(inst, x).Dh;
  const double expected = (grad_f + Dh.transpose() * mu).norm();
  CHECK(diag.stationarity == doctest::Approx(expected).epsilon(1e-13));
  for (const BlockDiagnostic& blk : diag.blocks) {
    CHECK(blk.complementarity == 0.0);
    CHECK(blk.detail == 0.0);
    CHECK(blk.misalignment == 0.0);
  }
}

TEST_CASE("akkt_residual: Lorentz block diagnostics, pinned by hand") {
  const ProblemInstance inst = parse_problem(kL3IdentityText);
  const Eigen::VectorXd mu0(0);

  SUBCASE("interior block reports the multiplier norm") {
    std::vector<BlockPoint> omega = {BlockPoint::lorentz(vec3(1.0, 0.6, 0.8))};
    const AkktDiagnostics diag = akkt_residual(inst, vec3(2.0, 0.5, 0.0), omega, mu0);
    REQUIRE(diag.blocks.size() == 1);
    CHECK(diag.blocks[0].detail == doctest::Approx(std::sqrt(2.0)).epsilon(1e-13));
    // <g, omega> = 2 + 0.3 = 2.3.
    CHECK(diag.blocks[0].complementarity == doctest::Approx(2.3).epsilon(1e-13));
  }

  SUBCASE("boundary block with antiparallel tails has zero angular defect") {
    std::vector<BlockPoint> omega = {BlockPoint::lorentz(vec3(1.0, -1.0, 0.0))};
    const AkktDiagnostics diag = akkt_residual(inst, vec3(1.0, 1.0, 0.0), omega, mu0);
    CHECK(diag.blocks[0].detail == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(diag.blocks[0].complementarity == doctest::Approx(0.0).epsilon(1e-14));
  }

  SUBCASE("boundary block with a misaligned tail, pinned") {
    std::vector<BlockPoint> omega = {BlockPoint::lorentz(vec3(1.0, 0.6, 0.8))};
    const AkktDiagnostics diag = akkt_residual(inst, vec3(1.0, 1.0, 0.0), omega, mu0);
    // ||(0.6,0.8) + (1,0)|| = sqrt(3.2); <g,omega> = 1 + 0.6 = 1.6.
    CHECK(diag.blocks[0].detail == doctest::Approx(std::sqrt(3.2)).epsilon(1e-13));
    CHECK(diag.blocks[0].complementarity == doctest::Approx(1.6).epsilon(1e-13));
  }

  SUBCASE("axis multiplier at a boundary point is vacuous for the angular test") {
    std::vector<BlockPoint> omega = {BlockPoint::lorentz(vec3(1.0, 0.0, 0.0))};
    const AkktDiagnostics diag = akkt_residual(inst, vec3(1.0, 1.0, 0.0), omega, mu0);
    CHECK(diag.blocks[0].detail == 0.0);
    CHECK(diag.blocks[0].complementarity == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("akkt_residual: PSD block diagnostics, pinned by hand") {
  const ProblemInstance inst = parse_problem(kPsdIdentityText);
  const Eigen::VectorXd mu0(0);
  const Eigen::VectorXd x = vec2(1.0, 0.3);  // g(x) = [[1, .3], [.3, 1]]

  SUBCASE("non-commuting multiplier") {
    Eigen::MatrixXd W(2, 2);
    W << 1.0, 0.0, 0.0, 2.0;
    std::vector<BlockPoint> omega = {BlockPoint::psd_from_matrix(W)};
    const AkktDiagnostics diag = akkt_residual(inst, x, omega, mu0);
    REQUIRE(diag.blocks.size() == 1);
    // trace(g W) = 1 + 2 = 3; in g's eigenframe nu = (1.5, 1.5) against
    // lambda = (1.3, 0.7), so sum |lambda nu| = 3; ||gW - Wg||_F = sqrt(0.18).
    CHECK(diag.blocks[0].complementarity == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(diag.blocks[0].detail == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(diag.blocks[0].misalignment == doctest::Approx(std::sqrt(0.18)).epsilon(1e-12));
  }

  SUBCASE("commuting multiplier has zero misalignment") {
    Eigen::MatrixXd W(2, 2);
    W << 1.0, 0.3, 0.3, 1.0;
    std::vector<BlockPoint> omega = {BlockPoint::psd_from_matrix(W)};
    const AkktDiagnostics diag = akkt_residual(inst, x, omega, mu0);
    CHECK(diag.blocks[0].misalignment == doctest::Approx(0.0).epsilon(1e-13));
    // <g, g> = 1 + 1 + 2*0.09 = 2.18 = sum lambda_i^2.
    CHECK(diag.blocks[0].complementarity == doctest::Approx(2.18).epsilon(1e-12));
    CHECK(diag.blocks[0].detail == doctest::Approx(2.18).epsilon(1e-12));
  }
}

TEST_CASE("curvature_probe: unconstrained quadratic reproduces its Hessian form") {
  const ProblemInstance quad = parse_problem(kQuadText);
  Eigen::MatrixXd H(2, 2);
  H << 2.0, 1.0, 1.0, 4.0;
  auto gen = testutil::rng(91);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd x = testutil::random_vector(gen, 2, 3.0);
    const Eigen::VectorXd d = testutil::random_vector(gen, 2, 1.0);
    const double expected = d.dot(H * d);
    for (double theta : {0.0, 0.5, 1.0}) {
      const double probe = curvature_probe(quad, x, 4.0, d, theta);
      CHECK(probe == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("curvature_probe: scalar cone reduction, pinned by hand") {
  const ProblemInstance inst = parse_problem(kScalarConeText);
  const double rho = 3.0;
  const Eigen::VectorXd d = vec1(1.5);

  SUBCASE("active constraint interpolates the Clarke family") {
    // g(-0.5) = 0: V = theta, probe = 2 d^2 + rho (2d)^2 theta = 4.5 + 27 theta.
    CHECK(curvature_probe(inst, vec1(-0.5), rho, d, 0.0) == doctest::Approx(4.5).epsilon(1e-12));
    CHECK(curvature_probe(inst, vec1(-0.5), rho, d, 0.5) == doctest::Approx(18.0).epsilon(1e-12));
    CHECK(curvature_probe(inst, vec1(-0.5), rho, d, 1.0) == doctest::Approx(31.5).epsilon(1e-12));
  }

  SUBCASE("strictly satisfied constraint contributes nothing") {
    for (double theta : {0.0, 0.5, 1.0}) {
      CHECK(curvature_probe(inst, vec1(1.0), rho, d, theta) == doctest::Approx(4.5).epsilon(1e-12));
    }
  }

  SUBCASE("violated constraint contributes its full Gauss-Newton term") {
    for (double theta : {0.0, 0.5, 1.0}) {
      CHECK(curvature_probe(inst, vec1(-2.0), rho, d, theta) ==
            doctest::Approx(31.5).epsilon(1e-12));
    }
  }

  SUBCASE("theta outside [-1, 1] is rejected") {
    CHECK_THROWS_AS(curvature_probe(inst, vec1(0.0), rho, d, 1.5), std::invalid_argument);
  }
}

TEST_CASE("curvature_probe: equality constraints add their Gauss-Newton term") {
  const ProblemInstance inst = parse_problem("vars 2\nminimize x1^2 + x2^2\neq: x1 - x2\n");
  // hess L = 2I (h linear), Dh = (1,-1): probe = 2||d||^2 + rho (d1 - d2)^2.
  const double probe = curvature_probe(inst, vec2(1.0, 2.0), 5.0, vec2(1.0, 0.0), 0.0);
  CHECK(probe == doctest::Approx(7.0).epsilon(1e-12));
}

TEST_CASE("curvature_probe is nonnegative at a strict minimizer of the penalty") {
  const ProblemInstance apex = parse_problem(kApexText);
  SolverConfig config;
  const double rho = 10.0;
  const InnerResult inner = inner_minimize(apex, rho, vec2(1.0, 1.0), 1e-10, config);
  REQUIRE_FALSE(inner.incomplete);

  auto gen = testutil::rng(4242);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd d = testutil::random_vector(gen, 2, 1.0);
    d.normalize();
    bool some_theta_nonnegative = false;
    for (double theta : {0.0, 0.5, 1.0}) {
      const double probe = curvature_probe(apex, inner.x, rho, d, theta);
      // At (-1/6, 0) the reflected cone is smooth: probe = (2 + rho) ||d||^2.
      CHECK(probe == doctest::Approx(12.0).epsilon(1e-6));
      if (probe >= -1e-6) some_theta_nonnegative = true;
    }
    CHECK(some_theta_nonnegative);
  }
}
