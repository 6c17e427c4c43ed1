#include <conicert/penalty.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include <conicert/cones.hpp>
#include <conicert/subdiff.hpp>

namespace conicert {

namespace {

constexpr double kMultiplierBound = 1e8;
constexpr double kInnerEpsFloor = 1e-12;
constexpr double kClassifyTol = 1e-8;
constexpr double kArmijoC1 = 1e-4;
constexpr int kMaxHalvings = 60;

void check_rho(double rho) {
  if (!(rho > 0.0)) {
    throw std::invalid_argument("penalty weight rho must be positive, got " +
                                std::to_string(rho));
  }
}

void check_center(const std::optional<Eigen::VectorXd>& center, Eigen::Index n) {
  if (center && center->size() != n) {
    throw std::invalid_argument("quartic center has dimension " +
                                std::to_string(center->size()) + ", expected " +
                                std::to_string(n));
  }
}

double quartic_value(const Eigen::VectorXd& x, const std::optional<Eigen::VectorXd>& center) {
  if (!center) return 0.0;
  const double s = (x - *center).squaredNorm();
  return 0.25 * s * s;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(rho0 > 0.0)) throw std::invalid_argument("SolverConfig.rho0 must be positive");
  if (!(rho_mult > 1.0)) throw std::invalid_argument("SolverConfig.rho_mult must exceed 1");
  if (!(inner_eps0 > 0.0)) throw std::invalid_argument("SolverConfig.inner_eps0 must be positive");
  if (!(outer_tol > 0.0)) throw std::invalid_argument("SolverConfig.outer_tol must be positive");
  if (max_outer < 1) throw std::invalid_argument("SolverConfig.max_outer must be at least 1");
  if (max_inner < 1) throw std::invalid_argument("SolverConfig.max_inner must be at least 1");
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::ConvergedKkt: return "converged_kkt";
    case SolveStatus::AkktUnboundedMultipliers: return "akkt_unbounded_multipliers";
    case SolveStatus::InfeasibleStationary: return "infeasible_stationary";
    case SolveStatus::BudgetExhausted: return "budget_exhausted";
  }
  throw std::logic_error("unknown SolveStatus");
}

double AkktDiagnostics::complementarity_max() const {
  double worst = 0.0;
  for (const BlockDiagnostic& blk : blocks) {
    worst = std::max({worst, blk.complementarity, blk.detail, blk.misalignment});
  }
  return worst;
}

double AkktDiagnostics::max_residual() const {
  return std::max(stationarity, complementarity_max());
}

double penalty_value(const ProblemInstance& inst, const Eigen::VectorXd& x, double rho,
                     const std::optional<Eigen::VectorXd>& quartic_center) {
  check_rho(rho);
  check_center(quartic_center, x.size());
  return eval_value(inst.objective, x) + quartic_value(x, quartic_center) +
         rho * infeasibility_phi(inst, x);
}

std::pair<double, Eigen::VectorXd> penalty_value_grad(
    const ProblemInstance& inst, const Eigen::VectorXd& x, double rho,
    const std::optional<Eigen::VectorXd>& quartic_center) {
  check_rho(rho);
  check_center(quartic_center, x.size());

  const FirstOrderEval ev = eval_first_order(inst, x);
  double phi = 0.5 * ev.h.squaredNorm();
  Eigen::VectorXd phi_grad = Eigen::VectorXd::Zero(x.size());
  if (ev.h.size() > 0) phi_grad = ev.Dh.transpose() * ev.h;
  for (std::size_t b = 0; b < ev.g.size(); ++b) {
    const BlockPoint proj = project_block(ev.g[b].negated());
    phi += 0.5 * proj.inner(proj);
    const Eigen::VectorXd weights = packed_trace_weights(proj.kind, proj.dim);
    phi_grad -= ev.Dg[b].transpose() * weights.cwiseProduct(proj.data);
  }

  double value = ev.f + rho * phi;
  Eigen::VectorXd grad = ev.grad_f + rho * phi_grad;
  if (quartic_center) {
    const Eigen::VectorXd shift = x - *quartic_center;
    const double s = shift.squaredNorm();
    value += 0.25 * s * s;
    grad += s * shift;
  }
  return {value, std::move(grad)};
}

InnerResult inner_minimize(const ProblemInstance& inst, double rho,
                           const Eigen::VectorXd& x_start, double eps_k,
                           const SolverConfig& config) {
  check_rho(rho);
  if (!(eps_k > 0.0)) throw std::invalid_argument("inner tolerance eps_k must be positive");
  if (!x_start.allFinite()) throw std::invalid_argument("inner start point must be finite");
  const auto& center = config.quartic_center;

  Eigen::VectorXd x = x_start;
  double value = 0.0;
  Eigen::VectorXd grad;
  try {
    std::tie(value, grad) = penalty_value_grad(inst, x, rho, center);
  } catch (const std::domain_error& err) {
    throw std::runtime_error(
        std::string("penalty evaluation failed at the inner start point: ") + err.what());
  }
  if (!std::isfinite(value) || !grad.allFinite()) {
    throw std::runtime_error("penalty value is not finite at the inner start point");
  }

  struct LineSearchResult {
    bool ok = false;
    Eigen::VectorXd x;
    double value = 0.0;
  };
  auto line_search = [&](const Eigen::VectorXd& from, double f0, double slope,
                         const Eigen::VectorXd& dir) -> LineSearchResult {
    double t = 1.0;
    for (int halving = 0; halving < kMaxHalvings; ++halving, t *= 0.5) {
      const Eigen::VectorXd cand = from + t * dir;
      double f_cand;
      try {
        f_cand = penalty_value(inst, cand, rho, center);
      } catch (const std::domain_error&) {
        continue;  // out of an expression's domain: treat as +infinity
      }
      if (std::isfinite(f_cand) && f_cand <= f0 + kArmijoC1 * t * slope) {
        return {true, cand, f_cand};
      }
    }
    return {};
  };

  const Eigen::Index n = x.size();
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  int stall = 0;
  for (int iter = 0; iter < config.max_inner; ++iter) {
    if (grad.norm() <= eps_k) return {std::move(x), value, std::move(grad), iter, false};

    Eigen::VectorXd dir = -(H * grad);
    double slope = grad.dot(dir);
    bool steepest = false;
    if (!dir.allFinite() || slope >= -1e-12 * grad.norm() * dir.norm()) {
      H.setIdentity();
      dir = -grad;
      slope = -grad.squaredNorm();
      steepest = true;
    }

    LineSearchResult step = line_search(x, value, slope, dir);
    if (!step.ok && !steepest) {
      H.setIdentity();
      dir = -grad;
      slope = -grad.squaredNorm();
      step = line_search(x, value, slope, dir);
    }
    if (!step.ok) {
      // Sufficient decrease is unattainable at floating-point resolution.
      return {std::move(x), value, std::move(grad), iter, grad.norm() > eps_k};
    }

    Eigen::VectorXd grad_new;
    try {
      grad_new = penalty_value_grad(inst, step.x, rho, center).second;
    } catch (const std::domain_error&) {
      // Value exists but the gradient does not (e.g. sqrt at 0): stop here.
      return {std::move(x), value, std::move(grad), iter, grad.norm() > eps_k};
    }

    const Eigen::VectorXd s = step.x - x;
    const Eigen::VectorXd y = grad_new - grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double r = 1.0 / sy;
      const Eigen::VectorXd Hy = H * y;
      H -= r * (s * Hy.transpose() + Hy * s.transpose());
      H += (r * r * y.dot(Hy) + r) * (s * s.transpose());
    }

    const double progress = value - step.value;
    x = std::move(step.x);
    value = step.value;
    grad = std::move(grad_new);
    if (progress <= 1e-16 * std::max(1.0, std::abs(value))) {
      if (++stall >= 3) return {std::move(x), value, std::move(grad), iter + 1, grad.norm() > eps_k};
    } else {
      stall = 0;
    }
  }
  return {std::move(x), value, std::move(grad), config.max_inner, grad.norm() > eps_k};
}

std::pair<std::vector<BlockPoint>, Eigen::VectorXd> multiplier_estimates(
    const ProblemInstance& inst, const Eigen::VectorXd& x, double rho) {
  check_rho(rho);
  std::vector<BlockPoint> omega;
  omega.reserve(inst.blocks.size());
  for (const BlockPoint& gb : eval_g(inst, x)) {
    omega.push_back(project_block(gb.negated()).scaled(rho));
  }
  return {std::move(omega), rho * eval_h(inst, x)};
}

AkktDiagnostics akkt_residual(const ProblemInstance& inst, const Eigen::VectorXd& x,
                              const std::vector<BlockPoint>& omega,
                              const Eigen::VectorXd& mu) {
  AkktDiagnostics out;
  out.stationarity = lagrangian_grad(inst, x, omega, mu).norm();

  const std::vector<BlockPoint> g = eval_g(inst, x);
  out.blocks.reserve(g.size());
  for (std::size_t b = 0; b < g.size(); ++b) {
    BlockDiagnostic blk;
    blk.complementarity = std::abs(g[b].inner(omega[b]));
    if (g[b].kind == BlockKind::Lorentz) {
      const Eigen::VectorXd& gz = g[b].data;
      const Eigen::VectorXd& wz = omega[b].data;
      const int m = g[b].dim;
      if (classify_lorentz(gz, kClassifyTol) == LorentzRegion::Interior) {
        blk.detail = wz.norm();
      } else if (m > 1) {
        const Eigen::VectorXd gbar = gz.tail(m - 1);
        const Eigen::VectorXd wbar = wz.tail(m - 1);
        const double gn = gbar.norm();
        const double wn = wbar.norm();
        // The angular alignment test is vacuous when either tail vanishes:
        // an axis multiplier is complementary to any boundary point only
        // through the inner product, which `complementarity` already covers.
        if (wz.norm() > 0.0 && wn > 0.0 && gn > 0.0) {
          blk.detail = (wbar / wn + gbar / gn).norm();
        }
      }
    } else {
      const Eigen::MatrixXd G = g[b].matrix();
      const Eigen::MatrixXd W = omega[b].matrix();
      const SpectralData sd = spectral(G);
      const Eigen::VectorXd nu = (sd.U.transpose() * W * sd.U).diagonal();
      blk.detail = (sd.lambda.array() * nu.array()).abs().sum();
      blk.misalignment = (G * W - W * G).norm();
    }
    out.blocks.push_back(blk);
  }
  return out;
}

double curvature_probe(const ProblemInstance& inst, const Eigen::VectorXd& x, double rho,
                       const Eigen::VectorXd& d, double theta) {
  check_rho(rho);
  if (!(std::abs(theta) <= 1.0)) {
    throw std::invalid_argument("curvature_probe needs |theta| <= 1, got " +
                                std::to_string(theta));
  }
  if (d.size() != x.size()) {
    throw std::invalid_argument("curvature_probe direction has dimension " +
                                std::to_string(d.size()) + ", expected " +
                                std::to_string(x.size()));
  }
  const double t = std::max(0.0, theta);  // convex coefficient within the family

  const auto [omega, mu] = multiplier_estimates(inst, x, rho);
  double total = d.dot(lagrangian_hess(inst, x, omega, mu) * d);

  const FirstOrderEval ev = eval_first_order(inst, x);
  for (std::size_t b = 0; b < ev.g.size(); ++b) {
    const Eigen::VectorXd u = ev.Dg[b] * d;  // packed directional derivative
    if (ev.g[b].kind == BlockKind::Lorentz) {
      const LorentzSubdiffGenerators gens =
          lorentz_proj_subdiff(-ev.g[b].data, kClassifyTol);
      Eigen::MatrixXd V = gens.generators.front();
      if (gens.generators.size() > 1) {
        V = (1.0 - t) * gens.generators[0] + t * gens.generators[1];
      }
      total += rho * u.dot(V * u);
    } else {
      const Eigen::MatrixXd U = BlockPoint{BlockKind::Psd, ev.g[b].dim, u}.matrix();
      const Eigen::MatrixXd VU = psd_proj_subdiff_apply(ev.g[b].matrix(), U, t);
      total += rho * U.cwiseProduct(VU).sum();
    }
  }
  if (inst.p() > 0) total += rho * (ev.Dh * d).squaredNorm();
  return total;
}

SolveResult solve(const ProblemInstance& inst, const Eigen::VectorXd& x0,
                  const SolverConfig& config) {
  config.validate();
  if (x0.size() != inst.n) {
    throw std::invalid_argument("x0 has dimension " + std::to_string(x0.size()) +
                                ", expected " + std::to_string(inst.n));
  }
  if (!x0.allFinite()) throw std::invalid_argument("x0 must be finite");
  check_center(config.quartic_center, inst.n);

  SolveResult res;
  Eigen::VectorXd x = x0;
  double rho = config.rho0;
  double prev_phi = std::numeric_limits<double>::infinity();

  for (int k = 0; k < config.max_outer; ++k) {
    const double eps_k = std::max(config.inner_eps0 / rho, kInnerEpsFloor);
    const InnerResult inner = inner_minimize(inst, rho, x, eps_k, config);
    x = inner.x;

    auto [omega, mu] = multiplier_estimates(inst, x, rho);
    const AkktDiagnostics diag = akkt_residual(inst, x, omega, mu);
    const double phi = infeasibility_phi(inst, x);

    IterateRow row;
    row.k = k;
    row.rho = rho;
    row.x = x;
    row.omega = omega;
    row.mu = mu;
    row.stationarity = diag.stationarity;
    row.phi = phi;
    row.diagnostics = diag;
    row.inner_iters = inner.iters;
    row.inner_incomplete = inner.incomplete;
    res.trace.push_back(std::move(row));

    double mult_sq = mu.squaredNorm();
    for (const BlockPoint& w : omega) mult_sq += w.inner(w);

    res.x = x;
    res.omega = std::move(omega);
    res.mu = std::move(mu);

    const double residual =
        std::max(diag.stationarity, std::max(std::sqrt(phi), diag.complementarity_max()));
    if (residual <= config.outer_tol) {
      res.status = SolveStatus::ConvergedKkt;
      return res;
    }
    if (std::sqrt(mult_sq) > kMultiplierBound) {
      res.status = SolveStatus::AkktUnboundedMultipliers;
      return res;
    }
    // Infeasible-stationary: Phi is stuck well above the tolerance while its
    // own gradient has flattened out, i.e. we are converging to a stationary
    // point of the constraint violation instead of a feasible point. The
    // stall is judged relative to Phi itself: a feasibility measure that is
    // merely small but still shrinking by orders of magnitude is not stuck.
    if (k > 0 && std::sqrt(phi) > 1e3 * config.outer_tol &&
        std::abs(phi - prev_phi) <= 1e-4 * prev_phi &&
        infeasibility_phi_grad(inst, x).norm() <= std::max(1e-6, 1e-4 * std::sqrt(phi))) {
      res.status = SolveStatus::InfeasibleStationary;
      return res;
    }
    prev_phi = phi;
    rho *= config.rho_mult;
  }
  res.status = SolveStatus::BudgetExhausted;
  return res;
}

}  // namespace conicert
