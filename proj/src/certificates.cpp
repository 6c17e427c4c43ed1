#include <conicert/certificates.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace conicert {

namespace {

constexpr double kRobinsonCap = 1e3;
constexpr double kKktWarnLevel = 1e-4;
constexpr int kPocsBudget = 300;

void validate_x(const ProblemInstance& inst, const Eigen::VectorXd& x) {
  if (x.size() != inst.n) {
    throw std::invalid_argument("point has " + std::to_string(x.size()) +
                                " coordinates but the instance has " + std::to_string(inst.n) +
                                " variables");
  }
}

void validate_omega(const ProblemInstance& inst, const std::vector<BlockPoint>& omega) {
  if (omega.size() != inst.blocks.size()) {
    throw std::invalid_argument("multiplier list has " + std::to_string(omega.size()) +
                                " blocks but the instance has " +
                                std::to_string(inst.blocks.size()));
  }
  for (size_t b = 0; b < omega.size(); ++b) {
    const ConeBlockExprs& blk = inst.blocks[b];
    const int entries =
        blk.kind == BlockKind::Lorentz ? blk.dim : blk.dim * (blk.dim + 1) / 2;
    if (omega[b].kind != blk.kind || omega[b].dim != blk.dim ||
        omega[b].data.size() != entries) {
      throw std::invalid_argument("multiplier block " + std::to_string(b) +
                                  " does not match the shape of its constraint block");
    }
  }
}

void validate_mu(const ProblemInstance& inst, const Eigen::VectorXd& mu) {
  if (mu.size() != inst.p()) {
    throw std::invalid_argument("equality multiplier has " + std::to_string(mu.size()) +
                                " entries but the instance has " + std::to_string(inst.p()) +
                                " equalities");
  }
}

double violation(const std::vector<BlockPoint>& g, const Eigen::VectorXd& h) {
  double v = 0.0;
  for (const BlockPoint& gb : g) v = std::max(v, block_cone_distance(gb));
  if (h.size() > 0) v = std::max(v, h.cwiseAbs().maxCoeff());
  return v;
}

void ensure_feasible(const ProblemInstance& inst, const Eigen::VectorXd& x, double slack) {
  const double v = violation(eval_g(inst, x), eval_h(inst, x));
  if (v > slack) {
    std::ostringstream os;
    os << "point is infeasible: max constraint violation " << v << " exceeds the slack "
       << slack << " (Phi = " << infeasibility_phi(inst, x) << ")";
    throw std::runtime_error(os.str());
  }
}

Eigen::MatrixXd unpack_sym(const Eigen::VectorXd& packed, int m) {
  Eigen::MatrixXd M(m, m);
  int k = 0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) M(i, j) = M(j, i) = packed(k++);
  return M;
}

// Gamma w = (w0, -wbar), the reflection that pairs a boundary ray with its
// orthogonal complement inside the cone's boundary.
Eigen::VectorXd gamma_apply(const Eigen::VectorXd& w) {
  Eigen::VectorXd r = -w;
  r(0) = w(0);
  return r;
}

LorentzIndexInfo classify_lorentz_value(const Eigen::VectorXd& gval, double tol) {
  LorentzIndexInfo info;
  info.margin = gval(0) - gval.tail(gval.size() - 1).norm();
  switch (classify_lorentz(gval, tol)) {
    case LorentzRegion::Interior:
      info.tag = LorentzTag::II;
      break;
    case LorentzRegion::BoundaryPlus:
    case LorentzRegion::Outside:  // feasibility slack: boundary up to tolerance
      info.tag = LorentzTag::IB;
      break;
    default:  // Origin and the negative regions collapse to the zero value
      info.tag = LorentzTag::I0;
      break;
  }
  return info;
}

PsdIndexInfo classify_psd_value(const Eigen::MatrixXd& G, double tol, const BlockPoint* omega) {
  PsdIndexInfo info;
  const SpectralData sp = spectral(G, tol);
  info.lambda = sp.lambda;
  info.U = sp.U;
  info.alpha_bar = sp.alpha;
  info.beta_bar = sp.beta;
  // Slightly negative eigenvalues (inside the feasibility slack) belong to
  // the kernel for partition purposes.
  info.beta_bar.insert(info.beta_bar.end(), sp.gamma.begin(), sp.gamma.end());
  std::sort(info.beta_bar.begin(), info.beta_bar.end());

  if (omega != nullptr && !info.beta_bar.empty()) {
    const int k = static_cast<int>(info.beta_bar.size());
    Eigen::MatrixXd Ub(G.rows(), k);
    for (int i = 0; i < k; ++i) Ub.col(i) = info.U.col(info.beta_bar[i]);
    const Eigen::MatrixXd W = omega->matrix();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Ub.transpose() * W * Ub);
    info.nu = es.eigenvalues().reverse();  // descending
    for (int i = 0; i < k; ++i) {
      if (info.nu(i) > tol)
        info.kappa_bar.push_back(i);
      else
        info.gamma_bar.push_back(i);
    }
  }
  return info;
}

IndexPartition build_partition(const std::vector<BlockPoint>& g,
                               const std::vector<BlockPoint>* omega, const Tolerances& tols) {
  IndexPartition part;
  part.omega_given = omega != nullptr;
  part.tol = tols.active;
  for (size_t b = 0; b < g.size(); ++b) {
    BlockIndexInfo info;
    info.kind = g[b].kind;
    if (g[b].kind == BlockKind::Lorentz) {
      info.lorentz = classify_lorentz_value(g[b].data, tols.active);
      if (omega != nullptr) {
        const Eigen::VectorXd& w = (*omega)[b].data;
        info.lorentz.omega_margin = w(0) - w.tail(w.size() - 1).norm();
        info.lorentz.in_ibb =
            info.lorentz.tag == LorentzTag::IB &&
            classify_lorentz(w, tols.active) == LorentzRegion::BoundaryPlus;
      }
    } else {
      info.psd =
          classify_psd_value(g[b].matrix(), tols.active, omega ? &(*omega)[b] : nullptr);
    }
    part.blocks.push_back(std::move(info));
  }
  return part;
}

// <d_l g, S> for every variable l, via the packed trace pairing: the kernel
// rows v_ij and the nondegeneracy vectors are this with S = sym(u_i u_j^T).
Eigen::VectorXd contract_derivative(const Eigen::MatrixXd& Dg_packed, int m,
                                    const Eigen::MatrixXd& S) {
  const Eigen::VectorXd w = packed_trace_weights(BlockKind::Psd, m);
  const BlockPoint packed = BlockPoint::psd_from_matrix(S);
  return Dg_packed.transpose() * w.cwiseProduct(packed.data);
}

// The stacked nondegeneracy family (as columns) for frozen index information,
// re-evaluated from the first-order data at an arbitrary nearby point. Also
// the constraint-row system of the critical subspace, transposed, except that
// IB rows use gtilde = (||gbar||, gbar) instead of g itself there.
struct FrozenBlock {
  LorentzTag tag = LorentzTag::II;  // Lorentz blocks
  int kernel_dim = 0;               // PSD blocks
  Eigen::MatrixXd base_kernel;      // m x kernel_dim, basis at the base point
};

std::vector<Eigen::VectorXd> family_columns(const ProblemInstance& inst,
                                            const FirstOrderEval& ev,
                                            const std::vector<FrozenBlock>& frozen,
                                            const Tolerances& tols, bool* degenerate_split) {
  std::vector<Eigen::VectorXd> cols;
  for (int i = 0; i < ev.Dh.rows(); ++i) cols.push_back(ev.Dh.row(i).transpose());
  for (size_t b = 0; b < inst.blocks.size(); ++b) {
    const ConeBlockExprs& blk = inst.blocks[b];
    if (blk.kind == BlockKind::Lorentz) {
      if (frozen[b].tag == LorentzTag::I0) {
        for (int i = 0; i < blk.dim; ++i) cols.push_back(ev.Dg[b].row(i).transpose());
      } else if (frozen[b].tag == LorentzTag::IB) {
        const Eigen::VectorXd& gval = ev.g[b].data;
        Eigen::VectorXd gtilde(gval.size());
        gtilde(0) = gval.tail(gval.size() - 1).norm();
        gtilde.tail(gval.size() - 1) = gval.tail(gval.size() - 1);
        cols.push_back(ev.Dg[b].transpose() * gamma_apply(gtilde));
      }
    } else {
      const int k = frozen[b].kernel_dim;
      if (k == 0) continue;
      const int m = blk.dim;
      const Eigen::MatrixXd G = ev.g[b].matrix();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);  // ascending
      if (k < m && degenerate_split != nullptr) {
        const double gap = es.eigenvalues()(k) - es.eigenvalues()(k - 1);
        if (gap < tols.wcr_eigengap) *degenerate_split = true;
      }
      Eigen::MatrixXd Ub = es.eigenvectors().leftCols(k);
      // Orthogonal Procrustes alignment to the base kernel basis, so the
      // family varies continuously with the sample point.
      if (frozen[b].base_kernel.cols() == k) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(Ub.transpose() * frozen[b].base_kernel,
                                              Eigen::ComputeFullU | Eigen::ComputeFullV);
        Ub = Ub * (svd.matrixU() * svd.matrixV().transpose());
      }
      for (int i = 0; i < k; ++i)
        for (int j = i; j < k; ++j)
          cols.push_back(
              contract_derivative(ev.Dg[b], m, Ub.col(i) * Ub.col(j).transpose()));
    }
  }
  return cols;
}

Eigen::MatrixXd stack_columns(const std::vector<Eigen::VectorXd>& cols, int n) {
  Eigen::MatrixXd A(n, static_cast<int>(cols.size()));
  for (size_t i = 0; i < cols.size(); ++i) A.col(static_cast<int>(i)) = cols[i];
  return A;
}

int numerical_rank(const Eigen::MatrixXd& A, double rank_tol_factor) {
  if (A.rows() == 0 || A.cols() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double thr = rank_tol_factor * std::max(1.0, sv(0));
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) >= thr) ++rank;
  return rank;
}

std::vector<FrozenBlock> freeze_blocks(const ProblemInstance& inst,
                                       const std::vector<BlockPoint>& g,
                                       const Tolerances& tols) {
  std::vector<FrozenBlock> frozen(inst.blocks.size());
  for (size_t b = 0; b < inst.blocks.size(); ++b) {
    if (g[b].kind == BlockKind::Lorentz) {
      frozen[b].tag = classify_lorentz_value(g[b].data, tols.active).tag;
    } else {
      const PsdIndexInfo info = classify_psd_value(g[b].matrix(), tols.active, nullptr);
      const int k = static_cast<int>(info.beta_bar.size());
      frozen[b].kernel_dim = k;
      frozen[b].base_kernel.resize(g[b].dim, k);
      for (int i = 0; i < k; ++i) frozen[b].base_kernel.col(i) = info.U.col(info.beta_bar[i]);
    }
  }
  return frozen;
}

}  // namespace

void Tolerances::validate() const {
  const auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string("tolerance '") + name +
                                  "' must be positive and finite");
    }
  };
  positive(active, "active");
  positive(rank, "rank");
  positive(feasibility, "feasibility");
  positive(kkt, "kkt");
  positive(wsoc, "wsoc");
  positive(robinson, "robinson");
  positive(wcr_radius, "wcr_radius");
  positive(wcr_eigengap, "wcr_eigengap");
  if (wcr_samples < 8) {
    throw std::invalid_argument("tolerance 'wcr_samples' must be at least 8");
  }
}

const char* to_string(LorentzTag t) {
  switch (t) {
    case LorentzTag::I0:
      return "I0";
    case LorentzTag::IB:
      return "IB";
    case LorentzTag::II:
      return "II";
  }
  return "?";
}

const char* to_string(MultiplierSource s) {
  return s == MultiplierSource::Solver ? "solver" : "user";
}

double KktResidual::max() const {
  return std::max({stationarity, equality, primal_cone, dual_cone, complementarity});
}

IndexPartition index_partition(const ProblemInstance& inst, const Eigen::VectorXd& x,
                               const Tolerances& tols) {
  tols.validate();
  validate_x(inst, x);
  ensure_feasible(inst, x, 10.0 * tols.active);
  return build_partition(eval_g(inst, x), nullptr, tols);
}

IndexPartition index_partition(const ProblemInstance& inst, const Eigen::VectorXd& x,
                               const std::vector<BlockPoint>& omega, const Tolerances& tols) {
  tols.validate();
  validate_x(inst, x);
  validate_omega(inst, omega);
  ensure_feasible(inst, x, 10.0 * tols.active);
  return build_partition(eval_g(inst, x), &omega, tols);
}

CriticalSubspaceBasis critical_subspace_basis(const ProblemInstance& inst,
                                              const Eigen::VectorXd& x,
                                              const Tolerances& tols) {
  tols.validate();
  validate_x(inst, x);
  ensure_feasible(inst, x, 10.0 * tols.active);
  const FirstOrderEval ev = eval_first_order(inst, x);

  std::vector<Eigen::VectorXd> rows;
  for (int i = 0; i < ev.Dh.rows(); ++i) rows.push_back(ev.Dh.row(i).transpose());
  for (size_t b = 0; b < inst.blocks.size(); ++b) {
    if (ev.g[b].kind == BlockKind::Lorentz) {
      const LorentzTag tag = classify_lorentz_value(ev.g[b].data, tols.active).tag;
      if (tag == LorentzTag::I0) {
        for (int i = 0; i < ev.g[b].dim; ++i) rows.push_back(ev.Dg[b].row(i).transpose());
      } else if (tag == LorentzTag::IB) {
        // The boundary row g^T Gamma Dg uses the block value itself.
        rows.push_back(ev.Dg[b].transpose() * gamma_apply(ev.g[b].data));
      }
    } else {
      const PsdIndexInfo info = classify_psd_value(ev.g[b].matrix(), tols.active, nullptr);
      const int k = static_cast<int>(info.beta_bar.size());
      for (int i = 0; i < k; ++i) {
        for (int j = i; j < k; ++j) {
          const Eigen::VectorXd ui = info.U.col(info.beta_bar[i]);
          const Eigen::VectorXd uj = info.U.col(info.beta_bar[j]);
          rows.push_back(contract_derivative(ev.Dg[b], ev.g[b].dim, ui * uj.transpose()));
        }
      }
    }
  }

  CriticalSubspaceBasis out;
  const int n = inst.n;
  if (rows.empty()) {
    out.constraint_rows.resize(0, n);
    out.basis = Eigen::MatrixXd::Identity(n, n);
    out.rank_tol = 0.0;
    return out;
  }
  Eigen::MatrixXd R(static_cast<int>(rows.size()), n);
  for (size_t i = 0; i < rows.size(); ++i) R.row(static_cast<int>(i)) = rows[i].transpose();
  out.constraint_rows = R;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(R, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  out.rank_tol = tols.rank * std::max(1.0, sv.size() > 0 ? sv(0) : 0.0);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) >= out.rank_tol) ++rank;
  out.basis = svd.matrixV().rightCols(n - rank);
  return out;
}

Eigen::MatrixXd sigma_term_socp(const ProblemInstance& inst, const Eigen::VectorXd& x,
                                const std::vector<BlockPoint>& omega, const Tolerances& tols) {
  const IndexPartition part = index_partition(inst, x, omega, tols);
  const FirstOrderEval ev = eval_first_order(inst, x);
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(inst.n, inst.n);
  for (size_t b = 0; b < part.blocks.size(); ++b) {
    if (part.blocks[b].kind != BlockKind::Lorentz || !part.blocks[b].lorentz.in_ibb) continue;
    const double g0 = ev.g[b].data(0);
    if (g0 <= tols.active) {
      std::ostringstream os;
      os << "sigma term of block " << b << ": the block is boundary-active with leading entry "
         << g0 << " at or below the tolerance " << tols.active
         << ", so the -(omega0/g0) coefficient is unreliable";
      throw std::runtime_error(os.str());
    }
    const double coef = -(omega[b].data(0) / g0);
    const Eigen::MatrixXd& Dg = ev.Dg[b];
    Eigen::MatrixXd gram = Dg.row(0).transpose() * Dg.row(0);
    for (int i = 1; i < ev.g[b].dim; ++i) gram -= Dg.row(i).transpose() * Dg.row(i);
    sigma += coef * gram;
  }
  return sigma;
}

Eigen::MatrixXd sigma_term_sdp(const ProblemInstance& inst, const Eigen::VectorXd& x,
                               const std::vector<BlockPoint>& omega, const Tolerances& tols) {
  tols.validate();
  validate_x(inst, x);
  validate_omega(inst, omega);
  const int n = inst.n;
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(n, n);
  bool any_psd = false;
  for (const ConeBlockExprs& blk : inst.blocks) any_psd = any_psd || blk.kind == BlockKind::Psd;
  if (!any_psd) return sigma;

  const FirstOrderEval ev = eval_first_order(inst, x);
  for (size_t b = 0; b < inst.blocks.size(); ++b) {
    if (ev.g[b].kind != BlockKind::Psd) continue;
    const int m = ev.g[b].dim;
    const Eigen::MatrixXd P = pseudoinverse_psd(ev.g[b].matrix(), tols.active);
    const Eigen::MatrixXd W = omega[b].matrix();
    if (P.norm() == 0.0 || W.norm() == 0.0) continue;
    std::vector<Eigen::MatrixXd> D(n);
    for (int l = 0; l < n; ++l) D[l] = unpack_sym(ev.Dg[b].col(l), m);
    for (int i = 0; i < n; ++i) {
      const Eigen::MatrixXd WDiP = W * D[i] * P;
      for (int j = 0; j < n; ++j) sigma(i, j) += 2.0 * (WDiP * D[j]).trace();
    }
  }
  return 0.5 * (sigma + sigma.transpose());
}

KktResidual kkt_residual(const ProblemInstance& inst, const Eigen::VectorXd& x,
                         const std::vector<BlockPoint>& omega, const Eigen::VectorXd& mu) {
  validate_x(inst, x);
  validate_omega(inst, omega);
  validate_mu(inst, mu);
  const FirstOrderEval ev = eval_first_order(inst, x);
  KktResidual r;
  r.stationarity = lagrangian_grad(inst, x, omega, mu).norm();
  r.equality = ev.h.norm();
  for (size_t b = 0; b < omega.size(); ++b) {
    r.primal_cone = std::max(r.primal_cone, block_cone_distance(ev.g[b]));
    r.dual_cone = std::max(r.dual_cone, block_cone_distance(omega[b]));
    r.complementarity = std::max(r.complementarity, std::abs(ev.g[b].inner(omega[b])));
  }
  return r;
}

WsocResult wsoc_check(const ProblemInstance& inst, const Eigen::VectorXd& x,
                      const std::vector<BlockPoint>& omega, const Eigen::VectorXd& mu,
                      const Tolerances& tols) {
  tols.validate();
  WsocResult res;
  res.kkt_residual = kkt_residual(inst, x, omega, mu).max();
  res.kkt_warning = res.kkt_residual > kKktWarnLevel;

  const CriticalSubspaceBasis sub = critical_subspace_basis(inst, x, tols);
  res.subspace_dim = static_cast<int>(sub.basis.cols());
  if (res.subspace_dim == 0) {
    res.holds = true;
    res.vacuous = true;
    res.min_eigenvalue = std::numeric_limits<double>::infinity();
    return res;
  }
  const Eigen::MatrixXd M = lagrangian_hess(inst, x, omega, mu) +
                            sigma_term_socp(inst, x, omega, tols) +
                            sigma_term_sdp(inst, x, omega, tols);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub.basis.transpose() * M * sub.basis);
  res.min_eigenvalue = es.eigenvalues().minCoeff();
  res.holds = res.min_eigenvalue >= -tols.wsoc;
  return res;
}

StrictComplementarityResult strict_complementarity_check(const ProblemInstance& inst,
                                                         const Eigen::VectorXd& x,
                                                         const std::vector<BlockPoint>& omega,
                                                         const Tolerances& tols) {
  const IndexPartition part = index_partition(inst, x, omega, tols);
  const std::vector<BlockPoint> g = eval_g(inst, x);

  StrictComplementarityResult res;
  res.holds = true;
  for (size_t b = 0; b < g.size(); ++b)
    res.complementarity = std::max(res.complementarity, std::abs(g[b].inner(omega[b])));
  if (res.complementarity > tols.active) {
    res.holds = false;
    std::ostringstream os;
    os << "complementarity precondition violated: max |<g, omega>| = " << res.complementarity;
    res.evidence.push_back(os.str());
  }

  for (size_t b = 0; b < part.blocks.size(); ++b) {
    std::ostringstream os;
    os << "block " << b;
    if (part.blocks[b].kind == BlockKind::Lorentz) {
      const LorentzIndexInfo& info = part.blocks[b].lorentz;
      os << " (lorentz, " << to_string(info.tag) << "): ";
      if (info.tag == LorentzTag::I0) {
        const bool ok =
            classify_lorentz(omega[b].data, tols.active) == LorentzRegion::Interior;
        os << "omega margin " << info.omega_margin
           << (ok ? ", interior as required" : ", interior multiplier required");
        if (!ok) res.holds = false;
      } else if (info.tag == LorentzTag::IB) {
        os << (info.in_ibb ? "omega on the positive boundary as required"
                           : "omega must lie on the positive boundary");
        if (!info.in_ibb) res.holds = false;
      } else {
        os << "interior block, no condition";
      }
    } else {
      const PsdIndexInfo& info = part.blocks[b].psd;
      const int m = g[b].dim;
      const int rank_g = static_cast<int>(info.alpha_bar.size());
      const int rank_w = static_cast<int>(spectral(omega[b].matrix(), tols.active).alpha.size());
      const bool ok = rank_g + rank_w == m;
      os << " (psd): rank g = " << rank_g << ", rank omega = " << rank_w << ", order " << m
         << (ok ? ", ranks complementary" : ", rank sum must equal the order");
      if (!ok) res.holds = false;
    }
    res.evidence.push_back(os.str());
  }
  return res;
}

NondegeneracyResult nondegeneracy_check(const ProblemInstance& inst, const Eigen::VectorXd& x,
                                        const Tolerances& tols) {
  tols.validate();
  validate_x(inst, x);
  ensure_feasible(inst, x, 10.0 * tols.active);
  const FirstOrderEval ev = eval_first_order(inst, x);
  const std::vector<FrozenBlock> frozen = freeze_blocks(inst, ev.g, tols);
  const std::vector<Eigen::VectorXd> cols = family_columns(inst, ev, frozen, tols, nullptr);

  NondegeneracyResult res;
  res.family_size = static_cast<int>(cols.size());
  res.count_ok = res.family_size <= inst.n;
  if (cols.empty()) {
    res.holds = true;
    res.sigma_min = std::numeric_limits<double>::infinity();
    res.sigma_max = 0.0;
    return res;
  }
  const Eigen::MatrixXd A = stack_columns(cols, inst.n);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const Eigen::VectorXd& sv = svd.singularValues();
  res.sigma_max = sv(0);
  res.sigma_min = sv(sv.size() - 1);
  res.holds = res.count_ok && res.sigma_min > tols.rank * std::max(1.0, res.sigma_max);
  return res;
}

WcrResult wcr_check(const ProblemInstance& inst, const Eigen::VectorXd& x,
                    const Tolerances& tols) {
  tols.validate();
  validate_x(inst, x);
  ensure_feasible(inst, x, 10.0 * tols.active);

  const std::vector<FrozenBlock> frozen = freeze_blocks(inst, eval_g(inst, x), tols);
  bool degenerate_split = false;
  const auto rank_at = [&](const Eigen::VectorXd& y) {
    const FirstOrderEval ev = eval_first_order(inst, y);
    const std::vector<Eigen::VectorXd> cols =
        family_columns(inst, ev, frozen, tols, &degenerate_split);
    return numerical_rank(stack_columns(cols, inst.n), tols.rank);
  };

  WcrResult res;
  res.radius = tols.wcr_radius;
  res.samples = tols.wcr_samples;
  res.ranks.push_back(rank_at(x));

  std::mt19937_64 rng(tols.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int s = 0; s < tols.wcr_samples; ++s) {
    Eigen::VectorXd dir(inst.n);
    for (int i = 0; i < inst.n; ++i) dir(i) = gauss(rng);
    const double len = dir.norm();
    if (len < 1e-300)
      dir = Eigen::VectorXd::Unit(inst.n, 0);
    else
      dir /= len;
    const double r = tols.wcr_radius * std::pow(unif(rng), 1.0 / inst.n);
    res.ranks.push_back(rank_at(x + r * dir));
  }

  bool constant = true;
  for (int r : res.ranks) constant = constant && r == res.ranks.front();
  if (degenerate_split)
    res.verdict = "indeterminate";
  else if (!constant)
    res.verdict = "fails";
  else
    res.verdict = "holds (sampled)";
  return res;
}

namespace {

enum class PocsOutcome { Yes, No, Unclear };

// Feasibility machinery for the Robinson margin: with d = Z y ranging over the
// null space of Dh, decide whether some y puts c - t e + A y in the cone, via
// alternating projections between that affine set and the cone. Coordinates
// carry sqrt trace weights so Euclidean projections agree with the matrix
// geometry of PSD blocks.
struct RobinsonGeometry {
  const ProblemInstance* inst = nullptr;
  Eigen::VectorXd c0, evec;            // stacked weighted g(x) and center direction
  Eigen::VectorXd weights;             // sqrt trace weights, stacked
  Eigen::MatrixXd A;                   // stacked weighted Dg * Z
  std::vector<int> offsets;            // block start positions
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;  // of A, when A has columns

  Eigen::VectorXd project_cone(const Eigen::VectorXd& w) const {
    Eigen::VectorXd out(w.size());
    for (size_t b = 0; b < inst->blocks.size(); ++b) {
      const ConeBlockExprs& blk = inst->blocks[b];
      const int entries =
          blk.kind == BlockKind::Lorentz ? blk.dim : blk.dim * (blk.dim + 1) / 2;
      BlockPoint bp;
      bp.kind = blk.kind;
      bp.dim = blk.dim;
      bp.data = w.segment(offsets[b], entries).cwiseQuotient(
          weights.segment(offsets[b], entries));
      const BlockPoint proj = project_block(bp);
      out.segment(offsets[b], entries) =
          proj.data.cwiseProduct(weights.segment(offsets[b], entries));
    }
    return out;
  }

  Eigen::VectorXd project_affine(const Eigen::VectorXd& target,
                                 const Eigen::VectorXd& c_t) const {
    if (A.cols() == 0) return c_t;
    return c_t + A * qr.solve(target - c_t);
  }

  PocsOutcome feasible(double t) const {
    const Eigen::VectorXd c_t = c0 - t * evec;
    if (c_t.size() == 0) return PocsOutcome::Yes;  // no cone blocks at all
    const double ftol = 1e-9 * std::max(1.0, c0.norm() + t * evec.norm());
    Eigen::VectorXd w = c_t;
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < kPocsBudget; ++it) {
      const Eigen::VectorXd v = project_cone(w);
      const double dist = (v - w).norm();
      if (dist <= ftol) return PocsOutcome::Yes;
      if (it > 0 && std::abs(prev - dist) <= 1e-5 * dist) return PocsOutcome::No;
      prev = dist;
      w = project_affine(v, c_t);
    }
    return PocsOutcome::Unclear;
  }
};

}  // namespace

RobinsonResult robinson_check(const ProblemInstance& inst, const Eigen::VectorXd& x,
                              const Tolerances& tols) {
  tols.validate();
  validate_x(inst, x);
  ensure_feasible(inst, x, 10.0 * tols.active);
  const FirstOrderEval ev = eval_first_order(inst, x);
  const int n = inst.n;
  const int p = inst.p();

  RobinsonResult res;
  Eigen::MatrixXd Z;
  if (p == 0) {
    res.row_rank_ok = true;
    Z = Eigen::MatrixXd::Identity(n, n);
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(ev.Dh, Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double thr = tols.rank * std::max(1.0, sv(0));
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) >= thr) ++rank;
    res.row_rank_ok = rank == p;
    if (!res.row_rank_ok) {
      res.verdict = "fails";
      res.margin = 0.0;
      return res;
    }
    Z = svd.matrixV().rightCols(n - p);
  }

  RobinsonGeometry geo;
  geo.inst = &inst;
  int total = 0;
  for (const ConeBlockExprs& blk : inst.blocks) {
    geo.offsets.push_back(total);
    total += blk.kind == BlockKind::Lorentz ? blk.dim : blk.dim * (blk.dim + 1) / 2;
  }
  geo.c0.resize(total);
  geo.evec.resize(total);
  geo.weights.resize(total);
  geo.A.resize(total, Z.cols());
  for (size_t b = 0; b < inst.blocks.size(); ++b) {
    const ConeBlockExprs& blk = inst.blocks[b];
    const int entries =
        blk.kind == BlockKind::Lorentz ? blk.dim : blk.dim * (blk.dim + 1) / 2;
    const Eigen::VectorXd w = packed_trace_weights(blk.kind, blk.dim).cwiseSqrt();
    Eigen::VectorXd e = Eigen::VectorXd::Zero(entries);
    if (blk.kind == BlockKind::Lorentz) {
      e(0) = 1.0;
    } else {
      int k = 0;
      for (int i = 0; i < blk.dim; ++i)
        for (int j = 0; j <= i; ++j) e(k++) = (i == j) ? 1.0 : 0.0;
    }
    geo.weights.segment(geo.offsets[b], entries) = w;
    geo.c0.segment(geo.offsets[b], entries) = w.cwiseProduct(ev.g[b].data);
    geo.evec.segment(geo.offsets[b], entries) = w.cwiseProduct(e);
    geo.A.middleRows(geo.offsets[b], entries) =
        w.asDiagonal() * (ev.Dg[b] * Z);
  }
  if (geo.A.cols() > 0) geo.qr.compute(geo.A);

  bool unclear_seen = false;
  double lo = 0.0;
  double hi = -1.0;
  double t = std::max(2.0 * tols.robinson, 1e-6);
  while (t <= kRobinsonCap) {
    const PocsOutcome f = geo.feasible(t);
    if (f == PocsOutcome::Yes) {
      lo = t;
      t *= 4.0;
      continue;
    }
    if (f == PocsOutcome::Unclear) unclear_seen = true;
    hi = t;
    break;
  }
  if (hi < 0.0) {
    const PocsOutcome f = geo.feasible(kRobinsonCap);
    if (f == PocsOutcome::Yes) {
      lo = kRobinsonCap;
    } else {
      if (f == PocsOutcome::Unclear) unclear_seen = true;
      hi = kRobinsonCap;
    }
  }
  if (hi > 0.0 && lo < hi) {
    for (int r = 0; r < 48 && hi - lo > 1e-12 * std::max(1.0, hi); ++r) {
      const double mid = 0.5 * (lo + hi);
      const PocsOutcome f = geo.feasible(mid);
      if (f == PocsOutcome::Yes) {
        lo = mid;
      } else {
        if (f == PocsOutcome::Unclear) unclear_seen = true;
        hi = mid;
      }
    }
  }
  res.margin = lo;
  if (res.margin > tols.robinson)
    res.verdict = "holds";
  else
    res.verdict = unclear_seen ? "indeterminate" : "fails";
  return res;
}

CertificateReport certify(const ProblemInstance& inst, const Eigen::VectorXd& x,
                          const std::vector<BlockPoint>& omega, const Eigen::VectorXd& mu,
                          const Tolerances& tols, MultiplierSource source) {
  tols.validate();
  validate_x(inst, x);
  validate_omega(inst, omega);
  validate_mu(inst, mu);

  CertificateReport rep;
  rep.tolerances = tols;
  rep.multiplier_source = source;

  const FirstOrderEval ev = eval_first_order(inst, x);
  rep.feasibility = violation(ev.g, ev.h);
  rep.phi = infeasibility_phi(inst, x);
  rep.kkt = kkt_residual(inst, x, omega, mu);
  rep.kkt_ok = rep.kkt.max() <= tols.kkt;
  rep.feasible = rep.feasibility <= tols.feasibility;

  if (!rep.feasible) {
    rep.checks_run = false;
    rep.partition.tol = tols.active;
    rep.strict_complementarity.evidence.push_back("skipped: the point is infeasible");
    rep.wcr.verdict = "skipped";
    rep.robinson.verdict = "skipped";
    rep.sigma = Eigen::MatrixXd::Zero(inst.n, inst.n);
    rep.wsoc.min_eigenvalue = std::numeric_limits<double>::quiet_NaN();
    return rep;
  }

  rep.checks_run = true;
  rep.partition = index_partition(inst, x, omega, tols);
  rep.strict_complementarity = strict_complementarity_check(inst, x, omega, tols);
  rep.nondegeneracy = nondegeneracy_check(inst, x, tols);
  rep.wcr = wcr_check(inst, x, tols);
  rep.robinson = robinson_check(inst, x, tols);
  rep.sigma = sigma_term_socp(inst, x, omega, tols) + sigma_term_sdp(inst, x, omega, tols);
  rep.wsoc = wsoc_check(inst, x, omega, mu, tols);
  return rep;
}

}  // namespace conicert
