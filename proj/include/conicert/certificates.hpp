#pragma once

// Stationarity certification: index partitions, critical-subspace bases,
// sigma-terms, a weak second-order verdict, and the constraint-qualification
// checks (nondegeneracy, weak constant rank, strict complementarity,
// Robinson). Every verdict carries the numbers it was decided on, and a
// failed verdict is a result, not an error: only evaluation problems throw.

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <conicert/cones.hpp>
#include <conicert/problem.hpp>

namespace conicert {

// Every tolerance the certification stack needs, in one record so the rank
// threshold (and friends) are configured once and echoed in reports.
struct Tolerances {
  double active = 1e-6;       // boundary/zero classification margin for g, omega
  double rank = 1e-8;         // numerical rank: keep singular values >= rank * sigma_max
  double feasibility = 1e-6;  // max accepted constraint violation at x
  double kkt = 1e-6;          // KKT residual below this counts as stationary
  double wsoc = 1e-6;         // WSOC verdict: min eigenvalue >= -wsoc
  double robinson = 1e-6;     // Robinson verdict: interior margin t must exceed this
  double wcr_radius = 1e-4;   // sampling ball radius for the constant-rank check
  int wcr_samples = 16;       // number of sampled points (at least 8)
  double wcr_eigengap = 1e-12;  // kernel eigenvalue split below this is ill-defined
  std::uint64_t seed = 42;    // sampling seed

  void validate() const;  // throws std::invalid_argument naming the bad field
};

// Tag of a Lorentz block relative to its cone: zero, positive boundary, or
// interior. Points within the feasibility slack but classified outside fold
// into IB (they are boundary up to the tolerance).
enum class LorentzTag { I0, IB, II };

const char* to_string(LorentzTag t);

struct LorentzIndexInfo {
  LorentzTag tag = LorentzTag::II;
  double margin = 0.0;        // g0 - ||gbar||
  bool in_ibb = false;        // omega given, tag == IB, and omega on bd+
  double omega_margin = 0.0;  // omega0 - ||omegabar|| (0 when omega absent)
};

struct PsdIndexInfo {
  Eigen::VectorXd lambda;      // eigenvalues of the block value, descending
  Eigen::MatrixXd U;           // paired eigenvectors (columns)
  std::vector<int> alpha_bar;  // positions with lambda > tol
  std::vector<int> beta_bar;   // positions with |lambda| <= tol (kernel)
  // Filled when omega is given: eigenvalues of U_beta^T omega U_beta
  // (descending) and their split into active (nu > tol) vs common kernel.
  Eigen::VectorXd nu;
  std::vector<int> kappa_bar;  // positions in nu with nu > tol
  std::vector<int> gamma_bar;  // the remaining positions (common kernel)
};

struct BlockIndexInfo {
  BlockKind kind = BlockKind::Lorentz;
  LorentzIndexInfo lorentz;  // meaningful when kind == Lorentz
  PsdIndexInfo psd;          // meaningful when kind == Psd
};

struct IndexPartition {
  std::vector<BlockIndexInfo> blocks;
  bool omega_given = false;
  double tol = 0.0;  // the classification tolerance that was used
};

// Partition of the constraint blocks at a feasible point. Throws
// std::runtime_error (mentioning the infeasibility Phi value) when x violates
// the constraints by more than 10 * tols.active.
IndexPartition index_partition(const ProblemInstance& inst, const Eigen::VectorXd& x,
                               const Tolerances& tols = {});
IndexPartition index_partition(const ProblemInstance& inst, const Eigen::VectorXd& x,
                               const std::vector<BlockPoint>& omega, const Tolerances& tols = {});

// Orthonormal basis of the critical subspace: the null space of the stacked
// rows Dh; Dg_i (i in I0); g_i^T Gamma_i Dg_i (i in IB); and the PSD kernel
// rows [u_i^T d_l g u_j]_l over kernel pairs i <= j. rank_tol stores the
// absolute singular-value threshold that decided the rank, and every
// constraint row annihilates every basis column within it.
struct CriticalSubspaceBasis {
  Eigen::MatrixXd basis;            // n x q, orthonormal columns
  Eigen::MatrixXd constraint_rows;  // the stacked row system (for audit)
  double rank_tol = 0.0;
};

CriticalSubspaceBasis critical_subspace_basis(const ProblemInstance& inst,
                                              const Eigen::VectorXd& x,
                                              const Tolerances& tols = {});

// Curvature correction of the Lorentz blocks,
//   sigma = sum over i in I_BB of -(omega_i0 / g_i0) Dg_i^T Gamma_i Dg_i,
// an n x n symmetric matrix (exactly zero when no block is in I_BB, hence
// always zero for scalar blocks). Throws when a block lands in I_BB with its
// leading entry at the boundary tolerance (division guard), naming the block.
Eigen::MatrixXd sigma_term_socp(const ProblemInstance& inst, const Eigen::VectorXd& x,
                                const std::vector<BlockPoint>& omega, const Tolerances& tols = {});

// Curvature correction of the PSD blocks,
//   sigma_ij = 2 <omega, d_i g(x) g(x)^+ d_j g(x)>,
// symmetrized on output; zero when there are no PSD blocks, when omega
// vanishes, or when g(x) = 0 (the pseudoinverse is zero). Pseudoinverse
// failures propagate.
Eigen::MatrixXd sigma_term_sdp(const ProblemInstance& inst, const Eigen::VectorXd& x,
                               const std::vector<BlockPoint>& omega, const Tolerances& tols = {});

// KKT residual components of a candidate triple. All components are zero at
// an exact KKT point; cone distances are measured as ||Pi(-.)||.
struct KktResidual {
  double stationarity = 0.0;     // ||grad f - Dg*[omega] + Dh^T mu||
  double equality = 0.0;         // ||h(x)||
  double primal_cone = 0.0;      // max over blocks of dist(g_b(x), K_b)
  double dual_cone = 0.0;        // max over blocks of dist(omega_b, K_b)
  double complementarity = 0.0;  // max over blocks of |<g_b(x), omega_b>|

  double max() const;
};

KktResidual kkt_residual(const ProblemInstance& inst, const Eigen::VectorXd& x,
                         const std::vector<BlockPoint>& omega, const Eigen::VectorXd& mu);

// Weak second-order verdict: minimum eigenvalue of B^T (hess_x L + sigma) B
// over the critical subspace basis B. A zero-dimensional subspace holds
// vacuously with a +infinity sentinel quotient. The triple is expected to be
// approximately KKT (residual <= 1e-4); a larger residual only sets
// kkt_warning, it does not block the computation.
struct WsocResult {
  bool holds = false;
  double min_eigenvalue = 0.0;  // +inf sentinel when the subspace is {0}
  bool vacuous = false;
  int subspace_dim = 0;
  double kkt_residual = 0.0;
  bool kkt_warning = false;
};

WsocResult wsoc_check(const ProblemInstance& inst, const Eigen::VectorXd& x,
                      const std::vector<BlockPoint>& omega, const Eigen::VectorXd& mu,
                      const Tolerances& tols = {});

// Strict complementarity, per block: I0 blocks need omega interior, IB blocks
// need omega on bd+ (I_B = I_BB), interior blocks impose nothing; PSD blocks
// need rank g + rank omega = m. Complementarity |<g, omega>| <= tols.active is
// the meaningful regime; a violation is recorded in the evidence rather than
// thrown, so certification of arbitrary multipliers never aborts here.
struct StrictComplementarityResult {
  bool holds = false;
  double complementarity = 0.0;        // max block |<g, omega>| (the precondition)
  std::vector<std::string> evidence;   // one line per block, plus notes
};

StrictComplementarityResult strict_complementarity_check(const ProblemInstance& inst,
                                                         const Eigen::VectorXd& x,
                                                         const std::vector<BlockPoint>& omega,
                                                         const Tolerances& tols = {});

// Nondegeneracy: the family {grad h_i} + {grad g_ij : i in I0} +
// {Dg_i^T Gamma_i gtilde_i : i in IB, gtilde = (||gbar||, gbar)} + PSD kernel
// vectors v_ij, stacked as columns, must be linearly independent. Holds iff
// the count is at most n and sigma_min > tols.rank * sigma_max. An empty
// family is vacuously independent (sigma_min reported as +inf).
struct NondegeneracyResult {
  bool holds = false;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  int family_size = 0;
  bool count_ok = true;  // family_size <= n
};

NondegeneracyResult nondegeneracy_check(const ProblemInstance& inst, const Eigen::VectorXd& x,
                                        const Tolerances& tols = {});

// Weak constant rank: the nondegeneracy family with index sets frozen at x is
// re-evaluated at sampled points in a ball and must keep its numerical rank.
// A finite sample can only support or refute the property, so the verdict is
// "holds (sampled)" / "fails" / "indeterminate". PSD kernel bases at sampled
// points are the eigenvectors of the |beta| smallest eigenvalues, Procrustes
// aligned to the base kernel basis; if that eigenvalue split is narrower than
// tols.wcr_eigengap at any point the verdict is indeterminate.
struct WcrResult {
  std::string verdict;     // "holds (sampled)" | "fails" | "indeterminate"
  std::vector<int> ranks;  // ranks[0] at x, then one entry per sample
  double radius = 0.0;     // provenance
  int samples = 0;

  int base_rank() const { return ranks.empty() ? 0 : ranks.front(); }
};

WcrResult wcr_check(const ProblemInstance& inst, const Eigen::VectorXd& x,
                    const Tolerances& tols = {});

// Robinson's condition, checked constructively: Dh must have full row rank,
// and bisection over t (with an inner projected-least-squares feasibility
// solve) finds the largest verified margin t such that some d with Dh d = 0
// pushes g(x) + Dg(x)[d] - t e into the cone (e = (1,0,...) per Lorentz
// block, identity per PSD block). Holds iff that margin exceeds
// tols.robinson. The search is capped at t = 1e3 (the margin is often
// unbounded; any t above the tolerance already decides the verdict).
struct RobinsonResult {
  std::string verdict;  // "holds" | "fails" | "indeterminate"
  double margin = 0.0;  // largest verified feasible t
  bool row_rank_ok = false;
};

RobinsonResult robinson_check(const ProblemInstance& inst, const Eigen::VectorXd& x,
                              const Tolerances& tols = {});

// Who produced the multipliers being certified; recorded in the report since
// a second-order guarantee tied to the penalty path only covers its own
// multiplier limit, not arbitrary user-supplied ones.
enum class MultiplierSource { Solver, User };

const char* to_string(MultiplierSource s);

// Aggregate of every check at one candidate triple. When x is infeasible
// beyond tols.feasibility the feasibility evidence (including Phi) is
// recorded, the KKT residual is still reported, and the remaining checks are
// skipped (checks_run = false, verdict strings say "skipped"). Verdict
// failures never throw; evaluation errors propagate.
struct CertificateReport {
  bool feasible = false;
  double feasibility = 0.0;  // max constraint violation at x
  double phi = 0.0;          // infeasibility measure Phi(x)
  bool checks_run = false;

  KktResidual kkt;
  bool kkt_ok = false;

  IndexPartition partition;
  StrictComplementarityResult strict_complementarity;
  NondegeneracyResult nondegeneracy;
  WcrResult wcr;
  RobinsonResult robinson;
  Eigen::MatrixXd sigma;  // sigma_term_socp + sigma_term_sdp
  WsocResult wsoc;

  Tolerances tolerances;  // provenance
  MultiplierSource multiplier_source = MultiplierSource::User;
};

CertificateReport certify(const ProblemInstance& inst, const Eigen::VectorXd& x,
                          const std::vector<BlockPoint>& omega, const Eigen::VectorXd& mu,
                          const Tolerances& tols = {},
                          MultiplierSource source = MultiplierSource::User);

}  // namespace conicert
