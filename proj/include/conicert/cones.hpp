#pragma once

// Cone geometry: projections onto Lorentz and PSD cones, Moreau decomposition,
// spectral machinery, and point classification relative to each cone factor.

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace conicert {

enum class BlockKind { Lorentz, Psd };

// One factor of the product cone K = K_1 x ... x K_r.
// Lorentz(m): L^m = {(w0, wbar) : w0 >= ||wbar||}; L^1 is the half-line [0, inf).
// Psd(m):     m x m symmetric positive semidefinite matrices.
struct ConeBlock {
  BlockKind kind = BlockKind::Lorentz;
  int dim = 1;  // m: vector length (Lorentz) or matrix order (Psd)

  // Number of independent scalar entries carried by a point of this block.
  int entries() const { return kind == BlockKind::Lorentz ? dim : dim * (dim + 1) / 2; }
};

struct ConeSpec {
  std::vector<ConeBlock> blocks;

  int total_entries() const;
  void validate() const;  // throws std::invalid_argument on empty spec or m < 1
};

// A point of one cone block. Lorentz payloads are plain vectors; PSD payloads
// are stored as the packed lower triangle (row-major), so symmetry is
// structural rather than assumed.
struct BlockPoint {
  BlockKind kind = BlockKind::Lorentz;
  int dim = 0;
  Eigen::VectorXd data;  // size: dim (Lorentz) or dim*(dim+1)/2 (Psd)

  static BlockPoint lorentz(Eigen::VectorXd v);
  static BlockPoint psd_zero(int m);
  // Packs (M + M^T)/2, so any numerically asymmetric input loses its skew part.
  static BlockPoint psd_from_matrix(const Eigen::MatrixXd& M);

  // PSD only: unpack to a full (exactly symmetric) matrix.
  Eigen::MatrixXd matrix() const;

  // Inner product of the ambient space: Euclidean for Lorentz, trace inner
  // product <A,B> = tr(AB) for PSD (off-diagonal packed entries count twice).
  double inner(const BlockPoint& other) const;
  double norm() const;

  BlockPoint scaled(double a) const;
  BlockPoint negated() const { return scaled(-1.0); }
};

// Eigendecomposition of a symmetric matrix with the zero-tolerance partition.
// Eigenvalues are sorted descending; U's columns are paired with them.
// alpha = {i : lambda_i > tol}, beta = {i : |lambda_i| <= tol}, gamma = {i : lambda_i < -tol}.
struct SpectralData {
  Eigen::VectorXd lambda;
  Eigen::MatrixXd U;
  std::vector<int> alpha, beta, gamma;  // 0-based indices into lambda
  double tol = 0.0;
};

// tol < 0 selects the default threshold 1e-8 * max(1, |lambda|_max).
SpectralData spectral(const Eigen::MatrixXd& M, double tol = -1.0);

// Region of a point relative to the Lorentz cone, under a fixed tolerance.
// The ladder checks Origin before BoundaryPlus so ties resolve deterministically.
enum class LorentzRegion { Interior, BoundaryPlus, Origin, NegInterior, NegBoundaryPlus, Outside };

const char* to_string(LorentzRegion r);

LorentzRegion classify_lorentz(const Eigen::VectorXd& z, double tol);

// Nearest point of L^m in Euclidean norm (closed form).
Eigen::VectorXd project_lorentz(const Eigen::VectorXd& z, int m);

// Projection onto the PSD cone: U diag(max(0, lambda)) U^T, plus the spectral
// data it was assembled from. tol only affects the alpha/beta/gamma partition.
std::pair<BlockPoint, SpectralData> project_psd(const Eigen::MatrixXd& M, double tol = -1.0);

// Projection of a block point onto its cone.
BlockPoint project_block(const BlockPoint& w);

struct MoreauParts {
  BlockPoint plus;   // Pi_K(w)
  BlockPoint minus;  // Pi_K(-w); w = plus - minus, <plus, minus> = 0
};

MoreauParts moreau_decompose(const BlockPoint& w);

// Moore-Penrose pseudoinverse of a (near-)PSD matrix: invert eigenvalues above
// tol * max(1, lambda_max), zero the rest. Throws if M is materially indefinite
// (an eigenvalue below -tol * ||M||_F).
Eigen::MatrixXd pseudoinverse_psd(const Eigen::MatrixXd& M, double tol);

// Trace-inner-product weight of each packed entry: all ones for Lorentz,
// 1 on the diagonal and 2 off it for packed PSD lower triangles, so that
// w.cwiseProduct pairings reproduce <A,B> = tr(AB).
Eigen::VectorXd packed_trace_weights(BlockKind kind, int dim);

// Margin to the cone along the canonical interior direction:
// Lorentz: z0 - ||zbar|| (so > 0 iff interior); PSD: min eigenvalue.
double block_interior_margin(const BlockPoint& w);

// Distance from w to the cone of its block (= ||Pi(-w)||).
double block_cone_distance(const BlockPoint& w);

}  // namespace conicert
