#include <conicert/cones.hpp>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace conicert {

namespace {

// Packed lower-triangle (row-major) offset for entry (i, j) with i >= j.
inline int packed_index(int i, int j) { return i * (i + 1) / 2 + j; }

}  // namespace

int ConeSpec::total_entries() const {
  int total = 0;
  for (const auto& b : blocks) total += b.entries();
  return total;
}

void ConeSpec::validate() const {
  if (blocks.empty()) throw std::invalid_argument("cone spec must contain at least one block");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].dim < 1)
      throw std::invalid_argument("cone block " + std::to_string(i + 1) +
                                  " has non-positive dimension " + std::to_string(blocks[i].dim));
  }
}

BlockPoint BlockPoint::lorentz(Eigen::VectorXd v) {
  if (v.size() == 0) throw std::invalid_argument("Lorentz block point must be non-empty");
  BlockPoint p;
  p.kind = BlockKind::Lorentz;
  p.dim = static_cast<int>(v.size());
  p.data = std::move(v);
  return p;
}

BlockPoint BlockPoint::psd_zero(int m) {
  if (m < 1) throw std::invalid_argument("PSD block order must be positive");
  BlockPoint p;
  p.kind = BlockKind::Psd;
  p.dim = m;
  p.data = Eigen::VectorXd::Zero(m * (m + 1) / 2);
  return p;
}

BlockPoint BlockPoint::psd_from_matrix(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) throw std::invalid_argument("PSD block point must be square");
  const int m = static_cast<int>(M.rows());
  BlockPoint p = psd_zero(m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) p.data(packed_index(i, j)) = 0.5 * (M(i, j) + M(j, i));
  return p;
}

Eigen::MatrixXd BlockPoint::matrix() const {
  if (kind != BlockKind::Psd)
    throw std::logic_error("matrix() is only defined for PSD block points");
  Eigen::MatrixXd M(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j <= i; ++j) M(i, j) = M(j, i) = data(packed_index(i, j));
  return M;
}

double BlockPoint::inner(const BlockPoint& other) const {
  if (kind != other.kind || dim != other.dim)
    throw std::invalid_argument("block point shape mismatch in inner product");
  if (kind == BlockKind::Lorentz) return data.dot(other.data);
  double sum = 0.0;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j <= i; ++j) {
      const double w = i == j ? 1.0 : 2.0;  // trace inner product: off-diagonals twice
      sum += w * data(packed_index(i, j)) * other.data(packed_index(i, j));
    }
  return sum;
}

double BlockPoint::norm() const { return std::sqrt(inner(*this)); }

BlockPoint BlockPoint::scaled(double a) const {
  BlockPoint p = *this;
  p.data *= a;
  return p;
}

SpectralData spectral(const Eigen::MatrixXd& M, double tol) {
  if (M.rows() != M.cols()) throw std::invalid_argument("spectral: matrix must be square");
  const int m = static_cast<int>(M.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("spectral: eigendecomposition failed to converge");
  SpectralData sd;
  sd.lambda.resize(m);
  sd.U.resize(m, m);
  // Eigen sorts ascending; flip to descending.
  for (int i = 0; i < m; ++i) {
    sd.lambda(i) = es.eigenvalues()(m - 1 - i);
    sd.U.col(i) = es.eigenvectors().col(m - 1 - i);
  }
  const double lam_max = sd.lambda.cwiseAbs().maxCoeff();
  sd.tol = tol >= 0 ? tol : 1e-8 * std::max(1.0, lam_max);
  for (int i = 0; i < m; ++i) {
    if (sd.lambda(i) > sd.tol)
      sd.alpha.push_back(i);
    else if (sd.lambda(i) < -sd.tol)
      sd.gamma.push_back(i);
    else
      sd.beta.push_back(i);
  }
  return sd;
}

const char* to_string(LorentzRegion r) {
  switch (r) {
    case LorentzRegion::Interior: return "Interior";
    case LorentzRegion::BoundaryPlus: return "BoundaryPlus";
    case LorentzRegion::Origin: return "Origin";
    case LorentzRegion::NegInterior: return "NegInterior";
    case LorentzRegion::NegBoundaryPlus: return "NegBoundaryPlus";
    case LorentzRegion::Outside: return "Outside";
  }
  return "?";
}

LorentzRegion classify_lorentz(const Eigen::VectorXd& z, double tol) {
  if (z.size() == 0) throw std::invalid_argument("classify_lorentz: empty vector");
  if (tol < 0) throw std::invalid_argument("classify_lorentz: tol must be nonnegative");
  const int m = static_cast<int>(z.size());
  const double zbar = m > 1 ? z.tail(m - 1).norm() : 0.0;
  // Origin first so that ties against the boundary cases resolve deterministically.
  if (z.norm() <= tol) return LorentzRegion::Origin;
  if (z(0) - zbar > tol) return LorentzRegion::Interior;
  if (-z(0) - zbar > tol) return LorentzRegion::NegInterior;
  if (std::abs(z(0) - zbar) <= tol) return LorentzRegion::BoundaryPlus;
  if (std::abs(z(0) + zbar) <= tol) return LorentzRegion::NegBoundaryPlus;
  return LorentzRegion::Outside;
}

Eigen::VectorXd project_lorentz(const Eigen::VectorXd& z, int m) {
  if (z.size() != m)
    throw std::invalid_argument("project_lorentz: expected length " + std::to_string(m) +
                                ", got " + std::to_string(z.size()));
  if (m == 1) {
    Eigen::VectorXd p(1);
    p(0) = std::max(z(0), 0.0);
    return p;
  }
  const double zbar = z.tail(m - 1).norm();
  if (z(0) >= zbar) return z;                          // already in L^m
  if (-z(0) >= zbar) return Eigen::VectorXd::Zero(m);  // in -L^m: projects to apex
  // Strictly outside both cones; zbar > 0 is guaranteed here.
  const double c = 0.5 * (z(0) + zbar);
  Eigen::VectorXd p(m);
  p(0) = c;
  p.tail(m - 1) = (c / zbar) * z.tail(m - 1);
  return p;
}

std::pair<BlockPoint, SpectralData> project_psd(const Eigen::MatrixXd& M, double tol) {
  SpectralData sd = spectral(M, tol);
  Eigen::VectorXd clipped = sd.lambda.cwiseMax(0.0);
  Eigen::MatrixXd P = sd.U * clipped.asDiagonal() * sd.U.transpose();
  return {BlockPoint::psd_from_matrix(P), std::move(sd)};
}

BlockPoint project_block(const BlockPoint& w) {
  if (w.kind == BlockKind::Lorentz) return BlockPoint::lorentz(project_lorentz(w.data, w.dim));
  return project_psd(w.matrix()).first;
}

MoreauParts moreau_decompose(const BlockPoint& w) {
  MoreauParts parts;
  if (w.kind == BlockKind::Lorentz) {
    parts.plus = BlockPoint::lorentz(project_lorentz(w.data, w.dim));
    parts.minus = BlockPoint::lorentz(project_lorentz(-w.data, w.dim));
    return parts;
  }
  // One eigendecomposition serves both halves: Pi(w) clips negative eigenvalues,
  // Pi(-w) clips positive ones (with a sign flip), sharing an exact common frame.
  SpectralData sd = spectral(w.matrix());
  Eigen::VectorXd plus = sd.lambda.cwiseMax(0.0);
  Eigen::VectorXd minus = (-sd.lambda).cwiseMax(0.0);
  parts.plus = BlockPoint::psd_from_matrix(sd.U * plus.asDiagonal() * sd.U.transpose());
  parts.minus = BlockPoint::psd_from_matrix(sd.U * minus.asDiagonal() * sd.U.transpose());
  return parts;
}

Eigen::MatrixXd pseudoinverse_psd(const Eigen::MatrixXd& M, double tol) {
  if (tol < 0) throw std::invalid_argument("pseudoinverse_psd: tol must be nonnegative");
  SpectralData sd = spectral(M, 0.0);
  const int m = static_cast<int>(M.rows());
  const double lam_min = sd.lambda(m - 1);
  const double fro = M.norm();
  if (lam_min < -tol * std::max(1.0, fro))
    throw std::invalid_argument("pseudoinverse_psd: matrix is materially indefinite (eigenvalue " +
                                std::to_string(lam_min) + ")");
  const double lam_max = sd.lambda(0);
  const double cutoff = tol * std::max(1.0, lam_max);
  Eigen::VectorXd inv(m);
  for (int i = 0; i < m; ++i) inv(i) = sd.lambda(i) > cutoff ? 1.0 / sd.lambda(i) : 0.0;
  Eigen::MatrixXd P = sd.U * inv.asDiagonal() * sd.U.transpose();
  return 0.5 * (P + P.transpose());
}

Eigen::VectorXd packed_trace_weights(BlockKind kind, int dim) {
  if (dim < 1) throw std::invalid_argument("packed_trace_weights needs dim >= 1");
  if (kind == BlockKind::Lorentz) return Eigen::VectorXd::Ones(dim);
  Eigen::VectorXd w(dim * (dim + 1) / 2);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j <= i; ++j) w(packed_index(i, j)) = i == j ? 1.0 : 2.0;
  return w;
}

double block_interior_margin(const BlockPoint& w) {
  if (w.kind == BlockKind::Lorentz) {
    const int m = w.dim;
    return w.data(0) - (m > 1 ? w.data.tail(m - 1).norm() : 0.0);
  }
  SpectralData sd = spectral(w.matrix());
  return sd.lambda(w.dim - 1);
}

double block_cone_distance(const BlockPoint& w) {
  return moreau_decompose(w).minus.norm();
}

}  // namespace conicert
