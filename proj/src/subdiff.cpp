#include <conicert/subdiff.hpp>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace conicert {

Eigen::MatrixXd m_matrix(double xi, const Eigen::VectorXd& w, int m) {
  if (m < 2) {
    std::ostringstream os;
    os << "m_matrix requires m >= 2, got m = " << m;
    throw std::invalid_argument(os.str());
  }
  if (w.size() != m - 1) {
    std::ostringstream os;
    os << "m_matrix expects w of length m - 1 = " << m - 1 << ", got length " << w.size();
    throw std::invalid_argument(os.str());
  }
  if (std::abs(xi) > 1.0) {
    std::ostringstream os;
    os << "m_matrix requires |xi| <= 1, got xi = " << xi;
    throw std::invalid_argument(os.str());
  }
  if (std::abs(w.norm() - 1.0) > 1e-10) {
    std::ostringstream os;
    os << "m_matrix requires a unit direction, got ||w|| = " << w.norm();
    throw std::invalid_argument(os.str());
  }
  Eigen::MatrixXd M(m, m);
  M(0, 0) = 0.5;
  M.block(0, 1, 1, m - 1) = 0.5 * w.transpose();
  M.block(1, 0, m - 1, 1) = 0.5 * w;
  // Form the outer product alone first: w(i)*w(j) rounds identically to
  // w(j)*w(i), keeping the result symmetric to the last bit.
  const Eigen::MatrixXd outer = w * w.transpose();
  M.block(1, 1, m - 1, m - 1) =
      0.5 * ((1.0 + xi) * Eigen::MatrixXd::Identity(m - 1, m - 1) - xi * outer);
  return M;
}

LorentzSubdiffGenerators lorentz_proj_subdiff(const Eigen::VectorXd& z, double tol) {
  const int m = static_cast<int>(z.size());
  if (m < 1) throw std::invalid_argument("lorentz_proj_subdiff: empty point");
  LorentzSubdiffGenerators out;
  out.region = classify_lorentz(z, tol);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(m, m);
  const Eigen::MatrixXd ident = Eigen::MatrixXd::Identity(m, m);
  switch (out.region) {
    case LorentzRegion::NegInterior:
      out.generators = {zero};
      break;
    case LorentzRegion::Interior:
      out.generators = {ident};
      break;
    case LorentzRegion::Outside: {
      const Eigen::VectorXd zbar = z.tail(m - 1);
      const double nz = zbar.norm();
      out.generators = {m_matrix(z(0) / nz, zbar / nz, m)};
      break;
    }
    case LorentzRegion::BoundaryPlus: {
      const Eigen::VectorXd zbar = z.tail(m - 1);
      out.generators = {ident, m_matrix(1.0, zbar / zbar.norm(), m)};
      break;
    }
    case LorentzRegion::NegBoundaryPlus: {
      const Eigen::VectorXd zbar = z.tail(m - 1);
      out.generators = {zero, m_matrix(-1.0, zbar / zbar.norm(), m)};
      break;
    }
    case LorentzRegion::Origin:
      out.generators = {zero, ident};
      if (m > 1) out.parametric_family = LorentzFamilyDescriptor{-1.0, 1.0, m - 1};
      break;
  }
  return out;
}

Eigen::MatrixXd b_matrix(const Eigen::VectorXd& lambdas, double tol) {
  const int m = static_cast<int>(lambdas.size());
  Eigen::MatrixXd B(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double li = lambdas(i);
      const double lj = lambdas(j);
      if (std::abs(li) <= tol && std::abs(lj) <= tol) {
        B(i, j) = 1.0;  // the 0/0 convention
      } else {
        B(i, j) = (std::max(li, 0.0) + std::max(lj, 0.0)) /
                  (std::abs(li) + std::abs(lj));
      }
    }
  }
  return B;
}

Eigen::MatrixXd psd_proj_subdiff_apply(const Eigen::MatrixXd& M, const Eigen::MatrixXd& H,
                                       double theta, double tol) {
  if (M.rows() != M.cols() || H.rows() != H.cols() || M.rows() != H.rows()) {
    std::ostringstream os;
    os << "psd_proj_subdiff_apply: shape mismatch, M is " << M.rows() << "x" << M.cols()
       << " and H is " << H.rows() << "x" << H.cols();
    throw std::invalid_argument(os.str());
  }
  if (theta < 0.0 || theta > 1.0) {
    std::ostringstream os;
    os << "psd_proj_subdiff_apply requires theta in [0, 1], got " << theta;
    throw std::invalid_argument(os.str());
  }
  const int m = static_cast<int>(M.rows());
  const SpectralData sp = spectral(M, tol);
  const Eigen::MatrixXd Ht = sp.U.transpose() * H * sp.U;

  // Group label per index: 0 = alpha (positive), 1 = beta (zero),
  // 2 = gamma (negative), taken from the spectrum of M. The projection is of
  // -M, whose spectrum is the negated one; the block coefficients below are
  // exactly the B-matrix values at that negated spectrum.
  std::vector<int> group(m, 1);
  for (int i : sp.alpha) group[i] = 0;
  for (int i : sp.gamma) group[i] = 2;

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const int gi = group[i];
      const int gj = group[j];
      double coeff = 0.0;
      if (gi == 2 && gj == 2) {
        coeff = 1.0;  // gamma-gamma passes through
      } else if ((gi == 1 && gj == 2) || (gi == 2 && gj == 1)) {
        coeff = 1.0;  // beta-gamma passes through
      } else if (gi == 1 && gj == 1) {
        coeff = theta;  // inner block choice
      } else if ((gi == 0 && gj == 2) || (gi == 2 && gj == 0)) {
        const double li = std::abs(sp.lambda(i));
        const double lj = std::abs(sp.lambda(j));
        const double neg = gi == 2 ? li : lj;  // |negative eigenvalue|
        coeff = neg / (li + lj);
      }
      // alpha-alpha and alpha-beta stay zero.
      out(i, j) = coeff * Ht(i, j);
    }
  }
  out = sp.U * out * sp.U.transpose();
  return 0.5 * (out + out.transpose());  // exact symmetry
}

}  // namespace conicert
