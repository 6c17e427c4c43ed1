#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include <conicert/cones.hpp>

namespace conicert {

// Descriptor of the continuum of generators at the Lorentz-cone origin:
// M(xi, w) over xi in [xi_min, xi_max] and unit w of length w_dim.
struct LorentzFamilyDescriptor {
  double xi_min = -1.0;
  double xi_max = 1.0;
  int w_dim = 0;
};

// B-subdifferential of the Lorentz projection at a point: the finite list of
// extreme generators for the current region, plus (at the origin only) the
// descriptor of the parametric family the finite list does not exhaust.
struct LorentzSubdiffGenerators {
  LorentzRegion region = LorentzRegion::Interior;
  std::vector<Eigen::MatrixXd> generators;
  std::optional<LorentzFamilyDescriptor> parametric_family;
};

// The matrix (1/2) [[1, w^T], [w, (1+xi) I - xi w w^T]], symmetric PSD for
// |xi| <= 1 and unit w; w must have length m - 1.
Eigen::MatrixXd m_matrix(double xi, const Eigen::VectorXd& w, int m);

// Generators of the B-subdifferential of the projection onto L^m at z,
// selected by region: interior of -L -> {0}; interior of L -> {I}; outside
// both cones -> {M(z0/||zbar||, zbar/||zbar||)}; positive boundary ->
// {I, M(1, zbar/||zbar||)}; negative boundary -> {0, M(-1, zbar/||zbar||)};
// origin -> {0, I} plus the parametric family descriptor. Callers projecting
// -g evaluate this at z = -g(x).
LorentzSubdiffGenerators lorentz_proj_subdiff(const Eigen::VectorXd& z, double tol);

// Coefficient matrix with entry (i, j) = (max{l_i,0} + max{l_j,0}) /
// (|l_i| + |l_j|), set to 1 when both l_i and l_j are within tol of zero.
Eigen::MatrixXd b_matrix(const Eigen::VectorXd& lambdas, double tol);

// Applies an element V of the B-subdifferential (Clarke hull for theta
// strictly inside (0,1)) of the PSD-cone projection taken at -M to the
// direction H. In the spectral frame of M, with alpha/beta/gamma the
// positive/zero/negative eigenvalue groups of M: the alpha-gamma block of
// U^T H U is scaled by |lambda_j| / (|lambda_i| + |lambda_j|), the beta-gamma
// and gamma-gamma blocks pass through, the beta-beta block is scaled by
// theta, and all remaining alpha rows/columns vanish. tol < 0 selects the
// default spectral zero tolerance.
Eigen::MatrixXd psd_proj_subdiff_apply(const Eigen::MatrixXd& M, const Eigen::MatrixXd& H,
                                       double theta, double tol = -1.0);

}  // namespace conicert
