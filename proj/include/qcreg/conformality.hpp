#pragma once

#include <complex>
#include <vector>

#include <Eigen/Core>

#include "qcreg/grid.hpp"

namespace qcreg {

/// One dense 3x3 matrix per tetrahedron (Df, R or the multiplier).
using TetMatrixField = std::vector<Mat3>;

/// Per-tet Jacobian of the piecewise-linear interpolant of f.
TetMatrixField jacobian_per_tet(const TetMesh& mesh, const DisplacementField& f);
Mat3 jacobian_of_tet(const TetMesh& mesh, const DisplacementField& f, std::size_t tet);

/// Conformality distortion (1/n) |M|_F^2 / det(M)^(2/n); +inf unless det(M) > 0.
double distortion_K(const Eigen::Ref<const Eigen::MatrixXd>& M);
double distortion_K(const Eigen::MatrixXd& M);
double distortion_K(const Mat3& M);

/// Beltrami coefficient f_zbar / f_z of the linear map M, using
/// f_z = ((a + d) + i(c - b)) / 2 and f_zbar = ((a - d) + i(c + b)) / 2 for
/// M = [[a, b], [c, d]]. Throws NotOrientationPreserving when det(M) <= 0.
std::complex<double> beltrami_2d(const Eigen::Matrix2d& M);

/// |Df|_F^2 / det(R)^(2/3), +inf unless det(R) > 0.
double split_energy_term(const Mat3& Df, const Mat3& R);

/// |M|_F^2 / det(M)^(2/3), the unnormalized per-tet distortion used by the
/// discrete energy; +inf unless det(M) > 0.
double tet_distortion(const Mat3& M);

struct EnergyBreakdown {
  double conformality_term = 0.0;
  double smoothness_term = 0.0;
  double augmented_term = 0.0;
  double total = 0.0;
};

/// Seven-point Laplacian of one component, evaluated on every node that is
/// not Dirichlet for that component. A missing neighbor (Neumann face) is
/// replaced by its mirror image across the face. Dirichlet rows are zero.
ScalarLattice smoothness_laplacian(const Grid& grid, const BoundaryTags& boundary, int component,
                                   const ScalarLattice& u);
/// Transpose of smoothness_laplacian as a linear map.
ScalarLattice smoothness_laplacian_transpose(const Grid& grid, const BoundaryTags& boundary, int component,
                                             const ScalarLattice& v);

/// Sum over nodes of |L_h f|^2 for all three components.
double smoothness_energy(const Grid& grid, const BoundaryTags& boundary, const DisplacementField& f);

/// Discrete model energy: sum_T |Df|^2/det(Df)^(2/3) + (sigma/2) sum_x |L_h f|^2.
EnergyBreakdown total_energy(const TetMesh& mesh, const DisplacementField& f, double sigma);

/// ADMM augmented Lagrangian:
///   sum_T K(f,R,T) + (mu/2) sum_T |R - Df + lambda|_F^2 + (sigma/2) sum_x |L_h f|^2.
/// At fixed (R, lambda) this is also the f-subproblem objective.
EnergyBreakdown augmented_lagrangian(const TetMesh& mesh, const DisplacementField& f, const TetMatrixField& R,
                                     const TetMatrixField& lambda, double mu, double sigma);

}  // namespace qcreg
