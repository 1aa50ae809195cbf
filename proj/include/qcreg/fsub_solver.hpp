#pragma once

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "qcreg/conformality.hpp"
#include "qcreg/grid.hpp"
#include "qcreg/multigrid.hpp"

namespace qcreg {

/// Per-tet weights 2/det(R)^(2/3) + mu. Throws InvalidR for det(R) <= 0.
std::vector<double> fsub_tet_weights(const TetMatrixField& R, double mu);

/// D^T W D for one scalar component, stored as a node stencil: one
/// coefficient lattice per lattice offset that appears in some tet.
class StiffnessStencil {
 public:
  StiffnessStencil(const TetMesh& mesh, std::span<const double> tet_weights);

  const Grid& grid() const { return grid_; }
  /// y = K x over all nodes, constraints ignored.
  void apply(const ScalarLattice& x, ScalarLattice& y) const;
  /// Entry K(node, node + offset); zero for offsets the mesh does not couple.
  double coefficient(std::size_t node, const std::array<int, 3>& offset) const;

 private:
  static int slot_of(const std::array<int, 3>& o) { return (o[0] + 1) + 3 * (o[1] + 1) + 9 * (o[2] + 1); }

  Grid grid_;
  std::array<int, 27> slot_to_lattice_{};
  std::vector<std::array<int, 3>> offsets_;
  std::vector<ScalarLattice> coef_;
};

/// Euler-Lagrange operator of the f-subproblem for one component:
/// D^T W D + sigma L^T L with pinned (Dirichlet and landmark) nodes removed.
class EllipticOperator {
 public:
  EllipticOperator(std::shared_ptr<const StiffnessStencil> stiffness, std::vector<double> tet_weights,
                   const BoundaryTags& boundary, const LandmarkSet& landmarks, int component, double mu,
                   double sigma);

  const Grid& grid() const { return stiffness_->grid(); }
  int component() const { return component_; }
  double mu() const { return mu_; }
  double sigma() const { return sigma_; }
  std::span<const double> tet_weights() const { return weights_; }
  const ConstraintMask& constrained() const { return constrained_; }
  /// Pinned values on constrained nodes, zero elsewhere.
  const ScalarLattice& pinned() const { return pinned_; }
  /// Landmarks whose pinned value lost to a conflicting Dirichlet value.
  std::size_t boundary_conflicts() const { return conflicts_; }

  /// Reduced action: constrained entries of x are read as zero and the
  /// constrained rows of y are zero.
  void apply(const ScalarLattice& x, ScalarLattice& y) const;
  /// Full action over all rows and columns.
  void apply_full(const ScalarLattice& x, ScalarLattice& y) const;

  std::vector<std::size_t> free_nodes() const;
  /// Dense reduced matrix over free_nodes(); intended for small grids.
  Eigen::MatrixXd dense_reduced() const;

 private:
  std::shared_ptr<const StiffnessStencil> stiffness_;
  std::vector<double> weights_;
  BoundaryTags boundary_;
  int component_;
  double mu_;
  double sigma_;
  ConstraintMask constrained_;
  ScalarLattice pinned_;
  std::size_t conflicts_ = 0;
};

EllipticOperator assemble_operator(const TetMesh& mesh, const TetMatrixField& R, double mu, double sigma,
                                   const LandmarkSet& landmarks, const BoundaryTags& boundary, int component);

/// mu D^T (row `component` of R + lambda) minus the pinned-value contribution,
/// zero on constrained rows.
ScalarLattice assemble_rhs(const TetMesh& mesh, const TetMatrixField& R, const TetMatrixField& lambda,
                           const EllipticOperator& op);

/// Builds the multigrid preconditioner matching an operator's constraints.
MultigridHierarchy build_preconditioner(const EllipticOperator& op, int sweeps = 4);

void rbgs_smooth(const MultigridHierarchy& hier, std::size_t level, ScalarLattice& f, const ScalarLattice& rhs,
                 int sweeps, SweepOrder order);

using LinearMap = std::function<void(const ScalarLattice&, ScalarLattice&)>;

struct PcgResult {
  ScalarLattice x;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Preconditioned conjugate gradients on the subspace where `mask` is zero.
/// Stops when sqrt(r.Mr) <= tol * sqrt(b.Mb). With `flexible` set the
/// Polak-Ribiere form of beta is used (tolerates a slightly varying M).
/// Throws NoConvergence after max_iter iterations.
PcgResult pcg(const LinearMap& A, const LinearMap& M, const ConstraintMask& mask, const ScalarLattice& rhs,
              ScalarLattice x0, double tol, int max_iter, bool flexible = false);

PcgResult pcg_solve(const EllipticOperator& op, const ScalarLattice& rhs, const MultigridHierarchy& precond,
                    ScalarLattice x0, double tol, int max_iter);

struct FsubOptions {
  double pcg_tol = 1e-8;
  int pcg_max_iter = 500;
  int smoothing_sweeps = 4;
};

struct FsubResult {
  DisplacementField f;
  std::array<int, 3> iterations{};
  std::size_t boundary_conflicts = 0;
};

/// Minimizes the augmented Lagrangian over f at fixed (R, lambda, mu), one
/// component at a time, with f pinned to q_i at landmarks and to the boundary
/// data on Dirichlet faces. f_init seeds PCG.
FsubResult solve_f_subproblem(const TetMesh& mesh, const TetMatrixField& R, const TetMatrixField& lambda, double mu,
                              double sigma, const LandmarkSet& landmarks, const BoundaryTags& boundary,
                              const DisplacementField& f_init, const FsubOptions& options = {});

}  // namespace qcreg
