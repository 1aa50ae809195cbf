#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "qcreg/grid.hpp"

namespace qcreg {

/// 1 marks a node whose value is pinned (Dirichlet face or landmark).
using ConstraintMask = std::vector<std::uint8_t>;

/// 27-point full weighting, tensor product of [1/4, 1/2, 1/4] per axis.
/// Out-of-lattice neighbors are dropped, so the result equals (1/8) P^T v for
/// the trilinear prolongation P. Throws ShapeError on a size mismatch.
ScalarLattice restrict_full_weighting(const Grid& fine, const ScalarLattice& v);

/// Trilinear interpolation from the coarse grid to the next finer grid.
ScalarLattice prolong_trilinear(const Grid& coarse, const ScalarLattice& v);

/// Coarse-level constrained nodes: every coarse node of the coarse cell that
/// contains a constrained fine node (just the coincident node when the fine
/// node sits on the coarse lattice).
ConstraintMask coarsen_constraints(const Grid& fine, const ConstraintMask& fine_mask);

enum class SweepOrder { RedFirst, BlackFirst };

/// Geometric multigrid V-cycle for the constant-coefficient approximation of
/// the f-subproblem operator.
///
/// sigma == 0: each level carries 6*mu times the symmetric seven-point
/// Laplacian, whose axis-edge weights are 1, 1/2 or 1/4 depending on how many
/// boundary planes the edge lies in (mirror-reflected Neumann rows scaled by
/// their dual volume). sigma > 0: each level carries the coupled system
///   [-V, A1; A1, (6 mu / sigma) A1] (aux; f) = (0; g / sigma)
/// with A1 that same Laplacian and V the dual-volume diagonal, relaxed with
/// collective 2x2 red-black Gauss-Seidel.
///
/// Level 0 is the finest; the last level is the 3^3 lattice, solved exactly.
class MultigridHierarchy {
 public:
  MultigridHierarchy(const Grid& fine, ConstraintMask fine_constrained, double mu, double sigma,
                     int sweeps = 4);

  std::size_t level_count() const { return levels_.size(); }
  const Grid& grid(std::size_t level) const { return levels_[level].grid; }
  const ConstraintMask& constrained(std::size_t level) const { return levels_[level].constrained; }
  bool coupled() const { return sigma_ > 0.0; }
  double mu() const { return mu_; }
  double sigma() const { return sigma_; }
  int sweeps() const { return sweeps_; }

  /// Scalar level operator on the free subspace (constrained entries of x are
  /// treated as zero, constrained rows of y are zero).
  void apply_level(std::size_t level, const ScalarLattice& x, ScalarLattice& y) const;

  /// `sweeps` red-black Gauss-Seidel sweeps of the scalar level operator.
  void smooth(std::size_t level, ScalarLattice& f, const ScalarLattice& rhs, int sweeps, SweepOrder order) const;

  /// One scalar V-cycle: red-first pre-smoothing, coarse-grid correction,
  /// black-first post-smoothing; exact solve on the coarsest level.
  ScalarLattice vcycle(std::size_t level, ScalarLattice f, const ScalarLattice& rhs) const;

  /// The preconditioner M g: a V-cycle from a zero initial guess (the coupled
  /// variant when sigma > 0).
  ScalarLattice precondition(const ScalarLattice& g) const;

 private:
  struct Level {
    Grid grid;
    ConstraintMask constrained;
    std::vector<double> dual_volume;
  };
  struct Block {
    ScalarLattice aux;
    ScalarLattice f;
  };

  double edge_weight(const Level& lvl, const std::array<int, 3>& a, int axis) const;
  double scale(std::size_t level) const;

  void apply_graph_laplacian(const Level& lvl, const ScalarLattice& x, ScalarLattice& y) const;
  void apply_block(std::size_t level, const Block& x, Block& y) const;
  void smooth_block(std::size_t level, Block& x, const Block& rhs, int sweeps, SweepOrder order) const;
  Block vcycle_block(std::size_t level, Block x, const Block& rhs) const;

  void factor_coarsest();
  ScalarLattice solve_coarsest(const ScalarLattice& rhs) const;
  Block solve_coarsest_block(const Block& rhs) const;

  std::vector<Level> levels_;
  double mu_;
  double sigma_;
  int sweeps_;
  std::vector<std::size_t> coarse_free_;
  Eigen::LLT<Eigen::MatrixXd> coarse_llt_;
  Eigen::PartialPivLU<Eigen::MatrixXd> coarse_lu_;
};

}  // namespace qcreg
