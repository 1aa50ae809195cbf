#pragma once

#include <functional>
#include <vector>

#include "qcreg/conformality.hpp"
#include "qcreg/fsub_solver.hpp"
#include "qcreg/grid.hpp"
#include "qcreg/rsub_solver.hpp"

namespace qcreg {

struct AdmmConfig {
  double sigma = 0.0;
  double outer_tol = 1e-4;  // on max-norm change of f between iterations
  double mu_init = 30.0;
  int max_outer_iters = 200;
  FsubOptions fsub;
  RsubOptions rsub;
};

/// Throws InvalidArgument on a non-positive tolerance, penalty or iteration cap, or sigma < 0.
void validate(const AdmmConfig& config);

struct AdmmState {
  DisplacementField f;
  TetMatrixField R;
  TetMatrixField lambda;
  double mu = 0.0;
  int k = 0;
  bool r_solved = false;  // R holds an R-subproblem result (warm start for the fixed point)
};

struct TraceRecord {
  int iteration = 0;
  double energy = 0.0;                   // sum_T |Df|^2/det(Df)^(2/3) + sigma/2 |L f|^2, +inf when folded
  double normalized_conformality = 0.0;  // the same conformality sum with the 1/3 factor
  double augmented_lagrangian = 0.0;     // at (f, R, lambda, mu) after the iteration
  double primal_residual = 0.0;          // sqrt(sum_T |R - Df|^2)
  double mu = 0.0;
  double f_change = 0.0;
  int pcg_iterations = 0;                // summed over the three components
};

struct EnergyTrace {
  std::vector<TraceRecord> records;
};

/// What one iteration did, handed to an observer before the state moves on.
struct AdmmStep {
  int iteration;
  const TetMatrixField& R;           // R^{k+1}
  const TetMatrixField& Df;          // Df^{k+1}
  const TetMatrixField& lambda_old;  // lambda^k
  const TetMatrixField& lambda_new;  // lambda^{k+1}
  double mu_old;
  double mu_new;
};

using AdmmObserver = std::function<void(const AdmmStep&)>;

struct AdmmResult {
  AdmmState state;
  EnergyTrace trace;
  bool converged = false;
  double final_f_change = 0.0;
  std::size_t boundary_conflicts = 0;
};

/// f = identity, R = I, lambda = 0, mu = max(mu_init, 30).
AdmmState initialize(const TetMesh& mesh, const LandmarkSet& landmarks, const AdmmConfig& config);

/// lambda + R - Df per tet.
TetMatrixField update_multiplier(const TetMatrixField& lambda, const TetMatrixField& R, const TetMatrixField& Df);

/// max(max_T 30 / det(R)^(2/3), mu). Throws InvalidR for det(R) <= 0.
double update_penalty(const TetMatrixField& R, double mu);

/// Runs the outer loop until the f-change falls to outer_tol or the iteration
/// cap is hit (converged == false then).
AdmmResult run(const TetMesh& mesh, const LandmarkSet& landmarks, const AdmmConfig& config,
               const AdmmObserver& observer = {});

/// Continues the outer loop from an arbitrary state.
AdmmResult resume(const TetMesh& mesh, const LandmarkSet& landmarks, const AdmmConfig& config, AdmmState start,
                  const AdmmObserver& observer = {});

}  // namespace qcreg
