#include "qcreg/admm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "qcreg/errors.hpp"

namespace qcreg {

namespace {

constexpr double kPenaltyScale = 30.0;

double primal_residual(const TetMatrixField& R, const TetMatrixField& Df) {
  double s = 0.0;
  for (std::size_t t = 0; t < R.size(); ++t) s += (R[t] - Df[t]).squaredNorm();
  return std::sqrt(s);
}

}  // namespace

void validate(const AdmmConfig& config) {
  if (!(config.sigma >= 0.0)) throw InvalidArgument("sigma must be non-negative");
  if (!(config.outer_tol > 0.0)) throw InvalidArgument("outer tolerance must be positive");
  if (!(config.mu_init > 0.0)) throw InvalidArgument("initial penalty must be positive");
  if (config.max_outer_iters < 1) throw InvalidArgument("max outer iterations must be >= 1");
  if (!(config.fsub.pcg_tol > 0.0) || config.fsub.pcg_max_iter < 1) {
    throw InvalidArgument("PCG tolerance and iteration cap must be positive");
  }
  if (!(config.rsub.tolerance > 0.0) || config.rsub.max_iter < 1) {
    throw InvalidArgument("R-subproblem tolerance and iteration cap must be positive");
  }
}

AdmmState initialize(const TetMesh& mesh, const LandmarkSet& /*landmarks*/, const AdmmConfig& config) {
  validate(config);
  AdmmState s;
  s.f = DisplacementField::identity(mesh.grid());
  s.R.assign(mesh.tet_count(), Mat3::Identity());
  s.lambda.assign(mesh.tet_count(), Mat3::Zero());
  s.mu = std::max(config.mu_init, kPenaltyScale);
  s.k = 1;
  return s;
}

TetMatrixField update_multiplier(const TetMatrixField& lambda, const TetMatrixField& R, const TetMatrixField& Df) {
  if (lambda.size() != R.size() || R.size() != Df.size()) throw ShapeError("multiplier update: size mismatch");
  TetMatrixField out(lambda.size());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = lambda[t] + R[t] - Df[t];
  return out;
}

double update_penalty(const TetMatrixField& R, double mu) {
  double m = mu;
  for (std::size_t t = 0; t < R.size(); ++t) {
    const double det = R[t].determinant();
    if (!(det > 0.0)) throw InvalidR("R has non-positive determinant on tet " + std::to_string(t), t);
    const double c = std::cbrt(det);
    m = std::max(m, kPenaltyScale / (c * c));
  }
  return m;
}

AdmmResult run(const TetMesh& mesh, const LandmarkSet& landmarks, const AdmmConfig& config,
               const AdmmObserver& observer) {
  return resume(mesh, landmarks, config, initialize(mesh, landmarks, config), observer);
}

AdmmResult resume(const TetMesh& mesh, const LandmarkSet& landmarks, const AdmmConfig& config, AdmmState start,
                  const AdmmObserver& observer) {
  validate(config);
  AdmmResult out;
  out.state = std::move(start);
  AdmmState& s = out.state;
  if (s.f.size() != mesh.grid().node_count() || s.R.size() != mesh.tet_count() || s.lambda.size() != mesh.tet_count()) {
    throw ShapeError("ADMM state does not match the mesh");
  }
  const BoundaryTags boundary(mesh.grid());

  const int k0 = s.k;
  for (int it = k0; it < k0 + config.max_outer_iters; ++it) {
    FsubResult fs;
    try {
      fs = solve_f_subproblem(mesh, s.R, s.lambda, s.mu, config.sigma, landmarks, boundary, s.f, config.fsub);
    } catch (const NoConvergence& e) {
      throw NoConvergence("outer iteration " + std::to_string(it) + ": " + e.what(), e.residual(), e.iterations());
    }
    out.boundary_conflicts = fs.boundary_conflicts;
    const double change = max_abs_difference(fs.f, s.f);
    s.f = std::move(fs.f);

    const TetMatrixField Df = jacobian_per_tet(mesh, s.f);
    TetMatrixField R = solve_R_field(mesh, Df, s.lambda, s.mu, s.r_solved ? s.R : TetMatrixField{}, config.rsub);
    s.r_solved = true;
    TetMatrixField lambda = update_multiplier(s.lambda, R, Df);
    const double mu = update_penalty(R, s.mu);
    if (observer) observer(AdmmStep{it, R, Df, s.lambda, lambda, s.mu, mu});
    s.R = std::move(R);
    s.lambda = std::move(lambda);
    s.mu = mu;
    s.k = it + 1;

    TraceRecord rec;
    rec.iteration = it;
    const EnergyBreakdown e = total_energy(mesh, s.f, config.sigma);
    rec.energy = e.total;
    rec.normalized_conformality = e.conformality_term / 3.0;
    rec.augmented_lagrangian = augmented_lagrangian(mesh, s.f, s.R, s.lambda, s.mu, config.sigma).total;
    rec.primal_residual = primal_residual(s.R, Df);
    rec.mu = s.mu;
    rec.f_change = change;
    rec.pcg_iterations = fs.iterations[0] + fs.iterations[1] + fs.iterations[2];
    out.trace.records.push_back(rec);
    out.final_f_change = change;

    if (change <= config.outer_tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace qcreg
