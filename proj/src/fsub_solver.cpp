#include "qcreg/fsub_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "qcreg/errors.hpp"

namespace qcreg {

namespace {

double dot(const ScalarLattice& a, const ScalarLattice& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

std::vector<double> fsub_tet_weights(const TetMatrixField& R, double mu) {
  if (!(mu > 0.0)) throw InvalidArgument("penalty must be positive");
  std::vector<double> w(R.size());
  for (std::size_t t = 0; t < R.size(); ++t) {
    const double det = R[t].determinant();
    if (!(det > 0.0) || !std::isfinite(det)) {
      throw InvalidR("R has non-positive determinant on tet " + std::to_string(t), t);
    }
    const double c = std::cbrt(det);
    w[t] = 2.0 / (c * c) + mu;
  }
  return w;
}

// ---- StiffnessStencil ----

StiffnessStencil::StiffnessStencil(const TetMesh& mesh, std::span<const double> tet_weights) : grid_(mesh.grid()) {
  if (tet_weights.size() != mesh.tet_count()) throw ShapeError("tet weight count does not match the mesh");
  slot_to_lattice_.fill(-1);

  struct LocalType {
    Eigen::Matrix4d gtg;
    std::array<std::array<int, 4>, 4> slot;  // lattice index of (a -> b)
  };
  std::array<LocalType, TetMesh::kTetsPerCell> local;
  for (int t = 0; t < TetMesh::kTetsPerCell; ++t) {
    const auto& G = mesh.gradient_operator(t + 1);
    local[t].gtg = G.transpose() * G;
    const auto& lv = mesh.local_vertices(t + 1);
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        const std::array<int, 3> o{lv[b][0] - lv[a][0], lv[b][1] - lv[a][1], lv[b][2] - lv[a][2]};
        const int s = slot_of(o);
        if (slot_to_lattice_[s] < 0) {
          slot_to_lattice_[s] = static_cast<int>(offsets_.size());
          offsets_.push_back(o);
        }
        local[t].slot[a][b] = slot_to_lattice_[s];
      }
    }
  }
  coef_.assign(offsets_.size(), ScalarLattice(grid_.node_count(), 0.0));

  for (std::size_t t = 0; t < mesh.tet_count(); ++t) {
    const auto& lt = local[mesh.local_type(t) - 1];
    const auto& verts = mesh.tet(t);
    const double w = tet_weights[t];
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) coef_[lt.slot[a][b]][verts[a]] += w * lt.gtg(a, b);
    }
  }
}

void StiffnessStencil::apply(const ScalarLattice& x, ScalarLattice& y) const {
  if (x.size() != grid_.node_count()) throw ShapeError("stiffness apply: size mismatch");
  const int n = grid_.nodes_per_axis();
  y.assign(x.size(), 0.0);
  for (std::size_t s = 0; s < offsets_.size(); ++s) {
    const auto& o = offsets_[s];
    const auto lin = static_cast<std::ptrdiff_t>(o[0]) + static_cast<std::ptrdiff_t>(n) * (o[1] + static_cast<std::ptrdiff_t>(n) * o[2]);
    const double* c = coef_[s].data();
    const int i0 = std::max(0, -o[0]), i1 = std::min(n, n - o[0]);
    const int j0 = std::max(0, -o[1]), j1 = std::min(n, n - o[1]);
    const int k0 = std::max(0, -o[2]), k1 = std::min(n, n - o[2]);
    for (int k = k0; k < k1; ++k) {
      for (int j = j0; j < j1; ++j) {
        const std::size_t row = grid_.index(0, j, k);
        double* yr = y.data() + row;
        const double* cr = c + row;
        const double* xr = x.data() + static_cast<std::ptrdiff_t>(row) + lin;
        for (int i = i0; i < i1; ++i) yr[i] += cr[i] * xr[i];
      }
    }
  }
}

double StiffnessStencil::coefficient(std::size_t node, const std::array<int, 3>& offset) const {
  for (int a = 0; a < 3; ++a) {
    if (offset[a] < -1 || offset[a] > 1) return 0.0;
  }
  const int lat = slot_to_lattice_[slot_of(offset)];
  return lat < 0 ? 0.0 : coef_[lat][node];
}

// ---- EllipticOperator ----

EllipticOperator::EllipticOperator(std::shared_ptr<const StiffnessStencil> stiffness, std::vector<double> tet_weights,
                                   const BoundaryTags& boundary, const LandmarkSet& landmarks, int component,
                                   double mu, double sigma)
    : stiffness_(std::move(stiffness)),
      weights_(std::move(tet_weights)),
      boundary_(boundary),
      component_(component),
      mu_(mu),
      sigma_(sigma) {
  if (component < 0 || component > 2) throw InvalidArgument("component must be 0, 1 or 2");
  if (sigma < 0.0) throw InvalidArgument("sigma must be non-negative");
  const std::size_t count = grid().node_count();
  constrained_.assign(count, 0);
  pinned_.assign(count, 0.0);
  for (std::size_t v = 0; v < count; ++v) {
    if (boundary.is_dirichlet(v, component)) {
      constrained_[v] = 1;
      pinned_[v] = boundary.value(v, component);
    }
  }
  for (const auto& lm : landmarks.pairs) {
    if (lm.node >= count) throw ShapeError("landmark node outside the grid");
    if (boundary.is_dirichlet(lm.node, component)) {
      // Boundary data wins over a conflicting landmark.
      if (lm.target[component] != pinned_[lm.node]) ++conflicts_;
      continue;
    }
    constrained_[lm.node] = 1;
    pinned_[lm.node] = lm.target[component];
  }
}

void EllipticOperator::apply_full(const ScalarLattice& x, ScalarLattice& y) const {
  stiffness_->apply(x, y);
  if (sigma_ > 0.0) {
    const auto lx = smoothness_laplacian(grid(), boundary_, component_, x);
    const auto ltlx = smoothness_laplacian_transpose(grid(), boundary_, component_, lx);
    for (std::size_t v = 0; v < y.size(); ++v) y[v] += sigma_ * ltlx[v];
  }
}

void EllipticOperator::apply(const ScalarLattice& x, ScalarLattice& y) const {
  ScalarLattice xm = x;
  for (std::size_t v = 0; v < xm.size(); ++v) {
    if (constrained_[v]) xm[v] = 0.0;
  }
  apply_full(xm, y);
  for (std::size_t v = 0; v < y.size(); ++v) {
    if (constrained_[v]) y[v] = 0.0;
  }
}

std::vector<std::size_t> EllipticOperator::free_nodes() const {
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < constrained_.size(); ++v) {
    if (!constrained_[v]) out.push_back(v);
  }
  return out;
}

Eigen::MatrixXd EllipticOperator::dense_reduced() const {
  const auto free = free_nodes();
  const auto m = static_cast<Eigen::Index>(free.size());
  Eigen::MatrixXd A(m, m);
  ScalarLattice e(grid().node_count(), 0.0), Ae;
  for (Eigen::Index c = 0; c < m; ++c) {
    e[free[c]] = 1.0;
    apply(e, Ae);
    e[free[c]] = 0.0;
    for (Eigen::Index r = 0; r < m; ++r) A(r, c) = Ae[free[r]];
  }
  return A;
}

EllipticOperator assemble_operator(const TetMesh& mesh, const TetMatrixField& R, double mu, double sigma,
                                   const LandmarkSet& landmarks, const BoundaryTags& boundary, int component) {
  if (R.size() != mesh.tet_count()) throw ShapeError("R length does not match the mesh");
  auto weights = fsub_tet_weights(R, mu);
  auto stiffness = std::make_shared<const StiffnessStencil>(mesh, weights);
  return EllipticOperator(std::move(stiffness), std::move(weights), boundary, landmarks, component, mu, sigma);
}

ScalarLattice assemble_rhs(const TetMesh& mesh, const TetMatrixField& R, const TetMatrixField& lambda,
                           const EllipticOperator& op) {
  if (R.size() != mesh.tet_count() || lambda.size() != mesh.tet_count()) {
    throw ShapeError("tet matrix field length does not match the mesh");
  }
  const int c = op.component();
  ScalarLattice b(mesh.grid().node_count(), 0.0);
  for (std::size_t t = 0; t < mesh.tet_count(); ++t) {
    const Eigen::Vector3d target = (R[t].row(c) + lambda[t].row(c)).transpose();
    const Eigen::Vector4d contrib = op.mu() * (mesh.gradient_operator(mesh.local_type(t)).transpose() * target);
    const auto& verts = mesh.tet(t);
    for (int a = 0; a < 4; ++a) b[verts[a]] += contrib[a];
  }
  ScalarLattice Ap;
  op.apply_full(op.pinned(), Ap);
  const auto& mask = op.constrained();
  for (std::size_t v = 0; v < b.size(); ++v) b[v] = mask[v] ? 0.0 : b[v] - Ap[v];
  return b;
}

MultigridHierarchy build_preconditioner(const EllipticOperator& op, int sweeps) {
  return MultigridHierarchy(op.grid(), op.constrained(), op.mu(), op.sigma(), sweeps);
}

void rbgs_smooth(const MultigridHierarchy& hier, std::size_t level, ScalarLattice& f, const ScalarLattice& rhs,
                 int sweeps, SweepOrder order) {
  hier.smooth(level, f, rhs, sweeps, order);
}

PcgResult pcg(const LinearMap& A, const LinearMap& M, const ConstraintMask& mask, const ScalarLattice& rhs,
              ScalarLattice x0, double tol, int max_iter, bool flexible) {
  if (!(tol > 0.0)) throw InvalidArgument("PCG tolerance must be positive");
  const std::size_t n = rhs.size();
  if (x0.size() != n || mask.size() != n) throw ShapeError("PCG: size mismatch");
  auto masked = [&](ScalarLattice& v) {
    for (std::size_t i = 0; i < n; ++i) {
      if (mask[i]) v[i] = 0.0;
    }
  };

  PcgResult res;
  res.x = std::move(x0);
  masked(res.x);

  ScalarLattice b = rhs;
  masked(b);
  ScalarLattice Mb;
  M(b, Mb);
  const double bMb = dot(b, Mb);
  if (!(bMb > 0.0)) {
    // Zero right-hand side: the solution is zero.
    std::fill(res.x.begin(), res.x.end(), 0.0);
    return res;
  }
  const double target = tol * std::sqrt(bMb);

  ScalarLattice r(n), Ax, z, Ap;
  A(res.x, Ax);
  for (std::size_t i = 0; i < n; ++i) r[i] = mask[i] ? 0.0 : b[i] - Ax[i];
  M(r, z);
  double rz = dot(r, z);
  ScalarLattice p = z;
  ScalarLattice r_prev;

  for (int it = 0;; ++it) {
    res.relative_residual = std::sqrt(std::max(rz, 0.0)) / std::sqrt(bMb);
    if (rz < 0.0) throw NoConvergence("PCG: preconditioner is not positive definite", res.relative_residual, it);
    if (std::sqrt(rz) <= target) {
      res.iterations = it;
      return res;
    }
    if (it >= max_iter) {
      throw NoConvergence("PCG did not converge in " + std::to_string(max_iter) + " iterations",
                          res.relative_residual, it);
    }
    A(p, Ap);
    const double pAp = dot(p, Ap);
    if (!(pAp > 0.0)) throw NoConvergence("PCG: operator is not positive definite", res.relative_residual, it);
    const double alpha = rz / pAp;
    if (flexible) r_prev = r;
    for (std::size_t i = 0; i < n; ++i) {
      res.x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    M(r, z);
    const double rz_new = dot(r, z);
    double beta;
    if (flexible) {
      double num = 0.0;
      for (std::size_t i = 0; i < n; ++i) num += z[i] * (r[i] - r_prev[i]);
      beta = num / rz;
    } else {
      beta = rz_new / rz;
    }
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
}

PcgResult pcg_solve(const EllipticOperator& op, const ScalarLattice& rhs, const MultigridHierarchy& precond,
                    ScalarLattice x0, double tol, int max_iter) {
  const LinearMap A = [&op](const ScalarLattice& x, ScalarLattice& y) { op.apply(x, y); };
  const LinearMap M = [&precond](const ScalarLattice& x, ScalarLattice& y) { y = precond.precondition(x); };
  return pcg(A, M, op.constrained(), rhs, std::move(x0), tol, max_iter, precond.coupled());
}

FsubResult solve_f_subproblem(const TetMesh& mesh, const TetMatrixField& R, const TetMatrixField& lambda, double mu,
                              double sigma, const LandmarkSet& landmarks, const BoundaryTags& boundary,
                              const DisplacementField& f_init, const FsubOptions& options) {
  if (R.size() != mesh.tet_count() || lambda.size() != mesh.tet_count()) {
    throw ShapeError("tet matrix field length does not match the mesh");
  }
  if (f_init.size() != mesh.grid().node_count()) throw ShapeError("initial field size does not match the mesh");

  auto weights = fsub_tet_weights(R, mu);
  auto stiffness = std::make_shared<const StiffnessStencil>(mesh, weights);

  FsubResult out;
  for (int c = 0; c < 3; ++c) {
    EllipticOperator op(stiffness, weights, boundary, landmarks, c, mu, sigma);
    const MultigridHierarchy hier = build_preconditioner(op, options.smoothing_sweeps);
    const ScalarLattice rhs = assemble_rhs(mesh, R, lambda, op);
    PcgResult sol = pcg_solve(op, rhs, hier, f_init.comp[c], options.pcg_tol, options.pcg_max_iter);
    const auto& mask = op.constrained();
    const auto& pinned = op.pinned();
    ScalarLattice comp(sol.x.size());
    for (std::size_t v = 0; v < comp.size(); ++v) comp[v] = mask[v] ? pinned[v] : sol.x[v];
    out.f.comp[c] = std::move(comp);
    out.iterations[c] = sol.iterations;
    out.boundary_conflicts += op.boundary_conflicts();
  }
  return out;
}

}  // namespace qcreg
