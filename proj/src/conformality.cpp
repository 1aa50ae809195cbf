#include "qcreg/conformality.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "qcreg/errors.hpp"

namespace qcreg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double det_two_thirds(double det) {
  const double c = std::cbrt(det);
  return c * c;
}

// Calls visit(row, col, coeff) for every nonzero of the mirrored seven-point
// Laplacian restricted to rows that are not Dirichlet for `component`.
template <typename Visitor>
void for_each_laplacian_entry(const Grid& grid, const BoundaryTags& boundary, int component, Visitor&& visit) {
  const int n = grid.nodes_per_axis();
  const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
  const std::size_t count = grid.node_count();
  for (std::size_t v = 0; v < count; ++v) {
    if (boundary.is_dirichlet(v, component)) continue;
    const auto c = grid.coords(v);
    visit(v, v, -6.0 * inv_h2);
    for (int axis = 0; axis < 3; ++axis) {
      for (int dir : {-1, 1}) {
        auto nb = c;
        nb[axis] += dir;
        if (nb[axis] < 0 || nb[axis] >= n) nb[axis] = c[axis] - dir;
        visit(v, grid.index(nb[0], nb[1], nb[2]), inv_h2);
      }
    }
  }
}

}  // namespace

Mat3 jacobian_of_tet(const TetMesh& mesh, const DisplacementField& f, std::size_t tet) {
  const auto& verts = mesh.tet(tet);
  const auto& G = mesh.gradient_operator(mesh.local_type(tet));
  Eigen::Matrix<double, 3, 4> F;
  for (int v = 0; v < 4; ++v) F.col(v) = f.at(verts[v]);
  return F * G.transpose();
}

TetMatrixField jacobian_per_tet(const TetMesh& mesh, const DisplacementField& f) {
  if (f.size() != mesh.grid().node_count()) throw ShapeError("field size does not match the mesh");
  TetMatrixField out(mesh.tet_count());
  for (std::size_t t = 0; t < mesh.tet_count(); ++t) out[t] = jacobian_of_tet(mesh, f, t);
  return out;
}

double distortion_K(const Eigen::Ref<const Eigen::MatrixXd>& M) {
  const auto n = M.rows();
  if (n < 2 || M.cols() != n) throw InvalidArgument("distortion_K needs a square matrix of size >= 2");
  const double det = M.determinant();
  if (!(det > 0.0)) return kInf;
  return M.squaredNorm() / (static_cast<double>(n) * std::pow(det, 2.0 / static_cast<double>(n)));
}

double distortion_K(const Eigen::MatrixXd& M) { return distortion_K(Eigen::Ref<const Eigen::MatrixXd>(M)); }

double distortion_K(const Mat3& M) {
  const double det = M.determinant();
  if (!(det > 0.0)) return kInf;
  return M.squaredNorm() / (3.0 * det_two_thirds(det));
}

std::complex<double> beltrami_2d(const Eigen::Matrix2d& M) {
  if (!(M.determinant() > 0.0)) throw NotOrientationPreserving("Beltrami coefficient needs det(M) > 0");
  const double a = M(0, 0), b = M(0, 1), c = M(1, 0), d = M(1, 1);
  const std::complex<double> fz(0.5 * (a + d), 0.5 * (c - b));
  const std::complex<double> fzbar(0.5 * (a - d), 0.5 * (c + b));
  return fzbar / fz;
}

double split_energy_term(const Mat3& Df, const Mat3& R) {
  const double det = R.determinant();
  if (!(det > 0.0)) return kInf;
  return Df.squaredNorm() / det_two_thirds(det);
}

double tet_distortion(const Mat3& M) { return split_energy_term(M, M); }

ScalarLattice smoothness_laplacian(const Grid& grid, const BoundaryTags& boundary, int component,
                                   const ScalarLattice& u) {
  ScalarLattice out(grid.node_count(), 0.0);
  for_each_laplacian_entry(grid, boundary, component,
                           [&](std::size_t row, std::size_t col, double w) { out[row] += w * u[col]; });
  return out;
}

ScalarLattice smoothness_laplacian_transpose(const Grid& grid, const BoundaryTags& boundary, int component,
                                             const ScalarLattice& v) {
  ScalarLattice out(grid.node_count(), 0.0);
  for_each_laplacian_entry(grid, boundary, component,
                           [&](std::size_t row, std::size_t col, double w) { out[col] += w * v[row]; });
  return out;
}

double smoothness_energy(const Grid& grid, const BoundaryTags& boundary, const DisplacementField& f) {
  double sum = 0.0;
  for (int c = 0; c < 3; ++c) {
    const auto lap = smoothness_laplacian(grid, boundary, c, f.comp[c]);
    for (double x : lap) sum += x * x;
  }
  return sum;
}

EnergyBreakdown total_energy(const TetMesh& mesh, const DisplacementField& f, double sigma) {
  if (sigma < 0.0) throw InvalidArgument("sigma must be non-negative");
  EnergyBreakdown e;
  for (std::size_t t = 0; t < mesh.tet_count(); ++t) e.conformality_term += tet_distortion(jacobian_of_tet(mesh, f, t));
  if (sigma > 0.0) e.smoothness_term = smoothness_energy(mesh.grid(), BoundaryTags(mesh.grid()), f);
  e.total = e.conformality_term + 0.5 * sigma * e.smoothness_term;
  return e;
}

EnergyBreakdown augmented_lagrangian(const TetMesh& mesh, const DisplacementField& f, const TetMatrixField& R,
                                     const TetMatrixField& lambda, double mu, double sigma) {
  if (!(mu > 0.0)) throw InvalidArgument("penalty must be positive");
  if (R.size() != mesh.tet_count() || lambda.size() != mesh.tet_count()) {
    throw ShapeError("tet matrix field length does not match the mesh");
  }
  EnergyBreakdown e;
  for (std::size_t t = 0; t < mesh.tet_count(); ++t) {
    const Mat3 Df = jacobian_of_tet(mesh, f, t);
    e.conformality_term += split_energy_term(Df, R[t]);
    e.augmented_term += (R[t] - Df + lambda[t]).squaredNorm();
  }
  e.augmented_term *= 0.5 * mu;
  if (sigma > 0.0) e.smoothness_term = smoothness_energy(mesh.grid(), BoundaryTags(mesh.grid()), f);
  e.total = e.conformality_term + e.augmented_term + 0.5 * sigma * e.smoothness_term;
  return e;
}

}  // namespace qcreg
