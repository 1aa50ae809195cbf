#include "qcreg/rsub_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "qcreg/errors.hpp"

namespace qcreg {

namespace {

constexpr double kMinD = 1e-6;

// Cube root for finite v > 0: bit-level estimate refined by Newton steps.
double fast_cbrt(double v) {
  if (!(v > 0.0) || !std::isfinite(v) || v < 1e-90 || v > 1e90) return std::cbrt(v);
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  bits = bits / 3 + 0x2A9F7893782DA1CEull;
  double y;
  std::memcpy(&y, &bits, sizeof y);
  for (int i = 0; i < 4; ++i) y -= (y - v / (y * y)) / 3.0;
  // Halley step for the last bits.
  const double y3 = y * y * y;
  return y * (y3 + 2.0 * v) / (2.0 * y3 + v);
}

double two_thirds_power(double v) {
  const double c = fast_cbrt(v);
  return c * c;
}

// Root of y^2 - x y - a/D = 0; the negative one is written to avoid cancellation.
double branch(double x, double a, double D, bool negative) {
  const double s = std::sqrt(x * x + 4.0 * a / D);
  if (!negative) return x >= 0.0 ? 0.5 * (x + s) : (2.0 * a / D) / (s - x);
  return x >= 0.0 ? -(2.0 * a / D) / (x + s) : 0.5 * (x - s);
}

Vec3 branch_values(const Vec3& x, double a, double D, int negative_index) {
  Vec3 y;
  for (int i = 0; i < 3; ++i) y[i] = branch(x[i], a, D, i == negative_index);
  return y;
}

bool all_finite(const Mat3& M) { return M.allFinite(); }

}  // namespace

Svd3 svd3(const Mat3& B) {
  Eigen::JacobiSVD<Mat3> svd(B, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Svd3 out;
  out.U = svd.matrixU();
  out.V = svd.matrixV();
  out.sigma = svd.singularValues();
  out.sign_det_uv = out.U.determinant() * out.V.determinant() < 0.0 ? -1 : 1;
  return out;
}

double compute_a(const Mat3& Df, double mu) {
  if (!(mu > 0.0)) throw InvalidArgument("penalty must be positive");
  return 2.0 * Df.squaredNorm() / (3.0 * mu);
}

RtetResult solve_R_tet_detailed(const Mat3& B, double a, double D_init, const RsubOptions& options) {
  if (!all_finite(B) || !std::isfinite(a) || !std::isfinite(D_init)) {
    throw InvalidArgument("R-subproblem input is not finite");
  }
  if (a < 0.0) throw InvalidArgument("R-subproblem needs a >= 0");
  if (!(D_init > 0.0)) throw InvalidArgument("R-subproblem needs D_init > 0");
  if (!(options.tolerance > 0.0)) throw InvalidArgument("R-subproblem tolerance must be positive");

  RtetResult res;
  res.svd = svd3(B);
  const Vec3& x = res.svd.sigma;
  if (res.svd.sign_det_uv < 0) {
    // Smallest singular value; first index on ties.
    res.negative_index = 0;
    for (int i = 1; i < 3; ++i) {
      if (x[i] < x[res.negative_index]) res.negative_index = i;
    }
  }

  if (a == 0.0) {
    // No barrier: sign-corrected projection, kept strictly invertible.
    const double floor = std::max(1e-12, 1e-12 * x[0]);
    for (int i = 0; i < 3; ++i) res.y[i] = std::max(x[i], floor);
    if (res.negative_index >= 0) res.y[res.negative_index] = -res.y[res.negative_index];
    res.D = two_thirds_power(std::abs(res.y.prod()));
    if (options.keep_history) res.D_history.push_back(res.D);
    res.R = res.svd.U * res.y.asDiagonal() * res.svd.V.transpose();
    return res;
  }

  double D = D_init;
  if (options.keep_history) res.D_history.push_back(D);
  for (res.iterations = 0; res.iterations < options.max_iter;) {
    const Vec3 y = branch_values(x, a, D, res.negative_index);
    const double F = two_thirds_power(std::abs(y.prod()));
    const double next = 0.5 * (D + F);
    ++res.iterations;
    if (options.keep_history) res.D_history.push_back(next);
    const double step = std::abs(next - D);
    D = next;
    if (step < options.tolerance * std::max(1.0, D)) break;
  }
  res.D = D;
  res.y = branch_values(x, a, D, res.negative_index);
  res.R = res.svd.U * res.y.asDiagonal() * res.svd.V.transpose();
  if (!(res.R.determinant() > 0.0) || !all_finite(res.R)) {
    throw InvalidArgument("R-subproblem produced a non-invertible matrix");
  }
  return res;
}

Mat3 solve_R_tet(const Mat3& B, double a, double D_init, double eps) {
  RsubOptions opt;
  opt.tolerance = eps;
  return solve_R_tet_detailed(B, a, D_init, opt).R;
}

double rsub_objective(const Mat3& R, const Mat3& Df, const Mat3& lambda, double mu) {
  const double det = R.determinant();
  if (!(det > 0.0)) return std::numeric_limits<double>::infinity();
  return Df.squaredNorm() / two_thirds_power(det) + 0.5 * mu * (R - Df + lambda).squaredNorm();
}

double rsub_scaled_objective(const Vec3& y, const Vec3& x, double a) {
  const double p = std::abs(y.prod());
  if (!(p > 0.0)) return std::numeric_limits<double>::infinity();
  return 1.5 * a / two_thirds_power(p) + 0.5 * (x - y).squaredNorm();
}

double rsub_el_residual(const Vec3& y, const Vec3& x, double a) {
  const double D = two_thirds_power(std::abs(y.prod()));
  double r = 0.0;
  for (int i = 0; i < 3; ++i) r = std::max(r, std::abs(y[i] - (a / D) / y[i] - x[i]));
  return r;
}

double initial_D(const Mat3& Df) {
  const double det = Df.determinant();
  if (!(det > 0.0)) return kMinD;
  return std::max(kMinD, two_thirds_power(det));
}

TetMatrixField solve_R_field(const TetMesh& mesh, const TetMatrixField& Df, const TetMatrixField& lambda, double mu,
                             const TetMatrixField& R_prev, const RsubOptions& options) {
  const std::size_t n = mesh.tet_count();
  if (Df.size() != n || lambda.size() != n || (!R_prev.empty() && R_prev.size() != n)) {
    throw ShapeError("tet matrix field length does not match the mesh");
  }
  if (!(mu > 0.0)) throw InvalidArgument("penalty must be positive");
  TetMatrixField R(n);
  for (std::size_t t = 0; t < n; ++t) {
    double D0;
    if (R_prev.empty()) {
      D0 = initial_D(Df[t]);
    } else {
      const double det = R_prev[t].determinant();
      if (!(det > 0.0)) throw InvalidR("previous R has non-positive determinant on tet " + std::to_string(t), t);
      D0 = two_thirds_power(det);
    }
    try {
      R[t] = solve_R_tet_detailed(Df[t] - lambda[t], compute_a(Df[t], mu), D0, options).R;
    } catch (const InvalidArgument& e) {
      throw InvalidR(std::string(e.what()) + " (tet " + std::to_string(t) + ")", t);
    }
  }
  return R;
}

}  // namespace qcreg
