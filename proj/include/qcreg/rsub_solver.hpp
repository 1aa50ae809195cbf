#pragma once

#include <vector>

#include "qcreg/conformality.hpp"
#include "qcreg/grid.hpp"

namespace qcreg {

/// B = U diag(sigma) V^T with sigma descending and non-negative.
struct Svd3 {
  Mat3 U;
  Vec3 sigma;
  Mat3 V;
  int sign_det_uv = 1;
};

Svd3 svd3(const Mat3& B);

/// 2 |Df|_F^2 / (3 mu).
double compute_a(const Mat3& Df, double mu);

struct RsubOptions {
  double tolerance = 1e-12;  // on |D_{n+1} - D_n|, relative once D > 1
  int max_iter = 500;
  bool keep_history = false;  // fill RtetResult::D_history
};

struct RtetResult {
  Mat3 R;
  Vec3 y;               // singular values of R in B's singular frame (one may be negative)
  Svd3 svd;             // decomposition of B
  double D = 0.0;       // final fixed-point value
  int iterations = 0;
  std::vector<double> D_history;  // D_1 (= D_init), D_2, ...
  int negative_index = -1;        // which y_i took the negative root, -1 if none
};

/// Fixed-point solve of min_{det R > 0} c/det(R)^(2/3) + (mu/2)|R - B|^2 written
/// in the scaled form with a = 2c/(3mu). Throws InvalidArgument on non-finite
/// input, a < 0 or D_init <= 0.
RtetResult solve_R_tet_detailed(const Mat3& B, double a, double D_init, const RsubOptions& options = {});
Mat3 solve_R_tet(const Mat3& B, double a, double D_init, double eps = 1e-12);

/// |Df|^2 / det(R)^(2/3) + (mu/2)|R - Df + lambda|^2; +inf unless det(R) > 0.
double rsub_objective(const Mat3& R, const Mat3& Df, const Mat3& lambda, double mu);

/// Scaled objective in the singular frame: 3a / (2 |y1 y2 y3|^(2/3)) + (1/2) sum (x_i - y_i)^2.
double rsub_scaled_objective(const Vec3& y, const Vec3& x, double a);

/// Euler-Lagrange residual max_i |y_i - (a/D) / y_i - x_i| with D = |y1 y2 y3|^(2/3).
double rsub_el_residual(const Vec3& y, const Vec3& x, double a);

/// Starting value for the first outer iteration (no previous R): det(Df)^(2/3)
/// clamped below by 1e-6.
double initial_D(const Mat3& Df);

/// Per-tet R-subproblem. An empty R_prev selects initial_D for every tet.
/// Errors name the offending tet.
TetMatrixField solve_R_field(const TetMesh& mesh, const TetMatrixField& Df, const TetMatrixField& lambda, double mu,
                             const TetMatrixField& R_prev, const RsubOptions& options = {});

}  // namespace qcreg
