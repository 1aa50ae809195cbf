#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "qcreg/errors.hpp"
#include "qcreg/rsub_solver.hpp"

using namespace qcreg;

namespace {

Mat3 random_matrix(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Mat3 M;
  for (int i = 0; i < 9; ++i) M(i / 3, i % 3) = n(rng);
  return M;
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

// Minimum of the scaled objective over a box of the octant with signs s,
// by repeated grid refinement around the best point.
double grid_minimum(const Vec3& x, double a, const Vec3& s) {
  Vec3 lo, hi;
  for (int i = 0; i < 3; ++i) {
    lo[i] = 1e-6;
    hi[i] = std::abs(x[i]) + 2.0 * std::cbrt(a) + 2.0;
  }
  double best = std::numeric_limits<double>::infinity();
  Vec3 arg = 0.5 * (lo + hi);
  const int N = 40;
  for (int round = 0; round < 8; ++round) {
    for (int i = 0; i <= N; ++i) {
      for (int j = 0; j <= N; ++j) {
        for (int k = 0; k <= N; ++k) {
          const Vec3 t(i / double(N), j / double(N), k / double(N));
          const Vec3 m = lo + t.cwiseProduct(hi - lo);
          const Vec3 y = s.cwiseProduct(m);
          const double v = rsub_scaled_objective(y, x, a);
          if (v < best) {
            best = v;
            arg = m;
          }
        }
      }
    }
    const Vec3 w = 2.0 * (hi - lo) / N;
    lo = (arg - w).cwiseMax(1e-9);
    hi = arg + w;
  }
  return best;
}

}  // namespace

TEST_CASE("svd3 reconstructs the matrix") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const Mat3 B = random_matrix(rng);
    const Svd3 s = svd3(B);
    CHECK((s.U * s.sigma.asDiagonal() * s.V.transpose() - B).norm() < 1e-12);
    CHECK(s.sigma[0] >= s.sigma[1]);
    CHECK(s.sigma[1] >= s.sigma[2]);
    CHECK(s.sigma[2] >= 0.0);
    CHECK((s.U.transpose() * s.U - Mat3::Identity()).norm() < 1e-12);
    CHECK((s.V.transpose() * s.V - Mat3::Identity()).norm() < 1e-12);
    CHECK(s.sign_det_uv == (B.determinant() < 0 ? -1 : 1));
  }
}

TEST_CASE("compute_a") {
  CHECK(compute_a(Mat3::Identity().eval(), 2.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(compute_a(Mat3::Identity().eval(), 0.0), InvalidArgument);
}

TEST_CASE("fixed point contracts with rate one half and solves the stationarity equations") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ua(1e-3, 10.0);
  RsubOptions opt;
  opt.keep_history = true;
  double worst_ratio = 0.0;
  double worst_res = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Mat3 B = random_matrix(rng);
    const double a = ua(rng);
    const RtetResult r = solve_R_tet_detailed(B, a, initial_D(B), opt);
    const auto& D = r.D_history;
    for (std::size_t n = 2; n + 1 < D.size(); ++n) {
      const double prev = std::abs(D[n] - D[n - 1]);
      if (prev < 1e-13 * std::max(1.0, D[n])) break;
      worst_ratio = std::max(worst_ratio, std::abs(D[n + 1] - D[n]) / prev);
    }
    worst_res = std::max(worst_res, rsub_el_residual(r.y, r.svd.sigma, a));
    CHECK(r.R.determinant() > 0.0);
  }
  CHECK(worst_ratio <= 0.5 + 1e-9);
  CHECK(worst_res < 1e-10);
}

TEST_CASE("R is optimal among perturbations and on a brute-force grid") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 20; ++trial) {
    const Mat3 Df = random_matrix(rng);
    const Mat3 lambda = 0.3 * random_matrix(rng);
    const double mu = log_uniform(rng, 1.0, 100.0);
    const Mat3 B = Df - lambda;
    const double a = compute_a(Df, mu);
    const RtetResult r = solve_R_tet_detailed(B, a, initial_D(B));
    const double best = rsub_objective(r.R, Df, lambda, mu);
    REQUIRE(std::isfinite(best));
    for (int k = 0; k < 1000; ++k) {
      const double scale = std::pow(10.0, -3.0 + 3.0 * (k % 4) / 3.0);
      const Mat3 P = r.R + scale * random_matrix(rng);
      CHECK(rsub_objective(P, Df, lambda, mu) >= best - 1e-12 * std::abs(best));
    }
    Vec3 signs(1, 1, 1);
    if (r.negative_index >= 0) signs[r.negative_index] = -1;
    const double scaled = rsub_scaled_objective(r.y, r.svd.sigma, a);
    CHECK(scaled == doctest::Approx(best / mu).epsilon(1e-10));
    CHECK(scaled <= grid_minimum(r.svd.sigma, a, signs) + 1e-4);
  }
}

TEST_CASE("a = 0 gives the sign-corrected projection") {
  Mat3 B = Mat3::Identity();
  B(2, 2) = -0.5;
  const RtetResult r = solve_R_tet_detailed(B, 0.0, 1.0);
  CHECK(r.R.determinant() > 0.0);
  CHECK(r.negative_index == 2);
  Mat3 expected = Mat3::Identity();
  expected(2, 2) = 0.5;
  CHECK((r.R - expected).norm() < 1e-12);
  CHECK((solve_R_tet(Mat3::Identity(), 0.0, 1.0) - Mat3::Identity()).norm() < 1e-15);
}

TEST_CASE("identity with a small barrier is a scaled identity") {
  // y - (a/D)/y = 1 with D = y^2 gives y^4 - y^3 - a = 0.
  const double a = 0.3;
  const Mat3 R = solve_R_tet(Mat3::Identity(), a, 1.0);
  const double y = R(0, 0);
  CHECK(std::abs(y * y * y * y - y * y * y - a) < 1e-10);
  CHECK((R - y * Mat3::Identity()).norm() < 1e-12);
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(solve_R_tet(Mat3::Identity(), -1.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(solve_R_tet(Mat3::Identity(), 1.0, 0.0), InvalidArgument);
  Mat3 nanB = Mat3::Identity();
  nanB(0, 1) = std::nan("");
  CHECK_THROWS_AS(solve_R_tet(nanB, 1.0, 1.0), InvalidArgument);
}

TEST_CASE("initial D") {
  CHECK(initial_D((2.0 * Mat3::Identity()).eval()) == doctest::Approx(4.0).epsilon(1e-12));
  Mat3 F = Mat3::Identity();
  F(0, 0) = -1;
  CHECK(initial_D(F) == 1e-6);
}

TEST_CASE("field solve wraps errors with the tet index") {
  const Grid g(1);
  const TetMesh m(g);
  TetMatrixField Df(m.tet_count(), Mat3::Identity());
  TetMatrixField lam(m.tet_count(), Mat3::Zero());
  const TetMatrixField R = solve_R_field(m, Df, lam, 30.0, {});
  REQUIRE(R.size() == m.tet_count());
  for (const auto& M : R) CHECK(M.determinant() > 0.0);
  TetMatrixField bad_prev(m.tet_count(), Mat3::Identity());
  bad_prev[5] = -Mat3::Identity();
  try {
    solve_R_field(m, Df, lam, 30.0, bad_prev);
    FAIL("expected InvalidR");
  } catch (const InvalidR& e) {
    CHECK(e.tet() == 5);
  }
  CHECK_THROWS_AS(solve_R_field(m, TetMatrixField(3, Mat3::Identity()), lam, 30.0, {}), ShapeError);
}
