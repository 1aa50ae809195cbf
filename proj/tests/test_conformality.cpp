#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "qcreg/conformality.hpp"
#include "qcreg/errors.hpp"

using namespace qcreg;

namespace {

Mat3 random_positive(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  for (;;) {
    Mat3 M;
    for (int i = 0; i < 9; ++i) M(i / 3, i % 3) = n(rng);
    if (M.determinant() > 0.05) return M;
  }
}

DisplacementField affine_field(const Grid& g, const Mat3& A, const Vec3& b) {
  DisplacementField f = DisplacementField::identity(g);
  for (std::size_t v = 0; v < g.node_count(); ++v) f.set(v, A * g.position(v) + b);
  return f;
}

}  // namespace

TEST_CASE("K of conformal maps is 1") {
  CHECK(distortion_K(Mat3::Identity().eval()) == doctest::Approx(1.0));
  const Mat3 rot = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
  CHECK(distortion_K((2.5 * rot).eval()) == doctest::Approx(1.0));
}

TEST_CASE("K against singular values") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const Mat3 M = random_positive(rng);
    Eigen::JacobiSVD<Mat3> svd(M);
    const Vec3 s = svd.singularValues();
    const double oracle = s.squaredNorm() / (3.0 * std::pow(s.prod(), 2.0 / 3.0));
    CHECK(distortion_K(M) == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(distortion_K(M) >= 1.0 - 1e-12);
    CHECK(distortion_K((3.0 * M).eval()) == doctest::Approx(distortion_K(M)).epsilon(1e-12));
  }
}

TEST_CASE("K is infinite for orientation reversal") {
  Mat3 R = Mat3::Identity();
  R(0, 0) = -1.0;
  CHECK(std::isinf(distortion_K(R)));
  CHECK(std::isinf(distortion_K(Mat3::Zero().eval())));
  CHECK(std::isinf(tet_distortion(R)));
}

TEST_CASE("K in n dimensions") {
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(4, 4);
  CHECK(distortion_K(I) == doctest::Approx(1.0));
  Eigen::MatrixXd D = Eigen::MatrixXd::Identity(4, 4);
  D(0, 0) = 16.0;
  // (1/4)(256 + 3) / 16^(2/4)
  CHECK(distortion_K(D) == doctest::Approx(259.0 / 16.0));
}

TEST_CASE("2D K matches the Beltrami coefficient") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n;
  int checked = 0;
  while (checked < 1000) {
    Eigen::Matrix2d M;
    M << n(rng), n(rng), n(rng), n(rng);
    if (M.determinant() <= 1e-3) continue;
    ++checked;
    const double mu2 = std::norm(beltrami_2d(M));
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(M);
    const double s1 = svd.singularValues()[0], s2 = svd.singularValues()[1];
    // |mu| = (s1 - s2) / (s1 + s2) for an orientation-preserving linear map.
    CHECK(std::sqrt(mu2) == doctest::Approx((s1 - s2) / (s1 + s2)).epsilon(1e-10));
    const double K = distortion_K(Eigen::MatrixXd(M));
    CHECK(std::abs(K - (1 + mu2) / (1 - mu2)) / K < 1e-12);
  }
  Eigen::Matrix2d F;
  F << 1, 0, 0, -1;
  CHECK_THROWS_AS(beltrami_2d(F), NotOrientationPreserving);
}

TEST_CASE("Beltrami coefficient of a stretch") {
  Eigen::Matrix2d M;
  M << 2, 0, 0, 1;  // f(z) = (3z + zbar)/2
  const auto mu = beltrami_2d(M);
  CHECK(mu.real() == doctest::Approx(1.0 / 3.0));
  CHECK(mu.imag() == doctest::Approx(0.0));
}

TEST_CASE("Jacobians of an affine map") {
  const Grid g(2);
  const TetMesh m(g);
  std::mt19937_64 rng(13);
  const Mat3 A = random_positive(rng);
  const Vec3 b(0.1, -0.2, 0.3);
  const TetMatrixField Df = jacobian_per_tet(m, affine_field(g, A, b));
  REQUIRE(Df.size() == m.tet_count());
  for (const auto& J : Df) CHECK((J - A).norm() < 1e-12);
  CHECK((jacobian_of_tet(m, affine_field(g, A, b), 17) - A).norm() < 1e-12);
}

TEST_CASE("split energy term") {
  std::mt19937_64 rng(14);
  const Mat3 D = random_positive(rng);
  const Mat3 R = random_positive(rng);
  CHECK(split_energy_term(D, R) == doctest::Approx(D.squaredNorm() / std::pow(R.determinant(), 2.0 / 3.0)));
  CHECK(split_energy_term(D, D) == doctest::Approx(3.0 * distortion_K(D)));
  CHECK(std::isinf(split_energy_term(D, (-R).eval())));
}

TEST_CASE("energy of the identity") {
  const Grid g(3);
  const TetMesh m(g);
  const auto id = DisplacementField::identity(g);
  const EnergyBreakdown e = total_energy(m, id, 2.0);
  CHECK(e.conformality_term == doctest::Approx(3.0 * m.tet_count()));
  CHECK(e.smoothness_term == doctest::Approx(0.0));
  CHECK(e.total == doctest::Approx(3.0 * m.tet_count()));
}

TEST_CASE("augmented Lagrangian reduces to the energy at R = Df, lambda = 0") {
  const Grid g(2);
  const TetMesh m(g);
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(-0.02, 0.02);
  DisplacementField f = DisplacementField::identity(g);
  for (auto& c : f.comp) {
    for (auto& x : c) x += u(rng);
  }
  const TetMatrixField Df = jacobian_per_tet(m, f);
  const TetMatrixField zero(m.tet_count(), Mat3::Zero());
  const double sigma = 0.5;
  CHECK(augmented_lagrangian(m, f, Df, zero, 40.0, sigma).total == doctest::Approx(total_energy(m, f, sigma).total));

  // Independent sum of the penalty term.
  TetMatrixField lam(m.tet_count(), Mat3::Constant(0.01));
  double pen = 0.0;
  for (std::size_t t = 0; t < m.tet_count(); ++t) pen += 0.5 * 40.0 * (Df[t] + lam[t] - Df[t]).squaredNorm();
  CHECK(augmented_lagrangian(m, f, Df, lam, 40.0, 0.0).total ==
        doctest::Approx(total_energy(m, f, 0.0).total + pen));
}

TEST_CASE("Laplacian transpose is the adjoint") {
  const Grid g(2);
  const BoundaryTags b(g);
  std::mt19937_64 rng(16);
  std::normal_distribution<double> n;
  for (int c = 0; c < 3; ++c) {
    ScalarLattice u(g.node_count()), v(g.node_count());
    for (auto& x : u) x = n(rng);
    for (auto& x : v) x = n(rng);
    const auto Lu = smoothness_laplacian(g, b, c, u);
    const auto Ltv = smoothness_laplacian_transpose(g, b, c, v);
    double a = 0.0, d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      a += Lu[i] * v[i];
      d += u[i] * Ltv[i];
    }
    CHECK(a == doctest::Approx(d).epsilon(1e-12));
  }
}

TEST_CASE("Laplacian of a quadratic at an interior node") {
  const Grid g(3);
  const BoundaryTags b(g);
  ScalarLattice u(g.node_count());
  for (std::size_t v = 0; v < g.node_count(); ++v) u[v] = g.position(v).squaredNorm();
  const auto L = smoothness_laplacian(g, b, 0, u);
  CHECK(std::abs(L[g.index(4, 4, 4)]) == doctest::Approx(6.0));
  CHECK(L[g.index(0, 4, 4)] == 0.0);  // Dirichlet row of component 0
}
