#include <doctest.h>

#include <random>
#include <set>

#include <Eigen/Dense>

#include "qcreg/errors.hpp"
#include "qcreg/grid.hpp"

using namespace qcreg;

TEST_CASE("grid sizes and spacing") {
  for (int J = 1; J <= 5; ++J) {
    const Grid g = build_grid(J);
    CHECK(g.nodes_per_axis() == (1 << J) + 1);
    CHECK(g.spacing() == doctest::Approx(1.0 / (1 << J)));
    CHECK(g.node_count() == static_cast<std::size_t>(g.nodes_per_axis()) * g.nodes_per_axis() * g.nodes_per_axis());
  }
  CHECK_THROWS_AS(build_grid(0), InvalidArgument);
  CHECK_THROWS_AS(build_grid(10), InvalidArgument);
}

TEST_CASE("node numbering is x fastest") {
  const Grid g(2);
  CHECK(g.index(1, 0, 0) == 1);
  CHECK(g.index(0, 1, 0) == 5);
  CHECK(g.index(0, 0, 1) == 25);
  for (std::size_t v = 0; v < g.node_count(); ++v) {
    const auto c = g.coords(v);
    CHECK(g.index(c[0], c[1], c[2]) == v);
  }
  CHECK(g.position(g.index(4, 2, 1)).isApprox(Vec3(1.0, 0.5, 0.25)));
}

TEST_CASE("six positive tets per cell filling the cube") {
  for (int J = 1; J <= 3; ++J) {
    const Grid g(J);
    const TetMesh m = tetrahedralize(g);
    CHECK(m.tet_count() == 6 * g.cell_count());
    const double h = g.spacing();
    double total = 0.0;
    for (std::size_t t = 0; t < m.tet_count(); ++t) {
      const auto& v = m.tet(t);
      const double vol = signed_volume(g.position(v[0]), g.position(v[1]), g.position(v[2]), g.position(v[3]));
      CHECK(vol == doctest::Approx(h * h * h / 6.0));
      total += vol;
    }
    CHECK(total == doctest::Approx(1.0));
    CHECK(m.tet_volume() == doctest::Approx(h * h * h / 6.0));
  }
}

TEST_CASE("all tets of a cell share the main diagonal") {
  const Grid g(1);
  const TetMesh m(g);
  const std::size_t x4 = g.index(1, 1, 0);
  const std::size_t x5 = g.index(0, 0, 1);
  for (std::size_t t = 0; t < TetMesh::kTetsPerCell; ++t) {
    std::set<std::size_t> s(m.tet(t).begin(), m.tet(t).end());
    CHECK(s.size() == 4);
    CHECK(s.count(x4) == 1);
    CHECK(s.count(x5) == 1);
  }
}

TEST_CASE("gradient operator reproduces affine gradients") {
  const Grid g(2);
  const TetMesh m(g);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  const Vec3 a(n(rng), n(rng), n(rng));
  const double b = n(rng);
  for (std::size_t t = 0; t < m.tet_count(); ++t) {
    Eigen::Vector4d vals;
    for (int i = 0; i < 4; ++i) vals[i] = a.dot(g.position(m.tet(t)[i])) + b;
    const Vec3 grad = m.gradient_operator(m.local_type(t)) * vals;
    CHECK((grad - a).norm() < 1e-12);
  }
}

TEST_CASE("snapping moves sources to the nearest node") {
  const Grid g(2);
  const std::vector<RawPair> raw{{Vec3(0.6, 0.6, 0.6), Vec3(0.3, 0.3, 0.3)}};
  const LandmarkSet s = snap_landmarks(g, raw);
  REQUIRE(s.size() == 1);
  CHECK(s.pairs[0].source.isApprox(Vec3(0.5, 0.5, 0.5)));
  CHECK(s.pairs[0].target.isApprox(Vec3(0.3, 0.3, 0.3)));
  CHECK(s.pairs[0].node == g.index(2, 2, 2));
  CHECK(s.max_snap_displacement() == doctest::Approx(std::sqrt(3.0) * 0.1));

  // Ties go to the smaller lattice coordinate.
  const std::vector<RawPair> tie{{Vec3(0.125, 0.0, 0.0), Vec3(0.1, 0.0, 0.0)}};
  CHECK(snap_landmarks(g, tie).pairs[0].node == g.index(0, 0, 0));

  // Brute-force nearest node.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Vec3 p(u(rng), u(rng), u(rng));
    const std::size_t v = nearest_node(g, p);
    for (std::size_t w = 0; w < g.node_count(); ++w) CHECK((g.position(v) - p).norm() <= (g.position(w) - p).norm() + 1e-15);
  }
}

TEST_CASE("snapping errors") {
  const Grid g(2);
  const std::vector<RawPair> outside{{Vec3(1.2, 0.5, 0.5), Vec3(0.5, 0.5, 0.5)}};
  CHECK_THROWS_AS(snap_landmarks(g, outside), OutOfDomain);
  const std::vector<RawPair> dup{{Vec3(0.5, 0.5, 0.5), Vec3(0.4, 0.5, 0.5)}, {Vec3(0.51, 0.5, 0.5), Vec3(0.6, 0.5, 0.5)}};
  CHECK_THROWS_AS(snap_landmarks(g, dup), DuplicateLandmark);
}

TEST_CASE("boundary tags") {
  const Grid g(2);
  const BoundaryTags b(g);
  CHECK(b.kind(g.index(2, 2, 2), 0) == BoundaryKind::Interior);
  CHECK(b.is_dirichlet(g.index(0, 2, 2), 0));
  CHECK(b.value(g.index(0, 2, 2), 0) == 0.0);
  CHECK(b.is_dirichlet(g.index(4, 2, 2), 0));
  CHECK(b.value(g.index(4, 2, 2), 0) == 1.0);
  CHECK(b.kind(g.index(0, 2, 2), 1) == BoundaryKind::Neumann);
  CHECK(b.is_dirichlet(g.index(2, 4, 2), 1));
  CHECK(b.is_dirichlet(g.index(2, 2, 0), 2));
  CHECK_FALSE(b.is_dirichlet(g.index(2, 2, 0), 0));
}

TEST_CASE("identity field and max difference") {
  const Grid g(2);
  DisplacementField f = DisplacementField::identity(g);
  for (std::size_t v = 0; v < g.node_count(); ++v) CHECK(f.at(v) == g.position(v));
  DisplacementField h = f;
  h.comp[1][7] += 0.25;
  CHECK(max_abs_difference(f, h) == 0.25);
}
