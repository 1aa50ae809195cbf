#include "qcreg/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include <Eigen/Dense>

#include "qcreg/errors.hpp"

namespace qcreg {

Grid::Grid(int levels) : levels_(levels), n_(0), h_(0.0) {
  if (levels < 1) {
    throw InvalidArgument("grid levels must be >= 1, got " + std::to_string(levels));
  }
  if (levels > 9) {
    throw InvalidArgument("grid levels > 9 exceed the supported lattice size");
  }
  n_ = (1 << levels) + 1;
  h_ = std::ldexp(1.0, -levels);
}

bool Grid::on_boundary(std::size_t node) const {
  const auto c = coords(node);
  for (int v : c) {
    if (v == 0 || v == n_ - 1) return true;
  }
  return false;
}

Grid build_grid(int levels) { return Grid(levels); }

DisplacementField DisplacementField::identity(const Grid& grid) {
  DisplacementField f;
  const std::size_t count = grid.node_count();
  for (auto& c : f.comp) c.assign(count, 0.0);
  for (std::size_t v = 0; v < count; ++v) f.set(v, grid.position(v));
  return f;
}

double max_abs_difference(const DisplacementField& a, const DisplacementField& b) {
  if (a.size() != b.size()) throw ShapeError("displacement fields differ in size");
  double m = 0.0;
  for (int c = 0; c < 3; ++c) {
    for (std::size_t v = 0; v < a.size(); ++v) m = std::max(m, std::abs(a.comp[c][v] - b.comp[c][v]));
  }
  return m;
}

double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).dot((c - a).cross(d - a)) / 6.0;
}

namespace {

// Cell corners x1..x8, x fastest.
constexpr std::array<std::array<int, 3>, 8> kCorner = {{
    {0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0},
    {0, 0, 1}, {1, 0, 1}, {0, 1, 1}, {1, 1, 1},
}};

// 1-based corner labels of the six tets.
constexpr std::array<std::array<int, 4>, 6> kTetCorners = {{
    {3, 7, 4, 5}, {3, 1, 4, 5}, {4, 1, 2, 5},
    {7, 4, 5, 8}, {4, 5, 8, 6}, {4, 2, 5, 6},
}};

}  // namespace

TetMesh::TetMesh(const Grid& grid) : grid_(grid) {
  const double h = grid.spacing();
  volume_ = h * h * h / 6.0;

  for (int t = 0; t < kTetsPerCell; ++t) {
    std::array<std::array<int, 3>, 4> verts{};
    for (int v = 0; v < 4; ++v) verts[v] = kCorner[kTetCorners[t][v] - 1];
    auto pos = [&](int v) { return Vec3(verts[v][0] * h, verts[v][1] * h, verts[v][2] * h); };
    if (signed_volume(pos(0), pos(1), pos(2), pos(3)) < 0.0) std::swap(verts[2], verts[3]);
    local_vertices_[t] = verts;

    // Gradient operator from the inverse of the homogeneous vertex matrix.
    Eigen::Matrix4d X;
    for (int v = 0; v < 4; ++v) {
      X.col(v) << pos(v), 1.0;
    }
    const Eigen::Matrix4d Xinv = X.inverse();
    gradient_ops_[t] = Xinv.leftCols<3>().transpose();
  }

  const int nc = grid.cells_per_axis();
  tets_.reserve(grid.cell_count() * kTetsPerCell);
  for (int ck = 0; ck < nc; ++ck) {
    for (int cj = 0; cj < nc; ++cj) {
      for (int ci = 0; ci < nc; ++ci) {
        for (int t = 0; t < kTetsPerCell; ++t) {
          std::array<std::uint32_t, 4> tet{};
          for (int v = 0; v < 4; ++v) {
            const auto& o = local_vertices_[t][v];
            tet[v] = static_cast<std::uint32_t>(grid.index(ci + o[0], cj + o[1], ck + o[2]));
          }
          tets_.push_back(tet);
        }
      }
    }
  }
}

TetMesh tetrahedralize(const Grid& grid) { return TetMesh(grid); }

double LandmarkSet::max_snap_displacement() const {
  double m = 0.0;
  for (const auto& p : pairs) m = std::max(m, (p.source - p.raw_source).norm());
  return m;
}

namespace {

bool inside_unit_cube(const Vec3& p) {
  return p.allFinite() && (p.array() >= 0.0).all() && (p.array() <= 1.0).all();
}

}  // namespace

std::size_t nearest_node(const Grid& grid, const Vec3& p) {
  std::array<int, 3> c{};
  for (int a = 0; a < 3; ++a) {
    // ceil(t - 1/2) rounds half-way values down.
    const double t = p[a] / grid.spacing();
    c[a] = std::clamp(static_cast<int>(std::ceil(t - 0.5)), 0, grid.nodes_per_axis() - 1);
  }
  return grid.index(c[0], c[1], c[2]);
}

LandmarkSet snap_landmarks(const Grid& grid, std::span<const RawPair> raw_pairs) {
  std::vector<std::size_t> offenders;
  for (std::size_t i = 0; i < raw_pairs.size(); ++i) {
    if (!inside_unit_cube(raw_pairs[i].first) || !inside_unit_cube(raw_pairs[i].second)) offenders.push_back(i);
  }
  if (!offenders.empty()) {
    std::ostringstream msg;
    msg << "landmark coordinates outside the unit cube at pair(s):";
    for (auto i : offenders) msg << ' ' << i;
    throw OutOfDomain(msg.str());
  }

  LandmarkSet set;
  set.pairs.reserve(raw_pairs.size());
  std::unordered_map<std::size_t, std::size_t> seen;
  for (std::size_t i = 0; i < raw_pairs.size(); ++i) {
    const std::size_t node = nearest_node(grid, raw_pairs[i].first);
    auto [it, inserted] = seen.emplace(node, i);
    if (!inserted) {
      std::ostringstream msg;
      msg << "landmarks " << it->second << " and " << i << " snap to the same grid node " << node;
      throw DuplicateLandmark(msg.str(), it->second, i);
    }
    set.pairs.push_back({grid.position(node), raw_pairs[i].second, node, raw_pairs[i].first});
  }
  return set;
}

BoundaryTags::BoundaryTags(const Grid& grid) : grid_(grid) {
  const std::size_t count = grid.node_count();
  const int last = grid.nodes_per_axis() - 1;
  for (int c = 0; c < 3; ++c) {
    kind_[c].assign(count, BoundaryKind::Interior);
    for (std::size_t v = 0; v < count; ++v) {
      const auto ijk = grid.coords(v);
      if (ijk[c] == 0 || ijk[c] == last) {
        kind_[c][v] = BoundaryKind::Dirichlet;
      } else if (grid.on_boundary(v)) {
        kind_[c][v] = BoundaryKind::Neumann;
      }
    }
  }
}

double BoundaryTags::value(std::size_t node, int component) const {
  const auto ijk = grid_.coords(node);
  return ijk[component] == 0 ? 0.0 : 1.0;
}

}  // namespace qcreg
