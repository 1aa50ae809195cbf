#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace qcreg {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Nodal values of one scalar quantity on a Grid (one component of the map,
/// a residual, a right-hand side).
using ScalarLattice = std::vector<double>;

/// Regular (2^J + 1)^3 node lattice over the unit cube.
///
/// Nodes are numbered with x fastest: index = i + n*(j + n*k).
class Grid {
 public:
  /// Throws InvalidArgument when levels < 1.
  explicit Grid(int levels);

  int levels() const { return levels_; }
  int nodes_per_axis() const { return n_; }
  int cells_per_axis() const { return n_ - 1; }
  double spacing() const { return h_; }
  std::size_t node_count() const { return static_cast<std::size_t>(n_) * n_ * n_; }
  std::size_t cell_count() const {
    return static_cast<std::size_t>(n_ - 1) * (n_ - 1) * (n_ - 1);
  }

  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(n_) * (j + static_cast<std::size_t>(n_) * k);
  }
  std::array<int, 3> coords(std::size_t node) const {
    const auto n = static_cast<std::size_t>(n_);
    return {static_cast<int>(node % n), static_cast<int>((node / n) % n), static_cast<int>(node / (n * n))};
  }
  Vec3 position(std::size_t node) const {
    const auto c = coords(node);
    return {c[0] * h_, c[1] * h_, c[2] * h_};
  }
  bool on_boundary(std::size_t node) const;

  bool operator==(const Grid& other) const { return levels_ == other.levels_; }

 private:
  int levels_;
  int n_;
  double h_;
};

/// Throws InvalidArgument for J < 1.
Grid build_grid(int levels);

/// The map f sampled at grid nodes, stored as one lattice per component.
struct DisplacementField {
  std::array<ScalarLattice, 3> comp;

  std::size_t size() const { return comp[0].size(); }
  Vec3 at(std::size_t node) const { return {comp[0][node], comp[1][node], comp[2][node]}; }
  void set(std::size_t node, const Vec3& v) {
    comp[0][node] = v.x();
    comp[1][node] = v.y();
    comp[2][node] = v.z();
  }

  static DisplacementField identity(const Grid& grid);
};

/// Largest per-node, per-component absolute difference.
double max_abs_difference(const DisplacementField& a, const DisplacementField& b);

/// Six-tetrahedra-per-cell tetrahedralization of a Grid.
///
/// With the cell corners numbered x1..x8 lexicographically (x fastest,
/// x1 = (0,0,0), x8 = (1,1,1)), cell tets are {x3,x7,x4,x5}, {x3,x1,x4,x5},
/// {x4,x1,x2,x5}, {x7,x4,x5,x8}, {x4,x5,x8,x6}, {x4,x2,x5,x6}. All of them
/// share the diagonal x4-x5 and each holds three axis-parallel edges. Vertex
/// order inside a tet is adjusted so the identity configuration has positive
/// signed volume.
class TetMesh {
 public:
  static constexpr int kTetsPerCell = 6;

  explicit TetMesh(const Grid& grid);

  const Grid& grid() const { return grid_; }
  std::size_t tet_count() const { return tets_.size(); }
  const std::array<std::uint32_t, 4>& tet(std::size_t t) const { return tets_[t]; }
  std::span<const std::array<std::uint32_t, 4>> tets() const { return tets_; }
  std::size_t cell_of(std::size_t t) const { return t / kTetsPerCell; }
  /// 1..6, matching the listing above.
  int local_type(std::size_t t) const { return static_cast<int>(t % kTetsPerCell) + 1; }

  /// Lattice offsets (relative to the cell origin) of the four vertices of a
  /// tet of the given local type (1..6), in stored order.
  const std::array<std::array<int, 3>, 4>& local_vertices(int type) const { return local_vertices_[type - 1]; }

  /// Maps the four vertex values of a scalar piecewise-linear function to its
  /// constant gradient on a tet of the given local type.
  const Eigen::Matrix<double, 3, 4>& gradient_operator(int type) const { return gradient_ops_[type - 1]; }

  /// Identity-configuration volume of every tet (h^3 / 6).
  double tet_volume() const { return volume_; }

 private:
  Grid grid_;
  std::vector<std::array<std::uint32_t, 4>> tets_;
  std::array<std::array<std::array<int, 3>, 4>, kTetsPerCell> local_vertices_{};
  std::array<Eigen::Matrix<double, 3, 4>, kTetsPerCell> gradient_ops_;
  double volume_ = 0.0;
};

TetMesh tetrahedralize(const Grid& grid);

/// Signed volume of the tet spanned by four points.
double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

struct LandmarkPair {
  Vec3 source;      // snapped to a grid node
  Vec3 target;
  std::size_t node;
  Vec3 raw_source;  // as supplied, before snapping
};

struct LandmarkSet {
  std::vector<LandmarkPair> pairs;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
  /// Largest distance between a raw source point and its snapped node.
  double max_snap_displacement() const;
};

using RawPair = std::pair<Vec3, Vec3>;

/// Moves every source point to its nearest grid node (ties go to the smaller
/// lattice coordinate on each axis). Targets are untouched.
///
/// Throws OutOfDomain for coordinates outside the closed unit cube and
/// DuplicateLandmark when two sources snap to the same node.
LandmarkSet snap_landmarks(const Grid& grid, std::span<const RawPair> raw_pairs);

std::size_t nearest_node(const Grid& grid, const Vec3& p);

enum class BoundaryKind : std::uint8_t { Interior, Neumann, Dirichlet };

/// Per-node, per-component boundary classification for the unit cube mapped
/// onto itself: component c is Dirichlet on the two faces normal to axis c
/// (value 0 on the low face, 1 on the high face) and Neumann on the others.
class BoundaryTags {
 public:
  explicit BoundaryTags(const Grid& grid);

  BoundaryKind kind(std::size_t node, int component) const { return kind_[component][node]; }
  bool is_dirichlet(std::size_t node, int component) const {
    return kind_[component][node] == BoundaryKind::Dirichlet;
  }
  /// Only meaningful for Dirichlet entries.
  double value(std::size_t node, int component) const;

 private:
  Grid grid_;
  std::array<std::vector<BoundaryKind>, 3> kind_;
};

}  // namespace qcreg
