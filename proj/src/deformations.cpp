#include "qcreg/deformations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <unordered_set>

#include <Eigen/Dense>

#include "qcreg/conformality.hpp"
#include "qcreg/errors.hpp"

namespace qcreg {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kTargetBallCount = 3743;

}  // namespace

CaseId parse_case(const std::string& name) {
  if (name == "one-point") return CaseId::OnePoint;
  if (name == "two-point") return CaseId::TwoPoint;
  if (name == "rotate-ball") return CaseId::RotateBall;
  if (name == "wave-plane" || name == "wave") return CaseId::WavePlane;
  if (name == "twist") return CaseId::Twist;
  throw InvalidArgument("unknown case '" + name + "'");
}

std::string case_name(CaseId id) {
  switch (id) {
    case CaseId::OnePoint: return "one-point";
    case CaseId::TwoPoint: return "two-point";
    case CaseId::RotateBall: return "rotate-ball";
    case CaseId::WavePlane: return "wave-plane";
    case CaseId::Twist: return "twist";
  }
  return "unknown";
}

const std::vector<CaseId>& all_cases() {
  static const std::vector<CaseId> ids{CaseId::OnePoint, CaseId::TwoPoint, CaseId::RotateBall, CaseId::WavePlane,
                                       CaseId::Twist};
  return ids;
}

double default_ball_radius() {
  static const double radius = [] {
    const Grid g(5);
    const Vec3 c(0.5, 0.5, 0.5);
    std::vector<double> d(g.node_count());
    for (std::size_t v = 0; v < g.node_count(); ++v) d[v] = (g.position(v) - c).norm();
    std::sort(d.begin(), d.end());
    // Distances come in shells; pick the shell boundary nearest the target count.
    std::size_t best = 0;
    std::size_t best_gap = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 1; i < d.size(); ++i) {
      if (d[i] - d[i - 1] < 1e-12) continue;
      const std::size_t gap = i > kTargetBallCount ? i - kTargetBallCount : kTargetBallCount - i;
      if (gap < best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    return 0.5 * (d[best - 1] + d[best]);
  }();
  return radius;
}

double twist_profile(double x, double y, double amplitude) {
  return amplitude * ((std::cos(kPi * x) + 1.0) * (std::cos(kPi * y) + 1.0) / 4.0 +
                      std::cos(kPi * x / 2.0) * std::cos(kPi * y / 2.0));
}

Vec3 twist_map(const Vec3& p, double amplitude) {
  const double a1 = twist_profile(p.x(), p.y(), amplitude);
  const double qx = p.x() - p.x() * a1;
  const double rho = p.y() + qx * a1;
  const double a2 = twist_profile(rho, p.z(), amplitude);
  const double qy = rho - p.z() * a2;
  const double qz = p.z() + qy * a2;
  return {qx, qy, qz};
}

std::vector<RawPair> case_pairs(const SyntheticCase& c, const Grid& grid) {
  std::vector<RawPair> out;
  switch (c.id) {
    case CaseId::OnePoint:
      out.emplace_back(Vec3(0.6, 0.6, 0.6), Vec3(0.3, 0.3, 0.3));
      break;
    case CaseId::TwoPoint:
      out.emplace_back(Vec3(0.6, 0.7, 0.7), Vec3(0.3, 0.2, 0.9));
      out.emplace_back(Vec3(0.4, 0.6, 0.3), Vec3(0.2, 0.9, 0.2));
      break;
    case CaseId::RotateBall: {
      const double r = c.ball_radius.value_or(default_ball_radius());
      if (!(r > 0.0)) throw InvalidArgument("ball radius must be positive");
      Mat3 rot;
      rot << 0, -1, 0, 1, 0, 0, 0, 0, 1;
      for (std::size_t v = 0; v < grid.node_count(); ++v) {
        const Vec3 p = grid.position(v);
        if ((p - c.ball_center).norm() > r) continue;
        const Vec3 q = c.ball_center + rot * (p - c.ball_center);
        if ((q.array() < 0.0).any() || (q.array() > 1.0).any()) {
          throw OutOfDomain("rotated ball leaves the unit cube");
        }
        out.emplace_back(p, q);
      }
      break;
    }
    case CaseId::WavePlane: {
      if (grid.cells_per_axis() % 2 != 0) throw InvalidArgument("x = 0.5 is not a node plane of this grid");
      const int mid = grid.cells_per_axis() / 2;
      const int n = grid.nodes_per_axis();
      for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) {
          const Vec3 p = grid.position(grid.index(mid, j, k));
          const double qx = 0.5 + c.wave_amplitude * std::sin(c.wave_frequency * kPi * (p.y() + p.z()));
          out.emplace_back(p, Vec3(qx, p.y(), p.z()));
        }
      }
      break;
    }
    case CaseId::Twist: {
      const int n = grid.nodes_per_axis();
      const int interior = n - 2;
      if (interior < 1) throw InvalidArgument("grid has no interior nodes");
      const std::size_t available = static_cast<std::size_t>(interior) * interior * interior;
      if (c.count < 1 || static_cast<std::size_t>(c.count) > available) {
        throw InvalidArgument("twist landmark count out of range");
      }
      std::mt19937_64 rng(c.seed);
      std::unordered_set<std::size_t> used;
      while (used.size() < static_cast<std::size_t>(c.count)) {
        const int i = 1 + static_cast<int>(rng() % interior);
        const int j = 1 + static_cast<int>(rng() % interior);
        const int k = 1 + static_cast<int>(rng() % interior);
        const std::size_t v = grid.index(i, j, k);
        if (!used.insert(v).second) continue;
        const Vec3 p = grid.position(v);
        out.emplace_back(p, twist_map(p, c.twist_amplitude));
      }
      break;
    }
  }
  return out;
}

LandmarkSet gen_case(const SyntheticCase& c, const Grid& grid) {
  const auto pairs = case_pairs(c, grid);
  return snap_landmarks(grid, pairs);
}

MetricsReport compute_metrics(const TetMesh& mesh, const DisplacementField& f, const LandmarkSet& landmarks,
                              const std::vector<RawPair>& input_pairs) {
  if (f.size() != mesh.grid().node_count()) throw ShapeError("field size does not match the mesh");
  MetricsReport r;
  r.min_det = std::numeric_limits<double>::infinity();
  r.max_K = 0.0;
  for (std::size_t t = 0; t < mesh.tet_count(); ++t) {
    const Mat3 J = jacobian_of_tet(mesh, f, t);
    const double det = J.determinant();
    r.min_det = std::min(r.min_det, det);
    if (!(det > 0.0)) ++r.fold_count;
    r.max_K = std::max(r.max_K, distortion_K(J));
  }
  if (r.fold_count > 0) r.max_K = std::numeric_limits<double>::infinity();

  for (const auto& [p, q] : input_pairs) {
    const double d = (q - p).norm();
    r.lm_max = std::max(r.lm_max, d);
    r.lm_mean += d;
  }
  if (!input_pairs.empty()) r.lm_mean /= static_cast<double>(input_pairs.size());

  for (const auto& lm : landmarks.pairs) {
    const double e = (f.at(lm.node) - lm.target).norm();
    r.e_max = std::max(r.e_max, e);
    r.e_mean += e;
  }
  if (!landmarks.empty()) r.e_mean /= static_cast<double>(landmarks.size());
  r.snap_displacement = landmarks.empty() ? 0.0 : landmarks.max_snap_displacement();
  r.landmark_count = landmarks.size();
  return r;
}

}  // namespace qcreg
