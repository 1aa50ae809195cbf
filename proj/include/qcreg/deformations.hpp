#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qcreg/grid.hpp"

namespace qcreg {

enum class CaseId { OnePoint, TwoPoint, RotateBall, WavePlane, Twist };

/// Parses "one-point", "two-point", "rotate-ball", "wave-plane" (also "wave")
/// or "twist". Throws InvalidArgument otherwise.
CaseId parse_case(const std::string& name);
std::string case_name(CaseId id);
const std::vector<CaseId>& all_cases();

struct SyntheticCase {
  CaseId id = CaseId::OnePoint;
  Vec3 ball_center{0.5, 0.5, 0.5};
  std::optional<double> ball_radius;  // unset: default_ball_radius()
  double wave_amplitude = 0.2;
  double wave_frequency = 4.0;        // q_x = 0.5 + amplitude * sin(frequency * pi * (y + z))
  double twist_amplitude = 0.01;
  std::uint64_t seed = 1;
  int count = 50;                     // twist landmark count
};

/// Radius around (0.5, 0.5, 0.5) whose ball holds the node count closest to
/// 3743 on the 33^3 grid.
double default_ball_radius();

/// Twist profile A(x, y) scaled by `amplitude`.
double twist_profile(double x, double y, double amplitude);
/// The twist transformation applied to one point.
Vec3 twist_map(const Vec3& p, double amplitude);

/// Raw (source, target) pairs of a case on a grid; sources are grid nodes
/// except for the two point cases, which use the literal coordinates.
std::vector<RawPair> case_pairs(const SyntheticCase& c, const Grid& grid);

/// case_pairs followed by snapping.
LandmarkSet gen_case(const SyntheticCase& c, const Grid& grid);

struct MetricsReport {
  double max_K = 1.0;  // +inf when any tet folds
  double min_det = 1.0;
  std::size_t fold_count = 0;
  double lm_max = 0.0;
  double lm_mean = 0.0;
  double e_max = 0.0;
  double e_mean = 0.0;
  double snap_displacement = 0.0;
  std::size_t boundary_conflicts = 0;
  std::size_t landmark_count = 0;
  double wall_time = 0.0;
  bool converged = true;
  int iterations = 0;

  bool operator==(const MetricsReport&) const = default;
};

/// Table-style quality measures of a map. e-values use the snapped
/// landmarks, lm-values the input pairs. min_det is the smallest Jacobian
/// determinant over tets.
MetricsReport compute_metrics(const TetMesh& mesh, const DisplacementField& f, const LandmarkSet& landmarks,
                              const std::vector<RawPair>& input_pairs);

}  // namespace qcreg
