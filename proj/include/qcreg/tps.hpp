#pragma once

#include <vector>

#include "qcreg/grid.hpp"

namespace qcreg {

/// f(x) = A [x; 1] + sum_i w_i |x - p_i|.
struct TpsModel {
  std::vector<Vec3> sources;
  std::vector<Vec3> weights;
  Eigen::Matrix<double, 3, 4> affine;
};

/// Fits the interpolating spline. With fewer than four affinely independent
/// sources the affine block is regularized (minimum-norm solve). Throws
/// IllPosed for coincident sources or a singular system, InvalidArgument for
/// an empty input.
TpsModel tps_fit(const std::vector<RawPair>& pairs);

Vec3 tps_eval(const TpsModel& model, const Vec3& x);

enum class TpsAnchors { None, Corners };

/// The pairs passed to the fit by the baseline: the landmarks plus, with
/// Corners, the eight cube corners mapped to themselves (unless a landmark
/// already sits there).
std::vector<RawPair> tps_training_pairs(const LandmarkSet& landmarks, TpsAnchors anchors);

/// Spline evaluated at every grid node.
DisplacementField tps_field(const TpsModel& model, const Grid& grid);

}  // namespace qcreg
