#include "qcreg/tps.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "qcreg/errors.hpp"

namespace qcreg {

TpsModel tps_fit(const std::vector<RawPair>& pairs) {
  const std::size_t m = pairs.size();
  if (m == 0) throw InvalidArgument("TPS needs at least one landmark");
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      if ((pairs[i].first - pairs[j].first).norm() < 1e-12) throw IllPosed("coincident TPS sources");
    }
  }
  const Eigen::Index n = static_cast<Eigen::Index>(m) + 4;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, 3);
  for (std::size_t i = 0; i < m; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < m; ++j) A(ii, static_cast<Eigen::Index>(j)) = (pairs[i].first - pairs[j].first).norm();
    for (int c = 0; c < 3; ++c) {
      A(ii, static_cast<Eigen::Index>(m) + c) = pairs[i].first[c];
      A(static_cast<Eigen::Index>(m) + c, ii) = pairs[i].first[c];
    }
    A(ii, n - 1) = 1.0;
    A(n - 1, ii) = 1.0;
    b.row(ii) = pairs[i].second.transpose();
  }
  Eigen::MatrixXd sol;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (lu.isInvertible()) {
    sol = lu.solve(b);
  } else {
    // Sources affinely degenerate: least-norm solution, accepted only if exact.
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
    sol = cod.solve(b);
    if (!((A * sol - b).norm() <= 1e-9 * (1.0 + b.norm()))) throw IllPosed("singular TPS system");
  }
  if (!sol.allFinite()) throw IllPosed("singular TPS system");

  TpsModel model;
  model.sources.reserve(m);
  model.weights.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    model.sources.push_back(pairs[i].first);
    model.weights.push_back(sol.row(static_cast<Eigen::Index>(i)).transpose());
  }
  for (int c = 0; c < 3; ++c) model.affine.col(c) = sol.row(static_cast<Eigen::Index>(m) + c).transpose();
  model.affine.col(3) = sol.row(n - 1).transpose();
  return model;
}

Vec3 tps_eval(const TpsModel& model, const Vec3& x) {
  Vec3 out = model.affine.leftCols<3>() * x + model.affine.col(3);
  for (std::size_t i = 0; i < model.sources.size(); ++i) out += model.weights[i] * (x - model.sources[i]).norm();
  return out;
}

std::vector<RawPair> tps_training_pairs(const LandmarkSet& landmarks, TpsAnchors anchors) {
  std::vector<RawPair> out;
  for (const auto& lm : landmarks.pairs) out.emplace_back(lm.source, lm.target);
  if (anchors == TpsAnchors::Corners) {
    for (int c = 0; c < 8; ++c) {
      const Vec3 p(c & 1, (c >> 1) & 1, (c >> 2) & 1);
      bool taken = false;
      for (const auto& lm : landmarks.pairs) taken = taken || (lm.source - p).norm() < 1e-12;
      if (!taken) out.emplace_back(p, p);
    }
  }
  return out;
}

DisplacementField tps_field(const TpsModel& model, const Grid& grid) {
  DisplacementField f;
  for (auto& c : f.comp) c.assign(grid.node_count(), 0.0);
  for (std::size_t v = 0; v < grid.node_count(); ++v) f.set(v, tps_eval(model, grid.position(v)));
  return f;
}

}  // namespace qcreg
