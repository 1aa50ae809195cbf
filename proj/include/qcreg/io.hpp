#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qcreg/admm.hpp"
#include "qcreg/deformations.hpp"
#include "qcreg/grid.hpp"

namespace qcreg {

/// Axis-aligned box mapped affinely onto the unit cube.
struct Box {
  Vec3 lo{0.0, 0.0, 0.0};
  Vec3 hi{1.0, 1.0, 1.0};

  Vec3 normalize(const Vec3& x) const { return (x - lo).cwiseQuotient(hi - lo); }
  Vec3 denormalize(const Vec3& u) const { return lo + u.cwiseProduct(hi - lo); }
};

/// One pair per line, "px,py,pz,qx,qy,qz"; blank lines and lines starting
/// with '#' are skipped. Coordinates are normalized with `box` when given.
/// Throws IoError, ParseError (with the line number) or OutOfDomain (listing
/// the offending lines).
std::vector<RawPair> parse_landmarks(const std::string& text, const std::optional<Box>& box = std::nullopt);
std::vector<RawPair> load_landmarks(const std::filesystem::path& path, const std::optional<Box>& box = std::nullopt);
std::string format_landmarks(const std::vector<RawPair>& pairs);

/// Legacy ASCII unstructured grid: deformed node positions, tets, per-tet
/// det and K, per-node displacement.
std::string vtk_string(const TetMesh& mesh, const DisplacementField& f, const std::optional<Box>& box = std::nullopt);

struct VtkData {
  std::vector<Vec3> points;
  std::vector<std::array<std::size_t, 4>> cells;
  std::vector<int> cell_types;
  std::vector<double> det;
  std::vector<double> K;
  std::vector<Vec3> displacement;
};

/// Reads back what vtk_string writes. Throws ParseError on structural problems.
VtkData parse_vtk(const std::string& text);

/// MetricsReport as JSON. max_K is null when infinite; wall_time is written
/// only when include_timing is set.
std::string metrics_json(const MetricsReport& report, bool include_timing);
MetricsReport parse_metrics_json(const std::string& text);

/// Columns: iteration, energy, normalized_conformality, augmented_lagrangian,
/// primal_residual, mu, f_change, pcg_iterations.
std::string energy_csv(const EnergyTrace& trace);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace qcreg
