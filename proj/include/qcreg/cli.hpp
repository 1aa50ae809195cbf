#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qcreg/admm.hpp"
#include "qcreg/deformations.hpp"
#include "qcreg/io.hpp"
#include "qcreg/tps.hpp"

namespace qcreg {

enum class Method { Proposed, Tps, Both };

Method parse_method(const std::string& name);
std::string method_name(Method m);

struct RunConfig {
  int levels = 4;
  std::string case_name = "one-point";  // ignored when landmarks_path is set
  std::optional<std::filesystem::path> landmarks_path;
  std::optional<Box> box;
  Method method = Method::Proposed;
  double sigma = 0.0;
  double outer_tol = 1e-4;
  double mu_init = 30.0;
  int max_outer_iters = 200;
  double pcg_tol = 1e-8;
  double rsub_tol = 1e-12;
  std::uint64_t seed = 1;
  int count = 50;
  std::optional<double> ball_radius;
  TpsAnchors tps_anchors = TpsAnchors::Corners;
  std::filesystem::path output_dir = "qcreg_out";
  bool write_vtk = true;
  bool write_energy = true;
  bool write_metrics = true;
  bool include_timing = false;

  AdmmConfig admm() const;
  SyntheticCase synthetic() const;
};

/// The configuration as JSON, every field present.
std::string config_json(const RunConfig& config);

struct MethodOutput {
  DisplacementField f;
  MetricsReport report;
  EnergyTrace trace;  // empty for TPS
};

struct RegistrationOutput {
  std::vector<RawPair> input_pairs;
  LandmarkSet landmarks;
  std::optional<MethodOutput> proposed;
  std::optional<MethodOutput> tps;
};

/// Builds the grid and landmarks from the config and runs the selected
/// method(s). No files are written.
RegistrationOutput register_landmarks(const RunConfig& config);

/// Writes deformed.vtk, energy.csv, metrics.json and config.json (as
/// enabled) into outdir. Throws IoError when the directory is unusable.
void export_results(const TetMesh& mesh, const MethodOutput& out, const RunConfig& config,
                    const std::filesystem::path& outdir);

/// Subcommands register, case and metrics. Returns the process exit code:
/// 0 on success, 1 on a runtime failure, 2 on a usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qcreg
