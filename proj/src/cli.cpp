#include "qcreg/cli.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "qcreg/errors.hpp"

namespace qcreg {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::vector<RawPair> input_pairs_for(const RunConfig& c, const Grid& grid) {
  if (c.landmarks_path) return load_landmarks(*c.landmarks_path, c.box);
  return case_pairs(c.synthetic(), grid);
}

std::string summary_line(const std::string& label, const MetricsReport& r) {
  std::ostringstream os;
  os << label << ": folds=" << r.fold_count << " min_det=" << r.min_det << " max_K=";
  if (std::isfinite(r.max_K)) os << r.max_K;
  else os << "inf";
  os << " e_max=" << r.e_max << " landmarks=" << r.landmark_count;
  if (label == "proposed") os << " iterations=" << r.iterations << " converged=" << (r.converged ? "yes" : "no");
  return os.str();
}

Box parse_box(const std::vector<double>& v) {
  if (v.size() != 6) throw InvalidArgument("--box needs six numbers: xlo ylo zlo xhi yhi zhi");
  Box b;
  b.lo = Vec3(v[0], v[1], v[2]);
  b.hi = Vec3(v[3], v[4], v[5]);
  if (((b.hi - b.lo).array() <= 0.0).any()) throw InvalidArgument("--box is empty");
  return b;
}

// Rebuilds the nodal field from a VTK file written by export_results.
DisplacementField field_from_vtk(const VtkData& d, const Grid& grid, const std::optional<Box>& box) {
  if (d.points.size() != grid.node_count()) throw ShapeError("VTK point count does not match the grid");
  DisplacementField f = DisplacementField::identity(grid);
  for (std::size_t v = 0; v < d.points.size(); ++v) f.set(v, box ? box->normalize(d.points[v]) : d.points[v]);
  return f;
}

int levels_from_count(std::size_t n) {
  for (int J = 1; J <= 9; ++J) {
    const std::size_t m = (std::size_t{1} << J) + 1;
    if (m * m * m == n) return J;
  }
  throw ShapeError("point count is not that of a (2^J+1)^3 grid");
}

}  // namespace

Method parse_method(const std::string& name) {
  if (name == "proposed") return Method::Proposed;
  if (name == "tps") return Method::Tps;
  if (name == "both") return Method::Both;
  throw InvalidArgument("unknown method '" + name + "'");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::Proposed: return "proposed";
    case Method::Tps: return "tps";
    case Method::Both: return "both";
  }
  return "unknown";
}

AdmmConfig RunConfig::admm() const {
  AdmmConfig a;
  a.sigma = sigma;
  a.outer_tol = outer_tol;
  a.mu_init = mu_init;
  a.max_outer_iters = max_outer_iters;
  a.fsub.pcg_tol = pcg_tol;
  a.rsub.tolerance = rsub_tol;
  return a;
}

SyntheticCase RunConfig::synthetic() const {
  SyntheticCase s;
  s.id = parse_case(case_name);
  s.seed = seed;
  s.count = count;
  s.ball_radius = ball_radius;
  return s;
}

std::string config_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["levels"] = c.levels;
  j["case"] = c.landmarks_path ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(c.case_name);
  j["landmarks"] = c.landmarks_path ? nlohmann::ordered_json(c.landmarks_path->string()) : nlohmann::ordered_json(nullptr);
  if (c.box) {
    j["box"] = {c.box->lo.x(), c.box->lo.y(), c.box->lo.z(), c.box->hi.x(), c.box->hi.y(), c.box->hi.z()};
  } else {
    j["box"] = nullptr;
  }
  j["method"] = method_name(c.method);
  j["sigma"] = c.sigma;
  j["outer_tol"] = c.outer_tol;
  j["mu_init"] = c.mu_init;
  j["max_outer_iters"] = c.max_outer_iters;
  j["pcg_tol"] = c.pcg_tol;
  j["rsub_tol"] = c.rsub_tol;
  j["seed"] = c.seed;
  j["count"] = c.count;
  j["ball_radius"] = c.ball_radius ? nlohmann::ordered_json(*c.ball_radius) : nlohmann::ordered_json(nullptr);
  j["tps_anchors"] = c.tps_anchors == TpsAnchors::Corners ? "corners" : "none";
  j["output_dir"] = c.output_dir.string();
  j["write_vtk"] = c.write_vtk;
  j["write_energy"] = c.write_energy;
  j["write_metrics"] = c.write_metrics;
  j["include_timing"] = c.include_timing;
  return j.dump(2) + "\n";
}

RegistrationOutput register_landmarks(const RunConfig& config) {
  const Grid grid = build_grid(config.levels);
  const TetMesh mesh(grid);
  RegistrationOutput out;
  out.input_pairs = input_pairs_for(config, grid);
  if (out.input_pairs.empty()) throw InvalidArgument("no landmarks");
  out.landmarks = snap_landmarks(grid, out.input_pairs);

  if (config.method != Method::Tps) {
    const auto t0 = Clock::now();
    AdmmResult r = run(mesh, out.landmarks, config.admm());
    MethodOutput m;
    m.report = compute_metrics(mesh, r.state.f, out.landmarks, out.input_pairs);
    m.report.wall_time = seconds_since(t0);
    m.report.boundary_conflicts = r.boundary_conflicts;
    m.report.converged = r.converged;
    m.report.iterations = static_cast<int>(r.trace.records.size());
    m.f = std::move(r.state.f);
    m.trace = std::move(r.trace);
    out.proposed = std::move(m);
  }
  if (config.method != Method::Proposed) {
    const auto t0 = Clock::now();
    const TpsModel model = tps_fit(tps_training_pairs(out.landmarks, config.tps_anchors));
    MethodOutput m;
    m.f = tps_field(model, grid);
    m.report = compute_metrics(mesh, m.f, out.landmarks, out.input_pairs);
    m.report.wall_time = seconds_since(t0);
    m.report.iterations = 0;
    out.tps = std::move(m);
  }
  return out;
}

void export_results(const TetMesh& mesh, const MethodOutput& out, const RunConfig& config,
                    const std::filesystem::path& outdir) {
  std::error_code ec;
  std::filesystem::create_directories(outdir, ec);
  if (ec || !std::filesystem::is_directory(outdir)) throw IoError("cannot create directory " + outdir.string());
  if (config.write_vtk) write_text(outdir / "deformed.vtk", vtk_string(mesh, out.f, config.box));
  if (config.write_energy && !out.trace.records.empty()) write_text(outdir / "energy.csv", energy_csv(out.trace));
  if (config.write_metrics) write_text(outdir / "metrics.json", metrics_json(out.report, config.include_timing));
  write_text(outdir / "config.json", config_json(config));
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Diffeomorphic landmark matching on the unit cube"};
  app.require_subcommand(1);

  RunConfig rc;
  std::string landmarks_file;
  std::vector<double> box;
  std::string method = "proposed";
  std::string anchors = "corners";
  double radius = -1.0;
  bool no_vtk = false;

  auto* reg = app.add_subcommand("register", "Register a synthetic case or a landmark file");
  reg->add_option("--case", rc.case_name, "Synthetic case: one-point, two-point, rotate-ball, wave-plane, twist")
      ->capture_default_str();
  reg->add_option("--landmarks", landmarks_file, "Landmark CSV (px,py,pz,qx,qy,qz per line); overrides --case");
  reg->add_option("--box", box, "Input box xlo ylo zlo xhi yhi zhi, normalized to the unit cube")->expected(6);
  reg->add_option("--levels", rc.levels, "Grid level J (2^J+1 nodes per axis)")->capture_default_str();
  reg->add_option("--method", method, "proposed, tps or both")->capture_default_str();
  reg->add_option("--sigma", rc.sigma, "Smoothness weight")->capture_default_str();
  reg->add_option("--tol", rc.outer_tol, "Outer stop on max |f change|")->capture_default_str();
  reg->add_option("--mu-init", rc.mu_init, "Initial penalty (raised to at least 30)")->capture_default_str();
  reg->add_option("--max-iters", rc.max_outer_iters, "Outer iteration cap")->capture_default_str();
  reg->add_option("--pcg-tol", rc.pcg_tol, "Relative PCG tolerance")->capture_default_str();
  reg->add_option("--rsub-tol", rc.rsub_tol, "R-subproblem fixed-point tolerance")->capture_default_str();
  reg->add_option("--seed", rc.seed, "Seed for the twist landmarks")->capture_default_str();
  reg->add_option("--count", rc.count, "Twist landmark count")->capture_default_str();
  reg->add_option("--radius", radius, "Rotate-ball radius (default: about 3743 nodes at J=5)");
  reg->add_option("--tps-anchors", anchors, "corners or none")->capture_default_str();
  reg->add_option("--out", rc.output_dir, "Output directory")->capture_default_str();
  reg->add_flag("--no-vtk", no_vtk, "Skip the VTK export");
  reg->add_flag("--timing", rc.include_timing, "Write wall_time into metrics.json");

  std::string case_out;
  std::string gen_case_name = "one-point";
  int gen_levels = 5;
  std::uint64_t gen_seed = 1;
  int gen_count = 50;
  double gen_radius = -1.0;
  auto* cas = app.add_subcommand("case", "Write the landmark CSV of a synthetic case");
  cas->add_option("--case", gen_case_name, "Synthetic case")->capture_default_str();
  cas->add_option("--levels", gen_levels, "Grid level the node-based cases are sampled on")->capture_default_str();
  cas->add_option("--seed", gen_seed, "Seed for the twist landmarks")->capture_default_str();
  cas->add_option("--count", gen_count, "Twist landmark count")->capture_default_str();
  cas->add_option("--radius", gen_radius, "Rotate-ball radius");
  cas->add_option("--out", case_out, "Output file (default: stdout)");

  std::string field_path;
  std::string met_landmarks;
  std::string met_case;
  std::vector<double> met_box;
  bool met_timing = false;
  auto* met = app.add_subcommand("metrics", "Recompute metrics from a saved deformed.vtk");
  met->add_option("--field", field_path, "VTK file written by register")->required();
  met->add_option("--landmarks", met_landmarks, "Landmark CSV used for the run");
  met->add_option("--case", met_case, "Synthetic case used for the run");
  met->add_option("--box", met_box, "Input box of the run")->expected(6);
  met->add_option("--seed", gen_seed, "Seed for the twist landmarks")->capture_default_str();
  met->add_option("--count", gen_count, "Twist landmark count")->capture_default_str();
  met->add_flag("--timing", met_timing, "Keep wall_time in the output");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return 2;
  }

  try {
    if (reg->parsed()) {
      if (!landmarks_file.empty()) rc.landmarks_path = landmarks_file;
      if (!box.empty()) rc.box = parse_box(box);
      rc.method = parse_method(method);
      if (anchors == "corners") rc.tps_anchors = TpsAnchors::Corners;
      else if (anchors == "none") rc.tps_anchors = TpsAnchors::None;
      else throw InvalidArgument("--tps-anchors must be corners or none");
      if (radius > 0.0) rc.ball_radius = radius;
      rc.write_vtk = !no_vtk;
      const Grid grid = build_grid(rc.levels);
      const TetMesh mesh(grid);
      const RegistrationOutput res = register_landmarks(rc);
      if (res.proposed) {
        export_results(mesh, *res.proposed, rc, rc.method == Method::Both ? rc.output_dir / "proposed" : rc.output_dir);
        out << summary_line("proposed", res.proposed->report) << "\n";
      }
      if (res.tps) {
        export_results(mesh, *res.tps, rc, rc.method == Method::Both ? rc.output_dir / "tps" : rc.output_dir);
        out << summary_line("tps", res.tps->report) << "\n";
      }
      return 0;
    }
    if (cas->parsed()) {
      SyntheticCase sc;
      sc.id = parse_case(gen_case_name);
      sc.seed = gen_seed;
      sc.count = gen_count;
      if (gen_radius > 0.0) sc.ball_radius = gen_radius;
      const std::string text = format_landmarks(case_pairs(sc, build_grid(gen_levels)));
      if (case_out.empty()) out << text;
      else write_text(case_out, text);
      return 0;
    }
    if (met->parsed()) {
      std::optional<Box> b;
      if (!met_box.empty()) b = parse_box(met_box);
      const VtkData d = parse_vtk(read_text(field_path));
      const Grid grid = build_grid(levels_from_count(d.points.size()));
      const TetMesh mesh(grid);
      const DisplacementField f = field_from_vtk(d, grid, b);
      std::vector<RawPair> pairs;
      if (!met_landmarks.empty()) {
        pairs = load_landmarks(met_landmarks, b);
      } else if (!met_case.empty()) {
        SyntheticCase sc;
        sc.id = parse_case(met_case);
        sc.seed = gen_seed;
        sc.count = gen_count;
        pairs = case_pairs(sc, grid);
      }
      const LandmarkSet lms = pairs.empty() ? LandmarkSet{} : snap_landmarks(grid, pairs);
      out << metrics_json(compute_metrics(mesh, f, lms, pairs), met_timing);
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace qcreg
