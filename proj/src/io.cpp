#include "qcreg/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "qcreg/conformality.hpp"
#include "qcreg/errors.hpp"

namespace qcreg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& field, std::size_t line) {
  const std::string t = trim(field);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
    throw ParseError("line " + std::to_string(line) + ": '" + t + "' is not a number", line);
  }
  return v;
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::vector<RawPair> parse_landmarks(const std::string& text, const std::optional<Box>& box) {
  if (box && ((box->hi - box->lo).array() <= 0.0).any()) throw InvalidArgument("normalization box is empty");
  std::vector<RawPair> out;
  std::vector<std::size_t> offenders;
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty() || s[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(s);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (!s.empty() && s.back() == ',') fields.emplace_back();
    if (fields.size() != 6) {
      throw ParseError("line " + std::to_string(line) + ": expected 6 comma-separated values, got " +
                           std::to_string(fields.size()),
                       line);
    }
    double v[6];
    for (int i = 0; i < 6; ++i) v[i] = parse_double(fields[i], line);
    Vec3 p(v[0], v[1], v[2]);
    Vec3 q(v[3], v[4], v[5]);
    if (box) {
      p = box->normalize(p);
      q = box->normalize(q);
    }
    const auto inside = [](const Vec3& x) { return (x.array() >= 0.0).all() && (x.array() <= 1.0).all(); };
    if (!inside(p) || !inside(q)) offenders.push_back(line);
    out.emplace_back(p, q);
  }
  if (!offenders.empty()) {
    std::string msg = "landmarks outside the unit cube on line(s)";
    for (auto l : offenders) msg += " " + std::to_string(l);
    throw OutOfDomain(msg);
  }
  return out;
}

std::vector<RawPair> load_landmarks(const std::filesystem::path& path, const std::optional<Box>& box) {
  return parse_landmarks(read_text(path), box);
}

std::string format_landmarks(const std::vector<RawPair>& pairs) {
  std::ostringstream os;
  os << "# px,py,pz,qx,qy,qz\n";
  for (const auto& [p, q] : pairs) {
    os << num(p.x()) << ',' << num(p.y()) << ',' << num(p.z()) << ',' << num(q.x()) << ',' << num(q.y()) << ','
       << num(q.z()) << '\n';
  }
  return os.str();
}

std::string vtk_string(const TetMesh& mesh, const DisplacementField& f, const std::optional<Box>& box) {
  const Grid& g = mesh.grid();
  if (f.size() != g.node_count()) throw ShapeError("field size does not match the mesh");
  const auto out_pos = [&](const Vec3& u) { return box ? box->denormalize(u) : u; };
  std::ostringstream os;
  os << std::setprecision(17);
  os << "# vtk DataFile Version 3.0\nqcreg deformation\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << g.node_count() << " double\n";
  for (std::size_t v = 0; v < g.node_count(); ++v) {
    const Vec3 p = out_pos(f.at(v));
    os << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  }
  const std::size_t nt = mesh.tet_count();
  os << "CELLS " << nt << ' ' << nt * 5 << '\n';
  for (const auto& t : mesh.tets()) os << "4 " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
  os << "CELL_TYPES " << nt << '\n';
  for (std::size_t t = 0; t < nt; ++t) os << "10\n";
  os << "CELL_DATA " << nt << "\nSCALARS det double 1\nLOOKUP_TABLE default\n";
  const TetMatrixField Df = jacobian_per_tet(mesh, f);
  for (const auto& M : Df) os << M.determinant() << '\n';
  // K is written as -1 on folded tets (VTK readers reject inf).
  os << "SCALARS K double 1\nLOOKUP_TABLE default\n";
  for (const auto& M : Df) {
    const double k = distortion_K(M);
    os << (std::isfinite(k) ? k : -1.0) << '\n';
  }
  os << "POINT_DATA " << g.node_count() << "\nVECTORS displacement double\n";
  for (std::size_t v = 0; v < g.node_count(); ++v) {
    const Vec3 d = out_pos(f.at(v)) - out_pos(g.position(v));
    os << d.x() << ' ' << d.y() << ' ' << d.z() << '\n';
  }
  return os.str();
}

VtkData parse_vtk(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  for (int i = 0; i < 4; ++i) {
    if (!std::getline(in, line)) throw ParseError("truncated VTK header", static_cast<std::size_t>(i + 1));
  }
  if (trim(line) != "DATASET UNSTRUCTURED_GRID") throw ParseError("not an unstructured grid", 4);
  VtkData d;
  std::string key;
  const auto fail = [](const std::string& what) { throw ParseError("VTK: " + what, 0); };
  std::size_t n_cell_data = 0;
  while (in >> key) {
    if (key == "POINTS") {
      std::size_t n;
      std::string type;
      if (!(in >> n >> type)) fail("bad POINTS line");
      d.points.resize(n);
      for (auto& p : d.points) {
        if (!(in >> p.x() >> p.y() >> p.z())) fail("truncated POINTS");
      }
    } else if (key == "CELLS") {
      std::size_t n, total;
      if (!(in >> n >> total)) fail("bad CELLS line");
      if (total != 5 * n) fail("only tetrahedra are supported");
      d.cells.resize(n);
      for (auto& c : d.cells) {
        int k;
        if (!(in >> k) || k != 4) fail("cell is not a tetrahedron");
        for (auto& v : c) {
          if (!(in >> v)) fail("truncated CELLS");
          if (v >= d.points.size()) fail("cell refers to a missing point");
        }
      }
    } else if (key == "CELL_TYPES") {
      std::size_t n;
      if (!(in >> n) || n != d.cells.size()) fail("CELL_TYPES count mismatch");
      d.cell_types.resize(n);
      for (auto& t : d.cell_types) {
        if (!(in >> t)) fail("truncated CELL_TYPES");
      }
    } else if (key == "CELL_DATA") {
      if (!(in >> n_cell_data) || n_cell_data != d.cells.size()) fail("CELL_DATA count mismatch");
    } else if (key == "SCALARS") {
      std::string name, type, lt, table;
      int comps;
      if (!(in >> name >> type >> comps >> lt >> table) || comps != 1 || lt != "LOOKUP_TABLE") fail("bad SCALARS");
      std::vector<double> vals(n_cell_data);
      for (auto& v : vals) {
        if (!(in >> v)) fail("truncated SCALARS " + name);
      }
      if (name == "det") d.det = std::move(vals);
      else if (name == "K") d.K = std::move(vals);
    } else if (key == "POINT_DATA") {
      std::size_t n;
      if (!(in >> n) || n != d.points.size()) fail("POINT_DATA count mismatch");
    } else if (key == "VECTORS") {
      std::string name, type;
      if (!(in >> name >> type)) fail("bad VECTORS");
      d.displacement.resize(d.points.size());
      for (auto& p : d.displacement) {
        if (!(in >> p.x() >> p.y() >> p.z())) fail("truncated VECTORS");
      }
    } else {
      fail("unexpected keyword " + key);
    }
  }
  return d;
}

std::string metrics_json(const MetricsReport& r, bool include_timing) {
  nlohmann::ordered_json j;
  j["max_K"] = std::isfinite(r.max_K) ? nlohmann::ordered_json(r.max_K) : nlohmann::ordered_json(nullptr);
  j["min_det"] = r.min_det;
  j["fold_count"] = r.fold_count;
  j["lm_max"] = r.lm_max;
  j["lm_mean"] = r.lm_mean;
  j["e_max"] = r.e_max;
  j["e_mean"] = r.e_mean;
  j["snap_displacement"] = r.snap_displacement;
  j["boundary_conflicts"] = r.boundary_conflicts;
  j["landmark_count"] = r.landmark_count;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  if (include_timing) j["wall_time"] = r.wall_time;
  return j.dump(2) + "\n";
}

MetricsReport parse_metrics_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("metrics JSON: ") + e.what(), 0);
  }
  MetricsReport r;
  try {
    r.max_K = j.at("max_K").is_null() ? std::numeric_limits<double>::infinity() : j.at("max_K").get<double>();
    r.min_det = j.at("min_det").get<double>();
    r.fold_count = j.at("fold_count").get<std::size_t>();
    r.lm_max = j.at("lm_max").get<double>();
    r.lm_mean = j.at("lm_mean").get<double>();
    r.e_max = j.at("e_max").get<double>();
    r.e_mean = j.at("e_mean").get<double>();
    r.snap_displacement = j.at("snap_displacement").get<double>();
    r.boundary_conflicts = j.at("boundary_conflicts").get<std::size_t>();
    r.landmark_count = j.at("landmark_count").get<std::size_t>();
    r.converged = j.at("converged").get<bool>();
    r.iterations = j.at("iterations").get<int>();
    r.wall_time = j.value("wall_time", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("metrics JSON: ") + e.what(), 0);
  }
  return r;
}

std::string energy_csv(const EnergyTrace& trace) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "iteration,energy,normalized_conformality,augmented_lagrangian,primal_residual,mu,f_change,pcg_iterations\n";
  for (const auto& r : trace.records) {
    os << r.iteration << ',' << r.energy << ',' << r.normalized_conformality << ',' << r.augmented_lagrangian << ','
       << r.primal_residual << ',' << r.mu << ',' << r.f_change << ',' << r.pcg_iterations << '\n';
  }
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace qcreg
