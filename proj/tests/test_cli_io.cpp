#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "qcreg/cli.hpp"
#include "qcreg/errors.hpp"
#include "qcreg/io.hpp"

using namespace qcreg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qcreg_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int cli(const std::vector<std::string>& args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

}  // namespace

TEST_CASE("landmark CSV parsing") {
  const auto one = parse_landmarks("0.6,0.6,0.6,0.3,0.3,0.3\n");
  REQUIRE(one.size() == 1);
  CHECK(one[0].first == Vec3(0.6, 0.6, 0.6));
  CHECK(one[0].second == Vec3(0.3, 0.3, 0.3));
  CHECK(parse_landmarks("# comment\n\n").empty());
  CHECK(parse_landmarks("# header\n 0.1, 0.2 ,0.3,0.4,0.5,0.6 \r\n\n0,0,0,1,1,1\n").size() == 2);
  try {
    parse_landmarks("0.6,0.6\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
  }
  try {
    parse_landmarks("# x\n0.1,0.2,0.3,0.4,0.5,0.6\n0.1,0.2,abc,0.4,0.5,0.6\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  try {
    parse_landmarks("0.1,0.2,0.3,0.4,0.5,0.6\n1.5,0.2,0.3,0.4,0.5,0.6\n0.1,0.2,0.3,0.4,0.5,-2\n");
    FAIL("expected OutOfDomain");
  } catch (const OutOfDomain& e) {
    const std::string msg = e.what();
    CHECK(msg.find(" 2") != std::string::npos);
    CHECK(msg.find(" 3") != std::string::npos);
  }
}

TEST_CASE("box normalization") {
  Box b;
  b.lo = Vec3(-10, 0, 100);
  b.hi = Vec3(10, 50, 200);
  const auto p = parse_landmarks("0,25,150,10,50,100\n", b);
  CHECK(p[0].first.isApprox(Vec3(0.5, 0.5, 0.5)));
  CHECK(p[0].second.isApprox(Vec3(1.0, 1.0, 0.0)));
  CHECK(b.denormalize(b.normalize(Vec3(3, 4, 5))).isApprox(Vec3(3, 4, 5)));
}

TEST_CASE("landmark files round-trip") {
  const fs::path dir = scratch("lm");
  const std::vector<RawPair> pairs{{Vec3(0.1, 0.2, 0.3), Vec3(0.4, 0.5, 0.6)}, {Vec3(1.0 / 3, 0.7, 0.9), Vec3(0, 1, 0.25)}};
  write_text(dir / "a.csv", format_landmarks(pairs));
  CHECK(load_landmarks(dir / "a.csv") == pairs);
  CHECK_THROWS_AS(load_landmarks(dir / "missing.csv"), IoError);
}

TEST_CASE("VTK of the identity") {
  const Grid g(2);
  const TetMesh m(g);
  const VtkData d = parse_vtk(vtk_string(m, DisplacementField::identity(g)));
  REQUIRE(d.points.size() == g.node_count());
  for (std::size_t v = 0; v < g.node_count(); ++v) CHECK(d.points[v] == g.position(v));
  REQUIRE(d.cells.size() == m.tet_count());
  for (std::size_t t = 0; t < m.tet_count(); ++t) {
    for (int a = 0; a < 4; ++a) CHECK(d.cells[t][a] == m.tet(t)[a]);
  }
  for (int t : d.cell_types) CHECK(t == 10);
  for (double x : d.det) CHECK(x == doctest::Approx(1.0));
  for (double x : d.K) CHECK(x == doctest::Approx(1.0));
  for (const auto& u : d.displacement) CHECK(u.norm() == 0.0);
  CHECK_THROWS_AS(parse_vtk("# vtk\nx\nASCII\nDATASET POLYDATA\n"), ParseError);
}

TEST_CASE("VTK denormalizes with a box") {
  const Grid g(1);
  const TetMesh m(g);
  Box b;
  b.lo = Vec3(0, 0, 0);
  b.hi = Vec3(2, 4, 8);
  DisplacementField f = DisplacementField::identity(g);
  f.set(g.index(1, 1, 1), Vec3(0.6, 0.5, 0.5));
  const VtkData d = parse_vtk(vtk_string(m, f, b));
  CHECK(d.points[g.index(2, 2, 2)].isApprox(Vec3(2, 4, 8)));
  CHECK(d.displacement[g.index(1, 1, 1)].isApprox(Vec3(0.2, 0, 0)));
}

TEST_CASE("metrics JSON round trip") {
  MetricsReport r;
  r.max_K = 3.25;
  r.min_det = 0.125;
  r.fold_count = 0;
  r.lm_max = 0.5196152422706632;
  r.lm_mean = 0.1 + 0.2;
  r.e_max = 0.0;
  r.e_mean = 0.0;
  r.snap_displacement = 1.0 / 3.0;
  r.boundary_conflicts = 2;
  r.landmark_count = 7;
  r.converged = false;
  r.iterations = 200;
  CHECK(parse_metrics_json(metrics_json(r, false)) == r);
  r.wall_time = 1.5;
  CHECK(parse_metrics_json(metrics_json(r, true)) == r);
  CHECK(metrics_json(r, false).find("wall_time") == std::string::npos);
  r.max_K = std::numeric_limits<double>::infinity();
  r.fold_count = 3;
  const std::string s = metrics_json(r, true);
  CHECK(s.find("\"max_K\": null") != std::string::npos);
  CHECK(parse_metrics_json(s) == r);
  CHECK_THROWS_AS(parse_metrics_json("{"), ParseError);
}

TEST_CASE("energy CSV has one row per record") {
  EnergyTrace t;
  for (int i = 1; i <= 4; ++i) t.records.push_back(TraceRecord{i, 10.0 - i, 1, 2, 3, 30, 0.1, 5});
  const std::string csv = energy_csv(t);
  std::size_t lines = 0;
  for (char ch : csv) lines += ch == '\n';
  CHECK(lines == 1 + t.records.size());
  CHECK(csv.rfind("iteration,energy,", 0) == 0);
}

TEST_CASE("CLI usage errors and help") {
  std::string out, err;
  CHECK(cli({"register", "--bogus"}, &out, &err) == 2);
  CHECK_FALSE(err.empty());
  CHECK(cli({}, &out, &err) == 2);
  CHECK(cli({"--help"}, &out) == 0);
  CHECK(out.find("register") != std::string::npos);
  CHECK(cli({"register", "--help"}, &out) == 0);
  for (const char* flag : {"--case", "--landmarks", "--box", "--levels", "--method", "--sigma", "--tol", "--mu-init",
                           "--max-iters", "--pcg-tol", "--rsub-tol", "--seed", "--count", "--radius", "--tps-anchors",
                           "--out", "--no-vtk", "--timing"}) {
    CHECK(out.find(flag) != std::string::npos);
  }
  CHECK(cli({"register", "--case", "nope", "--levels", "2", "--out", scratch("bad").string()}, &out, &err) == 1);
}

TEST_CASE("case subcommand is deterministic") {
  const fs::path dir = scratch("case");
  CHECK(cli({"case", "--case", "twist", "--seed", "7", "--count", "50", "--out", (dir / "a.csv").string()}) == 0);
  CHECK(cli({"case", "--case", "twist", "--seed", "7", "--count", "50", "--out", (dir / "b.csv").string()}) == 0);
  const std::string a = read_text(dir / "a.csv");
  CHECK(a == read_text(dir / "b.csv"));
  CHECK(load_landmarks(dir / "a.csv").size() == 50);
  std::string out;
  CHECK(cli({"case", "--case", "one-point"}, &out) == 0);
  CHECK(parse_landmarks(out).size() == 1);
}

TEST_CASE("register writes reproducible outputs and metrics can be recomputed") {
  const fs::path d1 = scratch("reg1"), d2 = scratch("reg2");
  const std::vector<std::string> base{"register", "--case", "twist", "--levels", "3", "--method", "both"};
  auto a1 = base;
  a1.insert(a1.end(), {"--out", d1.string()});
  auto a2 = base;
  a2.insert(a2.end(), {"--out", d2.string()});
  std::string out;
  REQUIRE(cli(a1, &out) == 0);
  CHECK(out.find("proposed:") != std::string::npos);
  CHECK(out.find("tps:") != std::string::npos);
  REQUIRE(cli(a2) == 0);
  for (const char* f : {"proposed/metrics.json", "proposed/energy.csv", "tps/metrics.json"}) {
    CHECK(read_text(d1 / f) == read_text(d2 / f));
  }
  for (const char* f : {"proposed/deformed.vtk", "proposed/config.json", "tps/deformed.vtk", "tps/config.json"}) {
    CHECK(fs::exists(d1 / f));
  }
  CHECK_FALSE(fs::exists(d1 / "tps/energy.csv"));

  const MetricsReport saved = parse_metrics_json(read_text(d1 / "proposed/metrics.json"));
  CHECK(saved.fold_count == 0);
  CHECK(saved.e_max == 0.0);

  REQUIRE(cli({"metrics", "--field", (d1 / "proposed/deformed.vtk").string(), "--case", "twist"}, &out) == 0);
  const MetricsReport again = parse_metrics_json(out);
  CHECK(again.fold_count == saved.fold_count);
  CHECK(again.min_det == doctest::Approx(saved.min_det).epsilon(1e-12));
  CHECK(again.landmark_count == saved.landmark_count);
  CHECK(again.e_max < 1e-12);
}

TEST_CASE("register from a landmark file with a box") {
  const fs::path dir = scratch("file");
  write_text(dir / "lm.csv", "# two landmarks in a 10x10x10 box\n5,5,5,5.3,5.2,5\n2.5,7.5,5,2.5,7.2,5.1\n");
  std::string out;
  REQUIRE(cli({"register", "--landmarks", (dir / "lm.csv").string(), "--box", "0", "0", "0", "10", "10", "10",
               "--levels", "3", "--out", (dir / "res").string(), "--timing"},
              &out) == 0);
  const std::string metrics = read_text(dir / "res/metrics.json");
  CHECK(metrics.find("wall_time") != std::string::npos);
  const VtkData d = parse_vtk(read_text(dir / "res/deformed.vtk"));
  CHECK(d.points[0].norm() < 1e-12);
  CHECK(d.points.back().isApprox(Vec3(10, 10, 10)));
  CHECK(read_text(dir / "res/config.json").find("\"box\"") != std::string::npos);
}

TEST_CASE("unwritable output directory") {
  const fs::path dir = scratch("ro");
  write_text(dir / "file", "x");
  std::string err;
  CHECK(cli({"register", "--case", "twist", "--levels", "3", "--out", (dir / "file" / "sub").string()}, nullptr, &err) == 1);
  CHECK(err.find("cannot create directory") != std::string::npos);
  CHECK(err.find("error") != std::string::npos);
}
