#include "vsrd/config.hpp"
#include "vsrd/expression.hpp"
#include "vsrd/output.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace vsrd;
using nlohmann::json;

namespace {

std::string field_of(const json& doc) {
  try {
    RunConfig::from_json(doc);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<accepted>";
}

std::string temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("vsrd_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("default configuration") {
  const RunConfig c = RunConfig::from_json(json::object());
  CHECK(c.model == "two-species");
  CHECK(std::get<TwoSpeciesParams>(c.params).lambda == 4.0);
  CHECK(c.time.tau == 0.01);
  CHECK(c.time.t_final == 2.0);
  CHECK(c.initial_data == "paper-2species");
  CHECK(c.time_grid().n_steps == 200);
  CHECK(c.snapshot_steps().empty());
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("configuration errors name the field") {
  CHECK(field_of({{"bogus", 1}}) == "bogus");
  CHECK(field_of({{"params", {{"lambda", -1.0}}}}) == "params.lambda");
  CHECK(field_of({{"params", {{"lambda", "four"}}}}) == "params.lambda");
  CHECK(field_of({{"params", {{"sigma", 1.0}}}}) == "params.sigma");
  CHECK(field_of({{"mesh", {{"rings", 0}}}}) == "mesh.rings");
  CHECK(field_of({{"mesh", {{"rings", 2.5}}}}) == "mesh.rings");
  CHECK(field_of({{"time", {{"tau", 0.0}}}}) == "time.tau");
  CHECK(field_of({{"time", {{"tau", 0.5}, {"t_final", 0.1}}}}) == "time.t_final");
  CHECK(field_of({{"model", "three-species"}}) == "model");
  CHECK(field_of({{"gamma2", {{"theta_min", 0.0}}}}) == "gamma2");
  CHECK(field_of({{"model", "four-species"}, {"gamma2", {{"theta_min", 2.0}, {"theta_max", 1.0}}}}) == "gamma2");
  CHECK(field_of({{"initial_data", "nope"}}) == "initial_data");
  CHECK(field_of({{"initial_data", "paper-4species"}}) == "initial_data");
  CHECK(field_of({{"initial_data", {{"L", "x+"}, {"l", "1"}}}}) == "initial_data.L");
  CHECK(field_of({{"initial_data", {{"L", "1"}}}}) == "initial_data.l");
  CHECK(field_of({{"options", {{"snapshot_times", {0.0, 5.0}}}}}) == "options.snapshot_times[1]");
  CHECK(field_of({{"options", {{"lumping", 1}}}}) == "options.lumping");
  CHECK(field_of({{"convergence", {{"levels", 1}}}}) == "convergence.levels");
  CHECK(field_of({{"convergence", {{"taus", {0.5}}}}}) == "convergence.taus");
  CHECK(field_of({{"convergence", {{"taus", {0.5, -0.25}}}}}) == "convergence.taus[1]");
  CHECK(field_of({{"decay", {{"levels", {1, 1}}}}}) == "decay.levels");
  CHECK(field_of({{"decay", {{"fit_entropy", "both"}}}}) == "decay.fit_entropy");
  CHECK(field_of({{"gap", {{"block_size", 0}}}}) == "gap.block_size");
  CHECK(field_of(json::array()) == "<root>");

  try {
    RunConfig::from_json({{"params", {{"d_L", -0.01}}}});
    FAIL("expected an exception");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).rfind("params.d_L:", 0) == 0);
  }
}

TEST_CASE("loading from disk") {
  const std::string dir = temp_dir("load");
  {
    std::ofstream(dir + "/bad.json") << "{ \"model\": ";
    std::ofstream(dir + "/ok.json") << R"({"time": {"tau": 0.05, "t_final": 1.0}})";
  }
  CHECK_THROWS_AS(RunConfig::load(dir + "/bad.json"), ConfigError);
  CHECK_THROWS_AS(RunConfig::load(dir + "/missing.json"), ConfigError);
  CHECK(RunConfig::load(dir + "/ok.json").time_grid().n_steps == 20);
}

TEST_CASE("four-species defaults") {
  const RunConfig c = RunConfig::from_json({{"model", "four-species"}});
  CHECK(c.initial_data == "paper-4species");
  CHECK(c.mesh.rings == 13);
  CHECK(c.mesh.refinements == 1);
  CHECK(c.gamma2.theta_min == 0.0);
  CHECK(c.gamma2.theta_max == doctest::Approx(std::numbers::pi));
  CHECK(c.time.t_final == 3.0);
  CHECK(c.snapshot_steps() == std::vector<Index>{0, 13, 156, 300});
  CHECK(c.build_mesh(0).has_gamma2());
  CHECK_THROWS_AS(c.convergence_config(), ConfigError);

  // default snapshot times beyond a shorter horizon are dropped
  const RunConfig s = RunConfig::from_json({{"model", "four-species"}, {"time", {{"t_final", 1.0}}}});
  CHECK(s.snapshot_steps() == std::vector<Index>{0, 13});
}

TEST_CASE("snapshot cadence and times combine") {
  const RunConfig c = RunConfig::from_json(
      {{"time", {{"tau", 0.1}, {"t_final", 1.0}}}, {"options", {{"snapshot_every", 4}, {"snapshot_times", {0.3, 0.8}}}}});
  CHECK(c.snapshot_steps() == std::vector<Index>{0, 3, 4, 8});
}

TEST_CASE("configuration round trip") {
  const json doc = {{"model", "four-species"},
                    {"params", {{"xi", 1.0}, {"d_P", 0.03}}},
                    {"mesh", {{"rings", 5}, {"refinements", 2}}},
                    {"gamma2", {{"theta_min", 0.5}, {"theta_max", 2.5}}},
                    {"initial_data", {{"L", "1"}, {"P", "x^2"}, {"l", "2"}, {"p", "1+y"}}},
                    {"options", {{"snapshot_times", {0.5}}, {"output_dir", "out"}}}};
  const RunConfig a = RunConfig::from_json(doc);
  const RunConfig b = RunConfig::from_json(a.to_json());
  CHECK(a.to_json() == b.to_json());
  CHECK(std::get<FourSpeciesParams>(b.params).d_P == 0.03);
  CHECK(b.expressions == std::vector<std::string>{"1", "x^2", "2", "1+y"});
  CHECK(b.gamma2.theta_max == 2.5);
  CHECK(b.options.output_dir == "out");
}

TEST_CASE("expressions match the builtin data") {
  const RunConfig c =
      RunConfig::from_json({{"initial_data", {{"L", "0.5*(x^2+y^2)"}, {"l", "0.5·(1+x)"}}}});
  const InitialData parsed = c.initial_data_fields();
  const InitialData builtin = builtin_initial_data("paper-2species");
  for (double x : {-0.7, 0.0, 0.3})
    for (double y : {-0.2, 0.6}) {
      CHECK(parsed.fields[0](x, y) == doctest::Approx(builtin.fields[0](x, y)).epsilon(1e-15));
      CHECK(parsed.fields[1](x, y) == doctest::Approx(builtin.fields[1](x, y)).epsilon(1e-15));
    }
}

TEST_CASE("expression grammar") {
  const auto at = [](const std::string& s, double x = 0.3, double y = -1.2) { return parse_expression(s)(x, y); };
  CHECK(at("-x^2") == doctest::Approx(-0.09));
  CHECK(at("2^3^2") == doctest::Approx(512.0));
  CHECK(at("2^-1") == doctest::Approx(0.5));
  CHECK(at("1 - 2 - 3") == doctest::Approx(-4.0));
  CHECK(at("8 / 4 / 2") == doctest::Approx(1.0));
  CHECK(at("1 + 2 * 3") == doctest::Approx(7.0));
  CHECK(at("(1 + 2) * 3") == doctest::Approx(9.0));
  CHECK(at("2 − x") == doctest::Approx(1.7));
  CHECK(at("sin(pi/2) + cos(0) + exp(0) + sqrt(4)") == doctest::Approx(5.0));
  CHECK(at("x*y") == doctest::Approx(-0.36));
  CHECK(at("1.5e2") == doctest::Approx(150.0));
  CHECK(at(".5") == doctest::Approx(0.5));
  for (const char* bad : {"", "x +", "(x", "x)", "foo(1)", "1 2", "0x1", ".", "sin x", "z", "1e"})
    CHECK_THROWS_AS(parse_expression(bad), ExpressionError);
  try {
    parse_expression("1 + * 2");
    FAIL("expected an exception");
  } catch (const ExpressionError& e) {
    CHECK(e.position() == 4);
  }
}

TEST_CASE("number formatting round trips") {
  for (double v : {0.1, 1.0 / 3.0, 5.0 * std::numbers::pi / 4.0, 1e-300, -2.5e17}) {
    const std::string s = format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
}

TEST_CASE("csv output") {
  const std::string dir = temp_dir("csv");
  {
    CsvWriter w(dir + "/nested/a.csv", {"a", "b"});
    w.row(std::vector<double>{1.0, 0.25});
    w.row(std::vector<std::optional<double>>{std::nullopt, 2.0});
    CHECK_THROWS_AS(w.row(std::vector<double>{1.0}), std::invalid_argument);
  }
  const auto lines = read_lines(dir + "/nested/a.csv");
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "a,b");
  CHECK(lines[1] == "1,0.25");
  CHECK(lines[2] == ",2");
  CHECK(slurp(dir + "/nested/a.csv").find('\r') == std::string::npos);

  EocTable t;
  EocRow r0, r1;
  r0.h_or_tau = 0.5;
  r0.errors = {4e-2, 4e-2, 1e-1, 1e-1};
  r1.h_or_tau = 0.25;
  r1.errors = {1e-2, 1e-2, 5e-2, 5e-2};
  t.rows = {r0, r1};
  compute_rates(t);
  write_eoc_csv(dir + "/eoc.csv", t);
  const auto eoc = read_lines(dir + "/eoc.csv");
  REQUIRE(eoc.size() == 3);
  CHECK(eoc[0] == "h_or_tau,eL2_vol,rate,eL2_surf,rate,eH1_vol,rate,eH1_surf,rate");
  const auto cells = [](const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) out.push_back(c);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
  };
  const auto first = cells(eoc[1]), second = cells(eoc[2]);
  REQUIRE(first.size() == 9);
  REQUIRE(second.size() == 9);
  for (int k : {2, 4, 6, 8}) CHECK(first[static_cast<std::size_t>(k)].empty());
  CHECK(std::stod(second[2]) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(std::stod(second[8]) == doctest::Approx(1.0).epsilon(1e-14));
  const std::string text = format_eoc_table(t);
  CHECK(text.find("2.00") != std::string::npos);
  CHECK(text.find("-") != std::string::npos);
}

TEST_CASE("vtk output") {
  const std::string dir = temp_dir("vtk");
  const Mesh2D mesh = mark_gamma2(build_disk_mesh(2), 0.0, std::numbers::pi);
  const AssembledForms forms = assemble(mesh);
  const FourSpeciesParams p;
  const StateVector s = constant_state(forms, p, {1.0, 2.0, 3.0, 4.0});
  const auto files = write_vtk_state(dir + "/snap", forms, p, s);
  REQUIRE(files.size() == 3);

  const std::string vol = slurp(files[0]);
  CHECK(vol.rfind("# vtk DataFile Version", 0) == 0);
  CHECK(vol.find("POINTS 19 double") != std::string::npos);
  CHECK(vol.find("CELLS 24 96") != std::string::npos);
  CHECK(vol.find("CELL_TYPES 24\n5\n") != std::string::npos);
  CHECK(vol.find("SCALARS L double") != std::string::npos);
  CHECK(vol.find("SCALARS P double") != std::string::npos);

  const std::string bnd = slurp(files[1]);
  CHECK(bnd.find("POINTS 12 double") != std::string::npos);
  CHECK(bnd.find("CELLS 12 36") != std::string::npos);
  CHECK(bnd.find("CELL_TYPES 12\n3\n") != std::string::npos);

  const std::string g2 = slurp(files[2]);
  CHECK(g2.find("POINTS 7 double") != std::string::npos);
  CHECK(g2.find("CELLS 6 18") != std::string::npos);

  write_vtk_mesh(dir + "/mesh.vtk", mesh);
  const std::string m = slurp(dir + "/mesh.vtk");
  CHECK(m.find("CELLS 36 132") != std::string::npos);
  CHECK(m.find("SCALARS part int") != std::string::npos);
}

TEST_CASE("matrix market and mesh text") {
  const std::string dir = temp_dir("mm");
  SparseMatrix a(2, 3);
  a.insert(0, 0) = 1.5;
  a.insert(1, 2) = -2.0;
  write_matrix_market(dir + "/a.mtx", a);
  const auto lines = read_lines(dir + "/a.mtx");
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "%%MatrixMarket matrix coordinate real general");
  CHECK(lines[1] == "2 3 2");
  CHECK(lines[2] == "1 1 1.5");
  CHECK(lines[3] == "2 3 -2");

  write_mesh_text(dir + "/mesh.txt", build_disk_mesh(1));
  const std::string t = slurp(dir + "/mesh.txt");
  CHECK(t.find("vertices 7") != std::string::npos);
  CHECK(t.find("triangles 6") != std::string::npos);
}

TEST_CASE("run manifest lifecycle") {
  const std::string dir = temp_dir("manifest");
  RunManifest m(dir, "simulate", {{"model", "two-species"}});
  CHECK(std::filesystem::exists(m.path()));
  CHECK(json::parse(slurp(m.path()))["status"] == "running");
  {
    std::ofstream(dir + "/present.csv") << "a\n";
  }
  m.add_file("present.csv");
  m.add_file("present.csv");
  m.add_file("absent.csv");
  m.finalize();
  const json doc = json::parse(slurp(m.path()));
  CHECK(doc["files"].size() == 2);
  CHECK(doc["status"] == "failed");
  REQUIRE(doc["failures"].size() == 1);
  CHECK(doc["failures"][0]["name"] == "missing_output");
  CHECK(doc["config"]["model"] == "two-species");
  CHECK(doc.contains("finished"));

  RunManifest ok(dir + "/ok", "gap", json::object());
  ok.finalize();
  CHECK(json::parse(slurp(ok.path()))["status"] == "ok");
}
