#include "vsrd/output.hpp"

#include <Eigen/Core>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <sstream>

namespace vsrd {

using nlohmann::json;

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

namespace {

std::ofstream open_output(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void vtk_header(std::ostream& out, const std::string& title) {
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
}

void vtk_points(std::ostream& out, const std::vector<Point2>& points) {
  out << "POINTS " << points.size() << " double\n";
  for (const auto& p : points) out << format_double(p.x()) << ' ' << format_double(p.y()) << " 0\n";
}

void vtk_point_data(std::ostream& out, std::size_t n_points, const std::vector<std::string>& names,
                    const std::vector<Vector>& fields) {
  if (names.size() != fields.size()) throw std::invalid_argument("vtk: one name per field required");
  if (fields.empty()) return;
  out << "POINT_DATA " << n_points << "\n";
  for (std::size_t f = 0; f < fields.size(); ++f) {
    if (static_cast<std::size_t>(fields[f].size()) != n_points)
      throw std::invalid_argument("vtk: field '" + names[f] + "' has the wrong length");
    out << "SCALARS " << names[f] << " double 1\nLOOKUP_TABLE default\n";
    for (Index i = 0; i < fields[f].size(); ++i) out << format_double(fields[f](i)) << "\n";
  }
}

std::vector<Point2> space_points(const AssembledForms& forms, Space space) {
  const Mesh2D& mesh = forms.mesh;
  std::vector<Point2> pts;
  switch (space) {
    case Space::volume:
      for (Index i = 0; i < mesh.n_vertices(); ++i) pts.push_back(mesh.vertex(i));
      break;
    case Space::boundary:
      for (Index e = 0; e < mesh.n_boundary_edges(); ++e) pts.push_back(mesh.vertex(mesh.boundary_edges()(0, e)));
      break;
    case Space::gamma2:
      for (Index k : forms.dofs.gamma2_boundary_dofs) pts.push_back(mesh.vertex(mesh.boundary_edges()(0, k)));
      break;
  }
  return pts;
}

}  // namespace

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : path_(path), columns_(header.size()), out_(open_output(path)) {
  if (header.empty()) throw std::invalid_argument("csv: header must not be empty");
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << "\n";
}

void CsvWriter::row(const std::vector<std::optional<double>>& cells) {
  if (cells.size() != columns_) throw std::invalid_argument("csv: row width differs from header in " + path_);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    if (cells[i]) out_ << format_double(*cells[i]);
  }
  out_ << "\n";
}

void CsvWriter::row(const std::vector<double>& cells) {
  row(std::vector<std::optional<double>>(cells.begin(), cells.end()));
}

const std::vector<std::string>& timeseries_header() {
  static const std::vector<std::string> h = {"n", "t", "mass", "E_disc", "E_exact", "D", "increment_energy", "residual"};
  return h;
}

std::vector<double> timeseries_row(const StepDiagnostics& d) {
  return {static_cast<double>(d.n), d.t, d.mass, d.E_disc, d.E_exact, d.D, d.increment_energy, d.linear_residual};
}

const std::vector<std::string>& eoc_header() {
  static const std::vector<std::string> h = {"h_or_tau", "eL2_vol", "rate", "eL2_surf", "rate",
                                             "eH1_vol",  "rate",    "eH1_surf", "rate"};
  return h;
}

void write_eoc_csv(const std::string& path, const EocTable& table) {
  CsvWriter csv(path, eoc_header());
  for (const auto& r : table.rows) {
    std::vector<std::optional<double>> cells = {r.h_or_tau};
    for (int k = 0; k < 4; ++k) {
      cells.emplace_back(r.errors[static_cast<std::size_t>(k)]);
      cells.push_back(r.rates[static_cast<std::size_t>(k)]);
    }
    csv.row(cells);
  }
}

std::string format_eoc_table(const EocTable& table) {
  std::ostringstream out;
  out << std::setw(10) << (table.parameter == "tau" ? "tau" : "h");
  for (const char* name : {"eL2_vol", "eL2_surf", "eH1_vol", "eH1_surf"}) out << std::setw(13) << name << std::setw(7) << "rate";
  out << "\n";
  for (const auto& r : table.rows) {
    out << std::setw(10) << std::setprecision(4) << std::defaultfloat << r.h_or_tau;
    for (std::size_t k = 0; k < 4; ++k) {
      out << std::setw(13) << std::scientific << std::setprecision(4) << r.errors[k];
      if (r.rates[k]) out << std::setw(7) << std::fixed << std::setprecision(2) << *r.rates[k];
      else out << std::setw(7) << "-";
      out << std::defaultfloat;
    }
    out << "\n";
  }
  return out.str();
}

void write_decay_csv(const std::string& path, const DecayStudy& study) {
  CsvWriter csv(path, {"level", "h", "fitted_rate", "fit_start", "fit_end", "fit_samples", "saturation_level",
                       "spectral_gap", "relative_gap_mismatch", "floor_ratio"});
  for (std::size_t k = 0; k < study.levels.size(); ++k) {
    const auto& l = study.levels[k];
    std::optional<double> ratio;
    if (k < study.floor_ratios.size()) ratio = study.floor_ratios[k];
    csv.row(std::vector<std::optional<double>>{
        static_cast<double>(l.level), l.h, l.report.fitted_rate, l.report.fit_start, l.report.fit_end,
        static_cast<double>(l.report.fit_samples), l.report.saturation_level, l.report.spectral_gap,
        l.report.relative_gap_mismatch, ratio});
  }
}

void write_decay_series_csv(const std::string& path, const DecayLevel& level) {
  CsvWriter csv(path, {"n", "t", "E_disc", "E_exact"});
  for (std::size_t i = 0; i < level.times.size(); ++i)
    csv.row(std::vector<double>{static_cast<double>(i), level.times[i], level.E_disc[i], level.E_exact[i]});
}

std::string format_decay_table(const DecayStudy& study) {
  std::ostringstream out;
  out << std::setw(6) << "level" << std::setw(10) << "h" << std::setw(12) << "rate" << std::setw(12) << "gap"
      << std::setw(11) << "mismatch" << std::setw(13) << "floor" << std::setw(9) << "ratio" << "\n";
  for (std::size_t k = 0; k < study.levels.size(); ++k) {
    const auto& l = study.levels[k];
    out << std::setw(6) << l.level << std::setw(10) << std::setprecision(4) << l.h << std::fixed << std::setprecision(6)
        << std::setw(12) << l.report.fitted_rate << std::setw(12) << l.report.spectral_gap << std::setprecision(4)
        << std::setw(11) << l.report.relative_gap_mismatch << std::scientific << std::setprecision(3) << std::setw(13)
        << l.report.saturation_level << std::fixed << std::setprecision(2);
    if (k < study.floor_ratios.size()) out << std::setw(9) << study.floor_ratios[k];
    else out << std::setw(9) << "-";
    out << std::defaultfloat << "\n";
  }
  return out.str();
}

void write_vtk_volume(const std::string& path, const Mesh2D& mesh, const std::vector<std::string>& names,
                      const std::vector<Vector>& fields) {
  std::ofstream out = open_output(path);
  vtk_header(out, "volume species");
  std::vector<Point2> pts;
  for (Index i = 0; i < mesh.n_vertices(); ++i) pts.push_back(mesh.vertex(i));
  vtk_points(out, pts);
  const Index nt = mesh.n_triangles();
  out << "CELLS " << nt << ' ' << 4 * nt << "\n";
  for (Index t = 0; t < nt; ++t)
    out << "3 " << mesh.triangles()(0, t) << ' ' << mesh.triangles()(1, t) << ' ' << mesh.triangles()(2, t) << "\n";
  out << "CELL_TYPES " << nt << "\n";
  for (Index t = 0; t < nt; ++t) out << "5\n";
  vtk_point_data(out, pts.size(), names, fields);
}

void write_vtk_polyline(const std::string& path, const AssembledForms& forms, Space space,
                        const std::vector<std::string>& names, const std::vector<Vector>& fields) {
  if (space == Space::volume) throw std::invalid_argument("write_vtk_polyline: surface space required");
  std::ofstream out = open_output(path);
  vtk_header(out, space == Space::boundary ? "boundary species" : "gamma2 species");
  const std::vector<Point2> pts = space_points(forms, space);
  vtk_points(out, pts);
  const Index n = static_cast<Index>(pts.size());
  const Index lines = space == Space::boundary ? n : n - 1;
  out << "CELLS " << lines << ' ' << 3 * lines << "\n";
  for (Index k = 0; k < lines; ++k) out << "2 " << k << ' ' << (k + 1) % n << "\n";
  out << "CELL_TYPES " << lines << "\n";
  for (Index k = 0; k < lines; ++k) out << "3\n";
  vtk_point_data(out, pts.size(), names, fields);
}

void write_vtk_mesh(const std::string& path, const Mesh2D& mesh) {
  std::ofstream out = open_output(path);
  vtk_header(out, "mesh");
  std::vector<Point2> pts;
  for (Index i = 0; i < mesh.n_vertices(); ++i) pts.push_back(mesh.vertex(i));
  vtk_points(out, pts);
  const Index nt = mesh.n_triangles(), nb = mesh.n_boundary_edges();
  out << "CELLS " << nt + nb << ' ' << 4 * nt + 3 * nb << "\n";
  for (Index t = 0; t < nt; ++t)
    out << "3 " << mesh.triangles()(0, t) << ' ' << mesh.triangles()(1, t) << ' ' << mesh.triangles()(2, t) << "\n";
  for (Index e = 0; e < nb; ++e) out << "2 " << mesh.boundary_edges()(0, e) << ' ' << mesh.boundary_edges()(1, e) << "\n";
  out << "CELL_TYPES " << nt + nb << "\n";
  for (Index t = 0; t < nt; ++t) out << "5\n";
  for (Index e = 0; e < nb; ++e) out << "3\n";
  out << "CELL_DATA " << nt + nb << "\nSCALARS part int 1\nLOOKUP_TABLE default\n";
  for (Index t = 0; t < nt; ++t) out << "0\n";
  for (Index e = 0; e < nb; ++e) out << (mesh.has_gamma2() && mesh.gamma2_edge_mask()[static_cast<std::size_t>(e)] ? "2\n" : "1\n");
}

std::vector<std::string> write_vtk_state(const std::string& stem, const AssembledForms& forms,
                                         const ModelParams& params, const StateVector& state) {
  const auto layout = species_layout(params);
  if (state.fields.size() != layout.size()) throw std::invalid_argument("write_vtk_state: species count mismatch");
  std::vector<std::string> written;
  for (Space space : {Space::volume, Space::boundary, Space::gamma2}) {
    std::vector<std::string> names;
    std::vector<Vector> fields;
    for (std::size_t i = 0; i < layout.size(); ++i) {
      if (layout[i].space != space) continue;
      names.push_back(layout[i].name);
      fields.push_back(state.fields[i]);
    }
    if (names.empty()) continue;
    const std::string path = stem + "_" + to_string(space) + ".vtk";
    if (space == Space::volume) write_vtk_volume(path, forms.mesh, names, fields);
    else write_vtk_polyline(path, forms, space, names, fields);
    written.push_back(path);
  }
  return written;
}

void write_mesh_text(const std::string& path, const Mesh2D& mesh) {
  std::ofstream out = open_output(path);
  out << "vertices " << mesh.n_vertices() << "\n";
  for (Index i = 0; i < mesh.n_vertices(); ++i)
    out << format_double(mesh.vertex(i).x()) << ' ' << format_double(mesh.vertex(i).y()) << "\n";
  out << "triangles " << mesh.n_triangles() << "\n";
  for (Index t = 0; t < mesh.n_triangles(); ++t)
    out << mesh.triangles()(0, t) << ' ' << mesh.triangles()(1, t) << ' ' << mesh.triangles()(2, t) << "\n";
  out << "boundary " << mesh.n_boundary_edges() << "\n";
  for (Index e = 0; e < mesh.n_boundary_edges(); ++e) {
    out << mesh.boundary_edges()(0, e) << ' ' << mesh.boundary_edges()(1, e);
    if (mesh.has_gamma2()) out << ' ' << (mesh.gamma2_edge_mask()[static_cast<std::size_t>(e)] ? 1 : 0);
    out << "\n";
  }
}

void write_matrix_market(const std::string& path, const SparseMatrix& matrix) {
  std::ofstream out = open_output(path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << matrix.rows() << ' ' << matrix.cols() << ' ' << matrix.nonZeros() << "\n";
  for (Index k = 0; k < matrix.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(matrix, k); it; ++it)
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << format_double(it.value()) << "\n";
}

RunManifest::RunManifest(std::string directory, std::string command, json config) : directory_(std::move(directory)) {
  doc_["command"] = std::move(command);
  doc_["config"] = std::move(config);
  doc_["status"] = "running";
  doc_["failures"] = json::array();
  doc_["files"] = json::array();
  doc_["versions"] = {{"vsrd", "1.0.0"},
                      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                    std::to_string(EIGEN_MINOR_VERSION)},
                      {"compiler", __VERSION__},
                      {"cxx_standard", __cplusplus}};
  doc_["started"] = utc_now();
  doc_["h1_norm"] = "full";
  std::filesystem::create_directories(directory_);
  write();
}

void RunManifest::add_file(const std::string& relative_path) {
  for (const auto& f : doc_["files"])
    if (f == relative_path) return;
  doc_["files"].push_back(relative_path);
}

void RunManifest::add_failure(const std::string& name, const std::string& detail) {
  doc_["failures"].push_back({{"name", name}, {"detail", detail}});
}

void RunManifest::write() const {
  std::ofstream out = open_output(path());
  out << doc_.dump(2) << "\n";
}

void RunManifest::finalize() {
  for (const auto& f : doc_["files"]) {
    const std::string rel = f.get<std::string>();
    if (!std::filesystem::exists(directory_ + "/" + rel)) add_failure("missing_output", rel);
  }
  doc_["finished"] = utc_now();
  doc_["status"] = ok() ? "ok" : "failed";
  write();
}

json geometry_report(const AssembledForms& forms) {
  const MeshQuality q = quality(forms.mesh);
  const Geometry exact = Geometry::exact(forms.mesh);
  json g = {{"area_h", forms.area},
            {"perimeter_h", forms.perimeter},
            {"area", exact.area},
            {"perimeter", exact.perimeter},
            {"h", q.h},
            {"min_angle_deg", q.min_angle_deg},
            {"max_shape_ratio", q.max_ratio},
            {"vertices", forms.mesh.n_vertices()},
            {"triangles", forms.mesh.n_triangles()},
            {"boundary_edges", forms.mesh.n_boundary_edges()},
            {"level", forms.mesh.level()}};
  if (forms.mesh.has_gamma2()) {
    g["gamma2_length_h"] = forms.gamma2_length;
    g["gamma2_length"] = exact.gamma2_length;
    g["gamma2_theta"] = {forms.mesh.gamma2_theta_min(), forms.mesh.gamma2_theta_max()};
  }
  return g;
}

json equilibrium_report(const Equilibrium& eq, const ModelParams& params) {
  json out = {{"mass", eq.mass}};
  const auto layout = species_layout(params);
  for (std::size_t i = 0; i < layout.size(); ++i) out[layout[i].name] = eq.values[i];
  return out;
}

}  // namespace vsrd
