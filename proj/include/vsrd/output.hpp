#pragma once

#include "vsrd/diagnostics.hpp"

#include <json.hpp>

#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace vsrd {

/// Shortest round-trip-safe decimal: printf("%.17g").
std::string format_double(double value);

/// Comma-separated writer with a mandatory header and Unix newlines.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  /// Empty optionals are written as empty cells.
  void row(const std::vector<std::optional<double>>& cells);
  void row(const std::vector<double>& cells);
  void flush() { out_.flush(); }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::size_t columns_;
  std::ofstream out_;
};

const std::vector<std::string>& timeseries_header();
std::vector<double> timeseries_row(const StepDiagnostics& d);

const std::vector<std::string>& eoc_header();
void write_eoc_csv(const std::string& path, const EocTable& table);
/// Aligned text rendering of the table, rates printed with two decimals.
std::string format_eoc_table(const EocTable& table);

void write_decay_csv(const std::string& path, const DecayStudy& study);
void write_decay_series_csv(const std::string& path, const DecayLevel& level);
std::string format_decay_table(const DecayStudy& study);

/// Triangles as VTK cells of type 5 with one point scalar per field.
void write_vtk_volume(const std::string& path, const Mesh2D& mesh, const std::vector<std::string>& names,
                      const std::vector<Vector>& fields);
/// Boundary (or Gamma_2) polyline as line cells of type 3, one point scalar per field.
void write_vtk_polyline(const std::string& path, const AssembledForms& forms, Space space,
                        const std::vector<std::string>& names, const std::vector<Vector>& fields);
/// Triangles plus boundary lines; cell data "part" is 0 for triangles, 1 for
/// boundary edges and 2 for Gamma_2 edges.
void write_vtk_mesh(const std::string& path, const Mesh2D& mesh);
/// One file per space present in the state: <stem>_volume.vtk,
/// <stem>_boundary.vtk, <stem>_gamma2.vtk. Returns the paths written.
std::vector<std::string> write_vtk_state(const std::string& stem, const AssembledForms& forms,
                                         const ModelParams& params, const StateVector& state);

/// Vertices, triangles and boundary chain as plain text.
void write_mesh_text(const std::string& path, const Mesh2D& mesh);
/// Matrix Market coordinate real general.
void write_matrix_market(const std::string& path, const SparseMatrix& matrix);

/// JSON run manifest, written when opened and rewritten on finalize.
class RunManifest {
 public:
  RunManifest(std::string directory, std::string command, nlohmann::json config);

  nlohmann::json& data() { return doc_; }
  /// Registers a file relative to the output directory.
  void add_file(const std::string& relative_path);
  void add_failure(const std::string& name, const std::string& detail);
  bool ok() const { return doc_["failures"].empty(); }
  void write() const;
  /// Checks the inventory, stamps the finish time and status, and rewrites the file.
  void finalize();
  std::string path() const { return directory_ + "/manifest.json"; }

 private:
  std::string directory_;
  nlohmann::json doc_;
};

nlohmann::json geometry_report(const AssembledForms& forms);
nlohmann::json equilibrium_report(const Equilibrium& eq, const ModelParams& params);

}  // namespace vsrd
