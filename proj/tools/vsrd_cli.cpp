#include "vsrd/config.hpp"
#include "vsrd/output.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>

using namespace vsrd;
using nlohmann::json;

namespace {

constexpr double kMassTolerance = 1e-9;
constexpr double kIdentityTolerance = 1e-10;

enum Exit { ok = 0, invariant_violated = 1, usage = 2, runtime = 3 };

struct Context {
  RunConfig config;
  std::string dir;
  bool quiet = false;
};

std::string step_stem(Index n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "step_%06ld", static_cast<long>(n));
  return buf;
}

std::string relative(const std::string& dir, const std::string& path) {
  return std::filesystem::relative(path, dir).generic_string();
}

void check_trajectory(RunManifest& manifest, const TrajectorySummary& s, bool has_reference) {
  if (s.max_relative_mass_drift > kMassTolerance)
    manifest.add_failure("mass_conservation", "relative drift " + format_double(s.max_relative_mass_drift));
  if (!has_reference) return;
  if (s.max_identity_residual > kIdentityTolerance)
    manifest.add_failure("entropy_identity", "relative residual " + format_double(s.max_identity_residual));
  for (std::size_t n = 1; n < s.history.size(); ++n) {
    const double prev = s.history[n - 1].E_disc, cur = s.history[n].E_disc;
    if (cur > prev * (1.0 + 1e-12)) {
      manifest.add_failure("entropy_monotonicity", "E_disc increased at step " + std::to_string(n));
      break;
    }
  }
}

void cmd_simulate(const Context& ctx, RunManifest& manifest) {
  const RunConfig& cfg = ctx.config;
  const Mesh2D mesh = cfg.build_mesh();
  const AssembledForms forms = assemble(mesh);
  const InitialData data = cfg.initial_data_fields();
  const StateVector initial = initial_state(forms, cfg.params, data);
  const SystemOperator op = SystemOperator::build(forms, cfg.params, cfg.time.tau, cfg.stepper_options());
  const double mass_h = total_mass(forms, initial);
  const double mass_exact = exact_mass(mesh, cfg.params, data);

  json& m = manifest.data();
  m["geometry"] = geometry_report(forms);
  m["mass_h0"] = mass_h;
  m["mass_exact"] = mass_exact;
  m["symmetric_operator"] = op.symmetric();
  m["stiffness_z_matrix"] = stiffness_is_z_matrix(forms);
  if (const auto* q = std::get_if<FourSpeciesParams>(&cfg.params))
    m["detailed_balance_residual"] = q->detailed_balance_residual();

  std::optional<EntropyReference> ref;
  if (op.symmetric()) {
    ref = make_entropy_reference(op, forms, mass_h, mass_exact);
    m["equilibrium"] = {{"discrete", equilibrium_report(ref->discrete, cfg.params)},
                        {"exact", equilibrium_report(ref->exact, cfg.params)}};
  }
  write_vtk_mesh(ctx.dir + "/mesh.vtk", mesh);
  manifest.add_file("mesh.vtk");
  manifest.add_file("timeseries.csv");
  manifest.write();

  CsvWriter csv(ctx.dir + "/timeseries.csv", timeseries_header());
  TrajectorySink sink;
  sink.on_diagnostics = [&](const StepDiagnostics& d) { csv.row(timeseries_row(d)); };
  sink.snapshot_steps = cfg.snapshot_steps();
  std::vector<json> snapshots;
  sink.on_snapshot = [&](Index n, const StateVector& s) {
    json entry = {{"step", n}, {"t", s.time}, {"files", json::array()}};
    for (const auto& f : write_vtk_state(ctx.dir + "/snapshots/" + step_stem(n), forms, cfg.params, s)) {
      manifest.add_file(relative(ctx.dir, f));
      entry["files"].push_back(relative(ctx.dir, f));
    }
    snapshots.push_back(entry);
  };

  const TrajectorySummary summary = run(op, initial, cfg.time_grid(), sink, ref ? &*ref : nullptr);
  csv.flush();

  m["snapshots"] = snapshots;
  m["summary"] = {{"steps", summary.steps},
                  {"max_relative_mass_drift", summary.max_relative_mass_drift},
                  {"max_identity_residual", summary.max_identity_residual},
                  {"entropy_strictly_decreasing", summary.entropy_strictly_decreasing},
                  {"min_value", summary.min_value},
                  {"final_E_disc", summary.final.E_disc},
                  {"final_E_exact", summary.final.E_exact}};
  check_trajectory(manifest, summary, ref.has_value());
  if (cfg.options.lumping) {
    double min0 = std::numeric_limits<double>::infinity();
    for (const auto& f : initial.fields) min0 = std::min(min0, f.minCoeff());
    const bool guaranteed = stiffness_is_z_matrix(forms) && min0 >= 0.0;
    m["nonnegativity"] = {{"guaranteed", guaranteed}, {"min_value", summary.min_value}};
    if (guaranteed && summary.min_value < 0.0)
      manifest.add_failure("nonnegativity", "minimum nodal value " + format_double(summary.min_value));
  }

  if (!ctx.quiet) {
    std::cout << "steps " << summary.steps << ", triangles " << mesh.n_triangles() << "\n"
              << "mass drift " << summary.max_relative_mass_drift << ", identity residual "
              << summary.max_identity_residual << "\n"
              << "E_disc " << summary.initial.E_disc << " -> " << summary.final.E_disc << "\n";
  }
}

void cmd_convergence(const Context& ctx, const std::string& mode, RunManifest& manifest) {
  const RunConfig& cfg = ctx.config;
  manifest.data()["mode"] = mode;
  manifest.add_file("convergence.csv");
  manifest.add_file("convergence.txt");
  manifest.write();
  const ConvergenceConfig cc = cfg.convergence_config();
  const EocTable table = mode == "h" ? h_convergence_study(cc) : tau_convergence_study(cc);
  write_eoc_csv(ctx.dir + "/convergence.csv", table);
  const std::string text = format_eoc_table(table);
  {
    std::ofstream out(ctx.dir + "/convergence.txt", std::ios::binary);
    out << text;
  }
  if (!ctx.quiet) std::cout << text;
}

void cmd_decay(const Context& ctx, RunManifest& manifest) {
  const RunConfig& cfg = ctx.config;
  manifest.add_file("decay.csv");
  manifest.add_file("decay.txt");
  manifest.write();
  const DecayStudy study = decay_study(cfg.decay_config());
  write_decay_csv(ctx.dir + "/decay.csv", study);
  json levels = json::array();
  for (const auto& l : study.levels) {
    const std::string name = "decay_series_level" + std::to_string(l.level) + ".csv";
    write_decay_series_csv(ctx.dir + "/" + name, l);
    manifest.add_file(name);
    levels.push_back({{"level", l.level},
                      {"fitted_rate", l.report.fitted_rate},
                      {"spectral_gap", l.report.spectral_gap},
                      {"saturation_level", l.report.saturation_level},
                      {"entropy_strictly_decreasing", l.entropy_strictly_decreasing}});
    if (l.max_relative_mass_drift > kMassTolerance)
      manifest.add_failure("mass_conservation", "level " + std::to_string(l.level) + " drift " +
                                                    format_double(l.max_relative_mass_drift));
    if (l.max_identity_residual > kIdentityTolerance)
      manifest.add_failure("entropy_identity", "level " + std::to_string(l.level) + " residual " +
                                                   format_double(l.max_identity_residual));
  }
  manifest.data()["levels"] = levels;
  manifest.data()["floor_ratios"] = study.floor_ratios;
  const std::string text = format_decay_table(study);
  {
    std::ofstream out(ctx.dir + "/decay.txt", std::ios::binary);
    out << text;
  }
  if (!ctx.quiet) std::cout << text;
}

void cmd_gap(const Context& ctx, RunManifest& manifest) {
  const RunConfig& cfg = ctx.config;
  manifest.add_file("gap.csv");
  manifest.write();
  CsvWriter csv(ctx.dir + "/gap.csv", {"level", "h", "c0", "mu", "iterations", "residual", "certificate_mass"});
  json levels = json::array();
  const int finest = cfg.mesh.refinements;
  for (int level = std::max(0, finest - 1); level <= finest; ++level) {
    const AssembledForms forms = assemble(cfg.build_mesh(level));
    const SpectralGap g = spectral_gap(forms, cfg.params, cfg.gap_options());
    const double cert_mass = total_mass(forms, g.certificate);
    csv.row(std::vector<double>{static_cast<double>(level), quality(forms.mesh).h, g.c0, g.mu,
                                static_cast<double>(g.iterations), g.residual, cert_mass});
    levels.push_back({{"level", level}, {"c0", g.c0}, {"iterations", g.iterations}, {"certificate_mass", cert_mass}});
    if (level == finest) {
      for (const auto& f : write_vtk_state(ctx.dir + "/gap_certificate", forms, cfg.params, g.certificate))
        manifest.add_file(relative(ctx.dir, f));
      manifest.data()["geometry"] = geometry_report(forms);
      manifest.data()["c0"] = g.c0;
    }
    if (!ctx.quiet) std::cout << "level " << level << "  c0* = " << format_double(g.c0) << "\n";
  }
  csv.flush();
  manifest.data()["levels"] = levels;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Volume-surface reaction-diffusion simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, output_dir, mode = "h";
  bool quiet = false;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--output", output_dir, "Output directory (overrides options.output_dir)");
  app.add_flag("--quiet", quiet, "Suppress progress output");
  auto* simulate = app.add_subcommand("simulate", "Run one simulation and write time series and snapshots");
  auto* convergence = app.add_subcommand("convergence", "Convergence table in h or tau");
  convergence->add_option("--mode", mode, "h or tau")->check(CLI::IsMember({"h", "tau"}));
  auto* decay = app.add_subcommand("decay", "Long-time entropy decay on several refinement levels");
  auto* gap = app.add_subcommand("gap", "Spectral gap of the entropy-dissipation pencil");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : usage;
  }

  Context ctx;
  ctx.quiet = quiet;
  try {
    ctx.config = config_path.empty() ? RunConfig::defaults("two-species") : RunConfig::load(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return usage;
  }
  ctx.dir = output_dir.empty() ? ctx.config.options.output_dir : output_dir;

  std::string command;
  for (auto* sub : {simulate, convergence, decay, gap})
    if (sub->parsed()) command = sub->get_name();
  std::unique_ptr<RunManifest> manifest;
  try {
    manifest = std::make_unique<RunManifest>(ctx.dir, command, ctx.config.to_json());
    if (command == "simulate") cmd_simulate(ctx, *manifest);
    else if (command == "convergence") cmd_convergence(ctx, mode, *manifest);
    else if (command == "decay") cmd_decay(ctx, *manifest);
    else cmd_gap(ctx, *manifest);
  } catch (const std::exception& e) {
    const bool config = dynamic_cast<const ConfigError*>(&e) != nullptr;
    std::cerr << (config ? "config error: " : "error: ") << e.what() << "\n";
    if (manifest) {
      manifest->add_failure(config ? "config" : "runtime_error", e.what());
      manifest->finalize();
    }
    return config ? usage : runtime;
  }
  manifest->finalize();
  if (!ctx.quiet)
    for (const auto& f : manifest->data()["failures"])
      std::cout << "FAILED " << f["name"].get<std::string>() << ": " << f["detail"].get<std::string>() << "\n";
  return manifest->ok() ? ok : invariant_violated;
}
