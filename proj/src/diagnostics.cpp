#include "vsrd/diagnostics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace vsrd {

namespace {

void check_parent_relation(const Mesh2D& coarse, const Mesh2D& fine) {
  const auto& parents = fine.vertex_parents();
  if (fine.level() != coarse.level() + 1 || parents.cols() != fine.n_vertices() ||
      fine.n_vertices() < coarse.n_vertices() || fine.n_triangles() != 4 * coarse.n_triangles())
    throw std::invalid_argument("prolong: meshes are not in parent/child relation");
  for (Index i = 0; i < coarse.n_vertices(); ++i) {
    if (parents(0, i) != i || parents(1, i) != i || fine.vertex(i) != coarse.vertex(i))
      throw std::invalid_argument("prolong: fine mesh does not inherit the coarse vertices");
  }
  for (Index i = coarse.n_vertices(); i < fine.n_vertices(); ++i) {
    if (parents(0, i) < 0 || parents(0, i) >= coarse.n_vertices() || parents(1, i) < 0 ||
        parents(1, i) >= coarse.n_vertices())
      throw std::invalid_argument("prolong: parent index out of range");
  }
}

// Closest point of p on the coarse boundary chain: (edge, parameter in [0,1]).
std::pair<Index, double> closest_on_chain(const Mesh2D& coarse, const Point2& p) {
  double best = std::numeric_limits<double>::infinity();
  std::pair<Index, double> where{0, 0.0};
  for (Index e = 0; e < coarse.n_boundary_edges(); ++e) {
    const Point2 a = coarse.vertex(coarse.boundary_edges()(0, e));
    const Point2 b = coarse.vertex(coarse.boundary_edges()(1, e));
    const Point2 ab = b - a;
    const double s = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    const double dist = (a + s * ab - p).squaredNorm();
    if (dist < best) {
      best = dist;
      where = {e, s};
    }
  }
  return where;
}

double log2_ratio(double coarse, double fine) { return std::log2(coarse / fine); }

SparseForm h1_form(const AssembledForms& forms, Space space) {
  return {forms.mass(space).matrix + forms.stiffness(space).matrix, FormRole::coupling};
}

}  // namespace

Mesh2D study_mesh(const ModelParams& params, int base_rings, int level, double theta_min, double theta_max) {
  Mesh2D mesh = build_disk_mesh(base_rings);
  if (std::holds_alternative<FourSpeciesParams>(params)) mesh = mark_gamma2(mesh, theta_min, theta_max);
  for (int l = 0; l < level; ++l) mesh = refine_uniform(mesh);
  return mesh;
}

Vector prolong(const Mesh2D& coarse, const Mesh2D& fine, const Vector& values, Space space) {
  check_parent_relation(coarse, fine);
  const auto& parents = fine.vertex_parents();
  std::vector<Index> coarse_bdof(static_cast<std::size_t>(coarse.n_vertices()), -1);
  for (std::size_t k = 0; k < coarse.boundary_vertex_ids().size(); ++k)
    coarse_bdof[static_cast<std::size_t>(coarse.boundary_vertex_ids()[k])] = static_cast<Index>(k);
  const Index nbc = coarse.n_boundary_edges();

  // coarse value at a vertex / along a boundary edge, in the requested space
  const auto at_vertex = [&](Index v) {
    if (space == Space::volume) return values(v);
    return values(coarse_bdof[static_cast<std::size_t>(v)]);
  };
  const auto on_chain = [&](const Point2& p) {
    const auto [e, s] = closest_on_chain(coarse, p);
    if (space == Space::volume)
      return (1.0 - s) * values(coarse.boundary_edges()(0, e)) + s * values(coarse.boundary_edges()(1, e));
    return (1.0 - s) * values(e) + s * values((e + 1) % nbc);
  };

  if (space == Space::volume) {
    if (values.size() != coarse.n_vertices()) throw std::invalid_argument("prolong: volume vector size mismatch");
    std::vector<bool> on_boundary(static_cast<std::size_t>(fine.n_vertices()), false);
    for (Index v : fine.boundary_vertex_ids()) on_boundary[static_cast<std::size_t>(v)] = true;
    Vector out(fine.n_vertices());
    for (Index i = 0; i < fine.n_vertices(); ++i) {
      const Index a = parents(0, i), b = parents(1, i);
      if (a == b) out(i) = values(a);
      else if (on_boundary[static_cast<std::size_t>(i)]) out(i) = on_chain(fine.vertex(i));
      else out(i) = 0.5 * (values(a) + values(b));
    }
    return out;
  }
  if (space != Space::boundary) throw std::invalid_argument("prolong: only volume and boundary spaces are supported");
  if (values.size() != nbc) throw std::invalid_argument("prolong: boundary vector size mismatch");
  Vector out(fine.n_boundary_edges());
  for (std::size_t k = 0; k < fine.boundary_vertex_ids().size(); ++k) {
    const Index v = fine.boundary_vertex_ids()[k];
    const Index a = parents(0, v), b = parents(1, v);
    if (a == b) {
      if (coarse_bdof[static_cast<std::size_t>(a)] < 0)
        throw std::invalid_argument("prolong: inherited boundary vertex is interior on the coarse mesh");
      out(static_cast<Index>(k)) = at_vertex(a);
    } else {
      out(static_cast<Index>(k)) = on_chain(fine.vertex(v));
    }
  }
  return out;
}

StateVector prolong(const Mesh2D& coarse, const Mesh2D& fine, const StateVector& state) {
  StateVector out;
  out.time = state.time;
  out.spaces = state.spaces;
  for (std::size_t i = 0; i < state.fields.size(); ++i)
    out.fields.push_back(prolong(coarse, fine, state.fields[i], state.spaces[i]));
  return out;
}

std::vector<NormPair> grid_difference_norms(const AssembledForms& forms, const StateVector& u_fine,
                                            const StateVector& u_coarse) {
  if (u_fine.fields.size() != u_coarse.fields.size())
    throw std::invalid_argument("grid_difference_norms: species count mismatch");
  std::vector<NormPair> out;
  for (std::size_t i = 0; i < u_fine.fields.size(); ++i) {
    const Space space = u_fine.spaces[i];
    if (u_fine.fields[i].size() != u_coarse.fields[i].size() || u_fine.fields[i].size() != forms.dofs.size(space))
      throw std::invalid_argument("grid_difference_norms: dimension mismatch");
    const Vector d = u_fine.fields[i] - u_coarse.fields[i];
    const double l2sq = quadratic_form(forms.mass(space), d, d);
    const double h1sq = quadratic_form(h1_form(forms, space), d, d);
    out.push_back({std::sqrt(std::max(l2sq, 0.0)), std::sqrt(std::max(h1sq, 0.0))});
  }
  return out;
}

void compute_rates(EocTable& table) {
  constexpr double kRoundoff = 1e-12;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (int c = 0; c < 4; ++c) {
      table.rows[r].rates[static_cast<std::size_t>(c)].reset();
      if (r == 0) continue;
      const double coarse = table.rows[r - 1].errors[static_cast<std::size_t>(c)];
      const double fine = table.rows[r].errors[static_cast<std::size_t>(c)];
      if (coarse > kRoundoff && fine > kRoundoff) table.rows[r].rates[static_cast<std::size_t>(c)] = log2_ratio(coarse, fine);
    }
  }
}

namespace {

StateVector solve_to_final_time(const AssembledForms& forms, const ConvergenceConfig& config, double tau) {
  const ModelParams params = config.params;
  const StateVector initial = initial_state(forms, params, config.data);
  const SystemOperator op = SystemOperator::build(forms, params, tau, config.stepper);
  return run(op, initial, TimeGrid::until(tau, config.t_final)).final_state;
}

EocRow make_row(double parameter, const std::vector<NormPair>& norms) {
  EocRow row;
  row.h_or_tau = parameter;
  row.errors = {norms[0].l2, norms[1].l2, norms[0].h1, norms[1].h1};
  return row;
}

}  // namespace

EocTable h_convergence_study(const ConvergenceConfig& config) {
  if (config.rows < 2) throw std::invalid_argument("h_convergence_study: need at least two table rows");
  std::vector<Mesh2D> meshes;
  std::vector<StateVector> finals;
  Mesh2D mesh = build_disk_mesh(config.base_rings);
  for (int level = 0; level <= config.rows; ++level) {
    if (level > 0) mesh = refine_uniform(mesh);
    const AssembledForms forms = assemble(mesh);
    finals.push_back(solve_to_final_time(forms, config, config.tau));
    meshes.push_back(mesh);
  }
  EocTable table;
  table.parameter = "h";
  for (int k = 0; k < config.rows; ++k) {
    const AssembledForms fine_forms = assemble(meshes[static_cast<std::size_t>(k + 1)]);
    const StateVector coarse_on_fine =
        prolong(meshes[static_cast<std::size_t>(k)], meshes[static_cast<std::size_t>(k + 1)], finals[static_cast<std::size_t>(k)]);
    table.rows.push_back(make_row(quality(meshes[static_cast<std::size_t>(k)]).h,
                                  grid_difference_norms(fine_forms, finals[static_cast<std::size_t>(k + 1)], coarse_on_fine)));
  }
  compute_rates(table);
  return table;
}

EocTable tau_convergence_study(const ConvergenceConfig& config) {
  if (config.taus.size() < 2) throw std::invalid_argument("tau_convergence_study: need at least two time steps");
  const AssembledForms forms = assemble(refined_disk_mesh(config.base_rings, config.tau_level));
  std::vector<double> taus = config.taus;
  taus.push_back(0.5 * config.taus.back());
  std::vector<StateVector> finals;
  for (double tau : taus) finals.push_back(solve_to_final_time(forms, config, tau));
  EocTable table;
  table.parameter = "tau";
  for (std::size_t k = 0; k + 1 < taus.size(); ++k)
    table.rows.push_back(make_row(taus[k], grid_difference_norms(forms, finals[k + 1], finals[k])));
  compute_rates(table);
  return table;
}

// ---------------------------------------------------------------------------

SpectralGap spectral_gap(const AssembledForms& forms, const ModelParams& params, const SpectralGapOptions& options) {
  StepperOptions stepper;
  stepper.require_symmetric = true;
  stepper.residual_tolerance = 1e-10;
  // Build once with tau = 1 to read the diagonal scales, then with the shift.
  const SystemOperator probe = SystemOperator::build(forms, params, 1.0, stepper);
  const double s_scale = probe.scaled_operator().diagonal().cwiseAbs().maxCoeff();
  const double m_scale = probe.scaled_mass().diagonal().cwiseAbs().maxCoeff();
  const double shift = options.relative_shift * s_scale / m_scale;
  const SystemOperator op = SystemOperator::build(forms, params, 1.0 / shift, stepper);
  const SparseMatrix& S = op.scaled_operator();
  const SparseMatrix& M = op.scaled_mass();
  const Index n = op.size();

  // kernel direction: the equilibrium shape, M-normalized
  const Equilibrium unit = equilibrium(params, Geometry::discrete(forms), 1.0);
  Vector kernel = op.pack(constant_state(forms, params, unit.values));
  kernel /= std::sqrt(quadratic_form(M, kernel, kernel));
  const Vector M_kernel = M * kernel;
  const auto deflate = [&](Eigen::MatrixXd& X) {
    const Eigen::RowVectorXd c = M_kernel.transpose() * X;
    X -= kernel * c;
  };

  const int p = std::min<Index>(options.block_size, n - 1);
  std::mt19937 rng(options.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Eigen::MatrixXd X(n, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < n; ++i) X(i, j) = uni(rng);
  deflate(X);

  SpectralGap out;
  double mu_prev = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= options.max_iterations; ++it) {
    Eigen::MatrixXd Y(n, p);
    for (Index j = 0; j < p; ++j) Y.col(j) = op.solve(M * X.col(j));
    deflate(Y);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
    const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
    const Eigen::MatrixXd SQ = S * Q;
    const Eigen::MatrixXd MQ = M * Q;
    Eigen::MatrixXd As = Q.transpose() * SQ;
    Eigen::MatrixXd Bs = Q.transpose() * MQ;
    As = 0.5 * (As + As.transpose()).eval();
    Bs = 0.5 * (Bs + Bs.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ritz(As, Bs);
    if (ritz.info() != Eigen::Success) throw NumericalError("spectral_gap: Rayleigh-Ritz step failed");
    X = Q * ritz.eigenvectors();
    deflate(X);

    const double mu = ritz.eigenvalues()(0);
    const Vector x = X.col(0);
    const Vector Sx = S * x;
    const double res = (Sx - mu * (M * x)).norm() / std::max(Sx.norm(), std::numeric_limits<double>::min());
    out.history.push_back(mu);
    out.iterations = it;
    out.residual = res;
    if (std::abs(mu - mu_prev) <= options.tolerance * 1e-3 * std::abs(mu) && res <= std::sqrt(options.tolerance)) {
      out.mu = mu;
      break;
    }
    mu_prev = mu;
    if (it == options.max_iterations) {
      std::ostringstream msg;
      msg << "spectral_gap: no convergence after " << it << " iterations; last Ritz values";
      for (std::size_t k = out.history.size() > 5 ? out.history.size() - 5 : 0; k < out.history.size(); ++k)
        msg << ' ' << out.history[k];
      msg << ", residual " << res;
      throw NumericalError(msg.str());
    }
  }
  Vector cert = X.col(0);
  cert /= std::sqrt(quadratic_form(M, cert, cert));
  out.mu = quadratic_form(S, cert, cert);
  out.c0 = 2.0 * out.mu;
  out.certificate = op.unpack(cert, 0.0);
  return out;
}

// ---------------------------------------------------------------------------

DecayReport decay_fit(const std::vector<double>& times, const std::vector<double>& entropy, double gap) {
  const std::size_t n = times.size();
  if (entropy.size() != n) throw std::invalid_argument("decay_fit: series lengths differ");
  if (n < 50) throw NumericalError("decay_fit: need at least 50 samples, got " + std::to_string(n));

  DecayReport r;
  r.spectral_gap = gap;
  const std::size_t tail = std::max<std::size_t>(1, n / 10);
  double sat = 0.0;
  for (std::size_t i = n - tail; i < n; ++i) sat += entropy[i];
  sat /= static_cast<double>(tail);
  r.saturation_level = sat;

  const double peak = *std::max_element(entropy.begin(), entropy.end());
  if (!(sat > 0.0) || peak < 1e3 * sat)
    throw NumericalError("decay_fit: entropy spans fewer than 3 decades above its saturation level; "
                         "run longer or use a finer mesh");

  const double t_cut = times.front() + 0.05 * (times.back() - times.front());
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  Index m = 0;
  r.fit_start = std::numeric_limits<double>::infinity();
  r.fit_end = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (times[i] < t_cut || !(entropy[i] > 100.0 * sat)) continue;
    const double y = std::log(entropy[i]);
    st += times[i];
    sy += y;
    stt += times[i] * times[i];
    sty += times[i] * y;
    ++m;
    r.fit_start = std::min(r.fit_start, times[i]);
    r.fit_end = std::max(r.fit_end, times[i]);
  }
  if (m < 10) throw NumericalError("decay_fit: fewer than 10 samples in the fit window; run longer or refine the mesh");
  const double slope = (m * sty - st * sy) / (m * stt - st * st);
  r.fit_samples = m;
  r.fitted_rate = -slope;
  if (!(r.fitted_rate > 0.0)) throw NumericalError("decay_fit: entropy is not decaying in the fit window");
  r.relative_gap_mismatch = gap > 0.0 ? std::abs(r.fitted_rate - gap) / gap : std::numeric_limits<double>::quiet_NaN();
  return r;
}

DecayStudy decay_study(const DecayConfig& config) {
  DecayStudy study;
  for (int level : config.levels) {
    const Mesh2D mesh = study_mesh(config.params, config.base_rings, level, config.gamma2_theta_min, config.gamma2_theta_max);
    const AssembledForms forms = assemble(mesh);
    const StateVector initial = initial_state(forms, config.params, config.data);
    const SystemOperator op = SystemOperator::build(forms, config.params, config.tau, config.stepper);
    const EntropyReference ref =
        make_entropy_reference(op, forms, total_mass(forms, initial), exact_mass(mesh, config.params, config.data));
    const TrajectorySummary traj = run(op, initial, TimeGrid::until(config.tau, config.t_final), {}, &ref);

    DecayLevel out;
    out.level = level;
    out.h = quality(mesh).h;
    out.entropy_strictly_decreasing = traj.entropy_strictly_decreasing;
    out.max_relative_mass_drift = traj.max_relative_mass_drift;
    out.max_identity_residual = traj.max_identity_residual;
    for (const auto& d : traj.history) {
      out.times.push_back(d.t);
      out.E_disc.push_back(d.E_disc);
      out.E_exact.push_back(d.E_exact);
    }
    const double gap = spectral_gap(forms, config.params).c0;
    out.report = decay_fit(out.times, config.fit_exact_entropy ? out.E_exact : out.E_disc, gap);
    study.levels.push_back(std::move(out));
  }
  for (std::size_t k = 0; k + 1 < study.levels.size(); ++k)
    study.floor_ratios.push_back(study.levels[k].report.saturation_level / study.levels[k + 1].report.saturation_level);
  return study;
}

}  // namespace vsrd
