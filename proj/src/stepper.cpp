#include "vsrd/stepper.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace vsrd {

struct SystemOperator::Factorization {
  Eigen::SimplicialLLT<SparseMatrix> cholesky;
  Eigen::SparseLU<SparseMatrix> lu;
  bool use_cholesky = true;
};

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

// Accumulates coefficient * block into the global block matrix.
class BlockBuilder {
 public:
  explicit BlockBuilder(const std::vector<Index>& offsets) : offsets_(offsets) {}

  void add(std::size_t row, std::size_t col, double coefficient, const SparseMatrix& block) {
    for (Index k = 0; k < block.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(block, k); it; ++it)
        triplets_.emplace_back(offsets_[row] + it.row(), offsets_[col] + it.col(), coefficient * it.value());
  }

  SparseMatrix build() const {
    SparseMatrix m(offsets_.back(), offsets_.back());
    m.setFromTriplets(triplets_.begin(), triplets_.end());
    m.makeCompressed();
    return m;
  }

 private:
  const std::vector<Index>& offsets_;
  Triplets triplets_;
};

double relative_asymmetry(const SparseMatrix& m) {
  const SparseMatrix diff = m - SparseMatrix(m.transpose());
  const double scale = max_abs(m);
  return scale > 0.0 ? max_abs(diff) / scale : 0.0;
}

}  // namespace

TimeGrid TimeGrid::until(double tau, double t_final) {
  if (!(tau > 0.0)) throw std::invalid_argument("time step must be positive");
  if (!(t_final >= tau)) throw std::invalid_argument("final time must be at least one time step");
  TimeGrid g{tau, static_cast<Index>(std::llround(t_final / tau))};
  g.validate();
  return g;
}

void TimeGrid::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("time step must be positive");
  if (n_steps < 0) throw std::invalid_argument("step count must be non-negative");
}

SystemOperator SystemOperator::build(const AssembledForms& forms, const ModelParams& params, double tau,
                                     const StepperOptions& options) {
  if (!(tau > 0.0)) throw std::invalid_argument("SystemOperator: tau must be positive");
  std::visit([](const auto& p) { p.validate(); }, params);

  SystemOperator op;
  op.tau_ = tau;
  op.options_ = options;
  op.params_ = params;
  op.layout_ = species_layout(params);
  op.offsets_.assign(1, 0);
  for (const auto& s : op.layout_) {
    const Index n = forms.dofs.size(s.space);
    if (n == 0) throw std::invalid_argument(std::string("SystemOperator: empty space for species ") + s.name);
    op.offsets_.push_back(op.offsets_.back() + n);
  }

  const auto mass_of = [&](Space space) {
    return options.lumping ? lump(forms.mass(space).matrix) : forms.mass(space).matrix;
  };
  const SparseMatrix Mv = mass_of(Space::volume);
  const SparseMatrix Mb = mass_of(Space::boundary);
  const SparseMatrix& T = forms.dofs.trace;
  const SparseMatrix Tt = T.transpose();
  const SparseMatrix TtMbT = Tt * Mb * T;
  const SparseMatrix TtMb = Tt * Mb;
  const SparseMatrix MbT = Mb * T;

  BlockBuilder mass(op.offsets_), a(op.offsets_);
  if (const auto* p = std::get_if<TwoSpeciesParams>(&params)) {
    enum { L = 0, l = 1 };
    mass.add(L, L, 1.0, Mv);
    mass.add(l, l, 1.0, Mb);
    a.add(L, L, p->d_L, forms.A_vol.matrix);
    a.add(L, L, p->lambda, TtMbT);
    a.add(L, l, -p->gamma, TtMb);
    a.add(l, l, p->d_l, forms.A_bnd.matrix);
    a.add(l, l, p->gamma, Mb);
    a.add(l, L, -p->lambda, MbT);
    op.species_weights_ = {p->lambda, p->gamma};
  } else {
    const auto& q = std::get<FourSpeciesParams>(params);
    enum { L = 0, P = 1, l = 2, pg = 3 };
    const SparseMatrix Mg = mass_of(Space::gamma2);
    const SparseMatrix& E2 = forms.dofs.gamma2_embed;
    const SparseMatrix T2 = E2 * T;
    const SparseMatrix T2t = T2.transpose();
    const SparseMatrix E2t = E2.transpose();
    mass.add(L, L, 1.0, Mv);
    mass.add(P, P, 1.0, Mv);
    mass.add(l, l, 1.0, Mb);
    mass.add(pg, pg, 1.0, Mg);
    // L
    a.add(L, L, q.d_L, forms.A_vol.matrix);
    a.add(L, L, q.beta, Mv);
    a.add(L, P, -q.alpha, Mv);
    a.add(L, L, q.lambda, TtMbT);
    a.add(L, l, -q.gamma, TtMb);
    // P
    a.add(P, P, q.d_P, forms.A_vol.matrix);
    a.add(P, P, q.alpha, Mv);
    a.add(P, L, -q.beta, Mv);
    a.add(P, P, q.eta, SparseMatrix(T2t * Mg * T2));
    a.add(P, pg, -q.xi, SparseMatrix(T2t * Mg));
    // l
    a.add(l, l, q.d_l, forms.A_bnd.matrix);
    a.add(l, l, q.gamma, Mb);
    a.add(l, L, -q.lambda, MbT);
    a.add(l, l, q.sigma, SparseMatrix(E2t * Mg * E2));
    a.add(l, pg, -q.kappa, SparseMatrix(E2t * Mg));
    // p
    a.add(pg, pg, q.d_p, forms.A_g2.matrix);
    a.add(pg, pg, q.kappa + q.xi, Mg);
    a.add(pg, l, -q.sigma, SparseMatrix(Mg * E2));
    a.add(pg, P, -q.eta, SparseMatrix(Mg * T2));
    if (q.has_detailed_balance()) {
      const Equilibrium unit = equilibrium4(q, 1.0, 1.0, 1.0, 1.0);
      for (double v : unit.values) op.species_weights_.push_back(1.0 / v);
    }
  }
  op.mass_ = mass.build();
  op.operator_ = a.build();

  op.symmetric_ = !op.species_weights_.empty();
  if (!op.symmetric_ && options.require_symmetric)
    throw std::invalid_argument("SystemOperator: no symmetrizing entropy weights (detailed balance violated)");

  auto factorization = std::make_shared<Factorization>();
  if (op.symmetric_) {
    Vector w(op.size());
    for (std::size_t s = 0; s < op.layout_.size(); ++s)
      w.segment(op.offsets_[s], op.species_size(s)).setConstant(op.species_weights_[s]);
    op.scaled_mass_ = w.asDiagonal() * op.mass_;
    SparseMatrix scaled = w.asDiagonal() * op.operator_;
    const double asym = relative_asymmetry(scaled);
    if (asym > 1e-12)
      throw StructuralError("SystemOperator: entropy-scaled operator is not symmetric (" + std::to_string(asym) + ")");
    op.scaled_operator_ = 0.5 * (scaled + SparseMatrix(scaled.transpose()));
    const SparseMatrix sm = 0.5 * (op.scaled_mass_ + SparseMatrix(op.scaled_mass_.transpose()));
    op.scaled_mass_ = sm;
    op.system_ = (1.0 / tau) * op.scaled_mass_ + op.scaled_operator_;
    op.system_.makeCompressed();
    factorization->cholesky.compute(op.system_);
    if (factorization->cholesky.info() != Eigen::Success)
      throw StructuralError("SystemOperator: Cholesky factorization failed, system is not SPD");
  } else {
    op.scaled_mass_ = op.mass_;
    op.system_ = (1.0 / tau) * op.mass_ + op.operator_;
    op.system_.makeCompressed();
    factorization->use_cholesky = false;
    factorization->lu.analyzePattern(op.system_);
    factorization->lu.factorize(op.system_);
    if (factorization->lu.info() != Eigen::Success)
      throw NumericalError("SystemOperator: LU factorization failed");
  }
  op.factorization_ = std::move(factorization);
  return op;
}

Vector SystemOperator::solve(const Vector& rhs, double* residual) const {
  const auto apply_inverse = [&](const Vector& b) -> Vector {
    return factorization_->use_cholesky ? Vector(factorization_->cholesky.solve(b)) : Vector(factorization_->lu.solve(b));
  };
  const double scale = rhs.norm();
  if (scale == 0.0) {
    if (residual) *residual = 0.0;
    return Vector::Zero(rhs.size());
  }
  Vector x = apply_inverse(rhs);
  Vector r = rhs - system_ * x;
  double rel = r.norm() / scale;
  // refine well past the target; stop on stagnation
  for (int it = 0; it < 4 && rel > 1e-3 * options_.residual_tolerance; ++it) {
    const Vector x_new = x + apply_inverse(r);
    const Vector r_new = rhs - system_ * x_new;
    const double rel_new = r_new.norm() / scale;
    if (!(rel_new < rel)) break;
    x = x_new;
    r = r_new;
    rel = rel_new;
  }
  if (!(rel <= options_.residual_tolerance))
    throw NumericalError("linear solve: relative residual " + std::to_string(rel) + " above tolerance");
  if (residual) *residual = rel;
  return x;
}

Vector SystemOperator::pack(const StateVector& state) const {
  if (state.fields.size() != layout_.size()) throw std::invalid_argument("pack: wrong number of species");
  Vector u(size());
  for (std::size_t s = 0; s < layout_.size(); ++s) {
    if (state.fields[s].size() != species_size(s)) throw std::invalid_argument("pack: field size mismatch");
    u.segment(offsets_[s], species_size(s)) = state.fields[s];
  }
  return u;
}

StateVector SystemOperator::unpack(const Vector& values, double time) const {
  StateVector s;
  s.time = time;
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    s.fields.push_back(values.segment(offsets_[i], species_size(i)));
    s.spaces.push_back(layout_[i].space);
  }
  return s;
}

EntropyReference make_entropy_reference(const SystemOperator& op, const AssembledForms& forms, double discrete_mass,
                                        double exact_mass) {
  if (!op.symmetric()) throw std::invalid_argument("entropy reference requires an entropy-symmetric operator");
  EntropyReference ref;
  ref.discrete = equilibrium(op.params(), Geometry::discrete(forms), discrete_mass);
  ref.exact = equilibrium(op.params(), Geometry::exact(forms.mesh), exact_mass);
  ref.discrete_values = op.pack(constant_state(forms, op.params(), ref.discrete.values));
  ref.exact_values = op.pack(constant_state(forms, op.params(), ref.exact.values));
  // four species: weights 1/X_inf of the actual equilibrium, all proportional to the unit ones
  if (std::holds_alternative<FourSpeciesParams>(op.params()))
    ref.weight_scale = 1.0 / (op.species_weights()[0] * ref.discrete.values[0]);
  return ref;
}

StateVector initial_state(const AssembledForms& forms, const ModelParams& params, const InitialData& data) {
  const auto layout = species_layout(params);
  if (data.fields.size() != layout.size())
    throw std::invalid_argument("initial data '" + data.name + "' has " + std::to_string(data.fields.size()) +
                                " fields, model needs " + std::to_string(layout.size()));
  StateVector s;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    s.fields.push_back(l2_project(forms, layout[i].space, data.fields[i]));
    s.spaces.push_back(layout[i].space);
  }
  return s;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void fill_entropy(const SystemOperator& op, const Vector& u, const Vector& deviation, const EntropyReference& ref,
                  StepDiagnostics& d) {
  const double w = ref.weight_scale;
  d.E_disc = w * 0.5 * quadratic_form(op.scaled_mass(), deviation, deviation);
  d.D = w * quadratic_form(op.scaled_operator(), deviation, deviation);
  const Vector exact_dev = u - ref.exact_values;
  d.E_exact = w * 0.5 * quadratic_form(op.scaled_mass(), exact_dev, exact_dev);
}

}  // namespace

StepDiagnostics evaluate(const SystemOperator& op, const StateVector& state, const EntropyReference* reference) {
  StepDiagnostics d;
  d.t = state.time;
  const Vector u = op.pack(state);
  d.mass = (op.mass() * u).sum();
  if (reference) {
    fill_entropy(op, u, u - reference->discrete_values, *reference, d);
  } else {
    d.E_disc = d.E_exact = d.D = kNaN;
  }
  return d;
}

StepResult step(const SystemOperator& op, const StateVector& state, const EntropyReference* reference, Index n) {
  const Vector u_prev = op.pack(state);
  StepResult out;
  StepDiagnostics& d = out.diagnostics;
  d.n = n;
  d.t = state.time + op.tau();
  Vector u;
  if (reference) {
    const Vector e_prev = u_prev - reference->discrete_values;
    const Vector e = op.solve((1.0 / op.tau()) * (op.scaled_mass() * e_prev), &d.linear_residual);
    u = reference->discrete_values + e;
    fill_entropy(op, u, e, *reference, d);
    const Vector delta = e - e_prev;
    d.increment_energy = reference->weight_scale * 0.5 * quadratic_form(op.scaled_mass(), delta, delta);
  } else {
    u = op.solve((1.0 / op.tau()) * (op.scaled_mass() * u_prev), &d.linear_residual);
    d.E_disc = d.E_exact = d.D = d.increment_energy = kNaN;
  }
  d.mass = (op.mass() * u).sum();
  out.state = op.unpack(u, d.t);
  return out;
}

TrajectorySummary run(const SystemOperator& op, const StateVector& initial, const TimeGrid& grid,
                      const TrajectorySink& sink, const EntropyReference* reference) {
  grid.validate();
  if (std::abs(grid.tau - op.tau()) > 1e-14 * op.tau())
    throw std::invalid_argument("run: time grid step differs from the operator's step");

  TrajectorySummary summary;
  StateVector state = initial;
  StepDiagnostics current = evaluate(op, state, reference);
  summary.initial = current;
  summary.history.push_back(current);
  if (sink.on_diagnostics) sink.on_diagnostics(current);

  const auto min_of = [](const StateVector& s) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& f : s.fields) m = std::min(m, f.minCoeff());
    return m;
  };
  summary.min_value = min_of(state);

  const auto wants_snapshot = [&](Index n) {
    if (sink.snapshot_every > 0 && n % sink.snapshot_every == 0) return true;
    return std::find(sink.snapshot_steps.begin(), sink.snapshot_steps.end(), n) != sink.snapshot_steps.end();
  };
  if (sink.on_snapshot && wants_snapshot(0)) sink.on_snapshot(0, state);

  const double mass0 = current.mass;
  for (Index n = 1; n <= grid.n_steps; ++n) {
    StepResult r = step(op, state, reference, n);
    r.state.time = r.diagnostics.t = initial.time + static_cast<double>(n) * op.tau();
    const StepDiagnostics& d = r.diagnostics;
    const double drift = mass0 != 0.0 ? std::abs(d.mass - mass0) / std::abs(mass0) : std::abs(d.mass);
    summary.max_relative_mass_drift = std::max(summary.max_relative_mass_drift, drift);
    if (reference) {
      const double identity = d.E_disc - current.E_disc + d.increment_energy + op.tau() * d.D;
      const double scale = std::max(current.E_disc, std::numeric_limits<double>::min());
      summary.max_identity_residual = std::max(summary.max_identity_residual, std::abs(identity) / scale);
      if (d.E_disc > current.E_disc) summary.entropy_nonincreasing = false;
      if (!(d.E_disc < current.E_disc)) summary.entropy_strictly_decreasing = false;
    }
    state = std::move(r.state);
    current = d;
    summary.min_value = std::min(summary.min_value, min_of(state));
    summary.history.push_back(d);
    if (sink.on_diagnostics) sink.on_diagnostics(d);
    if (sink.on_snapshot && wants_snapshot(n)) sink.on_snapshot(n, state);
  }
  summary.steps = grid.n_steps;
  summary.final = current;
  summary.final_state = std::move(state);
  if (!reference) summary.entropy_nonincreasing = summary.entropy_strictly_decreasing = false;
  return summary;
}

bool stiffness_is_z_matrix(const AssembledForms& forms) {
  for (const SparseForm* f : {&forms.A_vol, &forms.A_bnd, &forms.A_g2}) {
    const double tol = 1e-12 * max_abs(f->matrix);
    for (Index k = 0; k < f->matrix.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(f->matrix, k); it; ++it)
        if (it.row() != it.col() && it.value() > tol) return false;
  }
  return true;
}

}  // namespace vsrd
