#include "vsrd/models.hpp"

#include "vsrd/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vsrd {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw std::invalid_argument(std::string("parameter ") + name + " must be a positive finite number");
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double weighted_norm2(const SparseMatrix& m, const Vector& v) { return v.dot(m * v); }

}  // namespace

void TwoSpeciesParams::validate() const {
  require_positive(d_L, "d_L");
  require_positive(d_l, "d_l");
  require_positive(lambda, "lambda");
  require_positive(gamma, "gamma");
}

void FourSpeciesParams::validate() const {
  require_positive(d_L, "d_L");
  require_positive(d_P, "d_P");
  require_positive(d_l, "d_l");
  require_positive(d_p, "d_p");
  require_positive(alpha, "alpha");
  require_positive(beta, "beta");
  require_positive(lambda, "lambda");
  require_positive(gamma, "gamma");
  require_positive(sigma, "sigma");
  require_positive(kappa, "kappa");
  require_positive(eta, "eta");
  require_positive(xi, "xi");
}

double FourSpeciesParams::detailed_balance_residual() const {
  return std::abs((alpha * lambda * sigma * xi) / (beta * gamma * kappa * eta) - 1.0);
}

std::vector<SpeciesInfo> species_layout(const ModelParams& params) {
  return std::visit(Overloaded{
                        [](const TwoSpeciesParams&) {
                          return std::vector<SpeciesInfo>{{"L", Space::volume}, {"l", Space::boundary}};
                        },
                        [](const FourSpeciesParams&) {
                          return std::vector<SpeciesInfo>{{"L", Space::volume},
                                                          {"P", Space::volume},
                                                          {"l", Space::boundary},
                                                          {"p", Space::gamma2}};
                        },
                    },
                    params);
}

Geometry Geometry::discrete(const AssembledForms& forms) {
  return {forms.area, forms.perimeter, forms.gamma2_length};
}

Geometry Geometry::exact(const Mesh2D& mesh) {
  Geometry g;
  g.area = mesh.curve().area();
  g.perimeter = mesh.curve().length();
  if (mesh.has_gamma2()) g.gamma2_length = mesh.curve().arc_length(mesh.gamma2_theta_min(), mesh.gamma2_theta_max());
  return g;
}

Equilibrium equilibrium2(const TwoSpeciesParams& params, double area, double perimeter, double mass) {
  params.validate();
  if (!(area > 0.0) || !(perimeter > 0.0)) throw std::invalid_argument("equilibrium2: geometry must be positive");
  if (mass < 0.0) throw std::invalid_argument("equilibrium2: mass must be non-negative");
  const double L = params.gamma * mass / (params.gamma * area + params.lambda * perimeter);
  const double l = params.lambda / params.gamma * L;
  return {{L, l}, {area, perimeter, 0.0}, mass};
}

Equilibrium equilibrium4(const FourSpeciesParams& params, double area, double perimeter, double gamma2_length,
                         double mass) {
  params.validate();
  if (!params.has_detailed_balance())
    throw std::invalid_argument("equilibrium4: detailed balance violated, residual " +
                                std::to_string(params.detailed_balance_residual()));
  if (!(area > 0.0) || !(perimeter > 0.0) || !(gamma2_length > 0.0))
    throw std::invalid_argument("equilibrium4: geometry must be positive");
  if (mass < 0.0) throw std::invalid_argument("equilibrium4: mass must be non-negative");
  const double p_ratio = params.beta / params.alpha;
  const double l_ratio = params.lambda / params.gamma;
  const double q_ratio = params.sigma / params.kappa * l_ratio;
  const double L = mass / (area * (1.0 + p_ratio) + perimeter * l_ratio + gamma2_length * q_ratio);
  return {{L, p_ratio * L, l_ratio * L, q_ratio * L}, {area, perimeter, gamma2_length}, mass};
}

Equilibrium equilibrium(const ModelParams& params, const Geometry& g, double mass) {
  return std::visit(Overloaded{
                        [&](const TwoSpeciesParams& p) { return equilibrium2(p, g.area, g.perimeter, mass); },
                        [&](const FourSpeciesParams& p) {
                          return equilibrium4(p, g.area, g.perimeter, g.gamma2_length, mass);
                        },
                    },
                    params);
}

StateVector constant_state(const AssembledForms& forms, const ModelParams& params, const std::vector<double>& values) {
  const auto layout = species_layout(params);
  if (values.size() != layout.size()) throw std::invalid_argument("constant_state: one value per species required");
  StateVector s;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    s.fields.push_back(Vector::Constant(forms.dofs.size(layout[i].space), values[i]));
    s.spaces.push_back(layout[i].space);
  }
  return s;
}

double total_mass(const AssembledForms& forms, const StateVector& state) {
  double m = 0.0;
  for (std::size_t i = 0; i < state.fields.size(); ++i) {
    const SparseMatrix& mass = forms.mass(state.spaces[i]).matrix;
    if (mass.rows() != state.fields[i].size()) throw std::invalid_argument("total_mass: field size mismatch");
    m += (mass * state.fields[i]).sum();
  }
  return m;
}

EntropyValues entropy(const AssembledForms& forms, const ModelParams& params, const StateVector& state,
                      const Equilibrium& eq) {
  const auto deviation = [&](std::size_t i) {
    return Vector(state.fields[i].array() - eq.values[i]);
  };
  const SparseMatrix& T = forms.dofs.trace;

  if (const auto* p = std::get_if<TwoSpeciesParams>(&params)) {
    const Vector eL = deviation(0), el = deviation(1);
    const Vector r = p->lambda * (T * eL) - p->gamma * el;
    EntropyValues out;
    out.entropy = 0.5 * (p->lambda * weighted_norm2(forms.M_vol.matrix, eL) +
                         p->gamma * weighted_norm2(forms.M_bnd.matrix, el));
    out.dissipation = p->lambda * p->d_L * weighted_norm2(forms.A_vol.matrix, eL) +
                      p->gamma * p->d_l * weighted_norm2(forms.A_bnd.matrix, el) +
                      weighted_norm2(forms.M_bnd.matrix, r);
    return out;
  }

  const auto& q = std::get<FourSpeciesParams>(params);
  if (!q.has_detailed_balance())
    throw std::invalid_argument("entropy: four-species entropy requires detailed balance");
  for (double v : eq.values)
    if (!(v > 0.0)) throw std::invalid_argument("entropy: equilibrium must be positive");
  const double Li = eq.values[0], Pi = eq.values[1], li = eq.values[2], pi = eq.values[3];
  const Vector eL = deviation(0), eP = deviation(1), el = deviation(2), ep = deviation(3);
  const SparseMatrix& E2 = forms.dofs.gamma2_embed;
  const SparseMatrix& Mv = forms.M_vol.matrix;
  const SparseMatrix& Mb = forms.M_bnd.matrix;
  const SparseMatrix& Mg = forms.M_g2.matrix;

  EntropyValues out;
  out.entropy = 0.5 * (weighted_norm2(Mv, eL) / Li + weighted_norm2(Mv, eP) / Pi + weighted_norm2(Mb, el) / li +
                       weighted_norm2(Mg, ep) / pi);
  const Vector lP = q.beta * eL - q.alpha * eP;
  const Vector lb = q.gamma * el - q.lambda * (T * eL);
  const Vector lg = q.kappa * ep - q.sigma * (E2 * el);
  const Vector Pg = q.eta * (E2 * (T * eP)) - q.xi * ep;
  out.dissipation = q.d_L / Li * weighted_norm2(forms.A_vol.matrix, eL) +
                    q.d_P / Pi * weighted_norm2(forms.A_vol.matrix, eP) +
                    q.d_l / li * weighted_norm2(forms.A_bnd.matrix, el) +
                    q.d_p / pi * weighted_norm2(forms.A_g2.matrix, ep) + weighted_norm2(Mv, lP) / (q.beta * Li) +
                    weighted_norm2(Mb, lb) / (q.gamma * li) + weighted_norm2(Mg, lg) / (q.kappa * pi) +
                    weighted_norm2(Mg, Pg) / (q.eta * Pi);
  return out;
}

InitialData builtin_initial_data(const std::string& name) {
  if (name == "paper-2species") {
    return {name,
            {[](double x, double y) { return 0.5 * (x * x + y * y); }, [](double x, double) { return 0.5 * (1.0 + x); }}};
  }
  if (name == "paper-4species") {
    return {name,
            {[](double x, double) { return x * std::sin(x + 1.0) + 0.5; },
             [](double x, double) { return (2.0 - x) * std::cos(x + 1.0) + 0.5; },
             [](double, double y) { return 0.3 * (2.0 - y) + 1.0; }, [](double, double y) { return 0.4 * y + 1.0; }}};
  }
  throw std::invalid_argument("unknown builtin initial data '" + name + "'");
}

std::vector<std::string> builtin_initial_data_names() { return {"paper-2species", "paper-4species"}; }

double exact_mass(const Mesh2D& mesh, const ModelParams& params, const InitialData& data) {
  const auto layout = species_layout(params);
  if (data.fields.size() != layout.size())
    throw std::invalid_argument("exact_mass: initial data has the wrong number of species");
  const BoundaryCurve& curve = mesh.curve();
  constexpr int n_theta = 1024;
  const auto [nodes, weights] = gauss_legendre(24);
  constexpr double two_pi = 2.0 * std::numbers::pi;

  const auto speed = [&](double t) {
    if (curve.is_unit_circle()) return 1.0;
    constexpr double fd = 1e-5;
    const double r = curve.radius(t);
    const double dr = (curve.radius(t + fd) - curve.radius(t - fd)) / (2.0 * fd);
    return std::sqrt(r * r + dr * dr);
  };

  double total = 0.0;
  for (std::size_t s = 0; s < layout.size(); ++s) {
    const ScalarField& f = data.fields[s];
    double m = 0.0;
    switch (layout[s].space) {
      case Space::volume:
        for (int i = 0; i < n_theta; ++i) {
          const double t = two_pi * i / n_theta;
          const double R = curve.radius(t);
          double radial = 0.0;
          for (Index q = 0; q < nodes.size(); ++q) {
            const double r = 0.5 * R * (nodes(q) + 1.0);
            radial += weights(q) * f(r * std::cos(t), r * std::sin(t)) * r;
          }
          m += 0.5 * R * radial;
        }
        m *= two_pi / n_theta;
        break;
      case Space::boundary:
        for (int i = 0; i < n_theta; ++i) {
          const double t = two_pi * i / n_theta;
          const Point2 p = curve.point(t);
          m += f(p.x(), p.y()) * speed(t);
        }
        m *= two_pi / n_theta;
        break;
      case Space::gamma2: {
        if (!mesh.has_gamma2()) throw std::invalid_argument("exact_mass: mesh has no Gamma_2 arc");
        const double a = mesh.gamma2_theta_min(), b = mesh.gamma2_theta_max();
        constexpr int panels = 256;
        const double w = (b - a) / panels;
        for (int k = 0; k < panels; ++k) {
          const double mid = a + (k + 0.5) * w;
          for (Index q = 0; q < nodes.size(); ++q) {
            const double t = mid + 0.5 * w * nodes(q);
            const Point2 p = curve.point(t);
            m += 0.5 * w * weights(q) * f(p.x(), p.y()) * speed(t);
          }
        }
        break;
      }
    }
    total += m;
  }
  return total;
}

}  // namespace vsrd
