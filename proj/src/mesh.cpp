#include "vsrd/mesh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <unordered_map>
#include <unordered_set>

namespace vsrd {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// 5-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 5> kGaussNodes = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                               0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> kGaussWeights = {0.2369268850561891, 0.4786286704993665,
                                                 0.5688888888888889, 0.4786286704993665,
                                                 0.2369268850561891};

std::uint64_t edge_key(Index a, Index b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (hi << 32) | lo;
}

double orient(const Point2& a, const Point2& b, const Point2& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
}

double wrap_from(double angle, double origin) {
  double phi = std::fmod(angle - origin, kTwoPi);
  if (phi < 0.0) phi += kTwoPi;
  return origin + phi;
}

}  // namespace

// ---------------------------------------------------------------------------
// BoundaryCurve

BoundaryCurve::BoundaryCurve() : radius_([](double) { return 1.0; }), name_("unit-circle"), unit_circle_(true) {}

BoundaryCurve::BoundaryCurve(RadiusFunction radius, std::string name)
    : radius_(std::move(radius)), name_(std::move(name)) {}

BoundaryCurve BoundaryCurve::unit_circle() { return BoundaryCurve(); }

Point2 BoundaryCurve::point(double theta) const {
  const double r = radius(theta);
  return {r * std::cos(theta), r * std::sin(theta)};
}

Point2 BoundaryCurve::project(const Point2& p) const {
  const double norm = p.norm();
  if (norm == 0.0) throw StructuralError("cannot project the origin onto the boundary curve");
  if (unit_circle_) return p / norm;
  return radius(std::atan2(p.y(), p.x())) * p / norm;
}

double BoundaryCurve::area() const {
  if (unit_circle_) return std::numbers::pi;
  constexpr int n = 4096;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = radius(kTwoPi * i / n);
    sum += 0.5 * r * r;
  }
  return sum * kTwoPi / n;
}

double BoundaryCurve::arc_length(double theta_min, double theta_max) const {
  if (unit_circle_) return theta_max - theta_min;
  constexpr int panels = 512;
  constexpr double fd = 1e-5;
  const double width = (theta_max - theta_min) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = theta_min + (p + 0.5) * width;
    for (std::size_t q = 0; q < kGaussNodes.size(); ++q) {
      const double t = mid + 0.5 * width * kGaussNodes[q];
      const double r = radius(t);
      const double dr = (radius(t + fd) - radius(t - fd)) / (2.0 * fd);
      sum += 0.5 * width * kGaussWeights[q] * std::sqrt(r * r + dr * dr);
    }
  }
  return sum;
}

double BoundaryCurve::length() const { return arc_length(0.0, kTwoPi); }

// ---------------------------------------------------------------------------
// Mesh2D

bool Mesh2D::has_gamma2() const {
  return std::any_of(gamma2_edge_mask_.begin(), gamma2_edge_mask_.end(), [](bool b) { return b; });
}

double Mesh2D::signed_area(Index t) const {
  return orient(vertex(triangles_(0, t)), vertex(triangles_(1, t)), vertex(triangles_(2, t)));
}

double Mesh2D::area() const {
  double sum = 0.0;
  for (Index t = 0; t < n_triangles(); ++t) sum += signed_area(t);
  return sum;
}

double Mesh2D::boundary_edge_length(Index e) const {
  return (vertex(boundary_edges_(1, e)) - vertex(boundary_edges_(0, e))).norm();
}

double Mesh2D::perimeter() const {
  double sum = 0.0;
  for (Index e = 0; e < n_boundary_edges(); ++e) sum += boundary_edge_length(e);
  return sum;
}

double Mesh2D::gamma2_length() const {
  double sum = 0.0;
  for (Index e = 0; e < n_boundary_edges(); ++e)
    if (gamma2_edge_mask_[static_cast<std::size_t>(e)]) sum += boundary_edge_length(e);
  return sum;
}

void Mesh2D::validate() const {
  for (Index t = 0; t < n_triangles(); ++t) {
    if (!(signed_area(t) > 0.0))
      throw StructuralError("triangle " + std::to_string(t) + " has non-positive signed area");
  }
  const Index nb = n_boundary_edges();
  if (nb < 3) throw StructuralError("boundary chain has fewer than three edges");
  if (static_cast<Index>(boundary_vertex_ids_.size()) != nb ||
      static_cast<Index>(gamma2_edge_mask_.size()) != nb)
    throw StructuralError("boundary bookkeeping sizes disagree with the edge chain");

  std::unordered_set<Index> seen;
  for (Index e = 0; e < nb; ++e) {
    if (boundary_edges_(1, e) != boundary_edges_(0, (e + 1) % nb))
      throw StructuralError("boundary chain is not closed at edge " + std::to_string(e));
    if (boundary_vertex_ids_[static_cast<std::size_t>(e)] != boundary_edges_(0, e))
      throw StructuralError("boundary vertex ids out of chain order");
    if (!seen.insert(boundary_edges_(0, e)).second)
      throw StructuralError("boundary chain is not simple");
  }
  if (derive_boundary_chain(*this) != boundary_edges_)
    throw StructuralError("stored boundary chain differs from the triangle boundary");

  for (Index id : boundary_vertex_ids_) {
    const Point2 p = vertex(id);
    const double target = curve_->radius(std::atan2(p.y(), p.x()));
    if (std::abs(p.norm() - target) > 1e-12)
      throw StructuralError("boundary vertex " + std::to_string(id) + " is off the curve");
  }

  if (has_gamma2()) {
    Index starts = 0;
    for (Index e = 0; e < nb; ++e) {
      const bool here = gamma2_edge_mask_[static_cast<std::size_t>(e)];
      const bool prev = gamma2_edge_mask_[static_cast<std::size_t>((e + nb - 1) % nb)];
      if (here && !prev) ++starts;
    }
    if (starts != 1) throw StructuralError("Gamma_2 edges do not form a single proper arc");
  }
}

// ---------------------------------------------------------------------------
// construction

Mesh2D build_disk_mesh(int rings) { return build_star_mesh(rings, BoundaryCurve::unit_circle()); }

Mesh2D build_star_mesh(int rings, BoundaryCurve curve) {
  if (rings < 1) throw std::invalid_argument("build_star_mesh: rings must be >= 1");
  const Index R = rings;
  const auto ring_start = [](Index k) -> Index { return k == 0 ? 0 : 1 + 3 * k * (k - 1); };
  const auto ring_vertex = [&](Index k, Index j) -> Index {
    return k == 0 ? 0 : ring_start(k) + (j % (6 * k));
  };

  Mesh2D mesh;
  mesh.curve_ = std::make_shared<const BoundaryCurve>(std::move(curve));
  const BoundaryCurve& c = *mesh.curve_;

  const Index nv = 1 + 3 * R * (R + 1);
  mesh.vertices_.resize(2, nv);
  mesh.vertices_.col(0).setZero();
  for (Index k = 1; k <= R; ++k) {
    for (Index j = 0; j < 6 * k; ++j) {
      const double theta = kTwoPi * static_cast<double>(j) / static_cast<double>(6 * k);
      Point2 p = c.point(theta);
      if (k < R) p *= static_cast<double>(k) / static_cast<double>(R);
      mesh.vertices_.col(ring_vertex(k, j)) = p;
    }
  }

  mesh.triangles_.resize(3, 6 * R * R);
  Index t = 0;
  for (Index k = 1; k <= R; ++k) {
    for (Index s = 0; s < 6; ++s) {
      for (Index i = 0; i < k; ++i) {
        mesh.triangles_.col(t++) << ring_vertex(k, s * k + i), ring_vertex(k, s * k + i + 1),
            ring_vertex(k - 1, s * (k - 1) + i);
        if (i + 1 < k) {
          mesh.triangles_.col(t++) << ring_vertex(k - 1, s * (k - 1) + i),
              ring_vertex(k, s * k + i + 1), ring_vertex(k - 1, s * (k - 1) + i + 1);
        }
      }
    }
  }

  const Index nb = 6 * R;
  mesh.boundary_edges_.resize(2, nb);
  mesh.boundary_vertex_ids_.resize(static_cast<std::size_t>(nb));
  for (Index j = 0; j < nb; ++j) {
    mesh.boundary_edges_.col(j) << ring_vertex(R, j), ring_vertex(R, j + 1);
    mesh.boundary_vertex_ids_[static_cast<std::size_t>(j)] = ring_vertex(R, j);
  }
  mesh.gamma2_edge_mask_.assign(static_cast<std::size_t>(nb), false);
  mesh.validate();
  return mesh;
}

Mesh2D refine_uniform(const Mesh2D& mesh) {
  Mesh2D fine;
  fine.curve_ = mesh.curve_;
  fine.level_ = mesh.level_ + 1;
  fine.gamma2_theta_ = mesh.gamma2_theta_;

  std::unordered_set<std::uint64_t> boundary;
  for (Index e = 0; e < mesh.n_boundary_edges(); ++e)
    boundary.insert(edge_key(mesh.boundary_edges_(0, e), mesh.boundary_edges_(1, e)));

  const Index nv = mesh.n_vertices();
  const Index nt = mesh.n_triangles();
  // Euler: edges = vertices + triangles - 1 for a disk-like triangulation.
  const Index n_edges = nv + nt - 1;
  fine.vertices_.resize(2, nv + n_edges);
  fine.vertex_parents_.resize(2, nv + n_edges);
  fine.vertices_.leftCols(nv) = mesh.vertices_;
  for (Index i = 0; i < nv; ++i) fine.vertex_parents_.col(i) << i, i;

  std::unordered_map<std::uint64_t, Index> midpoint;
  midpoint.reserve(static_cast<std::size_t>(n_edges));
  Index next = nv;
  const auto midpoint_of = [&](Index a, Index b) -> Index {
    const auto key = edge_key(a, b);
    if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
    if (next >= fine.vertices_.cols()) throw StructuralError("refine_uniform: mesh is not disk-like");
    Point2 m = 0.5 * (mesh.vertex(a) + mesh.vertex(b));
    if (boundary.count(key)) m = mesh.curve_->project(m);
    fine.vertices_.col(next) = m;
    fine.vertex_parents_.col(next) << a, b;
    midpoint.emplace(key, next);
    return next++;
  };

  fine.triangles_.resize(3, 4 * nt);
  for (Index t = 0; t < nt; ++t) {
    const Index a = mesh.triangles_(0, t), b = mesh.triangles_(1, t), c = mesh.triangles_(2, t);
    const Index ab = midpoint_of(a, b), bc = midpoint_of(b, c), ca = midpoint_of(c, a);
    fine.triangles_.col(4 * t + 0) << a, ab, ca;
    fine.triangles_.col(4 * t + 1) << ab, b, bc;
    fine.triangles_.col(4 * t + 2) << ca, bc, c;
    fine.triangles_.col(4 * t + 3) << ab, bc, ca;
  }
  if (next != fine.vertices_.cols()) throw StructuralError("refine_uniform: mesh is not disk-like");
  for (Index t = 0; t < fine.n_triangles(); ++t) {
    if (!(fine.signed_area(t) > 0.0))
      throw StructuralError("refine_uniform: degenerate child triangle " + std::to_string(t));
  }

  const Index nb = mesh.n_boundary_edges();
  fine.boundary_edges_.resize(2, 2 * nb);
  fine.boundary_vertex_ids_.resize(static_cast<std::size_t>(2 * nb));
  fine.gamma2_edge_mask_.resize(static_cast<std::size_t>(2 * nb));
  for (Index e = 0; e < nb; ++e) {
    const Index a = mesh.boundary_edges_(0, e), b = mesh.boundary_edges_(1, e);
    const Index m = midpoint.at(edge_key(a, b));
    fine.boundary_edges_.col(2 * e) << a, m;
    fine.boundary_edges_.col(2 * e + 1) << m, b;
    fine.boundary_vertex_ids_[static_cast<std::size_t>(2 * e)] = a;
    fine.boundary_vertex_ids_[static_cast<std::size_t>(2 * e + 1)] = m;
    const bool marked = mesh.gamma2_edge_mask_[static_cast<std::size_t>(e)];
    fine.gamma2_edge_mask_[static_cast<std::size_t>(2 * e)] = marked;
    fine.gamma2_edge_mask_[static_cast<std::size_t>(2 * e + 1)] = marked;
  }
  fine.validate();
  return fine;
}

Mesh2D refined_disk_mesh(int rings, int levels) {
  Mesh2D mesh = build_disk_mesh(rings);
  for (int l = 0; l < levels; ++l) mesh = refine_uniform(mesh);
  return mesh;
}

Mesh2D mark_gamma2(const Mesh2D& mesh, double theta_min, double theta_max) {
  const double span = theta_max - theta_min;
  if (!(span >= 0.0 && span < kTwoPi))
    throw std::invalid_argument("mark_gamma2: require 0 <= theta_max - theta_min < 2*pi");
  Mesh2D out = mesh;
  const Index nb = mesh.n_boundary_edges();
  Index count = 0;
  for (Index e = 0; e < nb; ++e) {
    const Point2 m = 0.5 * (mesh.vertex(mesh.boundary_edges_(0, e)) + mesh.vertex(mesh.boundary_edges_(1, e)));
    const double phi = wrap_from(std::atan2(m.y(), m.x()), theta_min);
    const bool marked = phi <= theta_max;
    out.gamma2_edge_mask_[static_cast<std::size_t>(e)] = marked;
    count += marked ? 1 : 0;
  }
  if (count == 0) throw std::invalid_argument("mark_gamma2: no boundary edge falls in the interval");
  if (count == nb) throw std::invalid_argument("mark_gamma2: Gamma_2 would cover the whole boundary");
  out.gamma2_theta_ << theta_min, theta_max;
  out.validate();
  return out;
}

// ---------------------------------------------------------------------------
// reports

MeshQuality quality(const Mesh2D& mesh) {
  MeshQuality q;
  q.min_angle_deg = 180.0;
  q.n_triangles = mesh.n_triangles();
  q.n_boundary_edges = mesh.n_boundary_edges();
  for (Index t = 0; t < mesh.n_triangles(); ++t) {
    const Point2 p0 = mesh.vertex(mesh.triangles()(0, t));
    const Point2 p1 = mesh.vertex(mesh.triangles()(1, t));
    const Point2 p2 = mesh.vertex(mesh.triangles()(2, t));
    const double a = (p1 - p2).norm(), b = (p2 - p0).norm(), c = (p0 - p1).norm();
    const double area = mesh.signed_area(t);
    const double diam = std::max({a, b, c});
    const double inscribed_diameter = 4.0 * area / (a + b + c);
    q.h = std::max(q.h, diam);
    q.max_ratio = std::max(q.max_ratio, diam / inscribed_diameter);
    const std::array<double, 3> angles = {
        std::acos(std::clamp((b * b + c * c - a * a) / (2 * b * c), -1.0, 1.0)),
        std::acos(std::clamp((a * a + c * c - b * b) / (2 * a * c), -1.0, 1.0)),
        std::acos(std::clamp((a * a + b * b - c * c) / (2 * a * b), -1.0, 1.0))};
    for (double angle : angles) q.min_angle_deg = std::min(q.min_angle_deg, angle * 180.0 / std::numbers::pi);
  }
  return q;
}

Mesh2D::Edges derive_boundary_chain(const Mesh2D& mesh) {
  std::unordered_map<std::uint64_t, int> count;
  for (Index t = 0; t < mesh.n_triangles(); ++t)
    for (int k = 0; k < 3; ++k) ++count[edge_key(mesh.triangles()(k, t), mesh.triangles()((k + 1) % 3, t))];

  std::unordered_map<Index, Index> successor;
  for (Index t = 0; t < mesh.n_triangles(); ++t) {
    for (int k = 0; k < 3; ++k) {
      const Index a = mesh.triangles()(k, t), b = mesh.triangles()((k + 1) % 3, t);
      if (count.at(edge_key(a, b)) == 1) {
        if (!successor.emplace(a, b).second)
          throw StructuralError("boundary vertex " + std::to_string(a) + " has two outgoing edges");
      }
    }
  }
  if (successor.empty()) throw StructuralError("triangulation has no boundary");
  Index start = mesh.boundary_vertex_ids().empty() ? successor.begin()->first : mesh.boundary_vertex_ids().front();
  if (!successor.count(start)) throw StructuralError("stored start vertex is not on the boundary");

  Mesh2D::Edges chain(2, static_cast<Index>(successor.size()));
  Index current = start;
  for (Index e = 0; e < chain.cols(); ++e) {
    const auto it = successor.find(current);
    if (it == successor.end()) throw StructuralError("boundary chain is broken");
    chain.col(e) << current, it->second;
    current = it->second;
  }
  if (current != start) throw StructuralError("boundary consists of more than one loop");
  return chain;
}

double boundary_polygon_area(const Mesh2D& mesh) {
  double sum = 0.0;
  for (Index e = 0; e < mesh.n_boundary_edges(); ++e) {
    const Point2 a = mesh.vertex(mesh.boundary_edges()(0, e));
    const Point2 b = mesh.vertex(mesh.boundary_edges()(1, e));
    sum += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * sum;
}

}  // namespace vsrd
