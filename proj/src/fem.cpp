#include "nlmg/fem.hpp"

#include "nlmg/error.hpp"

#include <cmath>

namespace nlmg {

QuadratureRule QuadratureRule::assembly(int dim) {
  QuadratureRule q;
  q.dim = dim;
  if (dim == 1) {
    const double g = 0.5 / std::sqrt(3.0);
    q.degree = 3;
    q.points = {{0.5 + g, 0.5 - g, 0.0}, {0.5 - g, 0.5 + g, 0.0}};
    q.weights = {0.5, 0.5};
  } else {
    q.degree = 2;
    q.points = {{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};
    q.weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  }
  return q;
}

QuadratureRule QuadratureRule::accurate(int dim) {
  QuadratureRule q;
  q.dim = dim;
  if (dim == 1) {
    const double g = 0.5 * std::sqrt(0.6);
    q.degree = 5;
    q.points = {{0.5, 0.5, 0.0}, {0.5 + g, 0.5 - g, 0.0}, {0.5 - g, 0.5 + g, 0.0}};
    q.weights = {8.0 / 18.0, 5.0 / 18.0, 5.0 / 18.0};
  } else {
    // Strang-Fix / Dunavant degree-4 rule
    const double a = 0.445948490915965, wa = 0.223381589678011;
    const double b = 0.091576213509771, wb = 0.109951743655322;
    q.degree = 4;
    q.points = {{a, a, 1 - 2 * a}, {a, 1 - 2 * a, a}, {1 - 2 * a, a, a},
                {b, b, 1 - 2 * b}, {b, 1 - 2 * b, b}, {1 - 2 * b, b, b}};
    q.weights = {wa, wa, wa, wb, wb, wb};
  }
  return q;
}

double Potential::operator()(std::span<const double> x) const {
  if (kind == Kind::constant) return coefficient;
  double s = 0.0;
  for (double xi : x) s += (xi - 0.5) * (xi - 0.5);
  return coefficient * s;
}

Nonlinearity Nonlinearity::zero() { return {}; }

Nonlinearity Nonlinearity::potential(Potential v) {
  Nonlinearity n;
  n.kind_ = NonlinearityKind::potential;
  n.potential_ = v;
  return n;
}

Nonlinearity Nonlinearity::cubic(double zeta) {
  Nonlinearity n;
  n.kind_ = NonlinearityKind::cubic;
  n.zeta_ = zeta;
  return n;
}

Nonlinearity Nonlinearity::gpe(Potential v, double zeta) {
  Nonlinearity n;
  n.kind_ = NonlinearityKind::gpe;
  n.potential_ = v;
  n.zeta_ = zeta;
  return n;
}

Nonlinearity Nonlinearity::custom(std::string name, Fn f, Fn f_u, std::optional<Fn> w, bool linear) {
  Nonlinearity n;
  n.kind_ = NonlinearityKind::custom;
  n.custom_name_ = std::move(name);
  n.custom_f_ = std::move(f);
  n.custom_f_u_ = std::move(f_u);
  n.custom_w_ = std::move(w);
  n.custom_linear_ = linear;
  return n;
}

double Nonlinearity::f(std::span<const double> x, double u) const {
  switch (kind_) {
    case NonlinearityKind::zero: return 0.0;
    case NonlinearityKind::potential: return potential_(x) * u;
    case NonlinearityKind::cubic: return zeta_ * u * u * u;
    case NonlinearityKind::gpe: return potential_(x) * u + zeta_ * u * u * u;
    case NonlinearityKind::custom: return custom_f_(x, u);
  }
  return 0.0;
}

double Nonlinearity::f_u(std::span<const double> x, double u) const {
  switch (kind_) {
    case NonlinearityKind::zero: return 0.0;
    case NonlinearityKind::potential: return potential_(x);
    case NonlinearityKind::cubic: return 3.0 * zeta_ * u * u;
    case NonlinearityKind::gpe: return potential_(x) + 3.0 * zeta_ * u * u;
    case NonlinearityKind::custom: return custom_f_u_(x, u);
  }
  return 0.0;
}

double Nonlinearity::w(std::span<const double> x, double u) const {
  switch (kind_) {
    case NonlinearityKind::zero: return 0.0;
    case NonlinearityKind::potential: return potential_(x);
    case NonlinearityKind::cubic: return zeta_ * u * u;
    case NonlinearityKind::gpe: return potential_(x) + zeta_ * u * u;
    case NonlinearityKind::custom:
      if (!custom_w_) throw Error(ErrorKind::invalid_argument, "nonlinearity '" + custom_name_ + "' is not splittable");
      return (*custom_w_)(x, u);
  }
  return 0.0;
}

bool Nonlinearity::is_linear() const noexcept {
  switch (kind_) {
    case NonlinearityKind::zero:
    case NonlinearityKind::potential: return true;
    case NonlinearityKind::cubic:
    case NonlinearityKind::gpe: return zeta_ == 0.0;
    case NonlinearityKind::custom: return custom_linear_;
  }
  return false;
}

std::string Nonlinearity::name() const {
  switch (kind_) {
    case NonlinearityKind::zero: return "zero";
    case NonlinearityKind::potential: return "potential";
    case NonlinearityKind::cubic: return "cubic";
    case NonlinearityKind::gpe: return "gpe";
    case NonlinearityKind::custom: return custom_name_;
  }
  return {};
}

namespace {

struct CellGeometry {
  int n = 0;                 // vertices per cell
  std::array<int, 3> vert{};
  std::array<int, 3> dof{};  // -1 on boundary
  double measure = 0.0;
};

CellGeometry cell_geometry(const MeshLevel& mesh, int c) {
  CellGeometry g;
  g.n = mesh.vertices_per_cell();
  for (int a = 0; a < g.n; ++a) {
    g.vert[a] = mesh.cells[c][a];
    g.dof[a] = mesh.dof_of_vertex[g.vert[a]];
  }
  g.measure = mesh.cell_measure(c);
  return g;
}

std::array<double, 2> map_point(const MeshLevel& mesh, const CellGeometry& g, const std::array<double, 3>& bary) {
  std::array<double, 2> x{0.0, 0.0};
  for (int a = 0; a < g.n; ++a) {
    const Point& p = mesh.vertices[g.vert[a]];
    x[0] += bary[a] * p[0];
    x[1] += bary[a] * p[1];
  }
  return x;
}

double value_at(const CellGeometry& g, std::span<const double> u, const std::array<double, 3>& bary) {
  double s = 0.0;
  for (int a = 0; a < g.n; ++a)
    if (g.dof[a] >= 0) s += bary[a] * u[g.dof[a]];
  return s;
}

void check_level(const MeshLevel& mesh, const NodalVector& u, const char* who) {
  if (u.level != mesh.level || static_cast<int>(u.size()) != mesh.n_dofs())
    throw Error(ErrorKind::invalid_argument, std::string(who) + ": vector does not live on this mesh level");
}

/// int weight(x, u_h) phi_i phi_j over the interior (or all) vertices.
template <class Weight>
CsrMatrix weighted_mass(const MeshLevel& mesh, std::span<const double> u, DofSet dofs, Weight&& weight) {
  const QuadratureRule q = QuadratureRule::assembly(mesh.dim);
  const int n = dofs == DofSet::interior ? mesh.n_dofs() : mesh.n_vertices();
  std::vector<Triplet> t;
  t.reserve(mesh.cells.size() * 9);
  for (int c = 0; c < static_cast<int>(mesh.cells.size()); ++c) {
    const CellGeometry g = cell_geometry(mesh, c);
    std::array<int, 3> idx = dofs == DofSet::interior ? g.dof : g.vert;
    double local[3][3] = {};
    for (std::size_t p = 0; p < q.points.size(); ++p) {
      const auto& b = q.points[p];
      const auto x = map_point(mesh, g, b);
      const double uq = u.empty() ? 0.0 : value_at(g, u, b);
      const double s = q.weights[p] * g.measure * weight(std::span<const double>(x.data(), mesh.dim), uq);
      for (int a = 0; a < g.n; ++a)
        for (int bb = 0; bb < g.n; ++bb) local[a][bb] += s * b[a] * b[bb];
    }
    for (int a = 0; a < g.n; ++a)
      for (int bb = 0; bb < g.n; ++bb)
        if (idx[a] >= 0 && idx[bb] >= 0) t.push_back({idx[a], idx[bb], local[a][bb]});
  }
  return CsrMatrix::from_triplets(n, n, std::move(t));
}

/// Gradients of the barycentric coordinates on cell g.
std::array<std::array<double, 2>, 3> barycentric_gradients(const MeshLevel& mesh, const CellGeometry& g) {
  std::array<std::array<double, 2>, 3> grad{};
  if (mesh.dim == 1) {
    const double len = mesh.vertices[g.vert[1]][0] - mesh.vertices[g.vert[0]][0];
    grad[0] = {-1.0 / len, 0.0};
    grad[1] = {1.0 / len, 0.0};
    return grad;
  }
  const Point& p0 = mesh.vertices[g.vert[0]];
  const Point& p1 = mesh.vertices[g.vert[1]];
  const Point& p2 = mesh.vertices[g.vert[2]];
  const double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
  grad[0] = {(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det};
  grad[1] = {(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det};
  grad[2] = {(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det};
  return grad;
}

}  // namespace

CsrMatrix assemble_stiffness(const MeshLevel& mesh) {
  std::vector<Triplet> t;
  t.reserve(mesh.cells.size() * 9);
  for (int c = 0; c < static_cast<int>(mesh.cells.size()); ++c) {
    const CellGeometry g = cell_geometry(mesh, c);
    if (!(g.measure > 0.0)) throw Error(ErrorKind::invalid_argument, "assemble_stiffness: degenerate cell");
    const auto grad = barycentric_gradients(mesh, g);
    for (int a = 0; a < g.n; ++a)
      for (int b = 0; b < g.n; ++b)
        if (g.dof[a] >= 0 && g.dof[b] >= 0)
          t.push_back({g.dof[a], g.dof[b],
                       g.measure * (grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1])});
  }
  return CsrMatrix::from_triplets(mesh.n_dofs(), mesh.n_dofs(), std::move(t));
}

CsrMatrix assemble_mass(const MeshLevel& mesh, DofSet dofs) {
  return weighted_mass(mesh, {}, dofs, [](std::span<const double>, double) { return 1.0; });
}

NodalVector assemble_nonlinear_load(const MeshLevel& mesh, const NodalVector& u, const Nonlinearity& f) {
  check_level(mesh, u, "assemble_nonlinear_load");
  const QuadratureRule q = QuadratureRule::assembly(mesh.dim);
  NodalVector out{mesh.level, Vector(static_cast<std::size_t>(mesh.n_dofs()), 0.0)};
  for (int c = 0; c < static_cast<int>(mesh.cells.size()); ++c) {
    const CellGeometry g = cell_geometry(mesh, c);
    for (std::size_t p = 0; p < q.points.size(); ++p) {
      const auto& b = q.points[p];
      const auto x = map_point(mesh, g, b);
      const double uq = value_at(g, u.values, b);
      const double s = q.weights[p] * g.measure * f.f(std::span<const double>(x.data(), mesh.dim), uq);
      for (int a = 0; a < g.n; ++a)
        if (g.dof[a] >= 0) out.values[g.dof[a]] += s * b[a];
    }
  }
  return out;
}

CsrMatrix assemble_linearized_term(const MeshLevel& mesh, const NodalVector& u, const Nonlinearity& f) {
  check_level(mesh, u, "assemble_linearized_term");
  return weighted_mass(mesh, u.values, DofSet::interior,
                       [&f](std::span<const double> x, double uq) { return f.f_u(x, uq); });
}

CsrMatrix assemble_weighted_mass(const MeshLevel& mesh, const NodalVector& u, const Nonlinearity& f) {
  check_level(mesh, u, "assemble_weighted_mass");
  if (!f.splittable())
    throw Error(ErrorKind::invalid_argument, "assemble_weighted_mass: nonlinearity '" + f.name() + "' is not splittable");
  return weighted_mass(mesh, u.values, DofSet::interior,
                       [&f](std::span<const double> x, double uq) { return f.w(x, uq); });
}

NodalVector interpolate(const MeshLevel& mesh, const std::function<double(std::span<const double>)>& fn) {
  NodalVector out{mesh.level, Vector(static_cast<std::size_t>(mesh.n_dofs()))};
  for (int d = 0; d < mesh.n_dofs(); ++d) {
    const Point& p = mesh.vertices[mesh.interior_dof[d]];
    out.values[d] = fn(std::span<const double>(p.data(), mesh.dim));
  }
  return out;
}

ErrorNorms analytic_errors(const MeshLevel& mesh, const NodalVector& uh,
                           const std::function<double(std::span<const double>)>& u,
                           const std::function<std::array<double, 2>(std::span<const double>)>& grad_u) {
  check_level(mesh, uh, "analytic_errors");
  const QuadratureRule q = QuadratureRule::accurate(mesh.dim);
  double l2 = 0.0, h1 = 0.0;
  for (int c = 0; c < static_cast<int>(mesh.cells.size()); ++c) {
    const CellGeometry g = cell_geometry(mesh, c);
    const auto grad = barycentric_gradients(mesh, g);
    std::array<double, 2> gh{0.0, 0.0};
    for (int a = 0; a < g.n; ++a)
      if (g.dof[a] >= 0) {
        gh[0] += uh.values[g.dof[a]] * grad[a][0];
        gh[1] += uh.values[g.dof[a]] * grad[a][1];
      }
    for (std::size_t p = 0; p < q.points.size(); ++p) {
      const auto& b = q.points[p];
      const auto x = map_point(mesh, g, b);
      const std::span<const double> xs(x.data(), mesh.dim);
      const double e = u(xs) - value_at(g, uh.values, b);
      const auto gu = grad_u(xs);
      const double ex = gu[0] - gh[0];
      const double ey = mesh.dim == 2 ? gu[1] - gh[1] : 0.0;
      const double s = q.weights[p] * g.measure;
      l2 += s * e * e;
      h1 += s * (ex * ex + ey * ey);
    }
  }
  return {std::sqrt(l2), std::sqrt(h1)};
}

}  // namespace nlmg
