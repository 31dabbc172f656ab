#include "support.hpp"

#include "oracle/dense_scf_oracle.hpp"

#include "nlmg/error.hpp"
#include "nlmg/fem.hpp"
#include "nlmg/mesh.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace nlmg;

namespace {

NodalVector constant_vector(const MeshLevel& m, double c) {
  return NodalVector{m.level, Vector(static_cast<std::size_t>(m.n_dofs()), c)};
}

/// Dofs whose cells touch no boundary vertex, so u_h is constant on their support.
std::vector<int> deep_dofs(const MeshLevel& m) {
  std::vector<char> touches(static_cast<std::size_t>(m.n_dofs()), 0);
  for (const Cell& c : m.cells) {
    bool boundary = false;
    for (int a = 0; a < m.vertices_per_cell(); ++a) boundary |= m.is_boundary[static_cast<std::size_t>(c[a])] != 0;
    if (!boundary) continue;
    for (int a = 0; a < m.vertices_per_cell(); ++a) {
      const int d = m.dof_of_vertex[static_cast<std::size_t>(c[a])];
      if (d >= 0) touches[static_cast<std::size_t>(d)] = 1;
    }
  }
  std::vector<int> out;
  for (int i = 0; i < m.n_dofs(); ++i)
    if (!touches[static_cast<std::size_t>(i)]) out.push_back(i);
  return out;
}

/// Interior dofs at distance h from dof i (1d).
std::vector<int> geometric_neighbours(const MeshLevel& m, int i) {
  std::vector<int> out;
  const double xi = m.vertices[static_cast<std::size_t>(m.interior_dof[static_cast<std::size_t>(i)])][0];
  for (int j = 0; j < m.n_dofs(); ++j) {
    const double xj = m.vertices[static_cast<std::size_t>(m.interior_dof[static_cast<std::size_t>(j)])][0];
    if (std::abs(std::abs(xi - xj) - m.h) < 1e-12) out.push_back(j);
  }
  return out;
}

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

Nonlinearity harmonic_gpe(double coefficient, double zeta) {
  return Nonlinearity::gpe(Potential{Potential::Kind::harmonic, coefficient}, zeta);
}

}  // namespace

TEST_CASE("quadrature rules") {
  for (int dim : {1, 2}) {
    for (const QuadratureRule& q : {QuadratureRule::assembly(dim), QuadratureRule::accurate(dim)}) {
      double s = 0.0;
      for (double w : q.weights) s += w;
      CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
      for (int a = 0; a <= q.degree; ++a) {
        for (int b = 0; b <= (dim == 2 ? q.degree - a : 0); ++b) {
          double approx = 0.0;
          for (std::size_t p = 0; p < q.points.size(); ++p)
            approx += q.weights[p] * std::pow(q.points[p][1], a) * std::pow(q.points[p][2], b);
          const double exact = dim == 1 ? 1.0 / (a + 1) : 2.0 * factorial(a) * factorial(b) / factorial(a + b + 2);
          CHECK(approx == doctest::Approx(exact).epsilon(1e-14));
        }
      }
    }
  }
  CHECK(QuadratureRule::assembly(1).degree >= 3);
  CHECK(QuadratureRule::assembly(2).degree >= 2);
  CHECK(QuadratureRule::accurate(2).degree >= 4);
}

TEST_CASE("stiffness stencils") {
  const MeshLevel m = refine_regular(build_coarse_mesh(Domain::interval(), 0.25), 2);
  const CsrMatrix k = assemble_stiffness(m);
  const double h = m.h;
  for (int i = 0; i < k.rows(); ++i) {
    CHECK(k.at(i, i) == doctest::Approx(2.0 / h).epsilon(1e-14));
    for (int j : geometric_neighbours(m, i)) CHECK(k.at(i, j) == doctest::Approx(-1.0 / h).epsilon(1e-14));
  }

  const MeshLevel s = build_hierarchy(Domain::square(), 0.25, 1).level(1);
  const CsrMatrix k2 = assemble_stiffness(s);
  for (int i = 0; i < k2.rows(); ++i) {
    CHECK(k2.at(i, i) == doctest::Approx(4.0).epsilon(1e-14));
    int neighbours = 0;
    for (int p = k2.row_ptr()[i]; p < k2.row_ptr()[i + 1]; ++p) {
      if (k2.col_idx()[p] == i) continue;
      const double v = k2.values()[p];
      // the diagonal-direction couplings vanish on this grid
      CHECK((std::abs(v + 1.0) <= 1e-14 || std::abs(v) <= 1e-14));
      if (std::abs(v + 1.0) <= 1e-14) ++neighbours;
    }
    CHECK(neighbours <= 4);
  }
}

TEST_CASE("mass matrix") {
  const MeshLevel m = refine_regular(build_coarse_mesh(Domain::interval(), 0.25), 2);
  const CsrMatrix mm = assemble_mass(m);
  for (int i = 0; i < mm.rows(); ++i) {
    CHECK(mm.at(i, i) == doctest::Approx(2.0 * m.h / 3.0).epsilon(1e-14));
    for (int j : geometric_neighbours(m, i)) CHECK(mm.at(i, j) == doctest::Approx(m.h / 6.0).epsilon(1e-14));
  }
  for (Domain d : {Domain::interval(), Domain::square()}) {
    const MeshHierarchy hier = build_hierarchy(d, 0.25, 2);
    for (int k = 0; k <= 2; ++k) {
      const CsrMatrix full = assemble_mass(hier.level(k), DofSet::all);
      double total = 0.0;
      for (double v : full.values()) total += v;
      CHECK(std::abs(total - 1.0) <= 1e-12);
    }
    std::mt19937_64 rng(11);
    const CsrMatrix m2 = assemble_mass(hier.level(2));
    for (int t = 0; t < 100; ++t) {
      const Vector x = testing::random_vector(static_cast<std::size_t>(m2.rows()), rng);
      CHECK(inner(m2, x, x) > 0.0);
    }
  }
}

TEST_CASE("assembled matrices are symmetric and SPD") {
  std::mt19937_64 rng(5);
  for (Domain d : {Domain::interval(), Domain::square()}) {
    const MeshLevel m = build_hierarchy(d, 0.25, 2).level(2);
    const NodalVector u{2, testing::random_vector(static_cast<std::size_t>(m.n_dofs()), rng)};
    const Nonlinearity f = harmonic_gpe(50.0, 10.0);
    for (const CsrMatrix& a : {assemble_stiffness(m), assemble_mass(m), assemble_linearized_term(m, u, f),
                               assemble_weighted_mass(m, u, f)}) {
      CHECK(symmetry_defect(a) <= 1e-13 * a.max_abs());
      const Eigen::MatrixXd da = testing::dense(a);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(da, Eigen::EigenvaluesOnly);
      CHECK(es.eigenvalues()(0) > 0.0);
    }
  }
}

TEST_CASE("nonlinearity contracts") {
  const double x[2] = {0.3, 0.7};
  const Potential v{Potential::Kind::harmonic, 4.0};
  const double vx = 4.0 * (0.2 * 0.2 + 0.2 * 0.2);
  CHECK(v(x) == doctest::Approx(vx));
  const double u = 1.7;
  const Nonlinearity z = Nonlinearity::zero();
  CHECK(z.f(x, u) == 0.0);
  CHECK(z.f_u(x, u) == 0.0);
  CHECK(z.w(x, u) == 0.0);
  const Nonlinearity p = Nonlinearity::potential(v);
  CHECK(p.f(x, u) == doctest::Approx(vx * u));
  CHECK(p.f_u(x, u) == doctest::Approx(vx));
  CHECK(p.w(x, u) == doctest::Approx(vx));
  const Nonlinearity c = Nonlinearity::cubic(3.0);
  CHECK(c.f(x, u) == doctest::Approx(3.0 * u * u * u));
  CHECK(c.f_u(x, u) == doctest::Approx(9.0 * u * u));
  CHECK(c.w(x, u) == doctest::Approx(3.0 * u * u));
  const Nonlinearity g = Nonlinearity::gpe(v, 3.0);
  CHECK(g.f(x, u) == doctest::Approx(vx * u + 3.0 * u * u * u));
  CHECK(g.f_u(x, u) == doctest::Approx(vx + 9.0 * u * u));
  CHECK(g.w(x, u) == doctest::Approx(vx + 3.0 * u * u));
  CHECK(z.is_linear());
  CHECK(p.is_linear());
  CHECK_FALSE(c.is_linear());
  CHECK(Nonlinearity::gpe(v, 0.0).is_linear());
  for (double uu : {-2.0, 0.0, 0.5, 3.0}) CHECK(g.f_u(x, uu) >= 0.0);
}

TEST_CASE("nonlinear load examples") {
  const MeshLevel m = build_hierarchy(Domain::interval(), 0.25, 2).level(2);
  const CsrMatrix mm = assemble_mass(m);
  std::mt19937_64 rng(1);
  const NodalVector u{2, testing::random_vector(static_cast<std::size_t>(m.n_dofs()), rng)};

  for (double x : assemble_nonlinear_load(m, u, Nonlinearity::zero()).values) CHECK(x == 0.0);

  const NodalVector load = assemble_nonlinear_load(m, u, Nonlinearity::potential({Potential::Kind::constant, 1.0}));
  CHECK(testing::max_abs_diff(load.values, mm * u.values) <= 1e-15);

  const double c = 0.8;
  const NodalVector cu = constant_vector(m, c);
  const NodalVector cl = assemble_nonlinear_load(m, cu, Nonlinearity::cubic(1.0));
  const auto deep = deep_dofs(m);
  REQUIRE(deep.size() == static_cast<std::size_t>(m.n_dofs() - 2));
  for (int i : deep) {
    // row sum of M is h for interior-of-interior rows in 1d
    CHECK(cl.values[static_cast<std::size_t>(i)] == doctest::Approx(c * c * c * m.h).epsilon(1e-14));
  }

  const NodalVector wrong{1, u.values};
  CHECK_THROWS_AS(assemble_nonlinear_load(m, wrong, Nonlinearity::zero()), Error);
}

TEST_CASE("linearized term and weighted mass examples") {
  for (Domain d : {Domain::interval(), Domain::square()}) {
    const MeshLevel m = build_hierarchy(d, 0.25, 2).level(2);
    const CsrMatrix mm = assemble_mass(m);
    std::mt19937_64 rng(2);
    const NodalVector u{2, testing::random_vector(static_cast<std::size_t>(m.n_dofs()), rng)};

    CHECK(assemble_linearized_term(m, u, Nonlinearity::zero()).max_abs() == 0.0);
    CHECK(assemble_weighted_mass(m, u, Nonlinearity::zero()).max_abs() == 0.0);
    const Nonlinearity one = Nonlinearity::potential({Potential::Kind::constant, 1.0});
    CHECK(testing::relative_difference(assemble_linearized_term(m, u, one), mm) <= 1e-14);

    const double c = 1.3, zeta = 2.0;
    const NodalVector cu = constant_vector(m, c);
    const CsrMatrix j = assemble_linearized_term(m, cu, Nonlinearity::cubic(zeta));
    const CsrMatrix w = assemble_weighted_mass(m, cu, Nonlinearity::cubic(zeta));
    const auto deep = deep_dofs(m);
    REQUIRE(!deep.empty());
    for (int i : deep) {
      for (int p = mm.row_ptr()[i]; p < mm.row_ptr()[i + 1]; ++p) {
        const int col = mm.col_idx()[p];
        CHECK(j.at(i, col) == doctest::Approx(3.0 * zeta * c * c * mm.values()[p]).epsilon(1e-13));
        CHECK(w.at(i, col) == doctest::Approx(zeta * c * c * mm.values()[p]).epsilon(1e-13));
      }
    }

    // gpe with zeta = 0: potential-weighted mass, independent of u
    const Potential v{Potential::Kind::harmonic, 7.0};
    const CsrMatrix w0 = assemble_weighted_mass(m, u, Nonlinearity::gpe(v, 0.0));
    const CsrMatrix w1 = assemble_weighted_mass(m, cu, Nonlinearity::gpe(v, 0.0));
    CHECK(testing::relative_difference(w0, w1) == 0.0);
    CHECK(testing::relative_difference(w0, assemble_weighted_mass(m, u, Nonlinearity::potential(v))) == 0.0);
  }
}

TEST_CASE("non-splittable nonlinearity is rejected") {
  const MeshLevel m = build_coarse_mesh(Domain::interval(), 0.125);
  const Nonlinearity s = Nonlinearity::custom(
      "sine", [](std::span<const double>, double u) { return std::sin(u); },
      [](std::span<const double>, double u) { return std::cos(u); }, std::nullopt, false);
  CHECK_FALSE(s.splittable());
  const NodalVector u = constant_vector(m, 0.5);
  CHECK_NOTHROW(assemble_nonlinear_load(m, u, s));
  CHECK_THROWS_AS(assemble_weighted_mass(m, u, s), Error);
}

TEST_CASE("splitting consistency") {
  std::mt19937_64 rng(9);
  for (Domain d : {Domain::interval(), Domain::square()}) {
    const MeshLevel m = build_hierarchy(d, 0.25, 2).level(2);
    const NodalVector u{2, testing::random_vector(static_cast<std::size_t>(m.n_dofs()), rng, -2.0, 2.0)};
    for (const Nonlinearity& f : {Nonlinearity::cubic(10.0), harmonic_gpe(100.0, 10.0),
                                  Nonlinearity::potential({Potential::Kind::harmonic, 3.0})}) {
      const Vector wu = assemble_weighted_mass(m, u, f) * u.values;
      const Vector load = assemble_nonlinear_load(m, u, f).values;
      double scale = 0.0;
      for (double x : load) scale = std::max(scale, std::abs(x));
      CHECK(testing::max_abs_diff(wu, load) <= 1e-12 * std::max(1.0, scale));
    }
  }
}

TEST_CASE("linearized term is the Jacobian of the load") {
  std::mt19937_64 rng(13);
  const double eps = 1e-5;
  for (Domain d : {Domain::interval(), Domain::square()}) {
    const MeshLevel m = build_hierarchy(d, 0.25, 2).level(2);
    const auto n = static_cast<std::size_t>(m.n_dofs());
    const NodalVector u{2, testing::random_vector(n, rng)};
    for (const Nonlinearity& f : {Nonlinearity::cubic(10.0), harmonic_gpe(100.0, 5.0)}) {
      const CsrMatrix j = assemble_linearized_term(m, u, f);
      for (int t = 0; t < 20; ++t) {
        const Vector dir = testing::random_vector(n, rng);
        NodalVector up = u, um = u;
        for (std::size_t i = 0; i < n; ++i) {
          up.values[i] += eps * dir[i];
          um.values[i] -= eps * dir[i];
        }
        const Vector fp = assemble_nonlinear_load(m, up, f).values;
        const Vector fm = assemble_nonlinear_load(m, um, f).values;
        const Vector jd = j * dir;
        Vector diff(n);
        for (std::size_t i = 0; i < n; ++i) diff[i] = (fp[i] - fm[i]) / (2 * eps) - jd[i];
        CHECK(norm2(diff) <= 1e-6 * norm2(jd));
      }
    }
  }
}

TEST_CASE("Lipschitz bound of the nonlinear load holds level-uniformly") {
  std::mt19937_64 rng(21);
  for (Domain d : {Domain::interval(), Domain::square()}) {
    const MeshHierarchy hier = build_hierarchy(d, 0.25, 2);
    for (const Nonlinearity& f : {Nonlinearity::cubic(10.0), harmonic_gpe(100.0, 10.0)}) {
      for (bool second : {false, true}) {
        const double c0 = testing::assumption_ratio(hier.level(0), f, second, rng);
        CHECK(std::isfinite(c0));
        CHECK(c0 > 0.0);
        for (int k = 1; k <= 2; ++k) CHECK(testing::assumption_ratio(hier.level(k), f, second, rng) <= 2.0 * c0);
      }
    }
  }
}

TEST_CASE("discrete Laplace eigenvalue matches the closed form") {
  const MeshHierarchy hier = build_hierarchy(Domain::interval(), 0.125, 3);
  double prev = INFINITY;
  for (int k = 0; k <= 3; ++k) {
    const MeshLevel& m = hier.level(k);
    const double lam = testing::smallest_dense_eigenvalue(assemble_stiffness(m), assemble_mass(m));
    CHECK(lam == doctest::Approx(oracle::discrete_laplace_eigenvalue_1d(m.h)).epsilon(1e-12));
    CHECK(lam > M_PI * M_PI);
    CHECK(lam < prev);
    prev = lam;
  }
  CHECK(oracle::discrete_laplace_eigenvalue_1d(0.125) == doctest::Approx(9.997080).epsilon(1e-6));
  CHECK(std::abs(prev - M_PI * M_PI) < 0.01);
}

TEST_CASE("analytic errors vanish for interpolated linear functions") {
  // sin(pi x) interpolant error decreases at second order in L2
  const MeshHierarchy hier = build_hierarchy(Domain::interval(), 0.125, 2);
  double prev = 0.0;
  for (int k = 0; k <= 2; ++k) {
    const MeshLevel& m = hier.level(k);
    const auto u = [](std::span<const double> x) { return std::sin(M_PI * x[0]); };
    const auto g = [](std::span<const double> x) { return std::array<double, 2>{M_PI * std::cos(M_PI * x[0]), 0.0}; };
    const ErrorNorms e = analytic_errors(m, interpolate(m, u), u, g);
    if (k > 0) {
      CHECK(std::log2(prev / e.l2) == doctest::Approx(2.0).epsilon(0.05));
    }
    prev = e.l2;
  }
}
