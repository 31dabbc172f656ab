#include "support.hpp"

#include "nlmg/error.hpp"
#include "nlmg/fem.hpp"
#include "nlmg/mesh.hpp"

#include <doctest.h>
#include <json.hpp>

using namespace nlmg;

namespace {

double cell_measure_of(const MeshLevel& m, const Cell& c) {
  const Point& a = m.vertices[static_cast<std::size_t>(c[0])];
  const Point& b = m.vertices[static_cast<std::size_t>(c[1])];
  if (m.dim == 1) return std::abs(b[0] - a[0]);
  const Point& q = m.vertices[static_cast<std::size_t>(c[2])];
  return 0.5 * std::abs((b[0] - a[0]) * (q[1] - a[1]) - (q[0] - a[0]) * (b[1] - a[1]));
}

bool on_boundary(const Point& p, int dim) {
  const auto edge = [](double x) { return std::abs(x) < 1e-14 || std::abs(x - 1.0) < 1e-14; };
  return dim == 1 ? edge(p[0]) : edge(p[0]) || edge(p[1]);
}

}  // namespace

TEST_CASE("coarse mesh counts") {
  const MeshLevel a = build_coarse_mesh(Domain::interval(), 0.25);
  CHECK(a.n_vertices() == 5);
  CHECK(a.cells.size() == 4);
  CHECK(a.n_dofs() == 3);

  const MeshLevel b = build_coarse_mesh(Domain::square(), 0.25);
  CHECK(b.n_vertices() == 25);
  CHECK(b.cells.size() == 32);
  CHECK(b.n_dofs() == 9);

  const MeshLevel c = build_coarse_mesh(Domain::square(), 1.0 / 3.0);
  CHECK(c.n_vertices() == 16);
  CHECK(c.cells.size() == 18);
  CHECK(c.n_dofs() == 4);
}

TEST_CASE("coarse mesh rejects bad H") {
  CHECK_THROWS_AS(build_coarse_mesh(Domain::interval(), 0.3), Error);
  CHECK_THROWS_AS(build_coarse_mesh(Domain::square(), 1.0), Error);
  CHECK_THROWS_AS(build_coarse_mesh(Domain::square(), 1.5), Error);
  CHECK_THROWS_AS(build_coarse_mesh(Domain::interval(), 0.0), Error);
  CHECK_THROWS_AS(build_coarse_mesh(Domain::interval(), -0.25), Error);
}

TEST_CASE("2d cells share one diagonal orientation") {
  const MeshLevel m = build_coarse_mesh(Domain::square(), 0.25);
  for (const Cell& c : m.cells) {
    // every triangle contains the lower-left and upper-right corner of its square
    double xmin = 1, ymin = 1, xmax = 0, ymax = 0;
    for (int v : c) {
      const Point& p = m.vertices[static_cast<std::size_t>(v)];
      xmin = std::min(xmin, p[0]), xmax = std::max(xmax, p[0]);
      ymin = std::min(ymin, p[1]), ymax = std::max(ymax, p[1]);
    }
    bool has_ll = false, has_ur = false;
    for (int v : c) {
      const Point& p = m.vertices[static_cast<std::size_t>(v)];
      has_ll |= p[0] == xmin && p[1] == ymin;
      has_ur |= p[0] == xmax && p[1] == ymax;
    }
    CHECK(has_ll);
    CHECK(has_ur);
  }
}

TEST_CASE("regular refinement") {
  const MeshLevel a = build_coarse_mesh(Domain::interval(), 0.25);
  const MeshLevel a1 = refine_regular(a, 2);
  CHECK(a1.cells.size() == 8);
  CHECK(a1.n_vertices() == 9);
  CHECK(a1.h == 0.125);

  const MeshLevel b = build_coarse_mesh(Domain::square(), 0.25);
  const MeshLevel b1 = refine_regular(b, 2);
  CHECK(b1.cells.size() == 128);
  CHECK(b1.h == 0.125);

  CHECK_THROWS_AS(refine_regular(b, 3), Error);
  CHECK_THROWS_AS(refine_regular(b, 1), Error);
}

TEST_CASE("refinement keeps parent vertices and marks the boundary") {
  for (Domain d : {Domain::interval(), Domain::square()}) {
    const MeshLevel c = build_coarse_mesh(d, 0.25);
    const MeshLevel f = refine_regular(c, 2);
    REQUIRE(f.coarse_to_fine.size() == c.vertices.size());
    for (std::size_t i = 0; i < c.vertices.size(); ++i) {
      const Point& pf = f.vertices[static_cast<std::size_t>(f.coarse_to_fine[i])];
      CHECK(pf[0] == c.vertices[i][0]);
      CHECK(pf[1] == c.vertices[i][1]);
    }
    for (const MeshLevel* m : {&c, &f}) {
      for (std::size_t v = 0; v < m->vertices.size(); ++v)
        CHECK(static_cast<bool>(m->is_boundary[v]) == on_boundary(m->vertices[v], m->dim));
      double total = 0.0;
      for (const Cell& cell : m->cells) {
        const double meas = cell_measure_of(*m, cell);
        CHECK(meas > 0.0);
        total += meas;
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
      for (int k = 0; k < m->n_dofs(); ++k)
        CHECK(m->dof_of_vertex[static_cast<std::size_t>(m->interior_dof[static_cast<std::size_t>(k)])] == k);
    }
  }
}

TEST_CASE("hierarchy sizes") {
  const MeshHierarchy h1 = build_hierarchy(Domain::interval(), 0.25, 3, 2);
  REQUIRE(h1.finest() == 3);
  const int expected[] = {3, 7, 15, 31};
  for (int k = 0; k <= 3; ++k) CHECK(h1.level(k).n_dofs() == expected[k]);

  const MeshHierarchy h2 = build_hierarchy(Domain::square(), 0.25, 2, 2);
  CHECK(h2.level(0).h == 0.25);
  CHECK(h2.level(1).h == 0.125);
  CHECK(h2.level(2).h == 0.0625);
  for (int k = 1; k <= 2; ++k) {
    const int m = static_cast<int>(std::lround(1.0 / h2.level(k).h));
    CHECK(h2.level(k).n_dofs() == (m - 1) * (m - 1));
    CHECK(h2.level(k).n_vertices() == (m + 1) * (m + 1));
    // N_k / N_{k-1} ~ beta^d up to boundary terms
    const double ratio = static_cast<double>(h2.level(k).n_dofs()) / h2.level(k - 1).n_dofs();
    CHECK(ratio >= 4.0);
  }
  const MeshHierarchy h3 = build_hierarchy(Domain::square(), 0.25, 5, 2);
  const double r = static_cast<double>(h3.level(5).n_dofs()) / h3.level(4).n_dofs();
  CHECK(std::abs(r / 4.0 - 1.0) <= 0.1);

  CHECK_THROWS_AS(build_hierarchy(Domain::square(), 0.25, 1, 3), Error);
  CHECK_THROWS_AS(build_hierarchy(Domain::square(), 0.25, 0, 2), Error);
}

TEST_CASE("prolongation weights") {
  const MeshLevel c = build_coarse_mesh(Domain::interval(), 0.25);
  const MeshLevel f = refine_regular(c, 2);
  const CsrMatrix p = assemble_prolongation(c, f);
  CHECK(p.rows() == f.n_dofs());
  CHECK(p.cols() == c.n_dofs());
  for (int i = 0; i < f.n_dofs(); ++i) {
    const int v = f.interior_dof[static_cast<std::size_t>(i)];
    const auto& par = f.parents[static_cast<std::size_t>(v)];
    if (par[0] == par[1]) {
      // coincident vertex: weight 1 on that coarse dof
      const int cd = c.dof_of_vertex[static_cast<std::size_t>(par[0])];
      CHECK(p.at(i, cd) == 1.0);
      CHECK(p.row_ptr()[i + 1] - p.row_ptr()[i] == 1);
    } else {
      for (int q : par) {
        const int cd = c.dof_of_vertex[static_cast<std::size_t>(q)];
        if (cd >= 0) CHECK(p.at(i, cd) == 0.5);
      }
    }
  }
}

TEST_CASE("prolongation reproduces constants with the boundary handled explicitly") {
  for (Domain d : {Domain::interval(), Domain::square()}) {
    const MeshLevel c = build_coarse_mesh(d, 0.25);
    const MeshLevel f = refine_regular(c, 2);
    const CsrMatrix p = assemble_prolongation(c, f);
    const Vector ones(static_cast<std::size_t>(c.n_dofs()), 1.0);
    const Vector pf = p * ones;
    for (int i = 0; i < f.n_dofs(); ++i) {
      const int v = f.interior_dof[static_cast<std::size_t>(i)];
      const auto& par = f.parents[static_cast<std::size_t>(v)];
      // boundary parents carry the value 1 of the extended constant
      double boundary = 0.0;
      if (par[0] != par[1])
        for (int q : par)
          if (c.is_boundary[static_cast<std::size_t>(q)]) boundary += 0.5;
      CHECK(pf[static_cast<std::size_t>(i)] + boundary == doctest::Approx(1.0).epsilon(1e-15));
    }
  }
}

TEST_CASE("prolongation exactness on random coarse functions") {
  std::mt19937_64 rng(7);
  for (Domain d : {Domain::interval(), Domain::square()}) {
    const MeshHierarchy h = build_hierarchy(d, 0.25, 2, 2);
    for (int k = 1; k <= 2; ++k) {
      const MeshLevel& c = h.level(k - 1);
      const MeshLevel& f = h.level(k);
      double worst = 0.0;
      for (int t = 0; t < 100; ++t) {
        const Vector v = testing::random_vector(static_cast<std::size_t>(c.n_dofs()), rng);
        const Vector pv = h.prolongation(k) * v;
        for (int i = 0; i < f.n_dofs(); ++i) {
          const Point& x = f.vertices[static_cast<std::size_t>(f.interior_dof[static_cast<std::size_t>(i)])];
          worst = std::max(worst, std::abs(testing::evaluate_p1(c, v, x) - pv[static_cast<std::size_t>(i)]));
        }
      }
      CHECK(worst <= 1e-14);
    }
  }
}

TEST_CASE("Galerkin identity for stiffness and mass") {
  for (Domain d : {Domain::interval(), Domain::square()}) {
    const MeshHierarchy h = build_hierarchy(d, 0.25, 3, 2);
    for (int k = 1; k <= 3; ++k) {
      const CsrMatrix& p = h.prolongation(k);
      CHECK(testing::relative_difference(galerkin_product(p, assemble_stiffness(h.level(k))),
                                         assemble_stiffness(h.level(k - 1))) <= 1e-12);
      CHECK(testing::relative_difference(galerkin_product(p, assemble_mass(h.level(k))),
                                         assemble_mass(h.level(k - 1))) <= 1e-12);
    }
  }
}

TEST_CASE("composite prolongation maps coarse hats exactly") {
  for (Domain d : {Domain::interval(), Domain::square()}) {
    const MeshHierarchy h = build_hierarchy(d, 0.25, 3, 2);
    const MeshLevel& c = h.level(0);
    const MeshLevel& f = h.level(3);
    const CsrMatrix g = h.composite_prolongation(3);
    REQUIRE(g.rows() == f.n_dofs());
    REQUIRE(g.cols() == c.n_dofs());
    for (int j = 0; j < c.n_dofs(); ++j) {
      Vector e(static_cast<std::size_t>(c.n_dofs()), 0.0);
      e[static_cast<std::size_t>(j)] = 1.0;
      const Vector col = g * e;
      for (int i = 0; i < f.n_dofs(); ++i) {
        const Point& x = f.vertices[static_cast<std::size_t>(f.interior_dof[static_cast<std::size_t>(i)])];
        CHECK(std::abs(col[static_cast<std::size_t>(i)] - testing::evaluate_p1(c, e, x)) <= 1e-14);
      }
      // nodal property at coarse vertices
      for (int i = 0; i < c.n_dofs(); ++i) {
        int v = c.interior_dof[static_cast<std::size_t>(i)];
        for (int k = 1; k <= 3; ++k) v = h.level(k).coarse_to_fine[static_cast<std::size_t>(v)];
        CHECK(col[static_cast<std::size_t>(f.dof_of_vertex[static_cast<std::size_t>(v)])] == (i == j ? 1.0 : 0.0));
      }
    }
    // lift agrees with the composite operator
    std::mt19937_64 rng(3);
    const Vector v = testing::random_vector(static_cast<std::size_t>(c.n_dofs()), rng);
    CHECK(testing::max_abs_diff(h.lift(v, 0, 3), g * v) <= 1e-15);
  }
}

TEST_CASE("prolongation rejects mismatched levels") {
  const MeshHierarchy h = build_hierarchy(Domain::interval(), 0.25, 2, 2);
  CHECK_THROWS_AS(assemble_prolongation(h.level(0), h.level(0)), Error);
  CHECK_THROWS_AS(assemble_prolongation(h.level(0), h.level(2)), Error);
  CHECK_THROWS_AS(assemble_prolongation(h.level(1), h.level(0)), Error);
  const MeshHierarchy s = build_hierarchy(Domain::square(), 0.25, 1, 2);
  CHECK_THROWS_AS(assemble_prolongation(h.level(0), s.level(1)), Error);
}

TEST_CASE("mesh json dump") {
  const MeshLevel m = build_coarse_mesh(Domain::square(), 0.5);
  const auto j = nlohmann::json::parse(mesh_to_json(m));
  CHECK(j.at("vertices").size() == 9);
  CHECK(j.at("cells").size() == 8);
  CHECK(j.at("boundary").size() == 9);
}
