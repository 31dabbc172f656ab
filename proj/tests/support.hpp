#pragma once

#include "nlmg/fem.hpp"
#include "nlmg/mesh.hpp"
#include "nlmg/nonlinear_eig.hpp"
#include "nlmg/sparse.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

namespace testing {

inline nlmg::Vector random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  nlmg::Vector v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

inline Eigen::MatrixXd dense(const nlmg::CsrMatrix& a) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int p = a.row_ptr()[i]; p < a.row_ptr()[i + 1]; ++p) d(i, a.col_idx()[p]) += a.values()[p];
  return d;
}

/// max |a - b| / max |b|
inline double relative_difference(const nlmg::CsrMatrix& a, const nlmg::CsrMatrix& b) {
  const Eigen::MatrixXd da = dense(a), db = dense(b);
  return (da - db).cwiseAbs().maxCoeff() / db.cwiseAbs().maxCoeff();
}

inline double max_abs_diff(const nlmg::Vector& a, const nlmg::Vector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Smallest eigenvalue of the dense generalized problem (A, M).
inline double smallest_dense_eigenvalue(const nlmg::CsrMatrix& a, const nlmg::CsrMatrix& m) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(a), dense(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

/// Evaluates the P1 function with interior values `v` (zero on the boundary) at point p.
inline double evaluate_p1(const nlmg::MeshLevel& mesh, const nlmg::Vector& v, const nlmg::Point& p) {
  const auto value = [&](int vertex) {
    const int d = mesh.dof_of_vertex[static_cast<std::size_t>(vertex)];
    return d < 0 ? 0.0 : v[static_cast<std::size_t>(d)];
  };
  for (const nlmg::Cell& c : mesh.cells) {
    if (mesh.dim == 1) {
      const double a = mesh.vertices[static_cast<std::size_t>(c[0])][0];
      const double b = mesh.vertices[static_cast<std::size_t>(c[1])][0];
      const double lo = std::min(a, b), hi = std::max(a, b);
      if (p[0] < lo - 1e-15 || p[0] > hi + 1e-15) continue;
      const double t = (p[0] - a) / (b - a);
      return (1.0 - t) * value(c[0]) + t * value(c[1]);
    }
    const nlmg::Point& x0 = mesh.vertices[static_cast<std::size_t>(c[0])];
    const nlmg::Point& x1 = mesh.vertices[static_cast<std::size_t>(c[1])];
    const nlmg::Point& x2 = mesh.vertices[static_cast<std::size_t>(c[2])];
    const double det = (x1[0] - x0[0]) * (x2[1] - x0[1]) - (x2[0] - x0[0]) * (x1[1] - x0[1]);
    const double l1 = ((p[0] - x0[0]) * (x2[1] - x0[1]) - (x2[0] - x0[0]) * (p[1] - x0[1])) / det;
    const double l2 = ((x1[0] - x0[0]) * (p[1] - x0[1]) - (p[0] - x0[0]) * (x1[1] - x0[1])) / det;
    const double l0 = 1.0 - l1 - l2;
    if (l0 < -1e-14 || l1 < -1e-14 || l2 < -1e-14) continue;
    return l0 * value(c[0]) + l1 * value(c[1]) + l2 * value(c[2]);
  }
  return NAN;
}

/// u^T M u = 1 and sum(M u) > 0
inline bool normalized_and_oriented(const nlmg::NodalVector& u, const nlmg::CsrMatrix& m, double tol = 1e-12) {
  const nlmg::Vector mu = m * u.values;
  double s = 0.0;
  for (double x : mu) s += x;
  return std::abs(nlmg::dot(u.values, mu) - 1.0) <= tol && s > 0.0;
}

}  // namespace testing

namespace testing {

/// Plain conjugate gradients, used as an independent solver oracle.
inline nlmg::Vector cg_solve(const nlmg::CsrMatrix& a, const nlmg::Vector& b, double tol = 1e-14,
                             int max_iter = 100000) {
  const std::size_t n = b.size();
  nlmg::Vector x(n, 0.0), r = b, p = b;
  double rr = nlmg::dot(r, r);
  const double stop = tol * tol * rr;
  for (int it = 0; it < max_iter && rr > stop; ++it) {
    const nlmg::Vector ap = a * p;
    const double alpha = rr / nlmg::dot(p, ap);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    const double rr_new = nlmg::dot(r, r);
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + rr_new / rr * p[i];
    rr = rr_new;
  }
  return x;
}

}  // namespace testing

namespace testing {

/// Largest ratio |(f(w) - f(v) [- f_u(v)(w - v)], psi)| / (||w - v||_0 ||psi||_1) over
/// 50 random triples with ||.||_1 <= 1 on one level, where ||x||_1^2 = x^T (A + M) x.
inline double assumption_ratio(const nlmg::MeshLevel& m, const nlmg::Nonlinearity& f, bool second_order,
                               std::mt19937_64& rng) {
  using namespace nlmg;
  const CsrMatrix k = assemble_stiffness(m);
  const CsrMatrix mm = assemble_mass(m);
  const auto n = static_cast<std::size_t>(m.n_dofs());
  const auto sq_norm1 = [&](const Vector& x) { return inner(k, x, x) + inner(mm, x, x); };
  std::uniform_real_distribution<double> radius(0.1, 1.0);
  const auto sample = [&] {
    Vector x = random_vector(n, rng);
    const double s = radius(rng) / std::sqrt(sq_norm1(x));
    for (double& xi : x) xi *= s;
    return x;
  };
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const NodalVector w{m.level, sample()}, v{m.level, sample()};
    const Vector psi = sample();
    const Vector fw = assemble_nonlinear_load(m, w, f).values;
    const Vector fv = assemble_nonlinear_load(m, v, f).values;
    Vector diff(n), wv(n);
    for (std::size_t i = 0; i < n; ++i) {
      diff[i] = fw[i] - fv[i];
      wv[i] = w.values[i] - v.values[i];
    }
    if (second_order) {
      const Vector lin = assemble_linearized_term(m, v, f) * wv;
      for (std::size_t i = 0; i < n; ++i) diff[i] -= lin[i];
    }
    const double lhs = std::abs(dot(diff, psi));
    const double rhs = std::sqrt(inner(mm, wv, wv)) * std::sqrt(sq_norm1(psi));
    worst = std::max(worst, lhs / rhs);
  }
  return worst;
}

}  // namespace testing
