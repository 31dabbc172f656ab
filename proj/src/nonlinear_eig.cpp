#include "nlmg/nonlinear_eig.hpp"

#include "nlmg/error.hpp"
#include "nlmg/log.hpp"
#include "nlmg/multigrid.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>

namespace nlmg {

void ScfConfig::validate() const {
  if (!(tol > 0.0)) throw Error(ErrorKind::invalid_argument, "ScfConfig: tol must be positive");
  if (max_iter < 1) throw Error(ErrorKind::invalid_argument, "ScfConfig: max_iter must be >= 1");
  if (!(damping > 0.0 && damping <= 1.0)) throw Error(ErrorKind::invalid_argument, "ScfConfig: damping must lie in (0,1]");
}

namespace {

double orientation(const CsrMatrix& M, std::span<const double> u) {
  const Vector mu = M * u;
  double s = 0.0;
  for (double v : mu) s += v;
  return s;
}

double norm_inf(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

double matrix_norm_inf(const CsrMatrix& A) {
  double m = 0.0;
  for (int i = 0; i < A.rows(); ++i) {
    double s = 0.0;
    for (int p = A.row_ptr()[i]; p < A.row_ptr()[i + 1]; ++p) s += std::abs(A.values()[p]);
    m = std::max(m, s);
  }
  return m;
}

/// ||(A0 + W) u - lambda M u||_2 / ||u||_2
double pair_residual(const CsrMatrix& H, const CsrMatrix& M, double lambda, std::span<const double> u) {
  const Vector hu = H * u;
  const Vector mu = M * u;
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += (hu[i] - lambda * mu[i]) * (hu[i] - lambda * mu[i]);
  return std::sqrt(s) / norm2(u);
}

Eigen::SparseMatrix<double> to_eigen(const CsrMatrix& A) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(A.nnz());
  for (int i = 0; i < A.rows(); ++i)
    for (int p = A.row_ptr()[i]; p < A.row_ptr()[i + 1]; ++p) t.emplace_back(i, A.col_idx()[p], A.values()[p]);
  Eigen::SparseMatrix<double> m(A.rows(), A.cols());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

LinearSolver multigrid_linear_solver(const MeshHierarchy& hier, int level, const CsrMatrix& A) {
  auto mg = std::make_shared<MgHierarchy>(setup_mg(hier, A, level));
  // V-cycles down to the rounding floor: stop below 1e-14 relative residual or
  // once a cycle no longer halves the residual past 1e-9.
  return [mg](std::span<const double> rhs, std::span<double> x) {
    const CsrMatrix& a = mg->op(mg->top_level());
    const double bnorm = norm2(rhs);
    if (bnorm == 0.0) {
      std::fill(x.begin(), x.end(), 0.0);
      return;
    }
    Vector ax(rhs.size());
    const auto rel_residual = [&] {
      a.multiply(x, ax);
      double s = 0.0;
      for (std::size_t i = 0; i < ax.size(); ++i) s += (rhs[i] - ax[i]) * (rhs[i] - ax[i]);
      return std::sqrt(s) / bnorm;
    };
    double rel = rel_residual();
    std::vector<double> history{rel};
    for (int cycle = 0; cycle < 500; ++cycle) {
      if (rel <= 1e-14) return;
      vcycle_level(*mg, mg->top_level(), rhs, x);
      const double next = rel_residual();
      history.push_back(next);
      if (next > 0.5 * rel && next <= 1e-9) return;
      rel = next;
    }
    throw NoConvergence("multigrid inner solve: no convergence after 500 V-cycles", history);
  };
}

double dense_form(const Eigen::MatrixXd& A, const Eigen::VectorXd& y) { return y.dot(A * y); }

}  // namespace

NodalVector normalize_and_orient(NodalVector u, const CsrMatrix& M) {
  const double nrm2 = inner(M, u.values, u.values);
  if (!(nrm2 > 0.0)) throw Error(ErrorKind::zero_vector, "normalize_and_orient: zero vector");
  double s = 1.0 / std::sqrt(nrm2);
  if (orientation(M, u.values) < 0.0) s = -s;
  for (double& v : u.values) v *= s;
  return u;
}

NodalVector sine_initial_guess(const MeshLevel& mesh, const CsrMatrix& M) {
  NodalVector u = interpolate(mesh, [](std::span<const double> x) {
    double p = 1.0;
    for (double xi : x) p *= std::sin(std::numbers::pi * xi);
    return p;
  });
  return normalize_and_orient(std::move(u), M);
}

LinearSolver direct_linear_solver(const CsrMatrix& A) {
  auto ldlt = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(to_eigen(A));
  if (ldlt->info() != Eigen::Success) throw Error(ErrorKind::singular_system, "direct_linear_solver: factorization failed");
  return [ldlt](std::span<const double> rhs, std::span<double> x) {
    Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())) = ldlt->solve(b);
  };
}

double energy(const CsrMatrix& A, std::span<const double> x) {
  double off = 0.0, diag = 0.0;
  for (int i = 0; i < A.rows(); ++i) {
    double rowsum = 0.0;
    for (int p = A.row_ptr()[i]; p < A.row_ptr()[i + 1]; ++p) {
      const int j = A.col_idx()[p];
      const double a = A.values()[p];
      rowsum += a;
      if (j > i) off -= a * (x[i] - x[j]) * (x[i] - x[j]);
    }
    diag += rowsum * x[i] * x[i];
  }
  return off + diag;
}

LinearEigenResult smallest_generalized_eigenpair(const CsrMatrix& A, const CsrMatrix& M, double tol,
                                                 std::span<const double> init, const LinearSolver& solver,
                                                 int max_iter) {
  if (A.rows() < 1 || A.rows() != M.rows()) throw Error(ErrorKind::invalid_argument, "smallest_generalized_eigenpair: bad shapes");
  if (!(tol > 0.0)) throw Error(ErrorKind::invalid_argument, "smallest_generalized_eigenpair: tol must be positive");
  const LinearSolver solve_a = solver ? solver : direct_linear_solver(A);
  const double norm_a = matrix_norm_inf(A);
  const double norm_m = matrix_norm_inf(M);

  const std::size_t n = static_cast<std::size_t>(A.rows());
  NodalVector x{0, init.empty() ? Vector(n, 1.0) : Vector(init.begin(), init.end())};
  x = normalize_and_orient(std::move(x), M);
  double lambda = energy(A, x.values);

  LinearEigenResult out;
  std::vector<double> history{lambda};
  Vector y(n);
  for (int it = 1; it <= max_iter; ++it) {
    const Vector b = M * x.values;
    for (std::size_t i = 0; i < n; ++i) y[i] = x.values[i] / lambda;
    solve_a(b, y);
    NodalVector next = normalize_and_orient(NodalVector{0, y}, M);
    const double lambda_next = energy(A, next.values);

    const Vector ax = A * next.values;
    const Vector mx = M * next.values;
    double rmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) rmax = std::max(rmax, std::abs(ax[i] - lambda_next * mx[i]));
    const double berr = rmax / ((norm_a + std::abs(lambda_next) * norm_m) * norm_inf(next.values));
    const double change = std::abs(lambda_next - lambda) / std::abs(lambda_next);

    x = std::move(next);
    lambda = lambda_next;
    history.push_back(lambda);
    if (change <= tol && berr <= tol) {
      out.lambda = lambda;
      out.x = std::move(x.values);
      out.iterations = it;
      out.backward_error = berr;
      return out;
    }
  }
  throw NoConvergence("inverse iteration: no convergence after " + std::to_string(max_iter) + " iterations", history);
}

EigenPair scf_solve(const CsrMatrix& A0, const CsrMatrix& M, const MeshLevel& mesh, const Nonlinearity& f,
                    const NodalVector& init, const ScfConfig& cfg, ScfStats* stats, const LinearSolverFactory& inner) {
  cfg.validate();
  if (init.level != mesh.level || static_cast<int>(init.size()) != mesh.n_dofs())
    throw Error(ErrorKind::invalid_argument, "scf_solve: initial guess does not live on this level");
  const double inner_tol = std::min(1e-12, 1e-2 * cfg.tol);

  ScfStats local;
  ScfStats& st = stats ? *stats : local;
  st = {};

  NodalVector u = normalize_and_orient(init, M);
  CsrMatrix W = assemble_weighted_mass(mesh, u, f);
  ++st.assemblies;
  double lambda_prev = energy(add(A0, W), u.values);

  for (int sweep = 1; sweep <= cfg.max_iter; ++sweep) {
    const CsrMatrix H = add(A0, W);
    const LinearSolver solver = inner ? inner(H) : direct_linear_solver(H);
    LinearEigenResult eig = smallest_generalized_eigenpair(H, M, inner_tol, u.values, solver);
    st.inner_iterations += static_cast<std::size_t>(eig.iterations);
    st.sweeps = sweep;
    st.lambda_history.push_back(eig.lambda);

    if (f.is_linear()) {
      const double res = pair_residual(H, M, eig.lambda, eig.x);
      return {eig.lambda, NodalVector{mesh.level, std::move(eig.x)}, mesh.level, res};
    }

    NodalVector next{mesh.level, u.values};
    for (std::size_t i = 0; i < next.size(); ++i)
      next.values[i] = (1.0 - cfg.damping) * u.values[i] + cfg.damping * eig.x[i];
    next = normalize_and_orient(std::move(next), M);
    W = assemble_weighted_mass(mesh, next, f);
    ++st.assemblies;
    const double res = pair_residual(add(A0, W), M, eig.lambda, next.values);

    u = std::move(next);
    if (std::abs(eig.lambda - lambda_prev) <= cfg.tol && res <= 100.0 * cfg.tol)
      return {eig.lambda, std::move(u), mesh.level, res};
    lambda_prev = eig.lambda;
  }
  throw NoConvergence("scf_solve: no convergence after " + std::to_string(cfg.max_iter) + " sweeps", st.lambda_history);
}

Vector AugmentedSpace::lift(const Eigen::VectorXd& y) const {
  const int nh = coarse_basis_.cols();
  Vector out = coarse_basis_ * std::span<const double>(y.data(), static_cast<std::size_t>(nh));
  const double c = y(nh);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += c * u_tilde_[i];
  return out;
}

Eigen::MatrixXd AugmentedSpace::project(const CsrMatrix& A) const {
  const int nh = coarse_basis_.cols();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(nh + 1, nh + 1);
  const CsrMatrix coarse = galerkin_product(coarse_basis_, A);
  for (int i = 0; i < nh; ++i)
    for (int p = coarse.row_ptr()[i]; p < coarse.row_ptr()[i + 1]; ++p) out(i, coarse.col_idx()[p]) = coarse.values()[p];
  const Vector au = A * u_tilde_;
  Vector gau(static_cast<std::size_t>(nh));
  coarse_basis_.multiply_transpose(au, gau);
  for (int i = 0; i < nh; ++i) out(i, nh) = out(nh, i) = gau[i];
  out(nh, nh) = dot(u_tilde_, au);
  return out;
}

Eigen::VectorXd AugmentedSpace::restrict(std::span<const double> v) const {
  const int nh = coarse_basis_.cols();
  Vector gv(static_cast<std::size_t>(nh));
  coarse_basis_.multiply_transpose(v, gv);
  Eigen::VectorXd out(nh + 1);
  for (int i = 0; i < nh; ++i) out(i) = gv[i];
  out(nh) = dot(u_tilde_, v);
  return out;
}

Eigen::VectorXd AugmentedSpace::coordinates(std::span<const double> v) const {
  return gram_.llt().solve(restrict(mass_ * v));
}

AugmentedSpace build_augmented_space(const MeshHierarchy& hier, int fine_level, const NodalVector& u_tilde) {
  if (fine_level < 1 || fine_level > hier.finest())
    throw Error(ErrorKind::invalid_argument, "build_augmented_space: fine level out of range");
  const MeshLevel& mesh = hier.level(fine_level);
  if (u_tilde.level != fine_level || static_cast<int>(u_tilde.size()) != mesh.n_dofs())
    throw Error(ErrorKind::invalid_argument, "build_augmented_space: u_tilde does not live on the fine level");
  if (norm_inf(u_tilde.values) == 0.0) throw Error(ErrorKind::zero_vector, "build_augmented_space: u_tilde is zero");

  AugmentedSpace aug;
  aug.hier_ = &hier;
  aug.fine_level_ = fine_level;
  aug.coarse_basis_ = hier.composite_prolongation(fine_level);
  aug.u_tilde_ = u_tilde.values;
  aug.stiffness_ = assemble_stiffness(mesh);
  aug.mass_ = assemble_mass(mesh);
  aug.gram_ = aug.project(aug.mass_);

  const Eigen::VectorXd d = aug.gram_.diagonal().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd scaled = d.asDiagonal() * aug.gram_ * d.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scaled, Eigen::EigenvaluesOnly);
  if (es.eigenvalues()(0) < 1e-12)
    throw Error(ErrorKind::degenerate_space, "build_augmented_space: u_tilde lies in the coarse space (Gram eigenvalue " +
                                                 std::to_string(es.eigenvalues()(0)) + ")");
  return aug;
}

namespace {

struct AugmentedState {
  Eigen::MatrixXd gram;
  Eigen::MatrixXd a0r;
  Eigen::VectorXd orient;  // y -> sum(M G y)
};

Eigen::VectorXd normalized_coordinates(const AugmentedSpace& aug, const AugmentedState& st, const Vector& fine) {
  Eigen::VectorXd y = aug.coordinates(fine);
  y /= std::sqrt(dense_form(st.gram, y));
  if (st.orient.dot(y) < 0.0) y = -y;
  return y;
}

void log_sweep(const char* what, int sweep, double lambda, double res) {
  if (log_level() < 3) return;
  std::ostringstream os;
  os.precision(17);
  os << "augmented " << what << " sweep " << sweep << ": lambda = " << lambda << ", residual = " << res;
  log_debug(os.str());
}

void augmented_scf(const AugmentedSpace& aug, const AugmentedState& st, const Nonlinearity& f, Eigen::VectorXd y,
                   const ScfConfig& cfg, AugmentedSolution& out) {
  const MeshLevel& mesh = aug.mesh();
  const auto dim = static_cast<std::size_t>(aug.dim());
  NodalVector u{mesh.level, aug.lift(y)};
  Eigen::MatrixXd hr = st.a0r + aug.project(assemble_weighted_mass(mesh, u, f));
  ++out.assemblies;
  double lambda_prev = dense_form(hr, y);
  std::vector<double> history;

  for (int sweep = 1; sweep <= cfg.max_iter; ++sweep) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(hr, st.gram);
    if (es.info() != Eigen::Success) throw Error(ErrorKind::singular_system, "solve_augmented: dense eigensolve failed");
    out.dense_work += dim * dim * dim;
    ++out.sweeps;
    const double lambda = es.eigenvalues()(0);
    history.push_back(lambda);
    Eigen::VectorXd z = es.eigenvectors().col(0);
    if (st.orient.dot(z) < 0.0) z = -z;

    Eigen::VectorXd next = f.is_linear() ? z : Eigen::VectorXd((1.0 - cfg.damping) * y + cfg.damping * z);
    next /= std::sqrt(dense_form(st.gram, next));
    u.values = aug.lift(next);

    if (!f.is_linear()) {
      hr = st.a0r + aug.project(assemble_weighted_mass(mesh, u, f));
      ++out.assemblies;
    }
    const double res = (hr * next - lambda * (st.gram * next)).norm() / next.norm();
    y = std::move(next);
    log_sweep("scf", sweep, lambda, res);

    if (f.is_linear() || (std::abs(lambda - lambda_prev) <= cfg.tol && res <= 100.0 * cfg.tol)) {
      out.pair = {lambda, normalize_and_orient(std::move(u), aug.fine_mass()), mesh.level, res};
      return;
    }
    lambda_prev = lambda;
  }
  throw NoConvergence("solve_augmented: no convergence after " + std::to_string(cfg.max_iter) + " sweeps", history);
}

// Reduced residual r = G^T (K u + F(u)) - lambda G^T M G y at u = G y, with
// lambda the Rayleigh quotient.
struct ReducedResidual {
  NodalVector u;
  Eigen::VectorXd r;
  double lambda = 0.0;
  double norm = 0.0;
};

ReducedResidual reduced_residual(const AugmentedSpace& aug, const AugmentedState& st, const Nonlinearity& f,
                                 const Eigen::VectorXd& y) {
  ReducedResidual rr;
  rr.u = NodalVector{aug.mesh().level, aug.lift(y)};
  const NodalVector load = assemble_nonlinear_load(aug.mesh(), rr.u, f);
  const Eigen::VectorXd a = st.a0r * y + aug.restrict(load.values);
  rr.lambda = y.dot(a);
  rr.r = a - rr.lambda * (st.gram * y);
  rr.norm = rr.r.norm() / y.norm();
  return rr;
}

// Returns false when Newton fails to settle on the ground state.
bool augmented_newton(const AugmentedSpace& aug, const AugmentedState& st, const Nonlinearity& f, Eigen::VectorXd y,
                      const ScfConfig& cfg, AugmentedSolution& out) {
  const MeshLevel& mesh = aug.mesh();
  const Eigen::Index m = aug.dim();
  const auto dim = static_cast<std::size_t>(m);

  ReducedResidual cur = reduced_residual(aug, st, f, y);
  ++out.assemblies;
  for (int sweep = 1; sweep <= cfg.max_iter; ++sweep) {
    const Eigen::MatrixXd jr = st.a0r + aug.project(assemble_linearized_term(mesh, cur.u, f));
    ++out.assemblies;
    const Eigen::VectorXd by = st.gram * y;
    Eigen::MatrixXd kkt(m + 1, m + 1);
    kkt.topLeftCorner(m, m) = jr - cur.lambda * st.gram;
    kkt.topRightCorner(m, 1) = -by;
    kkt.bottomLeftCorner(1, m) = -by.transpose();
    kkt(m, m) = 0.0;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
    rhs.head(m) = -cur.r;
    const Eigen::VectorXd step = kkt.fullPivLu().solve(rhs);
    out.dense_work += dim * dim * dim;
    ++out.sweeps;
    if (!step.allFinite()) return false;

    Eigen::VectorXd next = y + step.head(m);
    next /= std::sqrt(dense_form(st.gram, next));
    if (st.orient.dot(next) < 0.0) next = -next;
    ReducedResidual nr = reduced_residual(aug, st, f, next);
    ++out.assemblies;
    log_sweep("newton", sweep, nr.lambda, nr.norm);

    const bool done = std::abs(nr.lambda - cur.lambda) <= cfg.tol && nr.norm <= 100.0 * cfg.tol;
    y = std::move(next);
    cur = std::move(nr);
    if (done) break;
    if (sweep == cfg.max_iter) return false;
  }

  // ground state: lambda must be the smallest eigenvalue of the frozen SCF operator
  const Eigen::MatrixXd hr = st.a0r + aug.project(assemble_weighted_mass(mesh, cur.u, f));
  ++out.assemblies;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(hr, st.gram, Eigen::EigenvaluesOnly);
  out.dense_work += dim * dim * dim;
  if (es.info() != Eigen::Success) return false;
  const double lmin = es.eigenvalues()(0);
  if (std::abs(lmin - cur.lambda) > std::max(1e3 * cfg.tol, 1e-10 * std::abs(cur.lambda))) return false;

  out.pair = {cur.lambda, normalize_and_orient(std::move(cur.u), aug.fine_mass()), mesh.level, cur.norm};
  return true;
}

}  // namespace

AugmentedSolution solve_augmented(const AugmentedSpace& aug, const Nonlinearity& f, const NodalVector& init_fine,
                                  const ScfConfig& cfg) {
  cfg.validate();
  const MeshLevel& mesh = aug.mesh();
  if (init_fine.level != mesh.level || static_cast<int>(init_fine.size()) != mesh.n_dofs())
    throw Error(ErrorKind::invalid_argument, "solve_augmented: initial guess does not live on the fine level");

  AugmentedState st;
  st.gram = aug.gram();
  st.a0r = aug.project(aug.fine_stiffness());
  const Vector ones(static_cast<std::size_t>(mesh.n_dofs()), 1.0);
  st.orient = aug.restrict(aug.fine_mass() * ones);
  const Eigen::VectorXd y0 = normalized_coordinates(aug, st, init_fine.values);

  AugmentedSolution out;
  if (cfg.augmented == AugmentedIteration::newton && !f.is_linear()) {
    try {
      if (augmented_newton(aug, st, f, y0, cfg, out)) return out;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::no_convergence && e.kind() != ErrorKind::singular_system) throw;
    }
    log_info("solve_augmented: Newton did not reach the ground state, restarting with SCF");
  }
  augmented_scf(aug, st, f, y0, cfg, out);
  return out;
}

EigenPair direct_solve_fine(const MeshHierarchy& hier, int level, const Nonlinearity& f, const ScfConfig& cfg,
                            ScfStats* stats) {
  if (level < 0 || level > hier.finest()) throw Error(ErrorKind::invalid_argument, "direct_solve_fine: level out of range");
  const MeshLevel& mesh = hier.level(level);
  const CsrMatrix A0 = assemble_stiffness(mesh);
  const CsrMatrix M = assemble_mass(mesh);
  const NodalVector init = sine_initial_guess(mesh, M);
  return scf_solve(A0, M, mesh, f, init, cfg, stats,
                   [&hier, level](const CsrMatrix& H) { return multigrid_linear_solver(hier, level, H); });
}

double rayleigh_quotient(const CsrMatrix& A0, const MeshLevel& mesh, const Nonlinearity& f, const NodalVector& u) {
  return energy(A0, u.values) + dot(u.values, assemble_nonlinear_load(mesh, u, f).values);
}

}  // namespace nlmg
