#pragma once

#include "nlmg/fem.hpp"
#include "nlmg/mesh.hpp"
#include "nlmg/sparse.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace nlmg {

/// Nonlinear iteration used in the augmented spaces.
enum class AugmentedIteration { scf, newton };

struct ScfConfig {
  double tol = 1e-10;  // on successive eigenvalues
  int max_iter = 100;
  double damping = 1.0;
  AugmentedIteration augmented = AugmentedIteration::newton;

  void validate() const;
};

/// Eigenpair on one level with u^T M u = 1 and sum(M u) > 0.
struct EigenPair {
  double lambda = 0.0;
  NodalVector u;
  int level = 0;
  double residual = 0.0;
};

/// Scale to u^T M u = 1 and flip so that sum(M u) > 0. Throws zero_vector.
NodalVector normalize_and_orient(NodalVector u, const CsrMatrix& M);

/// Normalized interpolant of prod_i sin(pi x_i).
NodalVector sine_initial_guess(const MeshLevel& mesh, const CsrMatrix& M);

/// Solves A x = rhs; x holds an initial guess on entry.
using LinearSolver = std::function<void(std::span<const double> rhs, std::span<double> x)>;
using LinearSolverFactory = std::function<LinearSolver(const CsrMatrix& A)>;

/// Sparse Cholesky (LDL^T) factorization of A.
LinearSolver direct_linear_solver(const CsrMatrix& A);

/// x^T A x summed in edge form, sum_{i<j} -a_ij (x_i - x_j)^2 + sum_i (sum_j a_ij) x_i^2,
/// which avoids the cancellation of the plain form for stiffness-like matrices.
double energy(const CsrMatrix& A, std::span<const double> x);

struct LinearEigenResult {
  double lambda = 0.0;
  Vector x;  // x^T M x = 1, sum(M x) > 0
  int iterations = 0;
  double backward_error = 0.0;
};

/// Smallest eigenpair of A x = lambda M x by inverse iteration. Stops when the
/// relative eigenvalue change and the normwise backward error
/// ||A x - lambda M x||_inf / ((||A||_inf + |lambda| ||M||_inf) ||x||_inf) are
/// both <= tol. Uses a sparse direct solver unless `solver` is given.
LinearEigenResult smallest_generalized_eigenpair(const CsrMatrix& A, const CsrMatrix& M, double tol,
                                                 std::span<const double> init = {},
                                                 const LinearSolver& solver = {}, int max_iter = 1000);

struct ScfStats {
  int sweeps = 0;
  std::vector<double> lambda_history;
  std::size_t assemblies = 0;
  std::size_t inner_iterations = 0;
};

/// Self-consistent field iteration on the full space of `mesh`:
/// u <- smallest eigenpair of (A0 + W(u)) x = lambda M x, W from the splitting
/// f = w(x,u) u. Converged when |lambda_i - lambda_{i-1}| <= tol and the
/// residual ||(A0 + W(u))u - lambda M u||_2 / ||u||_2 <= 100 tol. A single
/// sweep is exact when f is linear in u.
EigenPair scf_solve(const CsrMatrix& A0, const CsrMatrix& M, const MeshLevel& mesh, const Nonlinearity& f,
                    const NodalVector& init, const ScfConfig& cfg, ScfStats* stats = nullptr,
                    const LinearSolverFactory& inner = {});

/// V_H + span{u_tilde} on level `fine_level`, with basis G = [G_H | u_tilde]
/// where G_H holds the coarse hat functions prolongated to the fine level.
class AugmentedSpace {
 public:
  int dim() const noexcept { return static_cast<int>(gram_.rows()); }
  int fine_level() const noexcept { return fine_level_; }
  const MeshHierarchy& hierarchy() const noexcept { return *hier_; }
  const MeshLevel& mesh() const { return hier_->level(fine_level_); }
  const CsrMatrix& coarse_basis() const noexcept { return coarse_basis_; }
  const Vector& extra_vector() const noexcept { return u_tilde_; }
  const CsrMatrix& fine_stiffness() const noexcept { return stiffness_; }
  const CsrMatrix& fine_mass() const noexcept { return mass_; }
  /// G^T M G
  const Eigen::MatrixXd& gram() const noexcept { return gram_; }

  /// G y
  Vector lift(const Eigen::VectorXd& y) const;
  /// G^T A G for a fine-level matrix A
  Eigen::MatrixXd project(const CsrMatrix& A) const;
  /// G^T v
  Eigen::VectorXd restrict(std::span<const double> v) const;
  /// M-orthogonal projection coordinates of a fine vector.
  Eigen::VectorXd coordinates(std::span<const double> v) const;

 private:
  friend AugmentedSpace build_augmented_space(const MeshHierarchy&, int, const NodalVector&);

  const MeshHierarchy* hier_ = nullptr;
  int fine_level_ = 0;
  CsrMatrix coarse_basis_;
  Vector u_tilde_;
  CsrMatrix stiffness_;
  CsrMatrix mass_;
  Eigen::MatrixXd gram_;
};

/// Throws degenerate_space when the unit-diagonal scaled Gram matrix has an
/// eigenvalue below 1e-12 (u_tilde numerically inside V_H).
AugmentedSpace build_augmented_space(const MeshHierarchy& hier, int fine_level, const NodalVector& u_tilde);

struct AugmentedSolution {
  EigenPair pair;
  int sweeps = 0;               // nonlinear iterations in the augmented space
  std::size_t dense_work = 0;   // sum of dim^3 over dense eigensolves
  std::size_t assemblies = 0;   // fine-level W assemblies
};

/// Nonlinear eigenproblem over V_{H,h}. Each sweep assembles on the fine level
/// and works with dense (N_H + 1)-sized matrices in augmented coordinates.
///   scf:    project W(u), take the smallest pair of the dense generalized problem.
///   newton: one Newton step on the residual with the normalization as a
///           bordering constraint; the result is checked to be the smallest
///           pair of its own SCF operator, else the solve restarts with scf.
/// Linear f always takes a single scf sweep. Convergence as in scf_solve, with
/// the residual taken in augmented coordinates.
AugmentedSolution solve_augmented(const AugmentedSpace& aug, const Nonlinearity& f, const NodalVector& init_fine,
                                  const ScfConfig& cfg);

/// Reference solve on the full space of `level`, with inverse-iteration inner
/// solves done by multigrid.
EigenPair direct_solve_fine(const MeshHierarchy& hier, int level, const Nonlinearity& f, const ScfConfig& cfg,
                            ScfStats* stats = nullptr);

/// a(u,u) = u^T A0 u + (f(x,u), u); equals lambda for a converged pair.
double rayleigh_quotient(const CsrMatrix& A0, const MeshLevel& mesh, const Nonlinearity& f, const NodalVector& u);

}  // namespace nlmg
