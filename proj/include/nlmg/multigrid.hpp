#pragma once

#include "nlmg/mesh.hpp"
#include "nlmg/sparse.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace nlmg {

struct SmootherConfig {
  int pre_sweeps = 2;   // symmetric Gauss-Seidel sweeps before coarse correction
  int post_sweeps = 2;  // and after
};

/// Algebraic work of a solve. `matvec_count` is measured in scalar
/// multiply-adds over every matrix application (smoothing, residuals,
/// transfers, coarse solve), so it is proportional to the level size.
struct SolveStats {
  int v_cycles = 0;
  double final_relative_residual = 0.0;
  std::size_t matvec_count = 0;
};

/// Geometric multigrid for one SPD operator on levels 0..top of a hierarchy.
/// Coarse operators are Galerkin products P^T A P; level 0 is factored densely.
/// Holds a pointer to the mesh hierarchy, which must outlive it.
class MgHierarchy {
 public:
  int top_level() const noexcept { return static_cast<int>(operators_.size()) - 1; }
  const CsrMatrix& op(int k) const { return operators_.at(static_cast<std::size_t>(k)); }
  const SmootherConfig& smoother() const noexcept { return smoother_; }

 private:
  friend MgHierarchy setup_mg(const MeshHierarchy&, const CsrMatrix&, int, const CsrMatrix*, SmootherConfig);
  friend std::size_t vcycle_level(const MgHierarchy&, int, std::span<const double>, std::span<double>);

  const MeshHierarchy* mesh_ = nullptr;
  std::vector<CsrMatrix> operators_;
  SmootherConfig smoother_;
  Eigen::LLT<Eigen::MatrixXd> coarse_;
};

/// A = top_matrix (+ extra_term) on `top_level`; coarser operators by Galerkin
/// projection. Throws not_spd on a non-positive diagonal or a failed coarse
/// factorization.
MgHierarchy setup_mg(const MeshHierarchy& hier, const CsrMatrix& top_matrix, int top_level,
                     const CsrMatrix* extra_term = nullptr, SmootherConfig smoother = {});

/// One V-cycle on level k for A_k x = rhs, updating x in place. Returns work.
std::size_t vcycle_level(const MgHierarchy& mg, int k, std::span<const double> rhs, std::span<double> x);

/// One V-cycle on the top level starting from x; returns the new iterate.
Vector vcycle(const MgHierarchy& mg, std::span<const double> rhs, std::span<const double> x);

struct SolveResult {
  Vector x;
  SolveStats stats;
};

/// V-cycles until ||rhs - A x||_2 <= rel_tol ||rhs||_2. Throws NoConvergence
/// after max_cycles.
SolveResult solve(const MgHierarchy& mg, std::span<const double> rhs, double rel_tol, int max_cycles,
                  std::optional<std::span<const double>> x0 = std::nullopt);

/// Default algebraic tolerance for auxiliary solves on a level of mesh size h.
double default_mg_tolerance(double h);

}  // namespace nlmg
