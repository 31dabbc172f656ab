#pragma once

#include "nlmg/error.hpp"
#include "nlmg/fem.hpp"
#include "nlmg/mesh.hpp"
#include "nlmg/multigrid.hpp"
#include "nlmg/nonlinear_eig.hpp"

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace nlmg {

enum class CorrectionKind { fixed_point, newton };

struct MgOptions {
  int max_cycles = 100;
  double rel_tol = 0.0;  // 0 selects default_mg_tolerance(h) of the target level
  SmootherConfig smoother;
};

struct SchemeConfig {
  Domain domain = Domain::interval();
  double H = 0.25;
  int levels = 1;  // n: number of refinements above T_H
  int beta = 2;
  Nonlinearity f = Nonlinearity::zero();
  CorrectionKind correction = CorrectionKind::fixed_point;
  ScfConfig scf;
  MgOptions mg;

  void validate() const;
};

/// Per-level record of a run. Level 1 comes from the full SCF solve on V_{h_1}
/// (varpi = its sweep count, no multigrid); levels >= 2 from corrections.
struct LevelTrace {
  int k = 0;
  int n_dofs = 0;
  double h = 0.0;
  double lambda = 0.0;
  int varpi = 0;
  SolveStats mg;
  std::size_t dense_work = 0;
  std::size_t assemblies = 0;
  double err_lambda = std::numeric_limits<double>::quiet_NaN();
  double err_l2 = std::numeric_limits<double>::quiet_NaN();
  double err_h1 = std::numeric_limits<double>::quiet_NaN();
};

struct WorkCounter {
  int dim = 1;
  int coarse_dim = 0;                   // N_H
  std::vector<int> n_dofs;              // N_k, index k = 0..n
  std::vector<std::size_t> matvecs_per_level;  // MG work, index k
  std::size_t matvecs = 0;
  std::size_t dense_eig_work = 0;       // sum over sweeps of (N_H + 1)^3
  std::size_t assemblies = 0;
  std::size_t first_level_inner_iterations = 0;  // M_{h_1} proxy
};

struct CorrectionResult {
  EigenPair pair;  // on level k + 1
  LevelTrace trace;
  NodalVector u_tilde;
};

/// Fixed-point correction from level k to k+1: solve
/// (grad u^, grad v) = lambda_k (u_k, v) - (f(x,u_k), v) by multigrid, then
/// solve the nonlinear problem on V_H + span{u~}.
CorrectionResult correction_fixed_point(const MeshHierarchy& hier, const Nonlinearity& f, const EigenPair& pair_k,
                                        int k, const ScfConfig& scf = {}, const MgOptions& mg = {});

/// Newton correction from level k to k+1: solve
/// (grad e, grad v) + (f_u(x,u_k) e, v) = lambda_k (u_k, v) - (grad u_k, grad v) - (f(x,u_k), v),
/// set u~ = u_k + e, then the same augmented solve.
CorrectionResult correction_newton(const MeshHierarchy& hier, const Nonlinearity& f, const EigenPair& pair_k, int k,
                                   const ScfConfig& scf = {}, const MgOptions& mg = {});

struct SchemeResult {
  EigenPair pair;
  std::vector<EigenPair> level_pairs;  // level_pairs[i] lives on level i + 1
  std::vector<LevelTrace> traces;
  WorkCounter work;
  std::vector<std::string> warnings;
};

/// A failed run; `partial()` holds the traces of the levels that completed.
class SchemeFailure : public Error {
 public:
  SchemeFailure(ErrorKind kind, const std::string& what, int level, std::vector<LevelTrace> partial)
      : Error(kind, what), level_(level), partial_(std::move(partial)) {}
  int level() const noexcept { return level_; }
  const std::vector<LevelTrace>& partial() const noexcept { return partial_; }

 private:
  int level_;
  std::vector<LevelTrace> partial_;
};

SchemeResult run_scheme(const SchemeConfig& cfg);
/// Run on an existing hierarchy (which may hold more than cfg.levels levels).
SchemeResult run_scheme(const MeshHierarchy& hier, const SchemeConfig& cfg);

struct WorkModelReport {
  double slope = 0.0;       // b in W_k ~ a + b N_k over correction levels
  double intercept = 0.0;   // a
  double r_squared = 0.0;
  std::vector<double> level_ratios;    // W_k / W_{k-1}, k >= 3
  double max_ratio_deviation = 0.0;    // max |ratio / beta^d - 1|
  double matvecs_per_fine_dof = 0.0;   // total MG work / N_n
  std::size_t dense_work = 0;
  double dense_work_per_correction = 0.0;
  double coarse_log_term = 0.0;        // (N_H + 1)^3 log2 N_n
  int max_varpi = 0;                   // over levels k >= 2
};

WorkModelReport work_model_check(const WorkCounter& wc, std::span<const LevelTrace> traces, int beta = 2);

}  // namespace nlmg
