#include "nlmg/scheme.hpp"

#include "nlmg/log.hpp"

#include <cmath>
#include <sstream>

namespace nlmg {

void SchemeConfig::validate() const {
  if (levels < 1) throw Error(ErrorKind::invalid_argument, "SchemeConfig: levels must be >= 1");
  if (beta != 2) throw Error(ErrorKind::invalid_argument, "SchemeConfig: only beta = 2 is supported");
  if (!(H > 0.0 && H < 1.0)) throw Error(ErrorKind::invalid_argument, "SchemeConfig: H must lie in (0,1)");
  if (mg.max_cycles < 1) throw Error(ErrorKind::invalid_argument, "SchemeConfig: mg.max_cycles must be >= 1");
  if (mg.rel_tol < 0.0) throw Error(ErrorKind::invalid_argument, "SchemeConfig: mg.rel_tol must be >= 0");
  scf.validate();
}

namespace {

struct CorrectionSetup {
  const MeshLevel* fine = nullptr;
  CsrMatrix K;
  CsrMatrix M;
  NodalVector lifted;
  NodalVector load;
  double mg_tol = 0.0;
};

CorrectionSetup prepare(const MeshHierarchy& hier, const Nonlinearity& f, const EigenPair& pair_k, int k,
                        const MgOptions& mg) {
  if (k < 0 || k + 1 > hier.finest())
    throw Error(ErrorKind::invalid_argument, "correction: level " + std::to_string(k + 1) + " does not exist");
  const MeshLevel& coarse = hier.level(k);
  if (pair_k.level != k || pair_k.u.level != k || static_cast<int>(pair_k.u.size()) != coarse.n_dofs())
    throw Error(ErrorKind::precondition, "correction: eigenpair does not live on level " + std::to_string(k));
  const double nrm = inner(assemble_mass(coarse), pair_k.u.values, pair_k.u.values);
  if (std::abs(nrm - 1.0) > 1e-10)
    throw Error(ErrorKind::precondition, "correction: eigenpair is not normalized (u^T M u = " + std::to_string(nrm) + ")");

  CorrectionSetup s;
  s.fine = &hier.level(k + 1);
  s.K = assemble_stiffness(*s.fine);
  s.M = assemble_mass(*s.fine);
  s.lifted = NodalVector{k + 1, hier.lift(pair_k.u.values, k, k + 1)};
  s.load = assemble_nonlinear_load(*s.fine, s.lifted, f);
  s.mg_tol = mg.rel_tol > 0.0 ? mg.rel_tol : default_mg_tolerance(s.fine->h);
  return s;
}

CorrectionResult finish(const MeshHierarchy& hier, const Nonlinearity& f, int k, NodalVector u_tilde,
                        const SolveStats& stats, std::size_t assemblies, const ScfConfig& scf) {
  const AugmentedSpace aug = build_augmented_space(hier, k + 1, u_tilde);
  AugmentedSolution as = solve_augmented(aug, f, u_tilde, scf);

  CorrectionResult out;
  out.trace.k = k + 1;
  out.trace.n_dofs = hier.level(k + 1).n_dofs();
  out.trace.h = hier.level(k + 1).h;
  out.trace.lambda = as.pair.lambda;
  out.trace.varpi = as.sweeps;
  out.trace.mg = stats;
  out.trace.dense_work = as.dense_work;
  out.trace.assemblies = assemblies + 2 + as.assemblies;  // + stiffness and mass of the augmented space
  out.pair = std::move(as.pair);
  out.u_tilde = std::move(u_tilde);
  return out;
}

}  // namespace

CorrectionResult correction_fixed_point(const MeshHierarchy& hier, const Nonlinearity& f, const EigenPair& pair_k,
                                        int k, const ScfConfig& scf, const MgOptions& mg) {
  CorrectionSetup s = prepare(hier, f, pair_k, k, mg);
  Vector rhs = s.M * s.lifted.values;
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = pair_k.lambda * rhs[i] - s.load.values[i];

  const MgHierarchy solver = setup_mg(hier, s.K, k + 1, nullptr, mg.smoother);
  SolveResult sol = solve(solver, rhs, s.mg_tol, mg.max_cycles, std::span<const double>(s.lifted.values));
  return finish(hier, f, k, NodalVector{k + 1, std::move(sol.x)}, sol.stats, 3, scf);
}

CorrectionResult correction_newton(const MeshHierarchy& hier, const Nonlinearity& f, const EigenPair& pair_k, int k,
                                   const ScfConfig& scf, const MgOptions& mg) {
  CorrectionSetup s = prepare(hier, f, pair_k, k, mg);
  const CsrMatrix J = assemble_linearized_term(*s.fine, s.lifted, f);
  const Vector mu = s.M * s.lifted.values;
  const Vector ku = s.K * s.lifted.values;
  Vector rhs(mu.size());
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = pair_k.lambda * mu[i] - ku[i] - s.load.values[i];

  MgHierarchy solver;
  try {
    solver = setup_mg(hier, s.K, k + 1, &J, mg.smoother);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::not_spd) throw;
    throw Error(ErrorKind::non_coercive, std::string("correction_newton: linearized operator is not SPD: ") + e.what());
  }
  SolveResult sol = solve(solver, rhs, s.mg_tol, mg.max_cycles);
  NodalVector u_tilde{k + 1, s.lifted.values};
  for (std::size_t i = 0; i < u_tilde.size(); ++i) u_tilde.values[i] += sol.x[i];
  return finish(hier, f, k, std::move(u_tilde), sol.stats, 4, scf);
}

SchemeResult run_scheme(const SchemeConfig& cfg) {
  cfg.validate();
  const MeshHierarchy hier = build_hierarchy(cfg.domain, cfg.H, cfg.levels, cfg.beta);
  return run_scheme(hier, cfg);
}

SchemeResult run_scheme(const MeshHierarchy& hier, const SchemeConfig& cfg) {
  cfg.validate();
  if (hier.finest() < cfg.levels)
    throw Error(ErrorKind::invalid_argument, "run_scheme: hierarchy has fewer levels than requested");

  SchemeResult out;
  WorkCounter& wc = out.work;
  wc.dim = hier.dim();
  wc.coarse_dim = hier.level(0).n_dofs();
  for (int k = 0; k <= cfg.levels; ++k) wc.n_dofs.push_back(hier.level(k).n_dofs());
  wc.matvecs_per_level.assign(static_cast<std::size_t>(cfg.levels) + 1, 0);

  // level 1: nonlinear problem on the whole of V_{h_1}
  const MeshLevel& first = hier.level(1);
  const CsrMatrix K1 = assemble_stiffness(first);
  const CsrMatrix M1 = assemble_mass(first);
  ScfStats st;
  try {
    out.pair = scf_solve(K1, M1, first, cfg.f, sine_initial_guess(first, M1), cfg.scf, &st);
  } catch (const Error& e) {
    throw SchemeFailure(e.kind(), std::string("level 1: ") + e.what(), 1, {});
  }
  LevelTrace t1;
  t1.k = 1;
  t1.n_dofs = first.n_dofs();
  t1.h = first.h;
  t1.lambda = out.pair.lambda;
  t1.varpi = st.sweeps;
  t1.assemblies = 2 + st.assemblies;
  out.traces.push_back(t1);
  out.level_pairs.push_back(out.pair);
  wc.assemblies += t1.assemblies;
  wc.first_level_inner_iterations = st.inner_iterations;
  log_info("level 1: lambda = " + std::to_string(t1.lambda) + ", sweeps = " + std::to_string(st.sweeps));

  for (int k = 1; k < cfg.levels; ++k) {
    CorrectionResult c;
    try {
      c = cfg.correction == CorrectionKind::newton ? correction_newton(hier, cfg.f, out.pair, k, cfg.scf, cfg.mg)
                                                   : correction_fixed_point(hier, cfg.f, out.pair, k, cfg.scf, cfg.mg);
    } catch (const Error& e) {
      throw SchemeFailure(e.kind(), "level " + std::to_string(k + 1) + ": " + e.what(), k + 1, out.traces);
    }
    wc.matvecs_per_level[k + 1] = c.trace.mg.matvec_count;
    wc.matvecs += c.trace.mg.matvec_count;
    wc.dense_eig_work += c.trace.dense_work;
    wc.assemblies += c.trace.assemblies;
    log_info("level " + std::to_string(k + 1) + ": lambda = " + std::to_string(c.trace.lambda) +
             ", varpi = " + std::to_string(c.trace.varpi) + ", v-cycles = " + std::to_string(c.trace.mg.v_cycles));
    out.traces.push_back(c.trace);
    out.level_pairs.push_back(c.pair);
    out.pair = std::move(c.pair);
  }

  // Successive eigenvalue updates should shrink roughly like beta^-2 once the
  // coarse space resolves the solution.
  for (std::size_t i = 2; i < out.traces.size(); ++i) {
    const double prev = std::abs(out.traces[i - 1].lambda - out.traces[i - 2].lambda);
    const double cur = std::abs(out.traces[i].lambda - out.traces[i - 1].lambda);
    if (cur > 0.0 && prev > 0.0 && cur >= prev) {
      std::ostringstream os;
      os << "eigenvalue updates fail to contract at level " << out.traces[i].k
         << ": coarse space too coarse - decrease H";
      out.warnings.push_back(os.str());
      log_warn(os.str());
    }
  }
  return out;
}

WorkModelReport work_model_check(const WorkCounter& wc, std::span<const LevelTrace> traces, int beta) {
  WorkModelReport r;
  std::vector<double> x, y;
  for (const LevelTrace& t : traces) {
    if (t.k < 2) continue;
    x.push_back(static_cast<double>(t.n_dofs));
    y.push_back(static_cast<double>(t.mg.matvec_count));
    r.max_varpi = std::max(r.max_varpi, t.varpi);
  }
  const double expected = std::pow(static_cast<double>(beta), wc.dim);

  const std::size_t n = x.size();
  if (n >= 2) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += x[i];
      my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sxx += (x[i] - mx) * (x[i] - mx);
      sxy += (x[i] - mx) * (y[i] - my);
      syy += (y[i] - my) * (y[i] - my);
    }
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    r.r_squared = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  } else if (n == 1) {
    r.slope = y[0] / x[0];
  }
  for (std::size_t i = 1; i < n; ++i) {
    const double ratio = y[i] / y[i - 1];
    r.level_ratios.push_back(ratio);
    r.max_ratio_deviation = std::max(r.max_ratio_deviation, std::abs(ratio / expected - 1.0));
  }

  if (!wc.n_dofs.empty()) {
    const double nn = static_cast<double>(wc.n_dofs.back());
    r.matvecs_per_fine_dof = static_cast<double>(wc.matvecs) / nn;
    const double mh = std::pow(static_cast<double>(wc.coarse_dim + 1), 3);
    r.coarse_log_term = mh * std::log2(nn);
  }
  r.dense_work = wc.dense_eig_work;
  r.dense_work_per_correction = n > 0 ? static_cast<double>(wc.dense_eig_work) / static_cast<double>(n) : 0.0;
  return r;
}

}  // namespace nlmg
