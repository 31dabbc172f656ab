#include "nlmg/study.hpp"

#include "nlmg/log.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace nlmg {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::scheme: return "scheme";
    case RunMode::direct: return "direct";
    case RunMode::both: return "both";
  }
  return "?";
}

const char* to_string(ReferenceKind r) {
  switch (r) {
    case ReferenceKind::analytic: return "analytic";
    case ReferenceKind::direct_finer: return "direct_finer";
    case ReferenceKind::none: return "none";
  }
  return "?";
}

RunMode parse_run_mode(std::string_view s) {
  if (s == "scheme") return RunMode::scheme;
  if (s == "direct") return RunMode::direct;
  if (s == "both") return RunMode::both;
  throw ConfigError("mode", "unknown mode '" + std::string(s) + "' (expected scheme, direct or both)");
}

// ---------------------------------------------------------------- config

namespace {

class Fields {
 public:
  Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  bool has(const char* key) {
    seen_.insert(key);
    return obj_.contains(key);
  }

  std::string name(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& at(const char* key) {
    if (!has(key)) throw ConfigError(name(key), "missing required field");
    return obj_.at(key);
  }

  double number(const char* key, double def, bool required = false) {
    if (!has(key)) {
      if (required) throw ConfigError(name(key), "missing required field");
      return def;
    }
    const json& v = obj_.at(key);
    if (!v.is_number()) throw ConfigError(name(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(name(key), "must be finite");
    return d;
  }

  long long integer(const char* key, long long def, bool required = false) {
    if (!has(key)) {
      if (required) throw ConfigError(name(key), "missing required field");
      return def;
    }
    const json& v = obj_.at(key);
    if (!v.is_number_integer()) throw ConfigError(name(key), "expected an integer");
    return v.get<long long>();
  }

  std::string string(const char* key, std::string def, bool required = false) {
    if (!has(key)) {
      if (required) throw ConfigError(name(key), "missing required field");
      return def;
    }
    const json& v = obj_.at(key);
    if (!v.is_string()) throw ConfigError(name(key), "expected a string");
    return v.get<std::string>();
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(name(it.key().c_str()), "unknown field");
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

Potential parse_potential(const json& j, const std::string& path) {
  Fields r(j, path);
  Potential v;
  const std::string kind = r.string("kind", "constant");
  if (kind == "constant")
    v.kind = Potential::Kind::constant;
  else if (kind == "harmonic")
    v.kind = Potential::Kind::harmonic;
  else
    throw ConfigError(r.name("kind"), "unknown potential kind '" + kind + "'");
  v.coefficient = r.number("coefficient", 0.0, true);
  if (v.coefficient < 0.0) throw ConfigError(r.name("coefficient"), "must be >= 0 (f_u >= 0 is required)");
  r.finish();
  return v;
}

Nonlinearity parse_nonlinearity(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "zero") return Nonlinearity::zero();
    throw ConfigError("nonlinearity", "only 'zero' may be given as a bare string");
  }
  Fields r(j, "nonlinearity");
  const std::string kind = r.string("kind", "", true);
  Potential v;
  if (r.has("potential")) v = parse_potential(r.at("potential"), "nonlinearity.potential");
  const double zeta = r.number("zeta", 0.0);
  if (zeta < 0.0) throw ConfigError("nonlinearity.zeta", "must be >= 0 (f_u >= 0 is required)");
  r.finish();
  if (kind == "zero") return Nonlinearity::zero();
  if (kind == "potential") return Nonlinearity::potential(v);
  if (kind == "cubic") return Nonlinearity::cubic(zeta);
  if (kind == "gpe") return Nonlinearity::gpe(v, zeta);
  throw ConfigError("nonlinearity.kind", "unknown nonlinearity '" + kind + "'");
}

int line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

ojson number_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

ojson potential_json(const Potential& v) {
  ojson o;
  o["kind"] = v.kind == Potential::Kind::harmonic ? "harmonic" : "constant";
  o["coefficient"] = v.coefficient;
  return o;
}

ojson nonlinearity_json(const Nonlinearity& f) {
  ojson o;
  switch (f.kind()) {
    case NonlinearityKind::zero: o["kind"] = "zero"; break;
    case NonlinearityKind::potential:
      o["kind"] = "potential";
      o["potential"] = potential_json(f.potential_term());
      break;
    case NonlinearityKind::cubic:
      o["kind"] = "cubic";
      o["zeta"] = f.zeta();
      break;
    case NonlinearityKind::gpe:
      o["kind"] = "gpe";
      o["potential"] = potential_json(f.potential_term());
      o["zeta"] = f.zeta();
      break;
    case NonlinearityKind::custom:
      o["kind"] = "custom";
      o["name"] = f.name();
      break;
  }
  return o;
}

ojson config_json(const RunConfig& cfg) {
  const SchemeConfig& s = cfg.scheme;
  ojson o;
  o["domain"] = s.domain.kind == DomainKind::interval01 ? "interval" : "square";
  o["H"] = s.H;
  o["levels"] = s.levels;
  o["beta"] = s.beta;
  o["nonlinearity"] = nonlinearity_json(s.f);
  o["correction"] = s.correction == CorrectionKind::newton ? "newton" : "fixed_point";
  o["scf"] = {{"tol", s.scf.tol},
              {"max_iter", s.scf.max_iter},
              {"damping", s.scf.damping},
              {"augmented", s.scf.augmented == AugmentedIteration::newton ? "newton" : "scf"}};
  o["mg"] = {{"max_cycles", s.mg.max_cycles},
             {"rel_tol", s.mg.rel_tol},
             {"pre_sweeps", s.mg.smoother.pre_sweeps},
             {"post_sweeps", s.mg.smoother.post_sweeps}};
  o["mode"] = to_string(cfg.mode);
  o["reference"] = to_string(cfg.reference);
  o["output"] = cfg.output;
  o["seed"] = cfg.seed;
  o["check"] = {{"lambda_rate_min", cfg.check.lambda_rate_min}, {"lambda_rate_max", cfg.check.lambda_rate_max},
                {"h1_rate_min", cfg.check.h1_rate_min},         {"h1_rate_max", cfg.check.h1_rate_max},
                {"max_varpi", cfg.check.max_varpi},             {"gap_fraction", cfg.check.gap_fraction}};
  return o;
}

}  // namespace

RunConfig parse_run_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("line " + std::to_string(line_of(text, e.byte)), "malformed JSON");
  }

  RunConfig cfg;
  SchemeConfig& s = cfg.scheme;
  Fields r(root, "");

  const std::string domain = r.string("domain", "", true);
  if (domain == "interval" || domain == "interval01")
    s.domain = Domain::interval();
  else if (domain == "square" || domain == "square01")
    s.domain = Domain::square();
  else
    throw ConfigError("domain", "unknown domain '" + domain + "' (expected interval or square)");

  s.H = r.number("H", 0.0, true);
  if (!(s.H > 0.0 && s.H < 1.0)) throw ConfigError("H", "must lie in (0,1)");
  const double inv = 1.0 / s.H;
  if (std::abs(inv - std::round(inv)) > 1e-9 * inv) throw ConfigError("H", "1/H must be an integer");

  const long long levels = r.integer("levels", 0, true);
  if (levels < 1 || levels > 30) throw ConfigError("levels", "must lie in [1, 30]");
  s.levels = static_cast<int>(levels);

  const long long beta = r.integer("beta", 2);
  if (beta != 2) throw ConfigError("beta", "only beta = 2 is supported");
  s.beta = 2;

  if (r.has("nonlinearity")) s.f = parse_nonlinearity(r.at("nonlinearity"));

  const std::string corr = r.string("correction", "fixed_point");
  if (corr == "fixed_point")
    s.correction = CorrectionKind::fixed_point;
  else if (corr == "newton")
    s.correction = CorrectionKind::newton;
  else
    throw ConfigError("correction", "unknown correction '" + corr + "' (expected fixed_point or newton)");

  if (r.has("scf")) {
    Fields q(r.at("scf"), "scf");
    s.scf.tol = q.number("tol", s.scf.tol);
    if (!(s.scf.tol > 0.0)) throw ConfigError("scf.tol", "must be > 0");
    const long long mi = q.integer("max_iter", s.scf.max_iter);
    if (mi < 1 || mi > 1000000) throw ConfigError("scf.max_iter", "must be >= 1");
    s.scf.max_iter = static_cast<int>(mi);
    s.scf.damping = q.number("damping", s.scf.damping);
    if (!(s.scf.damping > 0.0 && s.scf.damping <= 1.0)) throw ConfigError("scf.damping", "must lie in (0,1]");
    const std::string aug = q.string("augmented", "newton");
    if (aug == "newton")
      s.scf.augmented = AugmentedIteration::newton;
    else if (aug == "scf")
      s.scf.augmented = AugmentedIteration::scf;
    else
      throw ConfigError("scf.augmented", "unknown iteration '" + aug + "' (expected newton or scf)");
    q.finish();
  }

  if (r.has("mg")) {
    Fields q(r.at("mg"), "mg");
    const long long mc = q.integer("max_cycles", s.mg.max_cycles);
    if (mc < 1 || mc > 1000000) throw ConfigError("mg.max_cycles", "must be >= 1");
    s.mg.max_cycles = static_cast<int>(mc);
    s.mg.rel_tol = q.number("rel_tol", s.mg.rel_tol);
    if (s.mg.rel_tol < 0.0 || s.mg.rel_tol >= 1.0) throw ConfigError("mg.rel_tol", "must lie in [0,1)");
    const long long pre = q.integer("pre_sweeps", s.mg.smoother.pre_sweeps);
    const long long post = q.integer("post_sweeps", s.mg.smoother.post_sweeps);
    if (pre < 0 || post < 0 || pre + post < 1 || pre > 100 || post > 100)
      throw ConfigError("mg.pre_sweeps", "smoothing step counts must be >= 0 with at least one step");
    s.mg.smoother.pre_sweeps = static_cast<int>(pre);
    s.mg.smoother.post_sweeps = static_cast<int>(post);
    q.finish();
  }

  cfg.mode = parse_run_mode(r.string("mode", "scheme"));

  const std::string ref = r.string("reference", "none");
  if (ref == "analytic")
    cfg.reference = ReferenceKind::analytic;
  else if (ref == "direct_finer")
    cfg.reference = ReferenceKind::direct_finer;
  else if (ref == "none")
    cfg.reference = ReferenceKind::none;
  else
    throw ConfigError("reference", "unknown reference '" + ref + "' (expected analytic, direct_finer or none)");
  if (cfg.reference == ReferenceKind::analytic && s.f.kind() != NonlinearityKind::zero)
    throw ConfigError("reference", "an analytic reference is only available for f = 0");

  cfg.output = r.string("output", cfg.output);
  if (cfg.output.empty()) throw ConfigError("output", "must not be empty");
  const long long seed = r.integer("seed", 0);
  if (seed < 0) throw ConfigError("seed", "must be >= 0");
  cfg.seed = static_cast<std::uint64_t>(seed);

  if (r.has("check")) {
    Fields q(r.at("check"), "check");
    CheckThresholds& c = cfg.check;
    c.lambda_rate_min = q.number("lambda_rate_min", c.lambda_rate_min);
    c.lambda_rate_max = q.number("lambda_rate_max", c.lambda_rate_max);
    c.h1_rate_min = q.number("h1_rate_min", c.h1_rate_min);
    c.h1_rate_max = q.number("h1_rate_max", c.h1_rate_max);
    c.max_varpi = static_cast<int>(q.integer("max_varpi", c.max_varpi));
    c.gap_fraction = q.number("gap_fraction", c.gap_fraction);
    if (c.lambda_rate_min > c.lambda_rate_max) throw ConfigError("check.lambda_rate_min", "exceeds lambda_rate_max");
    if (c.h1_rate_min > c.h1_rate_max) throw ConfigError("check.h1_rate_min", "exceeds h1_rate_max");
    if (c.max_varpi < 1) throw ConfigError("check.max_varpi", "must be >= 1");
    if (!(c.gap_fraction > 0.0)) throw ConfigError("check.gap_fraction", "must be > 0");
    q.finish();
  }
  r.finish();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("path", "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string run_config_to_json(const RunConfig& cfg) { return config_json(cfg).dump(2); }

// ---------------------------------------------------------------- rates

std::vector<double> compute_rates(std::span<const double> errors, int beta) {
  if (beta < 2) throw Error(ErrorKind::invalid_argument, "compute_rates: beta must be >= 2");
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!(errors[i] > 0.0) || !std::isfinite(errors[i]))
      throw Error(ErrorKind::non_positive_error, "compute_rates: error " + std::to_string(i) + " is not positive");
  std::vector<double> rates;
  const double lb = std::log(static_cast<double>(beta));
  for (std::size_t i = 1; i < errors.size(); ++i) rates.push_back(std::log(errors[i - 1] / errors[i]) / lb);
  return rates;
}

// ---------------------------------------------------------------- references

namespace {

double exact_u(std::span<const double> x, int dim) {
  double v = std::pow(2.0, 0.5 * dim);
  for (int i = 0; i < dim; ++i) v *= std::sin(std::numbers::pi * x[i]);
  return v;
}

}  // namespace

Reference Reference::analytic(Domain domain) {
  Reference r;
  r.kind_ = ReferenceKind::analytic;
  r.domain_ = domain;
  return r;
}

Reference Reference::discrete(const MeshHierarchy& hier, EigenPair pair) {
  if (pair.level < 0 || pair.level > hier.finest() ||
      static_cast<int>(pair.u.size()) != hier.level(pair.level).n_dofs())
    throw Error(ErrorKind::invalid_argument, "Reference::discrete: pair does not live on the hierarchy");
  Reference r;
  r.kind_ = ReferenceKind::direct_finer;
  r.domain_ = hier.domain();
  r.hier_ = &hier;
  r.pair_ = std::move(pair);
  return r;
}

double Reference::lambda() const {
  switch (kind_) {
    case ReferenceKind::analytic: return domain_.dim() * std::numbers::pi * std::numbers::pi;
    case ReferenceKind::direct_finer: return pair_.lambda;
    case ReferenceKind::none: break;
  }
  throw Error(ErrorKind::missing_reference, "no reference available");
}

ReferenceErrors compare_to_reference(const MeshHierarchy& hier, const EigenPair& pair, const Reference& ref) {
  if (ref.kind() == ReferenceKind::none) throw Error(ErrorKind::missing_reference, "no reference available");
  if (pair.level < 0 || pair.level > hier.finest() || static_cast<int>(pair.u.size()) != hier.level(pair.level).n_dofs())
    throw Error(ErrorKind::invalid_argument, "compare_to_reference: pair does not live on the hierarchy");

  ReferenceErrors e;
  e.lambda = std::abs(pair.lambda - ref.lambda());

  if (ref.kind() == ReferenceKind::analytic) {
    const MeshLevel& mesh = hier.level(pair.level);
    const int d = mesh.dim;
    const CsrMatrix M = assemble_mass(mesh);
    const NodalVector iu = interpolate(mesh, [d](std::span<const double> x) { return exact_u(x, d); });
    NodalVector uh = pair.u;
    if (dot(M * uh.values, iu.values) < 0.0)
      for (double& v : uh.values) v = -v;
    const ErrorNorms n = analytic_errors(
        mesh, uh, [d](std::span<const double> x) { return exact_u(x, d); },
        [d](std::span<const double> x) {
          std::array<double, 2> g{0.0, 0.0};
          for (int i = 0; i < d; ++i) {
            double v = std::pow(2.0, 0.5 * d) * std::numbers::pi * std::cos(std::numbers::pi * x[i]);
            for (int j = 0; j < d; ++j)
              if (j != i) v *= std::sin(std::numbers::pi * x[j]);
            g[static_cast<std::size_t>(i)] = v;
          }
          return g;
        });
    e.l2 = n.l2;
    e.h1 = n.h1_semi;
    return e;
  }

  const EigenPair& rp = ref.pair();
  if (ref.hier_ != &hier)
    throw Error(ErrorKind::invalid_argument, "compare_to_reference: reference lives on another hierarchy");
  if (pair.level > rp.level)
    throw Error(ErrorKind::invalid_argument, "compare_to_reference: pair is finer than the reference");
  const MeshLevel& fine = hier.level(rp.level);
  const CsrMatrix K = assemble_stiffness(fine);
  const CsrMatrix M = assemble_mass(fine);
  Vector d = hier.lift(pair.u.values, pair.level, rp.level);
  const double sgn = dot(M * d, rp.u.values) < 0.0 ? -1.0 : 1.0;
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = sgn * d[i] - rp.u.values[i];
  e.l2 = std::sqrt(std::max(0.0, inner(M, d, d)));
  e.h1 = std::sqrt(std::max(0.0, energy(K, d)));
  return e;
}

// ---------------------------------------------------------------- study

namespace {

void fill_rates(std::vector<ReportRow>& rows, double ReportRow::*err, double ReportRow::*rate, int beta) {
  const double lb = std::log(static_cast<double>(beta));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double a = rows[i - 1].*err;
    const double b = rows[i].*err;
    if (a > 0.0 && b > 0.0 && std::isfinite(a) && std::isfinite(b)) rows[i].*rate = std::log(a / b) / lb;
  }
}

}  // namespace

ConvergenceReport run_study(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const SchemeConfig& sc = cfg.scheme;
  sc.validate();
  const int n = sc.levels;
  const int top = n + (cfg.reference == ReferenceKind::direct_finer ? 1 : 0);
  const MeshHierarchy hier = build_hierarchy(sc.domain, sc.H, top, sc.beta);

  ConvergenceReport rep;
  rep.config = cfg;
  rep.rows.resize(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) {
    ReportRow& row = rep.rows[static_cast<std::size_t>(k - 1)];
    row.k = k;
    row.n_dofs = hier.level(k).n_dofs();
    row.h = hier.level(k).h;
  }

  std::vector<EigenPair> scheme_pairs, direct_pairs;
  if (cfg.mode != RunMode::direct) {
    SchemeResult sr = run_scheme(hier, sc);
    for (std::size_t i = 0; i < sr.traces.size(); ++i) {
      ReportRow& row = rep.rows[i];
      row.lambda = sr.traces[i].lambda;
      row.varpi = sr.traces[i].varpi;
      row.v_cycles = sr.traces[i].mg.v_cycles;
      row.matvecs = sr.traces[i].mg.matvec_count;
    }
    WorkSummary ws;
    ws.matvecs = sr.work.matvecs;
    ws.dense_eig_work = sr.work.dense_eig_work;
    ws.assemblies = sr.work.assemblies;
    ws.coarse_dim = sr.work.coarse_dim;
    ws.first_level_inner_iterations = sr.work.first_level_inner_iterations;
    ws.model = work_model_check(sr.work, sr.traces, sc.beta);
    ws.matvecs_per_fine_dof = ws.model.matvecs_per_fine_dof;
    rep.work = ws;
    rep.warnings = sr.warnings;
    scheme_pairs = std::move(sr.level_pairs);
  }
  if (cfg.mode != RunMode::scheme) {
    for (int k = 1; k <= n; ++k) {
      try {
        direct_pairs.push_back(direct_solve_fine(hier, k, sc.f, sc.scf));
      } catch (const Error& e) {
        throw SchemeFailure(e.kind(), "direct solve on level " + std::to_string(k) + ": " + e.what(), k, {});
      }
      rep.rows[static_cast<std::size_t>(k - 1)].lambda_direct = direct_pairs.back().lambda;
      log_info("direct level " + std::to_string(k) + ": lambda = " + std::to_string(direct_pairs.back().lambda));
    }
  }
  if (cfg.mode == RunMode::both)
    for (ReportRow& row : rep.rows) row.gap = std::abs(row.lambda - row.lambda_direct);

  Reference ref;
  if (cfg.reference == ReferenceKind::analytic) {
    ref = Reference::analytic(sc.domain);
  } else if (cfg.reference == ReferenceKind::direct_finer) {
    try {
      ref = Reference::discrete(hier, direct_solve_fine(hier, n + 1, sc.f, sc.scf));
    } catch (const Error& e) {
      throw SchemeFailure(e.kind(), std::string("reference solve: ") + e.what(), n + 1, {});
    }
  }

  const std::vector<EigenPair>& primary = cfg.mode == RunMode::direct ? direct_pairs : scheme_pairs;
  if (ref.kind() != ReferenceKind::none) {
    rep.reference_lambda = ref.lambda();
    for (std::size_t i = 0; i < primary.size(); ++i) {
      const ReferenceErrors e = compare_to_reference(hier, primary[i], ref);
      rep.rows[i].err_lambda = e.lambda;
      rep.rows[i].err_l2 = e.l2;
      rep.rows[i].err_h1 = e.h1;
      if (!direct_pairs.empty()) rep.rows[i].err_lambda_direct = std::abs(direct_pairs[i].lambda - ref.lambda());
    }
    fill_rates(rep.rows, &ReportRow::err_lambda, &ReportRow::rate_lambda, sc.beta);
    fill_rates(rep.rows, &ReportRow::err_l2, &ReportRow::rate_l2, sc.beta);
    fill_rates(rep.rows, &ReportRow::err_h1, &ReportRow::rate_h1, sc.beta);
  }

  // differences of successive eigenvalues; a direct_finer reference supplies level n + 1
  std::vector<double> lam;
  for (const EigenPair& p : primary) lam.push_back(p.lambda);
  if (ref.kind() == ReferenceKind::direct_finer) lam.push_back(ref.lambda());
  std::vector<double> diff;
  for (std::size_t i = 0; i + 1 < lam.size(); ++i) diff.push_back(std::abs(lam[i] - lam[i + 1]));
  const double lb = std::log(static_cast<double>(sc.beta));
  for (std::size_t i = 1; i < diff.size() && i < rep.rows.size(); ++i)
    if (diff[i - 1] > 0.0 && diff[i] > 0.0) rep.rows[i].rate_richardson = std::log(diff[i - 1] / diff[i]) / lb;

  rep.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

// ---------------------------------------------------------------- output

std::string report_to_json(const ConvergenceReport& rep) {
  ojson o;
  o["schema"] = "nlmg-report";
  o["schema_version"] = ConvergenceReport::schema_version;
  o["config"] = config_json(rep.config);
  o["reference"] = {{"kind", to_string(rep.config.reference)}, {"lambda", number_or_null(rep.reference_lambda)}};
  ojson levels = ojson::array();
  for (const ReportRow& r : rep.rows) {
    ojson l;
    l["k"] = r.k;
    l["n_dofs"] = r.n_dofs;
    l["h"] = r.h;
    l["lambda"] = number_or_null(r.lambda);
    l["varpi"] = r.varpi;
    l["v_cycles"] = r.v_cycles;
    l["matvecs"] = r.matvecs;
    l["lambda_direct"] = number_or_null(r.lambda_direct);
    l["gap"] = number_or_null(r.gap);
    l["err_lambda"] = number_or_null(r.err_lambda);
    l["err_l2"] = number_or_null(r.err_l2);
    l["err_h1"] = number_or_null(r.err_h1);
    l["err_lambda_direct"] = number_or_null(r.err_lambda_direct);
    l["rate_lambda"] = number_or_null(r.rate_lambda);
    l["rate_l2"] = number_or_null(r.rate_l2);
    l["rate_h1"] = number_or_null(r.rate_h1);
    l["rate_richardson"] = number_or_null(r.rate_richardson);
    levels.push_back(std::move(l));
  }
  o["levels"] = std::move(levels);
  if (rep.work) {
    const WorkSummary& w = *rep.work;
    ojson m;
    m["slope"] = number_or_null(w.model.slope);
    m["intercept"] = number_or_null(w.model.intercept);
    m["r_squared"] = number_or_null(w.model.r_squared);
    ojson ratios = ojson::array();
    for (double x : w.model.level_ratios) ratios.push_back(number_or_null(x));
    m["level_ratios"] = std::move(ratios);
    m["max_ratio_deviation"] = number_or_null(w.model.max_ratio_deviation);
    m["dense_work_per_correction"] = number_or_null(w.model.dense_work_per_correction);
    m["coarse_log_term"] = number_or_null(w.model.coarse_log_term);
    m["max_varpi"] = w.model.max_varpi;
    o["work"] = {{"matvecs", w.matvecs},
                 {"matvecs_per_fine_dof", number_or_null(w.matvecs_per_fine_dof)},
                 {"dense_eig_work", w.dense_eig_work},
                 {"assemblies", w.assemblies},
                 {"coarse_dim", w.coarse_dim},
                 {"first_level_inner_iterations", w.first_level_inner_iterations},
                 {"model", std::move(m)}};
  } else {
    o["work"] = nullptr;
  }
  o["warnings"] = rep.warnings;
  return o.dump(2) + "\n";
}

namespace {

std::string csv_num(double v) {
  if (!std::isfinite(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string report_to_csv(const ConvergenceReport& rep) {
  std::ostringstream os;
  os << "k,n_dofs,h,lambda,varpi,v_cycles,matvecs,lambda_direct,gap,err_lambda,err_l2,err_h1,err_lambda_direct,"
        "rate_lambda,rate_l2,rate_h1,rate_richardson\n";
  for (const ReportRow& r : rep.rows) {
    os << r.k << ',' << r.n_dofs << ',' << csv_num(r.h) << ',' << csv_num(r.lambda) << ',' << r.varpi << ','
       << r.v_cycles << ',' << r.matvecs << ',' << csv_num(r.lambda_direct) << ',' << csv_num(r.gap) << ','
       << csv_num(r.err_lambda) << ',' << csv_num(r.err_l2) << ',' << csv_num(r.err_h1) << ','
       << csv_num(r.err_lambda_direct) << ',' << csv_num(r.rate_lambda) << ',' << csv_num(r.rate_l2) << ','
       << csv_num(r.rate_h1) << ',' << csv_num(r.rate_richardson) << '\n';
  }
  return os.str();
}

void write_report(const ConvergenceReport& rep, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create output directory '" + dir + "': " + ec.message());
  const auto put = [&](const char* name, const std::string& body) {
    const std::filesystem::path p = std::filesystem::path(dir) / name;
    std::ofstream out(p, std::ios::binary);
    out << body;
    if (!out) throw Error(ErrorKind::io, "cannot write '" + p.string() + "'");
  };
  put("report.json", report_to_json(rep));
  put("table.csv", report_to_csv(rep));
}

// ---------------------------------------------------------------- checks

CheckOutcome check_report(const ConvergenceReport& rep) {
  CheckOutcome out;
  const RunConfig& cfg = rep.config;
  const CheckThresholds& c = cfg.check;
  const auto fail = [&](std::string msg) {
    out.passed = false;
    out.failures.push_back(std::move(msg));
  };
  const auto in_range = [&](const char* what, const ReportRow& r, double v, double lo, double hi) {
    std::ostringstream os;
    if (!std::isfinite(v))
      os << what << " undefined at level " << r.k;
    else if (v < lo || v > hi)
      os << what << " " << v << " at level " << r.k << " outside [" << lo << ", " << hi << "]";
    else
      return;
    fail(os.str());
  };

  for (const ReportRow& r : rep.rows) {
    if (r.k < 2) continue;
    if (cfg.reference == ReferenceKind::analytic) {
      in_range("eigenvalue error rate", r, r.rate_lambda, c.lambda_rate_min, c.lambda_rate_max);
      in_range("H1 error rate", r, r.rate_h1, c.h1_rate_min, c.h1_rate_max);
    } else if (cfg.reference == ReferenceKind::direct_finer) {
      in_range("eigenvalue difference rate", r, r.rate_richardson, c.lambda_rate_min, c.lambda_rate_max);
    }
    if (cfg.mode != RunMode::direct && r.varpi > c.max_varpi)
      fail("varpi " + std::to_string(r.varpi) + " at level " + std::to_string(r.k) + " exceeds " +
           std::to_string(c.max_varpi));
  }

  if (cfg.mode == RunMode::both && cfg.reference != ReferenceKind::none) {
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
      const ReportRow& r = rep.rows[i];
      if (r.k < 2) continue;
      double scale = r.err_lambda_direct;
      if (cfg.reference == ReferenceKind::direct_finer) {
        const double next = i + 1 < rep.rows.size() ? rep.rows[i + 1].lambda_direct : rep.reference_lambda;
        scale = std::abs(r.lambda_direct - next);
      }
      if (!(r.gap <= c.gap_fraction * scale)) {
        std::ostringstream os;
        os << "scheme/direct gap " << r.gap << " at level " << r.k << " exceeds " << c.gap_fraction << " * " << scale;
        fail(os.str());
      }
    }
  }
  return out;
}

}  // namespace nlmg
