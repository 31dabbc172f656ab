#include "nlmg/nlmg.h"

#include "nlmg/study.hpp"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

struct nlmg_config {
  nlmg::RunConfig cfg;
};

struct nlmg_report {
  nlmg::ConvergenceReport rep;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_field;

nlmg_status status_of(nlmg::ErrorKind kind) {
  using nlmg::ErrorKind;
  switch (kind) {
    case ErrorKind::config: return NLMG_ERR_CONFIG;
    case ErrorKind::io: return NLMG_ERR_IO;
    case ErrorKind::invalid_argument:
    case ErrorKind::missing_reference:
    case ErrorKind::non_positive_error: return NLMG_ERR_ARGUMENT;
    default: return NLMG_ERR_SOLVER;
  }
}

nlmg_status fail(nlmg_status s, std::string msg, std::string field = {}) {
  g_error = std::move(msg);
  g_field = std::move(field);
  return s;
}

template <class F>
nlmg_status guarded(F&& body) {
  try {
    g_error.clear();
    g_field.clear();
    return body();
  } catch (const nlmg::ConfigError& e) {
    return fail(NLMG_ERR_CONFIG, e.what(), e.field());
  } catch (const nlmg::Error& e) {
    return fail(status_of(e.kind()), std::string(nlmg::to_string(e.kind())) + ": " + e.what());
  } catch (const std::bad_alloc&) {
    return fail(NLMG_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(NLMG_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(NLMG_ERR_INTERNAL, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

nlmg_status null_arg(const char* fn) { return fail(NLMG_ERR_ARGUMENT, std::string(fn) + ": null argument"); }

}  // namespace

extern "C" {

const char* nlmg_version(void) { return "1.0.0"; }
const char* nlmg_last_error(void) { return g_error.c_str(); }
const char* nlmg_last_error_field(void) { return g_field.c_str(); }

nlmg_status nlmg_config_load(const char* path, nlmg_config** out) {
  if (!path || !out) return null_arg("nlmg_config_load");
  *out = nullptr;
  return guarded([&] {
    *out = new nlmg_config{nlmg::load_run_config(path)};
    return NLMG_OK;
  });
}

nlmg_status nlmg_config_parse(const char* json_text, nlmg_config** out) {
  if (!json_text || !out) return null_arg("nlmg_config_parse");
  *out = nullptr;
  return guarded([&] {
    *out = new nlmg_config{nlmg::parse_run_config(json_text)};
    return NLMG_OK;
  });
}

void nlmg_config_free(nlmg_config* cfg) { delete cfg; }

nlmg_status nlmg_config_set_mode(nlmg_config* cfg, const char* mode) {
  if (!cfg || !mode) return null_arg("nlmg_config_set_mode");
  return guarded([&] {
    cfg->cfg.mode = nlmg::parse_run_mode(mode);
    return NLMG_OK;
  });
}

nlmg_status nlmg_config_set_output(nlmg_config* cfg, const char* dir) {
  if (!cfg || !dir) return null_arg("nlmg_config_set_output");
  if (!*dir) return fail(NLMG_ERR_CONFIG, "output: must not be empty", "output");
  return guarded([&] {
    cfg->cfg.output = dir;
    return NLMG_OK;
  });
}

const char* nlmg_config_output(const nlmg_config* cfg) { return cfg ? cfg->cfg.output.c_str() : ""; }

nlmg_status nlmg_config_to_json(const nlmg_config* cfg, char** out) {
  if (!cfg || !out) return null_arg("nlmg_config_to_json");
  return guarded([&] {
    *out = dup_string(nlmg::run_config_to_json(cfg->cfg));
    return NLMG_OK;
  });
}

nlmg_status nlmg_run(const nlmg_config* cfg, nlmg_report** out) {
  if (!cfg || !out) return null_arg("nlmg_run");
  *out = nullptr;
  return guarded([&] {
    *out = new nlmg_report{nlmg::run_study(cfg->cfg)};
    return NLMG_OK;
  });
}

void nlmg_report_free(nlmg_report* report) { delete report; }

nlmg_status nlmg_report_write(const nlmg_report* report, const char* dir) {
  if (!report || !dir) return null_arg("nlmg_report_write");
  return guarded([&] {
    nlmg::write_report(report->rep, dir);
    return NLMG_OK;
  });
}

nlmg_status nlmg_report_json(const nlmg_report* report, char** out) {
  if (!report || !out) return null_arg("nlmg_report_json");
  return guarded([&] {
    *out = dup_string(nlmg::report_to_json(report->rep));
    return NLMG_OK;
  });
}

nlmg_status nlmg_report_csv(const nlmg_report* report, char** out) {
  if (!report || !out) return null_arg("nlmg_report_csv");
  return guarded([&] {
    *out = dup_string(nlmg::report_to_csv(report->rep));
    return NLMG_OK;
  });
}

nlmg_status nlmg_report_check(const nlmg_report* report, char** failures) {
  if (!report) return null_arg("nlmg_report_check");
  return guarded([&] {
    const nlmg::CheckOutcome c = nlmg::check_report(report->rep);
    std::string text;
    for (const std::string& f : c.failures) text += f + "\n";
    if (failures) *failures = dup_string(text);
    if (c.passed) return NLMG_OK;
    return fail(NLMG_ERR_CHECK, c.failures.empty() ? "check failed" : c.failures.front());
  });
}

size_t nlmg_report_level_count(const nlmg_report* report) { return report ? report->rep.rows.size() : 0; }

nlmg_status nlmg_report_level(const nlmg_report* report, size_t index, nlmg_level_row* out) {
  if (!report || !out) return null_arg("nlmg_report_level");
  if (index >= report->rep.rows.size()) return fail(NLMG_ERR_ARGUMENT, "nlmg_report_level: index out of range");
  const nlmg::ReportRow& r = report->rep.rows[index];
  *out = nlmg_level_row{r.k,          r.n_dofs,   r.h,      r.lambda,          r.varpi,
                        r.v_cycles,   static_cast<uint64_t>(r.matvecs), r.lambda_direct, r.gap,
                        r.err_lambda, r.err_l2,   r.err_h1, r.err_lambda_direct, r.rate_lambda,
                        r.rate_l2,    r.rate_h1,  r.rate_richardson};
  return NLMG_OK;
}

nlmg_status nlmg_report_work(const nlmg_report* report, nlmg_work_summary* out) {
  if (!report || !out) return null_arg("nlmg_report_work");
  if (!report->rep.work) return fail(NLMG_ERR_ARGUMENT, "nlmg_report_work: the scheme was not run");
  const nlmg::WorkSummary& w = *report->rep.work;
  *out = nlmg_work_summary{static_cast<uint64_t>(w.matvecs),        w.matvecs_per_fine_dof,
                           static_cast<uint64_t>(w.dense_eig_work), static_cast<uint64_t>(w.assemblies),
                           w.coarse_dim,                            w.model.max_varpi,
                           w.model.max_ratio_deviation,             w.model.dense_work_per_correction};
  return NLMG_OK;
}

size_t nlmg_report_warning_count(const nlmg_report* report) { return report ? report->rep.warnings.size() : 0; }

const char* nlmg_report_warning(const nlmg_report* report, size_t index) {
  if (!report || index >= report->rep.warnings.size()) return nullptr;
  return report->rep.warnings[index].c_str();
}

double nlmg_report_wall_time(const nlmg_report* report) { return report ? report->rep.wall_time_seconds : 0.0; }

nlmg_status nlmg_compute_rates(const double* errors, size_t n, int beta, double* rates) {
  if (!errors || (n > 1 && !rates)) return null_arg("nlmg_compute_rates");
  return guarded([&] {
    const std::vector<double> r = nlmg::compute_rates(std::span<const double>(errors, n), beta);
    std::copy(r.begin(), r.end(), rates);
    return NLMG_OK;
  });
}

void nlmg_string_free(char* s) { std::free(s); }

}  // extern "C"
