/* C interface to the nlmg solver library. */
#ifndef NLMG_NLMG_H
#define NLMG_NLMG_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(NLMG_BUILDING_LIBRARY)
#    define NLMG_API __declspec(dllexport)
#  else
#    define NLMG_API __declspec(dllimport)
#  endif
#else
#  define NLMG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as process exit codes for the CLI where they overlap. */
typedef enum nlmg_status {
  NLMG_OK = 0,
  NLMG_ERR_ARGUMENT = 1,
  NLMG_ERR_CONFIG = 2,
  NLMG_ERR_SOLVER = 3,
  NLMG_ERR_CHECK = 4,
  NLMG_ERR_IO = 5,
  NLMG_ERR_INTERNAL = 6
} nlmg_status;

typedef struct nlmg_config nlmg_config;
typedef struct nlmg_report nlmg_report;

typedef struct nlmg_level_row {
  int k;
  int n_dofs;
  double h;
  double lambda;        /* NaN when the scheme was not run */
  int varpi;
  int v_cycles;
  uint64_t matvecs;
  double lambda_direct; /* NaN when the direct solve was not run */
  double gap;
  double err_lambda;
  double err_l2;
  double err_h1;
  double err_lambda_direct;
  double rate_lambda;
  double rate_l2;
  double rate_h1;
  double rate_richardson;
} nlmg_level_row;

typedef struct nlmg_work_summary {
  uint64_t matvecs;
  double matvecs_per_fine_dof;
  uint64_t dense_eig_work;
  uint64_t assemblies;
  int coarse_dim;
  int max_varpi;
  double max_ratio_deviation;
  double dense_work_per_correction;
} nlmg_work_summary;

NLMG_API const char* nlmg_version(void);

/* Message of the last failed call on this thread ("" if none). */
NLMG_API const char* nlmg_last_error(void);
/* Offending config field of the last NLMG_ERR_CONFIG on this thread. */
NLMG_API const char* nlmg_last_error_field(void);

NLMG_API nlmg_status nlmg_config_load(const char* path, nlmg_config** out);
NLMG_API nlmg_status nlmg_config_parse(const char* json_text, nlmg_config** out);
NLMG_API void nlmg_config_free(nlmg_config* cfg);
/* mode: "scheme", "direct" or "both". */
NLMG_API nlmg_status nlmg_config_set_mode(nlmg_config* cfg, const char* mode);
NLMG_API nlmg_status nlmg_config_set_output(nlmg_config* cfg, const char* dir);
/* Borrowed pointer, valid until the config is modified or freed. */
NLMG_API const char* nlmg_config_output(const nlmg_config* cfg);
NLMG_API nlmg_status nlmg_config_to_json(const nlmg_config* cfg, char** out);

NLMG_API nlmg_status nlmg_run(const nlmg_config* cfg, nlmg_report** out);
NLMG_API void nlmg_report_free(nlmg_report* report);

NLMG_API nlmg_status nlmg_report_write(const nlmg_report* report, const char* dir);
NLMG_API nlmg_status nlmg_report_json(const nlmg_report* report, char** out);
NLMG_API nlmg_status nlmg_report_csv(const nlmg_report* report, char** out);
/* NLMG_OK or NLMG_ERR_CHECK; failures (optional) receives one line per failed check. */
NLMG_API nlmg_status nlmg_report_check(const nlmg_report* report, char** failures);
NLMG_API size_t nlmg_report_level_count(const nlmg_report* report);
NLMG_API nlmg_status nlmg_report_level(const nlmg_report* report, size_t index, nlmg_level_row* out);
NLMG_API nlmg_status nlmg_report_work(const nlmg_report* report, nlmg_work_summary* out);
NLMG_API size_t nlmg_report_warning_count(const nlmg_report* report);
NLMG_API const char* nlmg_report_warning(const nlmg_report* report, size_t index);
NLMG_API double nlmg_report_wall_time(const nlmg_report* report);

/* rates[i] = log(errors[i] / errors[i+1]) / log(beta), n - 1 entries. */
NLMG_API nlmg_status nlmg_compute_rates(const double* errors, size_t n, int beta, double* rates);

NLMG_API void nlmg_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
