#pragma once

#include "nlmg/mesh.hpp"
#include "nlmg/nonlinear_eig.hpp"
#include "nlmg/scheme.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nlmg {

enum class RunMode { scheme, direct, both };
enum class ReferenceKind { analytic, direct_finer, none };

/// Thresholds applied by check_report (the CLI's --check).
struct CheckThresholds {
  double lambda_rate_min = 1.7;
  double lambda_rate_max = 2.3;
  double h1_rate_min = 0.8;
  double h1_rate_max = 1.2;
  int max_varpi = 3;
  double gap_fraction = 0.1;
};

struct RunConfig {
  SchemeConfig scheme;
  RunMode mode = RunMode::scheme;
  ReferenceKind reference = ReferenceKind::none;
  std::string output = "nlmg_out";
  std::uint64_t seed = 0;
  CheckThresholds check;
};

/// Parses and validates a JSON run configuration. Throws ConfigError naming
/// the field, or "line N" for syntax errors.
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::string& path);
std::string run_config_to_json(const RunConfig& cfg);

const char* to_string(RunMode m);
const char* to_string(ReferenceKind r);
RunMode parse_run_mode(std::string_view s);

/// rate_k = log(e_{k-1} / e_k) / log(beta). Throws non_positive_error.
std::vector<double> compute_rates(std::span<const double> errors, int beta);

struct ReferenceErrors {
  double lambda = 0.0;
  double l2 = 0.0;
  double h1 = 0.0;
};

/// What a computed pair is compared against.
class Reference {
 public:
  static Reference none() { return {}; }
  /// lambda = d pi^2, u = 2^{d/2} prod sin(pi x_i); valid for f = 0 only.
  static Reference analytic(Domain domain);
  /// Discrete pair on some level of `hier` (typically one finer than the
  /// finest compared level). `hier` must outlive the reference.
  static Reference discrete(const MeshHierarchy& hier, EigenPair pair);

  ReferenceKind kind() const noexcept { return kind_; }
  double lambda() const;
  const EigenPair& pair() const { return pair_; }

 private:
  friend ReferenceErrors compare_to_reference(const MeshHierarchy&, const EigenPair&, const Reference&);
  ReferenceKind kind_ = ReferenceKind::none;
  Domain domain_;
  const MeshHierarchy* hier_ = nullptr;
  EigenPair pair_;
};

/// |lambda - lambda_ref|, ||u - u_ref||_0 and |u - u_ref|_1. Analytic
/// references are integrated on the pair's mesh; discrete references after
/// lifting the pair to the reference level. The pair's sign is aligned with
/// the reference first. Throws missing_reference for Reference::none().
ReferenceErrors compare_to_reference(const MeshHierarchy& hier, const EigenPair& pair, const Reference& ref);

struct ReportRow {
  static constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  int k = 0;
  int n_dofs = 0;
  double h = 0.0;
  double lambda = nan;         // scheme
  int varpi = 0;
  int v_cycles = 0;
  std::size_t matvecs = 0;
  double lambda_direct = nan;
  double gap = nan;            // |lambda - lambda_direct|
  double err_lambda = nan;
  double err_l2 = nan;
  double err_h1 = nan;
  double err_lambda_direct = nan;
  double rate_lambda = nan;
  double rate_l2 = nan;
  double rate_h1 = nan;
  double rate_richardson = nan;  // from successive eigenvalue differences
};

struct WorkSummary {
  std::size_t matvecs = 0;
  double matvecs_per_fine_dof = 0.0;
  std::size_t dense_eig_work = 0;
  std::size_t assemblies = 0;
  int coarse_dim = 0;
  std::size_t first_level_inner_iterations = 0;
  WorkModelReport model;
};

struct ConvergenceReport {
  static constexpr int schema_version = 1;
  RunConfig config;
  double reference_lambda = std::numeric_limits<double>::quiet_NaN();
  std::vector<ReportRow> rows;
  std::optional<WorkSummary> work;
  std::vector<std::string> warnings;
  double wall_time_seconds = 0.0;  // not serialized, so reports stay reproducible
};

ConvergenceReport run_study(const RunConfig& cfg);

std::string report_to_json(const ConvergenceReport& report);
std::string report_to_csv(const ConvergenceReport& report);
/// Writes report.json and table.csv into dir (created if missing).
void write_report(const ConvergenceReport& report, const std::string& dir);

struct CheckOutcome {
  bool passed = true;
  std::vector<std::string> failures;
};

CheckOutcome check_report(const ConvergenceReport& report);

}  // namespace nlmg
