#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace nlmg {

enum class ErrorKind {
  invalid_argument,
  precondition,
  no_convergence,
  singular_system,
  not_spd,
  non_coercive,
  degenerate_space,
  zero_vector,
  config,
  missing_reference,
  non_positive_error,
  io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Iterative process hit its iteration cap. `history` holds the monitored
/// quantity per iteration (eigenvalue iterates for SCF, residuals for MG).
class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, std::vector<double> history)
      : Error(ErrorKind::no_convergence, what), history_(std::move(history)) {}
  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

/// Configuration error with the offending field (or "line N" for parse errors).
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(ErrorKind::config, field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace nlmg
