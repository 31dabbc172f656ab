#include "nlmg/error.hpp"

namespace nlmg {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::no_convergence: return "no_convergence";
    case ErrorKind::singular_system: return "singular_system";
    case ErrorKind::not_spd: return "not_spd";
    case ErrorKind::non_coercive: return "non_coercive";
    case ErrorKind::degenerate_space: return "degenerate_space";
    case ErrorKind::zero_vector: return "zero_vector";
    case ErrorKind::config: return "config";
    case ErrorKind::missing_reference: return "missing_reference";
    case ErrorKind::non_positive_error: return "non_positive_error";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace nlmg
