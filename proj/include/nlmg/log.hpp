#pragma once

#include <string>

namespace nlmg {

/// Verbosity from NLMG_LOG: 0 = quiet, 1 = warnings (default), 2 = info, 3 = debug.
int log_level();
void log_warn(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace nlmg
