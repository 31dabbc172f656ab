#include "nlmg/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <mutex>

namespace nlmg {

namespace {

int read_level() {
  const char* env = std::getenv("NLMG_LOG");
  if (!env || !*env) return 1;
  const std::string s(env);
  if (s == "quiet" || s == "off") return 0;
  if (s == "warn") return 1;
  if (s == "info") return 2;
  if (s == "debug") return 3;
  return std::atoi(env);
}

void emit(int level, const char* tag, const std::string& msg) {
  if (log_level() < level) return;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::fprintf(stderr, "[nlmg %s] %s\n", tag, msg.c_str());
}

}  // namespace

int log_level() {
  static const int level = read_level();
  return level;
}

void log_warn(const std::string& msg) { emit(1, "warn", msg); }
void log_info(const std::string& msg) { emit(2, "info", msg); }
void log_debug(const std::string& msg) { emit(3, "debug", msg); }

}  // namespace nlmg
