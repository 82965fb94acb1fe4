#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace rhmpc {

enum class LogLevel { error = 0, info = 1, debug = 2 };

namespace detail {
inline LogLevel env_log_level() {
  const char* v = std::getenv("RHMPC_LOG");
  if (v == nullptr) return LogLevel::info;
  if (std::strcmp(v, "error") == 0) return LogLevel::error;
  if (std::strcmp(v, "debug") == 0) return LogLevel::debug;
  return LogLevel::info;
}
}  // namespace detail

// Process-wide log threshold, initialized from the RHMPC_LOG environment
// variable (error|info|debug, default info).  Messages go to stderr so that
// stdout stays clean for machine-readable command output.
inline LogLevel& log_level() {
  static LogLevel level = detail::env_log_level();
  return level;
}

inline void log_msg(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  const char* tag = level == LogLevel::error  ? "error"
                    : level == LogLevel::info ? "info"
                                              : "debug";
  std::fprintf(stderr, "[rhmpc][%s] %s\n", tag, msg.c_str());
}

inline void log_error(const std::string& msg) { log_msg(LogLevel::error, msg); }
inline void log_info(const std::string& msg) { log_msg(LogLevel::info, msg); }
inline void log_debug(const std::string& msg) { log_msg(LogLevel::debug, msg); }

}  // namespace rhmpc
