#include "fedxfer/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <mutex>

namespace fedxfer {

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("FEDXFER_LOG");
    if (env == nullptr) return LogLevel::error;
    const std::string value(env);
    if (value == "debug") return LogLevel::debug;
    if (value == "info") return LogLevel::info;
    return LogLevel::error;
  }();
  return level;
}

void log_line(LogLevel level, const std::string& message) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  static std::mutex mu;
  const char* tag = level == LogLevel::error ? "error" : level == LogLevel::info ? "info" : "debug";
  std::lock_guard<std::mutex> lock(mu);
  std::fprintf(stderr, "[%s] %s\n", tag, message.c_str());
}

}  // namespace fedxfer
