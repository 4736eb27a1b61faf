#pragma once

#include <string>

namespace fedxfer {

enum class LogLevel { error = 0, info = 1, debug = 2 };

/// Verbosity from FEDXFER_LOG (error, info, debug); default error. Parsed on
/// first use, unknown values fall back to error.
LogLevel log_level();

/// Writes one line to the diagnostic stream when `level` is enabled. Machine
/// output never goes through here.
void log_line(LogLevel level, const std::string& message);

}  // namespace fedxfer
