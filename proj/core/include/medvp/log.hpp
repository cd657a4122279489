#pragma once

#include <filesystem>
#include <memory>
#include <ostream>
#include <string_view>

#include "medvp/manifest.hpp"

namespace spdlog {
class logger;
}

namespace medvp {

enum class LogLevel { kDebug, kInfo, kWarn, kError, kOff };

LogLevel parse_log_level(std::string_view s);

/// JSON-lines logger. Each line is one object:
///   {"ts": "...", "level": "info", "event": "stage_done", ...fields}
/// Safe to call from worker threads.
class Logger {
 public:
  /// Discards everything.
  Logger();
  static Logger to_stderr(LogLevel level);
  static Logger to_file(const std::filesystem::path& path, LogLevel level);
  /// Writes to `out` without timestamps (deterministic, for tests).
  static Logger to_stream(std::ostream& out, LogLevel level);

  void log(LogLevel level, std::string_view event, const Json& fields = Json::object()) const;
  void debug(std::string_view event, const Json& fields = Json::object()) const { log(LogLevel::kDebug, event, fields); }
  void info(std::string_view event, const Json& fields = Json::object()) const { log(LogLevel::kInfo, event, fields); }
  void warn(std::string_view event, const Json& fields = Json::object()) const { log(LogLevel::kWarn, event, fields); }
  void error(std::string_view event, const Json& fields = Json::object()) const { log(LogLevel::kError, event, fields); }
  void flush() const;

 private:
  explicit Logger(std::shared_ptr<spdlog::logger> impl);
  std::shared_ptr<spdlog::logger> impl_;
};

}  // namespace medvp
