#include "medvp/log.hpp"

#include <spdlog/sinks/basic_file_sink.h>
#include <spdlog/sinks/null_sink.h>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "medvp/text.hpp"

namespace medvp {

namespace {

spdlog::level::level_enum to_spdlog(LogLevel l) {
  switch (l) {
    case LogLevel::kDebug:
      return spdlog::level::debug;
    case LogLevel::kInfo:
      return spdlog::level::info;
    case LogLevel::kWarn:
      return spdlog::level::warn;
    case LogLevel::kError:
      return spdlog::level::err;
    case LogLevel::kOff:
      return spdlog::level::off;
  }
  return spdlog::level::info;
}

std::string_view level_name(LogLevel l) {
  switch (l) {
    case LogLevel::kDebug:
      return "debug";
    case LogLevel::kInfo:
      return "info";
    case LogLevel::kWarn:
      return "warn";
    case LogLevel::kError:
      return "error";
    case LogLevel::kOff:
      break;
  }
  return "off";
}

std::shared_ptr<spdlog::logger> make(spdlog::sink_ptr sink, LogLevel level, bool timestamps) {
  auto logger = std::make_shared<spdlog::logger>("medvp", std::move(sink));
  // The message is the JSON object minus its opening brace.
  logger->set_pattern(timestamps ? R"({"ts":"%Y-%m-%dT%H:%M:%S.%eZ",%v)" : "{%v", spdlog::pattern_time_type::utc);
  logger->set_level(to_spdlog(level));
  logger->flush_on(spdlog::level::warn);
  return logger;
}

}  // namespace

LogLevel parse_log_level(std::string_view s) {
  const std::string v = to_lower(s);
  if (v == "debug") return LogLevel::kDebug;
  if (v == "info") return LogLevel::kInfo;
  if (v == "warn" || v == "warning") return LogLevel::kWarn;
  if (v == "error") return LogLevel::kError;
  if (v == "off") return LogLevel::kOff;
  throw Error("unknown log level '" + std::string(s) + "'");
}

Logger::Logger() : impl_(make(std::make_shared<spdlog::sinks::null_sink_mt>(), LogLevel::kOff, false)) {}

Logger::Logger(std::shared_ptr<spdlog::logger> impl) : impl_(std::move(impl)) {}

Logger Logger::to_stderr(LogLevel level) {
  return Logger(make(std::make_shared<spdlog::sinks::stderr_sink_mt>(), level, true));
}

Logger Logger::to_file(const std::filesystem::path& path, LogLevel level) {
  return Logger(make(std::make_shared<spdlog::sinks::basic_file_sink_mt>(path.string()), level, true));
}

Logger Logger::to_stream(std::ostream& out, LogLevel level) {
  return Logger(make(std::make_shared<spdlog::sinks::ostream_sink_mt>(out, true), level, false));
}

void Logger::log(LogLevel level, std::string_view event, const Json& fields) const {
  if (!impl_->should_log(to_spdlog(level))) return;
  Json j;
  j["level"] = std::string(level_name(level));
  j["event"] = std::string(event);
  for (auto it = fields.begin(); it != fields.end(); ++it) j[it.key()] = it.value();
  const std::string line = j.dump(-1, ' ', false, Json::error_handler_t::replace);
  impl_->log(to_spdlog(level), "{}", std::string_view(line).substr(1));
}

void Logger::flush() const { impl_->flush(); }

}  // namespace medvp
