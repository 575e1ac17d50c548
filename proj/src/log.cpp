#include <cstdlib>
#include <memory>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>

#include "logging.hpp"
#include "tensamp/error.hpp"
#include "tensamp/log.hpp"

namespace tensamp {
namespace {

spdlog::level::level_enum parse_level(std::string_view s) {
  const auto lvl = spdlog::level::from_str(std::string(s));
  // from_str maps unknown names to off; only accept that for "off" itself.
  if (lvl == spdlog::level::off && s != "off") throw ValidationError("unknown log level '" + std::string(s) + "'");
  return lvl;
}

std::shared_ptr<spdlog::logger> make_logger() {
  auto logger = spdlog::stderr_color_mt("tensamp");
  logger->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  logger->set_level(spdlog::level::warn);
  if (const char* env = std::getenv("TNS_LOG"); env != nullptr && *env != '\0') {
    try {
      logger->set_level(parse_level(env));
    } catch (const ValidationError&) {
      logger->warn("ignoring TNS_LOG='{}'", env);
    }
  }
  return logger;
}

}  // namespace

namespace detail {
spdlog::logger& log() {
  static const std::shared_ptr<spdlog::logger> logger = make_logger();
  return *logger;
}
}  // namespace detail

void set_log_level(std::string_view level) { detail::log().set_level(parse_level(level)); }

}  // namespace tensamp
