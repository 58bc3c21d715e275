#include "vwp/log.hpp"

#include <cstdlib>
#include <string_view>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace vwp {

namespace {

std::shared_ptr<spdlog::logger> logger() {
  static auto instance = [] {
    auto l = spdlog::stderr_color_mt("vwp");
    l->set_pattern("[%H:%M:%S] [%l] %v");
    l->set_level(spdlog::level::info);
    return l;
  }();
  return instance;
}

}  // namespace

void configure_logging() {
  const char* env = std::getenv("VWP_LOG");
  // from_str maps unknown names to off; fall back to info for those
  auto level = spdlog::level::from_str(env ? env : "info");
  if (level == spdlog::level::off && std::string_view(env ? env : "") != "off") level = spdlog::level::info;
  logger()->set_level(level);
}

void log_info(const std::string& message) { logger()->info(message); }
void log_debug(const std::string& message) { logger()->debug(message); }
void log_error(const std::string& message) { logger()->error(message); }

}  // namespace vwp
