#pragma once

#include <string>

namespace vwp {

/// Sets the stderr log level from VWP_LOG (error|info|debug, default info).
void configure_logging();

void log_info(const std::string& message);
void log_debug(const std::string& message);
void log_error(const std::string& message);

}  // namespace vwp
