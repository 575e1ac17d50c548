#pragma once

#include <string_view>

namespace tensamp {

/// Sets library verbosity: trace, debug, info, warn, error, off. The initial
/// level comes from the TNS_LOG environment variable (default: warn).
void set_log_level(std::string_view level);

}  // namespace tensamp
