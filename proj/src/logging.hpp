#pragma once

#include <spdlog/spdlog.h>

namespace tensamp::detail {

spdlog::logger& log();

}  // namespace tensamp::detail
