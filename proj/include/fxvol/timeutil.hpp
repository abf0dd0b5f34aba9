#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace fxvol {

/// UTC instant with one-second resolution.
using Timestamp = std::chrono::sys_seconds;

/// Accepts `YYYY-MM-DDTHH:MM[:SS][Z|+00:00]`, with `T` or a space as the
/// separator. Non-UTC offsets are rejected.
Timestamp parse_timestamp(std::string_view text);

/// `YYYY-MM-DDTHH:MM:SSZ`.
std::string format_timestamp(Timestamp ts);

int seconds_of_day(Timestamp ts);

bool is_weekend(Timestamp ts);

}  // namespace fxvol
