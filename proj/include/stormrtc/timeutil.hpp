#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace stormrtc {

/// Seconds since 1970-01-01T00:00:00Z. Accepts `YYYY-MM-DD`,
/// `YYYY-MM-DDTHH:MM[:SS]` with optional trailing `Z`, and a space instead of `T`.
std::int64_t parse_iso8601(std::string_view text);

/// Formats as `YYYY-MM-DDTHH:MM:SSZ`. Fractional seconds are truncated.
std::string format_iso8601(double epoch_seconds);

inline constexpr std::int64_t kSecondsPerDay = 86400;

} // namespace stormrtc
