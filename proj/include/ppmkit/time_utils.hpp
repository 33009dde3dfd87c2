#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace ppm {

/// Timestamps are integer minutes since the Unix epoch, UTC.
/// Sub-minute precision in the input is floored away.
using Minutes = std::int64_t;

/// Parses an ISO-8601 timestamp: `YYYY-MM-DD[T ]HH:MM[:SS[.frac]][Z|+HH:MM|+HHMM|+HH]`.
/// The offset, when present, is applied so the result is always UTC.
/// Seconds and fractions are floored to whole minutes.
Minutes parse_iso8601_minutes(std::string_view text);

/// Renders minutes-since-epoch as `YYYY-MM-DDTHH:MMZ`.
std::string format_iso8601_minutes(Minutes minutes);

}  // namespace ppm
