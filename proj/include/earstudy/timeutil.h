#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace earstudy {

// A wall-clock instant with the UTC offset it was written in. Ordering and
// arithmetic use the UTC instant; the offset is kept for local-time rules
// (trading close) and for printing.
struct Instant {
    std::chrono::sys_seconds utc{};
    std::chrono::minutes offset{0};

    friend bool operator==(const Instant& a, const Instant& b) { return a.utc == b.utc; }
    friend auto operator<=>(const Instant& a, const Instant& b) { return a.utc <=> b.utc; }
};

/// Parses YYYY-MM-DDTHH:MM[:SS](Z|+HH:MM|-HH:MM). An explicit designator is
/// required. Throws StructuralError on malformed input.
Instant parse_instant(std::string_view text);
std::string format_instant(const Instant& instant);

Instant shifted(const Instant& instant, std::chrono::seconds delta);

/// Local calendar date of the instant in its own offset.
std::chrono::sys_days local_date(const Instant& instant);

/// Instant at local HH:MM on the same local date, same offset.
Instant at_local_time(const Instant& reference, std::chrono::minutes time_of_day);

/// Parses "HH:MM" into minutes after midnight. Throws ConfigError.
std::chrono::minutes parse_clock(std::string_view text);
std::string format_clock(std::chrono::minutes time_of_day);

/// Parses YYYY-MM-DD.
std::chrono::sys_days parse_date(std::string_view text);
std::string format_date(std::chrono::sys_days day);

} // namespace earstudy
