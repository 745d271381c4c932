#include "earstudy/timeutil.h"

#include "earstudy/errors.h"

#include <charconv>
#include <cstdio>

namespace earstudy {

namespace {

int digits(std::string_view text, std::size_t pos, std::size_t count, std::string_view whole) {
    if (pos + count > text.size()) {
        throw StructuralError("malformed timestamp '" + std::string(whole) + "'");
    }
    int value = 0;
    for (std::size_t i = pos; i < pos + count; ++i) {
        const char c = text[i];
        if (c < '0' || c > '9') {
            throw StructuralError("malformed timestamp '" + std::string(whole) + "'");
        }
        value = value * 10 + (c - '0');
    }
    return value;
}

void expect(std::string_view text, std::size_t pos, char c, std::string_view whole) {
    if (pos >= text.size() || text[pos] != c) {
        throw StructuralError("malformed timestamp '" + std::string(whole) + "'");
    }
}

std::chrono::sys_days checked_date(int y, int m, int d, std::string_view whole) {
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) {
        throw StructuralError("invalid calendar date in '" + std::string(whole) + "'");
    }
    return sys_days{ymd};
}

} // namespace

std::chrono::sys_days parse_date(std::string_view text) {
    if (text.size() != 10) {
        throw StructuralError("malformed date '" + std::string(text) + "' (expected YYYY-MM-DD)");
    }
    const int y = digits(text, 0, 4, text);
    expect(text, 4, '-', text);
    const int m = digits(text, 5, 2, text);
    expect(text, 7, '-', text);
    const int d = digits(text, 8, 2, text);
    return checked_date(y, m, d, text);
}

Instant parse_instant(std::string_view text) {
    using namespace std::chrono;
    const std::string_view whole = text;
    const sys_days date = parse_date(text.substr(0, std::min<std::size_t>(10, text.size())));
    if (text.size() < 16 || (text[10] != 'T' && text[10] != ' ')) {
        throw StructuralError("malformed timestamp '" + std::string(whole) + "'");
    }
    const int hh = digits(text, 11, 2, whole);
    expect(text, 13, ':', whole);
    const int mm = digits(text, 14, 2, whole);
    std::size_t pos = 16;
    int ss = 0;
    if (pos < text.size() && text[pos] == ':') {
        ss = digits(text, pos + 1, 2, whole);
        pos += 3;
    }
    if (hh > 23 || mm > 59 || ss > 60) {
        throw StructuralError("invalid time of day in '" + std::string(whole) + "'");
    }
    if (pos >= text.size()) {
        throw StructuralError("timestamp '" + std::string(whole) + "' lacks a timezone designator");
    }
    minutes offset{0};
    if (text[pos] == 'Z') {
        ++pos;
    } else if (text[pos] == '+' || text[pos] == '-') {
        const int sign = text[pos] == '-' ? -1 : 1;
        const int oh = digits(text, pos + 1, 2, whole);
        expect(text, pos + 3, ':', whole);
        const int om = digits(text, pos + 4, 2, whole);
        offset = minutes{sign * (oh * 60 + om)};
        pos += 6;
    } else {
        throw StructuralError("timestamp '" + std::string(whole) + "' lacks a timezone designator");
    }
    if (pos != text.size()) {
        throw StructuralError("trailing characters in timestamp '" + std::string(whole) + "'");
    }
    const auto local = sys_seconds{date} + hours{hh} + minutes{mm} + seconds{ss};
    return {local - offset, offset};
}

std::string format_instant(const Instant& instant) {
    using namespace std::chrono;
    const auto local = instant.utc + instant.offset;
    const sys_days day = floor<days>(local);
    const year_month_day ymd{day};
    const hh_mm_ss<seconds> tod{local - day};
    const long off = instant.offset.count();
    const long aoff = off < 0 ? -off : off;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02ld:%02ld:%02ld%c%02ld:%02ld",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()), static_cast<long>(tod.hours().count()),
                  static_cast<long>(tod.minutes().count()), static_cast<long>(tod.seconds().count()),
                  off < 0 ? '-' : '+', aoff / 60, aoff % 60);
    return buf;
}

Instant shifted(const Instant& instant, std::chrono::seconds delta) {
    return {instant.utc + delta, instant.offset};
}

std::chrono::sys_days local_date(const Instant& instant) {
    return std::chrono::floor<std::chrono::days>(instant.utc + instant.offset);
}

Instant at_local_time(const Instant& reference, std::chrono::minutes time_of_day) {
    const auto local = std::chrono::sys_seconds{local_date(reference)} + time_of_day;
    return {local - reference.offset, reference.offset};
}

std::chrono::minutes parse_clock(std::string_view text) {
    if (text.size() != 5 || text[2] != ':') {
        throw ConfigError("malformed clock time '" + std::string(text) + "' (expected HH:MM)");
    }
    int hh = 0;
    int mm = 0;
    try {
        hh = digits(text, 0, 2, text);
        mm = digits(text, 3, 2, text);
    } catch (const StructuralError&) {
        throw ConfigError("malformed clock time '" + std::string(text) + "' (expected HH:MM)");
    }
    if (hh > 23 || mm > 59) {
        throw ConfigError("clock time out of range '" + std::string(text) + "'");
    }
    return std::chrono::minutes{hh * 60 + mm};
}

std::string format_clock(std::chrono::minutes time_of_day) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%02ld:%02ld", static_cast<long>(time_of_day.count() / 60),
                  static_cast<long>(time_of_day.count() % 60));
    return buf;
}

std::string format_date(std::chrono::sys_days day) {
    const std::chrono::year_month_day ymd{day};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

} // namespace earstudy
