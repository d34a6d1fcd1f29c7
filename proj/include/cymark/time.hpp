#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "cymark/error.hpp"

namespace cymark {

// Minutes since 1970-01-01T00:00 (civil time, no timezone handling; the
// datasets this library targets are recorded in local time).
using Timestamp = std::int64_t;

constexpr int kMinutesPerDay = 1440;

// Cycle position of an abstract 1-based time index t for period p.
// Positions are 1-based: t = 1 maps to position 1, t = p+1 wraps to 1.
inline int cycle_position(std::int64_t t, int p) {
    if (t < 1) throw domain_error("cycle_position: time index must be >= 1");
    if (p < 1) throw domain_error("cycle_position: period must be >= 1");
    return static_cast<int>((t - 1) % p) + 1;
}

// 1-based minute of day: (0,0) -> 1, (8,0) -> 481, (23,59) -> 1440.
inline int minute_of_day(int hour, int minute) {
    if (hour < 0 || hour > 23) throw domain_error("minute_of_day: hour out of range");
    if (minute < 0 || minute > 59) throw domain_error("minute_of_day: minute out of range");
    return 60 * hour + minute + 1;
}

// Cycle position of an absolute minute timestamp. Day-aligned for any p
// dividing 1440: midnight is always position 1.
inline int cycle_position_of(Timestamp abs_minute, int p) {
    if (p < 1) throw domain_error("cycle_position_of: period must be >= 1");
    std::int64_t m = abs_minute % p;
    if (m < 0) m += p;
    return static_cast<int>(m) + 1;
}

// Days since 1970-01-01 from a civil date. Howard Hinnant's algorithm,
// valid far beyond any plausible dataset range.
inline std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
}

// 0 = Sunday ... 6 = Saturday.
inline int weekday_of_day(std::int64_t day) {
    std::int64_t w = (day + 4) % 7;
    if (w < 0) w += 7;
    return static_cast<int>(w);
}

inline bool is_weekday(std::int64_t day) {
    int w = weekday_of_day(day);
    return w >= 1 && w <= 5;
}

// Parses "YYYY-MM-DDTHH:MM" (optionally with ":SS", floored to the minute;
// a single space is accepted in place of 'T'). Empty optional on failure.
inline std::optional<Timestamp> parse_timestamp(std::string_view s) {
    auto digits = [&](size_t pos, size_t n, int& out) -> bool {
        if (pos + n > s.size()) return false;
        int v = 0;
        for (size_t k = 0; k < n; ++k) {
            char c = s[pos + k];
            if (c < '0' || c > '9') return false;
            v = v * 10 + (c - '0');
        }
        out = v;
        return true;
    };
    int y, mo, d, h, mi;
    if (!digits(0, 4, y) || !digits(5, 2, mo) || !digits(8, 2, d) ||
        !digits(11, 2, h) || !digits(14, 2, mi))
        return std::nullopt;
    if (s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':')
        return std::nullopt;
    if (s.size() > 16) {
        int sec;
        if (s[16] != ':' || !digits(17, 2, sec) || s.size() != 19) return std::nullopt;
        if (sec < 0 || sec > 59) return std::nullopt;
    } else if (s.size() != 16) {
        return std::nullopt;
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59) return std::nullopt;
    return days_from_civil(y, mo, d) * kMinutesPerDay + 60 * h + mi;
}

inline std::string format_timestamp(Timestamp ts) {
    std::int64_t day = ts / kMinutesPerDay;
    std::int64_t rem = ts % kMinutesPerDay;
    if (rem < 0) {
        rem += kMinutesPerDay;
        day -= 1;
    }
    int y, m, d;
    civil_from_days(day, y, m, d);
    char buf[20];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02lld:%02lld", y, m, d,
                  static_cast<long long>(rem / 60), static_cast<long long>(rem % 60));
    return buf;
}

}  // namespace cymark
