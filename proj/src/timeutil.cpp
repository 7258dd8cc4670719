#include "ghem/timeutil.hpp"

#include <cstdio>
#include <stdexcept>

namespace ghem {

// Howard Hinnant's days_from_civil algorithm.
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);             // [0, 399]
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;  // [0, 365]
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;            // [0, 146096]
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& year, int& month, int& day) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    month = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    year = static_cast<int>(y + (month <= 2));
}

std::int64_t hour_index(const CivilDateTime& dt) {
    return days_from_civil(dt.year, dt.month, dt.day) * 24 + dt.hour;
}

CivilDateTime civil_from_hour_index(std::int64_t hours) {
    std::int64_t days = hours / 24;
    int h = static_cast<int>(hours % 24);
    if (h < 0) {
        h += 24;
        days -= 1;
    }
    CivilDateTime dt;
    civil_from_days(days, dt.year, dt.month, dt.day);
    dt.hour = h;
    return dt;
}

std::int64_t parse_iso8601_hour(const std::string& s) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    const int n = std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%d", &y, &mo, &d, &h, &mi, &sec);
    if (n < 5 || mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59)
        throw std::invalid_argument("malformed ISO-8601 timestamp: '" + s + "'");
    if (mi != 0 || sec != 0)
        throw std::invalid_argument("timestamp not on an hour boundary: '" + s + "'");
    return hour_index({y, mo, d, h});
}

std::string format_iso8601_hour(std::int64_t hours) {
    const CivilDateTime dt = civil_from_hour_index(hours);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:00:00", dt.year, dt.month, dt.day, dt.hour);
    return buf;
}

int day_of_week(std::int64_t hour_idx) {
    std::int64_t days = hour_idx / 24;
    if (hour_idx % 24 < 0) days -= 1;
    // 1970-01-01 was a Thursday (weekday 3 with Monday = 0).
    std::int64_t wd = (days + 3) % 7;
    if (wd < 0) wd += 7;
    return static_cast<int>(wd);
}

int day_of_year(std::int64_t hour_idx) {
    const CivilDateTime dt = civil_from_hour_index(hour_idx);
    const std::int64_t jan1 = days_from_civil(dt.year, 1, 1);
    const std::int64_t today = days_from_civil(dt.year, dt.month, dt.day);
    return static_cast<int>(today - jan1) + 1;
}

bool is_leap_year(int year) {
    return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

}  // namespace ghem
