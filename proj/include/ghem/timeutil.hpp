#pragma once

#include <cstdint>
#include <string>

namespace ghem {

// Civil (proleptic Gregorian) date helpers. All series in this project are
// keyed by an hour index: whole hours since 1970-01-01T00:00 (no time zone,
// no DST; market and weather feeds are assumed to be in local standard time).
struct CivilDateTime {
    int year = 1970;
    int month = 1;  // 1..12
    int day = 1;    // 1..31
    int hour = 0;   // 0..23
};

std::int64_t days_from_civil(int year, int month, int day);
void civil_from_days(std::int64_t days, int& year, int& month, int& day);

std::int64_t hour_index(const CivilDateTime& dt);
CivilDateTime civil_from_hour_index(std::int64_t hours);

// Parses "YYYY-MM-DDTHH:MM[:SS]" (a trailing "Z" is tolerated and ignored).
// Throws std::invalid_argument on malformed input.
std::int64_t parse_iso8601_hour(const std::string& s);

// Formats an hour index as "YYYY-MM-DDTHH:00:00".
std::string format_iso8601_hour(std::int64_t hours);

// 0 = Monday .. 6 = Sunday.
int day_of_week(std::int64_t hour_idx);
int day_of_year(std::int64_t hour_idx);  // 1-based
bool is_leap_year(int year);

}  // namespace ghem
