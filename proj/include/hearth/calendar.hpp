#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "hearth/home_model.hpp"

namespace hearth {

/// Simulated time is seconds since 1970-01-01T00:00:00, read as local
/// civil time (the simulation has no time zones).
using SimTime = std::int64_t;

enum class Period { Morning, Afternoon, Evening, Night };
enum class DayType { Weekday, Weekend, Holiday };
enum class Season { Winter, Spring, Summer, Autumn };

std::string_view to_string(Period p);
std::string_view to_string(DayType d);
std::string_view to_string(Season s);

struct CivilDate {
    int year = 1970;
    int month = 1; // 1..12
    int day = 1;   // 1..31

    bool operator==(const CivilDate&) const = default;
};

/// Parses "YYYY-MM-DDTHH:MM[:SS]" (or a bare date). Throws Error(ConfigError).
SimTime parse_iso_time(std::string_view text);
std::string format_iso_time(SimTime t);

CivilDate civil_date(SimTime t);
int minute_of_day(SimTime t);
/// 0 = Sunday .. 6 = Saturday.
int weekday(SimTime t);

/// Gregorian Easter Sunday.
CivilDate easter_sunday(int year);

Period period_of(int minute_of_day);
Season season_of(int month, bool southern_hemisphere);

/// Time facts the rule language can ask about. Built from a clock reading,
/// or assembled field by field when enumerating representative moments.
struct TimeContext {
    SimTime clock = 0;
    int minute = 0;            // minute of day, 0..1439
    int month = 1;
    bool weekend = false;      // Saturday or Sunday
    bool holiday = false;      // listed in the calendar config
    bool xmas = false;         // December 25
    bool easter = false;       // Easter Sunday
    Season season = Season::Winter;

    Period period() const { return period_of(minute); }
    DayType day_type() const
    {
        return holiday ? DayType::Holiday : weekend ? DayType::Weekend : DayType::Weekday;
    }
};

TimeContext make_time_context(SimTime t, const CalendarConfig& calendar);

/// Truth of a DateTimeEvent keyword. Keywords without defined semantics
/// (Minute, Hour, Day, Week, Month, Year) and unknown words yield nullopt.
std::optional<bool> time_keyword_holds(std::string_view keyword, const TimeContext& tc);

} // namespace hearth
