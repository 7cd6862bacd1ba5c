#include "hearth/calendar.hpp"

#include <chrono>
#include <cstdio>

#include "hearth/error.hpp"

namespace hearth {

namespace {

namespace chr = std::chrono;

constexpr SimTime kDay = 86400;

SimTime floor_div(SimTime a, SimTime b)
{
    SimTime q = a / b;
    return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

chr::sys_days day_of(SimTime t)
{
    return chr::sys_days{chr::days{floor_div(t, kDay)}};
}

} // namespace

std::string_view to_string(Period p)
{
    switch (p) {
    case Period::Morning: return "Morning";
    case Period::Afternoon: return "Afternoon";
    case Period::Evening: return "Evening";
    case Period::Night: return "Night";
    }
    return "?";
}

std::string_view to_string(DayType d)
{
    switch (d) {
    case DayType::Weekday: return "Weekday";
    case DayType::Weekend: return "Weekend";
    case DayType::Holiday: return "Holiday";
    }
    return "?";
}

std::string_view to_string(Season s)
{
    switch (s) {
    case Season::Winter: return "Winter";
    case Season::Spring: return "Spring";
    case Season::Summer: return "Summer";
    case Season::Autumn: return "Autumn";
    }
    return "?";
}

SimTime parse_iso_time(std::string_view text)
{
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    std::string buf(text);
    int n = std::sscanf(buf.c_str(), "%d-%d-%dT%d:%d:%d", &y, &mo, &d, &h, &mi, &s);
    if (n != 3 && n != 5 && n != 6)
        throw Error(ErrorCode::ConfigError, "malformed timestamp '" + buf + "'");
    chr::year_month_day ymd{chr::year{y}, chr::month{static_cast<unsigned>(mo)},
                            chr::day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 59)
        throw Error(ErrorCode::ConfigError, "timestamp out of range '" + buf + "'");
    SimTime days = chr::sys_days{ymd}.time_since_epoch().count();
    return days * kDay + h * 3600 + mi * 60 + s;
}

std::string format_iso_time(SimTime t)
{
    auto date = civil_date(t);
    SimTime rem = t - floor_div(t, kDay) * kDay;
    char out[32];
    std::snprintf(out, sizeof out, "%04d-%02d-%02dT%02d:%02d:%02d", date.year, date.month, date.day,
                  static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                  static_cast<int>(rem % 60));
    return out;
}

CivilDate civil_date(SimTime t)
{
    chr::year_month_day ymd{day_of(t)};
    return {static_cast<int>(ymd.year()), static_cast<int>(static_cast<unsigned>(ymd.month())),
            static_cast<int>(static_cast<unsigned>(ymd.day()))};
}

int minute_of_day(SimTime t)
{
    return static_cast<int>((t - floor_div(t, kDay) * kDay) / 60);
}

int weekday(SimTime t)
{
    return static_cast<int>(chr::weekday{day_of(t)}.c_encoding());
}

CivilDate easter_sunday(int year)
{
    // anonymous Gregorian algorithm (Meeus/Jones/Butcher)
    int a = year % 19;
    int b = year / 100;
    int c = year % 100;
    int d = b / 4;
    int e = b % 4;
    int f = (b + 8) / 25;
    int g = (b - f + 1) / 3;
    int h = (19 * a + b - d - g + 15) % 30;
    int i = c / 4;
    int k = c % 4;
    int l = (32 + 2 * e + 2 * i - h - k) % 7;
    int m = (a + 11 * h + 22 * l) / 451;
    int month = (h + l - 7 * m + 114) / 31;
    int day = (h + l - 7 * m + 114) % 31 + 1;
    return {year, month, day};
}

Period period_of(int minute)
{
    if (minute >= 6 * 60 && minute < 12 * 60)
        return Period::Morning;
    if (minute >= 12 * 60 && minute < 18 * 60)
        return Period::Afternoon;
    if (minute >= 18 * 60 && minute < 22 * 60)
        return Period::Evening;
    return Period::Night;
}

Season season_of(int month, bool southern)
{
    static constexpr Season north[12] = {
        Season::Winter, Season::Winter, Season::Spring, Season::Spring,
        Season::Spring, Season::Summer, Season::Summer, Season::Summer,
        Season::Autumn, Season::Autumn, Season::Autumn, Season::Winter,
    };
    Season s = north[(month - 1) % 12];
    if (!southern)
        return s;
    switch (s) {
    case Season::Winter: return Season::Summer;
    case Season::Summer: return Season::Winter;
    case Season::Spring: return Season::Autumn;
    case Season::Autumn: return Season::Spring;
    }
    return s;
}

TimeContext make_time_context(SimTime t, const CalendarConfig& calendar)
{
    TimeContext tc;
    tc.clock = t;
    tc.minute = minute_of_day(t);
    auto date = civil_date(t);
    tc.month = date.month;
    int wd = weekday(t);
    tc.weekend = wd == 0 || wd == 6;
    char iso[16];
    std::snprintf(iso, sizeof iso, "%04d-%02d-%02d", date.year, date.month, date.day);
    tc.holiday = calendar.holidays.count(iso) > 0;
    tc.xmas = date.month == 12 && date.day == 25;
    tc.easter = easter_sunday(date.year) == date;
    tc.season = season_of(date.month, calendar.southern_hemisphere);
    return tc;
}

std::optional<bool> time_keyword_holds(std::string_view kw, const TimeContext& tc)
{
    auto is = [&](std::string_view name) { return iequals(kw, name); };
    if (is("Always") || is("Today"))
        return true;
    if (is("Tomorrow"))
        return false;
    if (is("AM"))
        return tc.minute < 12 * 60;
    if (is("PM"))
        return tc.minute >= 12 * 60;
    for (auto p : {Period::Morning, Period::Afternoon, Period::Evening, Period::Night})
        if (is(to_string(p)))
            return tc.period() == p;
    for (auto s : {Season::Winter, Season::Spring, Season::Summer, Season::Autumn})
        if (is(to_string(s)))
            return tc.season == s;
    if (is("Weekend"))
        return tc.weekend;
    if (is("Holiday"))
        return tc.holiday;
    if (is("Xmas"))
        return tc.xmas;
    if (is("Easter"))
        return tc.easter;
    return std::nullopt;
}

} // namespace hearth
