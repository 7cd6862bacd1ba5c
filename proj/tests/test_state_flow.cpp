#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "hearth/calendar.hpp"
#include "hearth/control_flow.hpp"
#include "hearth/error.hpp"
#include "hearth/repository.hpp"
#include "hearth/state_flow.hpp"
#include "support.hpp"

using namespace hearth;
using test::code_of;

namespace {

// Day-by-day walk from the epoch; independent of the closed-form civil date.
CivilDate walk_date(long days)
{
    auto leap = [](int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; };
    const int len[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    CivilDate d{1970, 1, 1};
    for (long i = 0; i < days; ++i) {
        int n = len[d.month - 1] + (d.month == 2 && leap(d.year));
        if (++d.day > n) {
            d.day = 1;
            if (++d.month > 12) {
                d.month = 1;
                ++d.year;
            }
        }
    }
    return d;
}

} // namespace

TEST_CASE("civil dates agree with a day-by-day walk")
{
    std::mt19937 rng(7);
    for (int i = 0; i < 200; ++i) {
        long days = static_cast<long>(rng() % 40000);
        SimTime t = days * 86400 + static_cast<SimTime>(rng() % 86400);
        CAPTURE(days);
        CHECK(civil_date(t) == walk_date(days));
        CHECK(weekday(t) == static_cast<int>((days + 4) % 7)); // 1970-01-01 was a Thursday
    }
    CHECK(parse_iso_time("1970-01-02T00:00") == 86400);
    CHECK(format_iso_time(parse_iso_time("2025-07-07T06:50")) == "2025-07-07T06:50:00");
    CHECK(code_of([] { parse_iso_time("July 7"); }) == ErrorCode::ConfigError);
}

TEST_CASE("Easter Sunday against published dates")
{
    CHECK(easter_sunday(2000) == CivilDate{2000, 4, 23});
    CHECK(easter_sunday(2019) == CivilDate{2019, 4, 21});
    CHECK(easter_sunday(2024) == CivilDate{2024, 3, 31});
    CHECK(easter_sunday(2025) == CivilDate{2025, 4, 20});
    CHECK(easter_sunday(2038) == CivilDate{2038, 4, 25});
}

TEST_CASE("period table and seasons")
{
    CHECK(period_of(5 * 60 + 59) == Period::Night);
    CHECK(period_of(6 * 60) == Period::Morning);
    CHECK(period_of(11 * 60 + 59) == Period::Morning);
    CHECK(period_of(12 * 60) == Period::Afternoon);
    CHECK(period_of(18 * 60) == Period::Evening);
    CHECK(period_of(22 * 60) == Period::Night);
    CHECK(period_of(0) == Period::Night);
    CHECK(season_of(7, false) == Season::Summer);
    CHECK(season_of(7, true) == Season::Winter);
    CHECK(season_of(3, false) == Season::Spring);
    CHECK(season_of(11, false) == Season::Autumn);
    CHECK(season_of(12, false) == Season::Winter);
}

TEST_CASE("time keywords")
{
    CalendarConfig cal;
    cal.holidays.insert("2024-12-26");
    auto tc = make_time_context(parse_iso_time("2024-12-25T07:30"), cal);
    CHECK(time_keyword_holds("Xmas", tc) == true);
    CHECK(time_keyword_holds("morning", tc) == true);
    CHECK(time_keyword_holds("AM", tc) == true);
    CHECK(time_keyword_holds("Winter", tc) == true);
    CHECK(time_keyword_holds("Holiday", tc) == false);
    CHECK(time_keyword_holds("Hour", tc) == std::nullopt);
    auto boxing = make_time_context(parse_iso_time("2024-12-26T12:00"), cal);
    CHECK(boxing.day_type() == DayType::Holiday);
    auto sat = make_time_context(parse_iso_time("2025-03-08T23:00"), cal);
    CHECK(sat.day_type() == DayType::Weekend);
    CHECK(time_keyword_holds("Night", sat) == true);
    CHECK(make_time_context(parse_iso_time("2025-04-20T10:00"), cal).easter);
}

TEST_CASE("sensor layer keeps the newest reading")
{
    SensorStateManager s(test::home());
    s.ingest({"temp_bed", 20.0, "celsius", 100});
    s.ingest({"temp_bed", 25.0, "celsius", 50});
    CHECK(s.latest("temp_bed")->value == 20.0);
    CHECK(s.discarded() == 1);
    CHECK(code_of([&] { s.ingest({"nope", 1.0, "", 1}); }) == ErrorCode::UnknownSensor);
}

TEST_CASE("concrete state averages a room's sensors and drops stale ones")
{
    SensorStateManager s(test::home());
    s.ingest({"temp_kitchen_1", 20.0, "celsius", 1000});
    s.ingest({"temp_kitchen_2", 23.0, "celsius", 1000});
    s.ingest({"temp_bed", 18.0, "celsius", 500});
    auto c = build_concrete_state(s, test::home(), 1000, 300);
    REQUIRE(c.get("Kitchen", "Temperature"));
    CHECK(*c.get("Kitchen", "Temperature")->value == doctest::Approx(21.5));
    const auto* bed = c.get("BedRoom", "Temperature");
    CHECK((bed == nullptr || !bed->known()));
}

TEST_CASE("generic state: presence, activity and errors")
{
    ConcreteState c;
    c.clock = parse_iso_time("2025-07-07T07:00");
    auto g = build_generic_state(c, {{"Joe", "BedRoom"}, {"Bob", ""}}, {{"Joe", "Music"}, {"Bob", "Sleeping"}},
                                 c.clock, test::home());
    CHECK(g.present("Joe"));
    CHECK_FALSE(g.present("Bob"));
    CHECK(g.room_of("Joe") == "BedRoom");
    CHECK(g.activity.at("Joe") == "Music");
    CHECK_FALSE(g.activity.count("Bob"));
    REQUIRE(g.diagnostics.size() == 1);
    CHECK(g.diagnostics[0].code == "ActivityWithoutPresence");
    CHECK(g.time.season == Season::Summer);

    CHECK(code_of([&] { build_generic_state(c, {{"Zed", "Kitchen"}}, {}, c.clock, test::home()); }) ==
          ErrorCode::UnknownResident);
    CHECK(code_of([&] { build_generic_state(c, {{"Joe", "Attic"}}, {}, c.clock, test::home()); }) ==
          ErrorCode::UnknownResident);
}

TEST_CASE("discretizer edges")
{
    Discretizer d{0, 40, 5};
    CHECK(d.bin(-3) == 0);
    CHECK(d.bin(7.99) == 0);
    CHECK(d.bin(8) == 1);
    CHECK(d.bin(30) == 3);
    CHECK(d.bin(40) == 4);
    CHECK(d.lower_edge(3) == 24);
    CHECK(d.upper_edge(3) == 32);
}

namespace {

EventRecord sample_record(SimTime t, bool joe_home)
{
    const auto& h = test::home();
    auto schema = EventSchema::from_config(h);
    SensorStateManager s(h);
    s.ingest({"temp_bed", 30.0, "celsius", t});
    auto c = build_concrete_state(s, h, t);
    std::map<std::string, std::string> presence;
    if (joe_home)
        presence["Joe"] = "BedRoom";
    auto g = build_generic_state(c, presence, {}, t, h);
    ConcreteHomeManager m(h);
    return snapshot_event(g, m.actuator_states(schema), schema, h);
}

} // namespace

TEST_CASE("snapshot fills every schema variable")
{
    const auto& h = test::home();
    auto schema = EventSchema::from_config(h);
    auto rec = sample_record(parse_iso_time("2025-07-07T07:00"), true);
    CHECK(rec.values.size() == schema.variables().size());
    CHECK(rec.values.at("Period") == "Morning");
    CHECK(rec.values.at("DayType") == "Weekday");
    CHECK(rec.values.at("Season") == "Summer");
    CHECK(rec.values.at("TemperatureVAL_BedRoom") == "3");
    CHECK(rec.values.at("TemperatureVAL_Study") == "unknown");
    CHECK(rec.values.at("Joe_IN_Home") == "true");
    CHECK(rec.values.at("Joe_IN_BedRoom") == "true");
    CHECK(rec.values.at("Joe_IN_Kitchen") == "false");
    CHECK(rec.values.at("Joe_ACTIVITY") == "none");
    CHECK(rec.values.at("LightSET_BedRoom") == "OFF");
    CHECK(rec.values.at("TemperatureKEEP_BedRoom") == "off");

    CHECK(EventSchema::from_json(schema.to_json()) == schema);
}

TEST_CASE("repository round trip and corruption tolerance")
{
    const auto& h = test::home();
    auto schema = EventSchema::from_config(h);
    std::string path = "test_state_flow_repo.jsonl";
    std::vector<EventRecord> written;
    {
        Repository repo(schema, path);
        for (int i = 0; i < 300; ++i) {
            written.push_back(sample_record(1000 + 60 * i, i % 3 == 0));
            repo.append(written.back());
            if (i == 10)
                repo.append_override(nlohmann::json{{"override", "ovr-1"}});
        }
        CHECK(code_of([&] { repo.append(written.front()); }) == ErrorCode::SchemaMismatch);
    }
    auto back = replay_repository_file(path);
    CHECK(back.schema == schema);
    CHECK(back.records == written);
    CHECK(back.skipped == 0);

    std::ifstream in(path);
    std::stringstream all;
    all << in.rdbuf();
    auto text = all.str();

    // one bad line in 300 is under the 1% tolerance
    std::string one_bad = text + "{not json\n";
    std::istringstream s1(one_bad);
    auto r1 = replay_repository(s1);
    CHECK(r1.records.size() == 300);
    CHECK(r1.skipped == 1);
    REQUIRE(r1.diagnostics.size() == 1);
    CHECK(r1.diagnostics[0].code == "CorruptLine");

    std::string many_bad = text;
    for (int i = 0; i < 10; ++i)
        many_bad += "{\"kind\":\"event\",\"t\":1,\"values\":{}}\n";
    std::istringstream s2(many_bad);
    CHECK(code_of([&] { replay_repository(s2); }) == ErrorCode::CorruptRepository);
    std::remove(path.c_str());
}
