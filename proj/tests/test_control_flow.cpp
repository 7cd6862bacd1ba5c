#include <doctest.h>

#include <algorithm>

#include "hearth/control_flow.hpp"
#include "hearth/error.hpp"
#include "support.hpp"

using namespace hearth;
using test::code_of;

namespace {

// Kleene logic over {0, 1/2, 1}: AND is min, OR is max, NOT is 1 - x.
double as_number(Truth t)
{
    return t == Truth::False ? 0.0 : t == Truth::True ? 1.0 : 0.5;
}

const SimTime kSummerMorning = parse_iso_time("2025-07-07T07:00");
const SimTime kWinterNight = parse_iso_time("2025-01-15T23:00");

GenericState state_at(SimTime t, std::map<std::string, std::string> presence = {},
                      std::map<std::string, std::string> activity = {}, ConcreteState c = {})
{
    c.clock = t;
    return build_generic_state(c, presence, activity, t, test::home());
}

ConcreteState with_temperature(const std::string& room, double v)
{
    ConcreteState c;
    c.rooms[room]["Temperature"] = QuantityState{v, "celsius", 0};
    return c;
}

/// Rules in file order, each at its owner's depth in the shipped tree.
ActiveScript active(const std::string& text)
{
    auto policy = test::policy();
    ActiveScript out;
    for (const auto& r : test::script(text).rules)
        out.rules.push_back(ScriptRule{r, policy.hierarchy.depth(r.owner), false, ""});
    return out;
}

const StateRequest* find(const TickResult& r, const std::string& variable, const std::string& room)
{
    for (const auto& q : r.requests)
        if (q.variable == variable && q.rooms == std::vector<std::string>{room})
            return &q;
    return nullptr;
}

Truth eval(const std::string& condition, const GenericState& g)
{
    auto p = parse_rule("IF " + condition + " THEN NOTIFY Joe", test::home());
    return evaluate_truth(p.rule.condition, g, test::home());
}

} // namespace

TEST_CASE("three-valued connectives match min/max/complement")
{
    const Truth all[] = {Truth::False, Truth::Unknown, Truth::True};
    for (auto a : all) {
        CHECK(as_number(truth_not(a)) == 1.0 - as_number(a));
        for (auto b : all) {
            CHECK(as_number(truth_and(a, b)) == std::min(as_number(a), as_number(b)));
            CHECK(as_number(truth_or(a, b)) == std::max(as_number(a), as_number(b)));
        }
    }
}

TEST_CASE("conditions over presence, activity, time and values")
{
    auto g = state_at(kSummerMorning, {{"Joe", "BedRoom"}, {"Mary", "Kitchen"}}, {{"Joe", "Music"}},
                      with_temperature("BedRoom", 27));
    CHECK(eval("Joe IN Home AND Summer AND Morning", g) == Truth::True);
    CHECK(eval("Joe IN Kitchen", g) == Truth::False);
    CHECK(eval("Mary IN Mary ROOM", g) == Truth::False);
    CHECK(eval("Joe IN Joe ROOM", g) == Truth::True);
    CHECK(eval("Anyone IN Kitchen", g) == Truth::True);
    CHECK(eval("AllTenants IN Home", g) == Truth::False);
    CHECK(eval("Joe ACTIVITY IS Music", g) == Truth::True);
    CHECK(eval("Bob ACTIVITY IS Music", g) == Truth::False);
    CHECK(eval("TemperatureVAL IN BedRoom ABOVE 25", g) == Truth::True);
    CHECK(eval("TemperatureVAL IN BedRoom EQUAL 27", g) == Truth::True);
    CHECK(eval("TemperatureVAL IN BedRoom BELOW 25", g) == Truth::False);
    CHECK(eval("AT 7AM", g) == Truth::True);
    CHECK(eval("AT 7:01AM", g) == Truth::False);

    // a missing reading is unknown, and Kleene logic keeps it local
    CHECK(eval("TemperatureVAL IN Study ABOVE 25", g) == Truth::Unknown);
    CHECK(eval("TemperatureVAL IN Study ABOVE 25 OR Morning", g) == Truth::True);
    CHECK(eval("TemperatureVAL IN Study ABOVE 25 AND Night", g) == Truth::False);
    CHECK(eval("NOT TemperatureVAL IN Study ABOVE 25", g) == Truth::Unknown);

    std::vector<Diagnostic> d;
    auto p = parse_rule("IF TemperatureVAL IN Study ABOVE 25 THEN SET Light ON", test::home(), "r1");
    CHECK_FALSE(evaluate_condition(p.rule.condition, g, test::home(), d, "r1"));
    REQUIRE(d.size() == 1);
    CHECK(d[0].code == "UnknownOperand");
    CHECK(d[0].rule_id == "r1");
}

TEST_CASE("EQUAL is a half-open unit window")
{
    CHECK(compare_value(CompareOp::Equal, 24.5, 25));
    CHECK(compare_value(CompareOp::Equal, 25.49, 25));
    CHECK_FALSE(compare_value(CompareOp::Equal, 25.5, 25));
    CHECK_FALSE(compare_value(CompareOp::Above, 25, 25));
    CHECK_FALSE(compare_value(CompareOp::Below, 25, 25));
}

TEST_CASE("scope resolution")
{
    const auto& h = test::home();
    CHECK(resolve_scope(Scope{Scope::Kind::ResidentRoom, "Joe"}, "TemperatureKEEP", h) ==
          std::vector<std::string>{"BedRoom"});
    auto served = resolve_scope(Scope::home(), "TemperatureKEEP", h);
    std::sort(served.begin(), served.end());
    CHECK(served == std::vector<std::string>{"BedRoom", "Kitchen", "LivingRoom", "Study"});
    CHECK(resolve_scope(Scope::home(), "", h).size() == h.rooms.size());
    CHECK(resolve_scope(Scope{Scope::Kind::ResidentRoom, "Carla"}, "LightSET", h).empty());
}

TEST_CASE("run_tick: compatible bands merge under the higher-priority owner")
{
    auto script = active("h1@mary: IF Always THEN KEEP Home Temperature ABOVE 5\n"
                         "j1@joe: IF (Joe IN HOME AND SUMMER AND MORNING) THEN KEEP Joe ROOM_TEMPERATURE BETWEEN 21 23\n");
    auto r = run_tick(script, state_at(kSummerMorning, {{"Joe", "BedRoom"}}), test::home());
    CHECK(r.requests.size() == 4);
    const auto* bed = find(r, "TemperatureKEEP", "BedRoom");
    REQUIRE(bed);
    CHECK(bed->provenance.rule_id == "h1");
    CHECK(bed->provenance.merged == std::vector<std::string>{"j1"});
    CHECK(std::get<KeepDirective>(bed->directive).band == KeepBand{21.0, 23.0});
    const auto* kitchen = find(r, "TemperatureKEEP", "Kitchen");
    REQUIRE(kitchen);
    CHECK(std::get<KeepDirective>(kitchen->directive).band == KeepBand{5.0, std::nullopt});

    // away: only the house default remains
    auto away = run_tick(script, state_at(kSummerMorning), test::home());
    CHECK(std::get<KeepDirective>(find(away, "TemperatureKEEP", "BedRoom")->directive).band ==
          KeepBand{5.0, std::nullopt});
}

TEST_CASE("run_tick: incompatible requests keep the shallower owner")
{
    auto script = active("b1@joe: IF Night THEN SET Light IN BedRoom OFF\n"
                         "a1@admin: IF Night THEN SET Light IN BedRoom ON\n"
                         "n1@joe: IF Night THEN NOTIFY Joe\n");
    auto r = run_tick(script, state_at(kWinterNight), test::home());
    REQUIRE(r.requests.size() == 2);
    const auto* light = find(r, "LightSET", "BedRoom");
    REQUIRE(light);
    CHECK(light->provenance.rule_id == "a1");
    CHECK(std::get<SetDirective>(light->directive).value == "ON");
    CHECK(std::holds_alternative<NotifyDirective>(r.requests.back().directive));
    auto superseded = std::count_if(r.diagnostics.begin(), r.diagnostics.end(), [](const Diagnostic& d) {
        return d.code == "RequestSuperseded" && d.rule_id == "b1";
    });
    CHECK(superseded == 1);

    // equal priority: script order decides
    auto tie = active("x1@joe: IF Night THEN SET Light IN BedRoom OFF\n"
                      "x2@bob: IF Night THEN SET Light IN BedRoom ON\n");
    auto t = run_tick(tie, state_at(kWinterNight), test::home());
    CHECK(find(t, "LightSET", "BedRoom")->provenance.rule_id == "x1");
}

TEST_CASE("run_tick: overrides pin their target")
{
    auto script = active("h1@mary: IF Always THEN KEEP Home Temperature ABOVE 5\n");
    StateRequest ovr{Scope{Scope::Kind::Room, "BedRoom"}, {"BedRoom"}, "TemperatureKEEP",
                     KeepDirective{KeepBand{7.0, 7.0}},
                     RequestProvenance{"ovr-1", "joe", kOverridePriority, 1, 0, true, {}}};
    auto r = run_tick(script, state_at(kWinterNight), test::home(), {ovr});
    const auto* bed = find(r, "TemperatureKEEP", "BedRoom");
    REQUIRE(bed);
    CHECK(bed->provenance.override_request);
    CHECK(bed->provenance.merged.empty());
    CHECK(std::get<KeepDirective>(bed->directive).band == KeepBand{7.0, 7.0});
    CHECK(find(r, "TemperatureKEEP", "Study")->provenance.rule_id == "h1");
}

TEST_CASE("dormant rules do not run")
{
    auto script = active("a1@admin: IF Night THEN SET Light IN BedRoom ON\n");
    script.rules[0].dormant = true;
    CHECK(run_tick(script, state_at(kWinterNight), test::home()).requests.empty());
}

namespace {

StateRequest keep(const std::string& room, std::optional<double> lo, std::optional<double> hi)
{
    return StateRequest{Scope{Scope::Kind::Room, room}, {room}, "TemperatureKEEP", KeepDirective{KeepBand{lo, hi}},
                        RequestProvenance{"r", "mary", 1, 0, 0, false, {}}};
}

} // namespace

TEST_CASE("translation picks devices by direction and cost")
{
    const auto& h = test::home();
    auto joe = translate(keep("BedRoom", 21, 23), h, {}, 10);
    REQUIRE(joe.size() == 1);
    CHECK(joe[0] == DeviceCommand{"AC_Joe", SetpointPayload{22.0}, 10});

    // a heater answers a lower bound; a cooler does not
    auto kitchen = translate(keep("Kitchen", 5, std::nullopt), h, {}, 0);
    REQUIRE(kitchen.size() == 1);
    CHECK(kitchen[0] == DeviceCommand{"Heater_Kitchen", RangePayload{5.0, 6.0}, 0});
    CHECK(translate(keep("LivingRoom", 5, std::nullopt), h, {}, 0).empty());
    CHECK(translate(keep("Bathroom", 21, 23), h, {}, 0).empty());

    auto living = translate(keep("LivingRoom", 21, 23), h, {}, 0);
    REQUIRE(living.size() == 1);
    CHECK(living[0].device == "Shutters_Living");
    auto both = translate(keep("LivingRoom", 21, 23), h, {}, 0, 2);
    REQUIRE(both.size() == 2);
    CHECK(both[1] == DeviceCommand{"AC_Living", SetpointPayload{22.0}, 0});

    // setpoints are clipped to the variable's domain
    auto hot = translate(keep("BedRoom", std::nullopt, 0.2), h, {}, 0);
    CHECK(std::get<SetpointPayload>(hot[0].payload).value == 0.0);
}

TEST_CASE("no command when the device already satisfies the request")
{
    const auto& h = test::home();
    ConcreteHomeManager m(h);
    auto c = with_temperature("BedRoom", 30);
    auto first = m.handle({keep("BedRoom", 21, 23)}, c, 0);
    REQUIRE(first.commands.size() == 1);
    m.acknowledge(first.commands[0]);
    for (SimTime t = 60; t < 600; t += 60)
        CHECK(m.handle({keep("BedRoom", 21, 23)}, c, t).commands.empty());
    // a narrower band that still holds 22 needs no new command either
    CHECK(m.handle({keep("BedRoom", 21.5, 22.5)}, c, 700).commands.empty());
    auto moved = m.handle({keep("BedRoom", 18, 20)}, c, 760);
    REQUIRE(moved.commands.size() == 1);
    CHECK(std::get<SetpointPayload>(moved.commands[0].payload).value == 19.0);

    StateRequest light{Scope{Scope::Kind::Room, "BedRoom"}, {"BedRoom"}, "LightSET", SetDirective{"ON"}, {}};
    auto on = m.handle({light}, c, 800);
    REQUIRE(on.commands.size() == 1);
    m.acknowledge(on.commands[0]);
    CHECK(m.handle({light}, c, 860).commands.empty());
}

TEST_CASE("cost cascade engages the next device after the patience runs out")
{
    const auto& h = test::home();
    ConcreteHomeManager m(h, 3);
    auto hot = with_temperature("LivingRoom", 30);
    std::vector<std::string> issued;
    for (int i = 0; i < 4; ++i) {
        auto out = m.handle({keep("LivingRoom", 21, 23)}, hot, 60 * i);
        for (const auto& c : out.commands) {
            issued.push_back(c.device);
            m.acknowledge(c);
        }
    }
    CHECK(issued == std::vector<std::string>{"Shutters_Living", "AC_Living"});
    CHECK(m.engaged("TemperatureKEEP", "LivingRoom") == 2);

    auto unserved = m.handle({keep("Bathroom", 21, 23)}, hot, 0);
    REQUIRE(unserved.diagnostics.size() == 1);
    CHECK(unserved.diagnostics[0].code == "NoServingDevice");
    CHECK(m.handle({keep("Bathroom", 21, 23)}, hot, 60).diagnostics.empty());
}

TEST_CASE("actuator states for snapshots")
{
    const auto& h = test::home();
    auto schema = EventSchema::from_config(h);
    ConcreteHomeManager m(h);
    m.acknowledge(DeviceCommand{"AC_Joe", SetpointPayload{22.0}, 0});
    m.acknowledge(DeviceCommand{"Light_Bed", SwitchPayload{"ON"}, 0});
    auto s = m.actuator_states(schema);
    CHECK(s.at(actuator_variable_name("TemperatureKEEP", "BedRoom")) == "2");
    CHECK(s.at(actuator_variable_name("LightSET", "BedRoom")) == "ON");
    CHECK(s.at(actuator_variable_name("LightSET", "Bathroom")) == "OFF");
    CHECK(s.at(actuator_variable_name("TemperatureKEEP", "Study")) == "off");
}

TEST_CASE("overrides: verification, ownership, queueing and hold")
{
    test::SecurityRig rig;
    const auto& h = test::home();
    OverrideManager m(h, rig.acs_trust, rig.replay,
                      [&](const std::string& s) { return rig.config.directory.roles_of(s); }, 3600);
    SimTime now = kWinterNight;
    OverrideRequest warm{"Temperature", std::nullopt, KeepDirective{KeepBand{7.0, std::nullopt}}};

    auto ok = m.submit(warm, rig.grant("joe", "Temperature", 7.0, now), now);
    REQUIRE(ok.accepted);
    CHECK(ok.request->rooms == std::vector<std::string>{"BedRoom"});
    CHECK(ok.request->provenance.priority == kOverridePriority);
    CHECK(m.queued() == 1);
    CHECK(m.active(now).empty());

    // the claim in the ticket must cover the requested value
    OverrideRequest cold{"Temperature", std::nullopt, KeepDirective{KeepBand{3.0, std::nullopt}}};
    auto denied = m.submit(cold, rig.grant("joe", "Temperature", 7.0, now), now);
    CHECK_FALSE(denied.accepted);
    CHECK(denied.reason == ErrorCode::AclDenied);
    CHECK(code_of([&] { rig.grant("joe", "Temperature", 3.0, now); }) == ErrorCode::ValueDenied);

    // a resident may not override someone else's room
    OverrideRequest study{"Temperature", Scope{Scope::Kind::Room, "Study"}, KeepDirective{KeepBand{7.0, std::nullopt}}};
    auto foreign = m.submit(study, rig.grant("joe", "Temperature", 7.0, now), now);
    CHECK(foreign.reason == ErrorCode::AclDenied);

    OverrideRequest device{"AC_Joe", std::nullopt, KeepDirective{KeepBand{7.0, std::nullopt}}};
    CHECK(m.submit(device, rig.grant("joe", "Temperature", 7.0, now), now).reason == ErrorCode::UnknownVariable);

    auto wire = rig.grant("joe", "Temperature", 7.0, now);
    CHECK(m.submit(warm, wire, now).accepted);
    auto replayed = m.submit(warm, wire, now);
    CHECK(replayed.reason == ErrorCode::TicketInvalid);
    CHECK(m.submit(warm, "garbage", now).reason == ErrorCode::TicketInvalid);
    CHECK(m.submit(warm, rig.login("joe", now).encode(), now).reason == ErrorCode::TicketInvalid);

    // two queued overrides on the same target: the later one stays
    auto fresh = m.activate(now + 60);
    CHECK(fresh.size() == 2);
    auto held = m.active(now + 60);
    REQUIRE(held.size() == 1);
    CHECK(held[0].provenance.rule_id == fresh.back().provenance.rule_id);
    CHECK(m.active(now + 60 + 3599).size() == 1);
    CHECK(m.active(now + 60 + 3600).empty());
}
