#include <doctest.h>

#include <cmath>

#include "hearth/device_sim.hpp"
#include "hearth/error.hpp"
#include "support.hpp"

using namespace hearth;
using nlohmann::json;
using test::code_of;

TEST_CASE("free drift follows the closed-form first-order response")
{
    DeviceSimulator sim(test::home());
    const double a = 30.0, t0 = 22.0, alpha = 0.1;
    sim.set_ambient("Temperature", a);
    for (int n = 1; n <= 60; ++n) {
        sim.step(1.0, 60 * n);
        double expected = a + (t0 - a) * std::pow(1 - alpha, n);
        CAPTURE(n);
        CHECK(*sim.value("Study", "Temperature") == doctest::Approx(expected).epsilon(1e-12));
    }
    // humidity has its own rate
    CHECK(*sim.value("Garden", "Humidity") == doctest::Approx(40.0));
}

TEST_CASE("an internal loop with enough authority lands on its setpoint")
{
    DeviceSimulator sim(test::home());
    sim.set_ambient("Temperature", 30);
    sim.set_value("BedRoom", "Temperature", 30);
    sim.dispatch(DeviceCommand{"AC_Joe", SetpointPayload{22.0}, 0});

    // full output cools by 1 per minute against the drift, so the room
    // follows 20 + 10 * 0.9^n until it reaches 22 and then holds there
    int reached = -1;
    for (int n = 1; n <= 60; ++n) {
        sim.step(1.0, 60 * n);
        double v = *sim.value("BedRoom", "Temperature");
        double free = 20 + 10 * std::pow(0.9, n);
        if (reached < 0) {
            if (free > 22)
                CHECK(v == doctest::Approx(free));
            else
                reached = n;
        }
        if (reached > 0)
            CHECK(v == doctest::Approx(22.0));
    }
    CHECK(reached == 16);
    CHECK(sim.device("AC_Joe").output == doctest::Approx(0.8));
}

TEST_CASE("internal loop output is clamped to [0, 1]")
{
    VirtualDevice d{*test::home().device("AC_Joe")};
    CHECK(internal_loop_step(d, 30, 30, 0.1, 1) == 0.0); // no setpoint
    d.setpoint = 22;
    CHECK(internal_loop_step(d, 30, 30, 0.1, 1) == 1.0);
    CHECK(internal_loop_step(d, 18, 18, 0.1, 1) == 0.0);
    CHECK(internal_loop_step(d, 22, 30, 0.1, 1) == doctest::Approx(0.8));
}

TEST_CASE("bang-bang keeps its output inside the band")
{
    VirtualDevice heater{*test::home().device("Heater_Kitchen")};
    CHECK(code_of([&] { external_loop_step(heater, 3); }) == ErrorCode::NoBandSet);
    heater.band = Band{5, 6};
    CHECK(external_loop_step(heater, 4.9) == 1.0);
    heater.output = 1.0;
    CHECK(external_loop_step(heater, 5.5) == 1.0);
    CHECK(external_loop_step(heater, 6.1) == 0.0);
    heater.output = 0.0;
    CHECK(external_loop_step(heater, 5.5) == 0.0);

    VirtualDevice shutters{*test::home().device("Shutters_Living")};
    shutters.band = Band{21, 23};
    CHECK(external_loop_step(shutters, 24) == 1.0);
    CHECK(external_loop_step(shutters, 20) == 0.0);
}

TEST_CASE("a heater holds a cold room near its band")
{
    DeviceSimulator sim(test::home());
    sim.set_ambient("Temperature", 0);
    sim.set_value("Kitchen", "Temperature", 0);
    sim.dispatch(DeviceCommand{"Heater_Kitchen", RangePayload{5.0, 6.0}, 0});
    for (int n = 1; n <= 300; ++n)
        sim.step(1.0, 60 * n);
    double v = *sim.value("Kitchen", "Temperature");
    CHECK(v > 4.0);
    CHECK(v < 7.0);
    CHECK(sim.energy() > 0.0);
}

TEST_CASE("request/ack adapter round trip")
{
    RequestAckAdapter a;
    for (const CommandPayload& p : std::vector<CommandPayload>{SwitchPayload{"ON"}, SetpointPayload{21.5},
                                                               RangePayload{5, 6}}) {
        DeviceCommand c{"AC_Joe", p, 120};
        auto wire = a.encode(c, 9, "BedRoom");
        auto [back, seq] = a.decode(wire);
        CHECK(back == c);
        CHECK(seq == 9);
    }
    CHECK(json::parse(a.encode(DeviceCommand{"AC_Joe", SetpointPayload{22}, 0}, 1, ""))["op"] == "setpoint");
    CHECK(code_of([&] { a.decode("{nope"); }) == ErrorCode::AdapterError);
    CHECK(code_of([&] { a.decode(R"({"device":"x","op":"fly","value":1,"seq":1})"); }) == ErrorCode::AdapterError);
    Ack ack{4, true, json{{"x", 1}}};
    CHECK(a.decode_ack(a.encode_ack(ack)) == ack);
}

TEST_CASE("publish/subscribe adapter addresses topics")
{
    PubSubAdapter a;
    DeviceCommand c{"Irrigation", RangePayload{30, 40}, 0};
    auto wire = a.encode(c, 3, "Garden");
    CHECK(json::parse(wire)["topic"] == "home/Garden/Irrigation/set");
    CHECK(a.decode(wire).first == c);
    CHECK(code_of([&] { a.decode(R"({"topic":"elsewhere","payload":{}})"); }) == ErrorCode::AdapterError);

    SensorReading r{"hum_garden", 41.5, "percent", 600};
    CHECK(PubSubAdapter::decode_reading(PubSubAdapter::encode_reading(r, "Garden")).value == 41.5);

    AdapterRegistry reg;
    CHECK(reg.get("pubsub").id() == "pubsub");
    CHECK(code_of([&] { reg.get("zigbee"); }) == ErrorCode::AdapterError);
}

TEST_CASE("dispatch goes through the wire and checks payloads")
{
    DeviceSimulator sim(test::home());
    CHECK(sim.device("FrontDoor").switch_state == "CLOSE");
    CHECK(sim.device("Light_Bed").switch_state == "OFF");

    auto ack = sim.dispatch(DeviceCommand{"Light_Bed", SwitchPayload{"on"}, 0});
    CHECK(ack.ok);
    CHECK(ack.state["switch"] == "ON");
    CHECK(sim.wire_log().size() == 2);

    CHECK(code_of([&] { sim.dispatch(DeviceCommand{"AC_Joe", SwitchPayload{"ON"}, 0}); }) ==
          ErrorCode::PayloadMismatch);
    CHECK(code_of([&] { sim.dispatch(DeviceCommand{"Light_Bed", SetpointPayload{1}, 0}); }) ==
          ErrorCode::PayloadMismatch);
    CHECK(code_of([&] { sim.dispatch(DeviceCommand{"Light_Bed", SwitchPayload{"PURPLE"}, 0}); }) ==
          ErrorCode::PayloadMismatch);
    CHECK(code_of([&] { sim.dispatch(DeviceCommand{"Heater_Kitchen", RangePayload{6, 5}, 0}); }) ==
          ErrorCode::PayloadMismatch);
    CHECK(code_of([&] { sim.dispatch(DeviceCommand{"Toaster", SwitchPayload{"ON"}, 0}); }) ==
          ErrorCode::UnknownDevice);
}

TEST_CASE("sensors report every room quantity; noise is seeded")
{
    DeviceSimulator quiet(test::home());
    auto readings = quiet.step(1.0, 60);
    CHECK(readings.size() == test::home().sensors.size());
    for (const auto& r : readings)
        CHECK(r.t == 60);

    DeviceSimulator a(test::home(), 42, 0.5), b(test::home(), 42, 0.5), c(test::home(), 43, 0.5);
    auto ra = a.step(1.0, 60), rb = b.step(1.0, 60), rc = c.step(1.0, 60);
    CHECK(ra[0].value == rb[0].value);
    CHECK(ra[0].value != rc[0].value);
}
