#include "hearth/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include "hearth/error.hpp"

namespace hearth {

using nlohmann::json;

Scenario Scenario::from_json(const json& j)
{
    Scenario s;
    try {
        s.seed = j.value("seed", std::uint64_t{0});
        s.tick_seconds = j.value("tick_seconds", SimTime{60});
        s.duration = j.at("duration_seconds").get<SimTime>();
        auto start = j.value("start", json());
        if (start.is_string())
            s.start = parse_iso_time(start.get<std::string>());
        else if (start.is_number())
            s.start = start.get<SimTime>();
        s.noise_sigma = j.value("noise_sigma", 0.0);
        for (const auto& e : j.value("events", json::array())) {
            ScenarioEvent ev;
            ev.t = e.at("t").get<SimTime>();
            ev.type = e.at("type").get<std::string>();
            ev.data = e;
            ev.data.erase("t");
            ev.data.erase("type");
            s.events.push_back(std::move(ev));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("scenario: ") + e.what());
    }
    if (s.tick_seconds <= 0)
        throw Error(ErrorCode::ConfigError, "scenario: tick_seconds must be positive");
    if (!std::is_sorted(s.events.begin(), s.events.end(),
                        [](const ScenarioEvent& a, const ScenarioEvent& b) { return a.t < b.t; }))
        throw Error(ErrorCode::ConfigError, "scenario: events are not sorted by time");
    return s;
}

Scenario Scenario::from_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::Io, "cannot read '" + path + "'");
    try {
        return from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ConfigError, path + ": " + e.what());
    }
}

json Scenario::to_json() const
{
    json list = json::array();
    for (const auto& e : events) {
        json j = e.data;
        j["t"] = e.t;
        j["type"] = e.type;
        list.push_back(j);
    }
    return json{{"seed", seed},
                {"tick_seconds", tick_seconds},
                {"duration_seconds", duration},
                {"start", format_iso_time(start)},
                {"noise_sigma", noise_sigma},
                {"events", list}};
}

json RunReport::to_json() const
{
    json ticks_json = json::array();
    for (const auto& t : ticks)
        ticks_json.push_back(t.to_json());
    return json{{"ticks", ticks.size()},
                {"requests", requests},
                {"commands", commands},
                {"notifications", notifications},
                {"failed_events", failed_events},
                {"trace", ticks_json}};
}

EngineOptions options_for(const Scenario& s, EngineOptions base)
{
    base.start = s.start;
    base.tick_seconds = s.tick_seconds;
    base.seed = s.seed;
    base.noise_sigma = s.noise_sigma;
    return base;
}

namespace {

std::string login(Engine& engine, const json& d)
{
    Credentials c{d.at("user").get<std::string>(), d.value("secret", std::string()), "scenario", std::nullopt};
    return engine.login(c).encode();
}

json apply_override(Engine& engine, const json& d, json entry)
{
    auto as = login(engine, d);
    OverrideRequest req;
    req.state = d.at("state").get<std::string>();
    if (d.contains("room"))
        req.scope = Scope{Scope::Kind::Room, d.at("room").get<std::string>()};
    std::optional<double> value;
    if (d.contains("value") && d.at("value").is_string()) {
        req.directive = SetDirective{d.at("value").get<std::string>()};
    } else if (d.contains("value")) {
        value = d.at("value").get<double>();
        req.directive = KeepDirective{KeepBand{value, value}};
    } else {
        KeepBand band;
        if (d.contains("lo"))
            band.lo = d.at("lo").get<double>();
        if (d.contains("hi"))
            band.hi = d.at("hi").get<double>();
        req.directive = KeepDirective{band};
    }
    std::string acs;
    try {
        acs = engine.authorize(as, req.state, AclAction::Set, value).encode();
    } catch (const Error& e) {
        // every refusal by the access control service rejects the override
        if (e.code() != ErrorCode::AclDenied && e.code() != ErrorCode::ValueDenied)
            throw;
        entry["ok"] = false;
        entry["error"] = to_string(ErrorCode::AclDenied);
        entry["acl"] = to_string(e.code());
        entry["message"] = e.what();
        return entry;
    }
    auto out = engine.submit_override(req, acs);
    entry["ok"] = out.accepted;
    if (!out.accepted) {
        entry["error"] = out.reason ? std::string(to_string(*out.reason)) : std::string("Rejected");
        entry["message"] = out.message;
    } else {
        entry["override"] = out.request->provenance.rule_id;
    }
    return entry;
}

} // namespace

json apply_event(Engine& engine, const ScenarioEvent& ev)
{
    const auto& d = ev.data;
    json entry{{"t", ev.t}, {"type", ev.type}, {"ok", true}};
    try {
        if (ev.type == "ambient") {
            engine.set_ambient(d.at("quantity"), d.at("value").get<double>(), d.value("room", std::string()));
        } else if (ev.type == "value") {
            engine.set_value(d.at("quantity"), d.at("value").get<double>(), d.value("room", std::string()));
        } else if (ev.type == "presence") {
            engine.set_presence(d.at("resident"), d.value("room", std::string()));
        } else if (ev.type == "activity") {
            engine.set_activity(d.at("resident"), d.value("activity", std::string()));
        } else if (ev.type == "override") {
            return apply_override(engine, d, entry);
        } else if (ev.type == "proposal") {
            auto p = engine.propose(login(engine, d), d.at("text"));
            entry["proposal"] = p.id;
            entry["status"] = to_string(p.status);
            if (!p.reason.empty())
                entry["reason"] = p.reason;
            if (!p.escalated_to.empty())
                entry["escalated_to"] = p.escalated_to;
        } else if (ev.type == "resolve") {
            auto p = engine.resolve(d.at("proposal"), d.value("accept", true), login(engine, d));
            entry["proposal"] = p.id;
            entry["status"] = to_string(p.status);
        } else if (ev.type == "recommend") {
            json ids = json::array();
            for (const auto& r : engine.recommendations())
                ids.push_back(r.id);
            entry["recommendations"] = ids;
        } else if (ev.type == "verdict") {
            std::string id = d.value("recommendation", std::string());
            if (id.empty())
                for (const auto& r : engine.book().all())
                    if (r.pattern == d.value("pattern", std::string()))
                        id = r.id;
            entry["result"] = engine.verdict(id, d.value("accept", false), login(engine, d));
        } else {
            throw Error(ErrorCode::ConfigError, "unknown scenario event type '" + ev.type + "'");
        }
    } catch (const Error& e) {
        entry["ok"] = false;
        entry["error"] = to_string(e.code());
        entry["message"] = e.what();
    } catch (const json::exception& e) {
        entry["ok"] = false;
        entry["error"] = to_string(ErrorCode::ConfigError);
        entry["message"] = e.what();
    }
    return entry;
}

RunReport run_scenario(Engine& engine, const Scenario& s)
{
    RunReport report;
    std::size_t next = 0;
    for (std::uint64_t k = 0; k < s.ticks(); ++k) {
        SimTime rel = static_cast<SimTime>(k) * s.tick_seconds;
        while (next < s.events.size() && s.events[next].t <= rel) {
            auto entry = apply_event(engine, s.events[next++]);
            if (!entry.value("ok", true))
                ++report.failed_events;
            engine.note_event(std::move(entry));
        }
        auto tr = engine.tick();
        report.requests += tr.requests.size();
        report.commands += tr.commands.size();
        report.notifications += tr.notifications.size();
        report.ticks.push_back(std::move(tr));
    }
    return report;
}

Scenario learning_scenario(std::uint64_t seed, std::uint64_t ticks, double noise, const std::string& secret)
{
    Scenario s;
    s.seed = seed;
    s.tick_seconds = 60;
    s.duration = static_cast<SimTime>(ticks) * s.tick_seconds;
    s.start = parse_iso_time("2025-03-03T00:00");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::vector<std::string> places = {"BedRoom", "Kitchen", "LivingRoom", ""};

    std::string where = "BedRoom";
    std::optional<bool> light;
    for (std::uint64_t k = 0; k < ticks; ++k) {
        SimTime t = static_cast<SimTime>(k) * s.tick_seconds;
        if (k == 0 || u(rng) < 0.08) {
            if (k > 0) {
                auto next = where;
                while (next == where)
                    next = places[static_cast<std::size_t>(u(rng) * places.size()) % places.size()];
                where = next;
            }
            s.events.push_back(ScenarioEvent{t, "presence", json{{"resident", "Joe"}, {"room", where}}});
        }
        bool want = where == "BedRoom";
        if (u(rng) < noise)
            want = !want;
        if (light != want) {
            light = want;
            s.events.push_back(ScenarioEvent{
                t, "override",
                json{{"user", "joe"}, {"secret", secret}, {"state", "Light"}, {"value", want ? "ON" : "OFF"}}});
        }
    }
    return s;
}

} // namespace hearth
