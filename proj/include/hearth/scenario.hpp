#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hearth/engine.hpp"

namespace hearth {

/// One timed input. t is seconds after the scenario start; data holds the
/// type-specific fields.
struct ScenarioEvent {
    SimTime t = 0;
    std::string type; // ambient, value, presence, activity, override, proposal, resolve, recommend, verdict
    nlohmann::json data;
};

struct Scenario {
    std::uint64_t seed = 0;
    SimTime tick_seconds = 60;
    SimTime duration = 0; // seconds; ticks = duration / tick_seconds
    SimTime start = 0;
    double noise_sigma = 0.0;
    std::vector<ScenarioEvent> events; // sorted by t

    std::uint64_t ticks() const { return tick_seconds > 0 ? static_cast<std::uint64_t>(duration / tick_seconds) : 0; }

    /// Throws ConfigError for malformed documents or unsorted events.
    static Scenario from_json(const nlohmann::json& j);
    static Scenario from_file(const std::string& path);
    nlohmann::json to_json() const;
};

struct RunReport {
    std::vector<TickTrace> ticks;
    std::size_t requests = 0;
    std::size_t commands = 0;
    std::size_t notifications = 0;
    std::size_t failed_events = 0;

    nlohmann::json to_json() const;
};

/// Engine options with the scenario's clock, seed and noise filled in.
EngineOptions options_for(const Scenario& s, EngineOptions base = {});

/// Drives the engine through the scenario. Events due at or before a tick
/// are applied just before it; failures are recorded in that tick's trace
/// with their error code and do not stop the run.
RunReport run_scenario(Engine& engine, const Scenario& scenario);

/// Applies one event to the engine and returns its trace entry.
nlohmann::json apply_event(Engine& engine, const ScenarioEvent& event);

/// Synthetic trace for rule mining: Joe wanders between rooms and away,
/// and switches the bedroom light to match presence there, except that
/// with probability `noise` per tick the light goes the other way.
Scenario learning_scenario(std::uint64_t seed, std::uint64_t ticks = 2000, double noise = 0.05,
                           const std::string& secret = "joe-secret");

} // namespace hearth
