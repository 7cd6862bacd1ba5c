#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hearth/calendar.hpp"
#include "hearth/diagnostic.hpp"
#include "hearth/home_model.hpp"

namespace hearth {

// --- sensor layer: knows sensor ids only ------------------------------------

struct SensorReading {
    std::string sensor;
    double value = 0.0;
    std::string units;
    SimTime t = 0;
};

class SensorStateManager {
public:
    struct Latest {
        double value = 0.0;
        std::string units;
        SimTime t = 0;
    };

    explicit SensorStateManager(const HomeConfig& config);

    /// Throws Error(UnknownSensor). Readings older than the stored one are
    /// dropped and counted.
    void ingest(const SensorReading& reading);

    const std::map<std::string, Latest>& latest() const { return latest_; }
    std::optional<Latest> latest(const std::string& sensor) const;
    std::size_t discarded() const { return discarded_; }

private:
    std::map<std::string, bool> known_;
    std::map<std::string, Latest> latest_;
    std::size_t discarded_ = 0;
};

// --- concrete layer: rooms and quantities, no residents ---------------------

struct QuantityState {
    std::optional<double> value; // empty when no fresh reading exists
    std::string units;
    std::optional<SimTime> staleness; // seconds since the newest contributing reading

    bool known() const { return value.has_value(); }
    bool operator==(const QuantityState&) const = default;
};

struct ConcreteState {
    SimTime clock = 0;
    std::map<std::string, std::map<std::string, QuantityState>> rooms; // room -> quantity -> state
    std::map<std::string, double> meters;                              // quantity -> cumulative

    const QuantityState* get(const std::string& room, const std::string& quantity) const;
    bool operator==(const ConcreteState&) const = default;
};

constexpr SimTime kDefaultStaleAfter = 300;

/// Sensors of one quantity in one room are averaged. Readings older than
/// stale_after seconds are ignored.
ConcreteState build_concrete_state(const SensorStateManager& sensors, const HomeConfig& config,
                                   SimTime clock, SimTime stale_after = kDefaultStaleAfter);

// --- generic layer: the home as the rules see it ----------------------------

struct GenericState {
    TimeContext time;
    std::map<std::string, std::optional<std::string>> presence; // resident -> room, empty if away
    std::map<std::string, std::string> activity;                // resident -> activity
    ConcreteState concrete;
    std::vector<Diagnostic> diagnostics;

    bool present(const std::string& resident) const;
    std::optional<std::string> room_of(const std::string& resident) const;
};

/// presence maps resident -> room ("" or absent key for away); activity maps
/// resident -> activity keyword. Throws Error(UnknownResident) for residents
/// or rooms that are not configured. An activity for an absent resident is
/// dropped with an ActivityWithoutPresence diagnostic.
GenericState build_generic_state(const ConcreteState& concrete,
                                 const std::map<std::string, std::string>& presence,
                                 const std::map<std::string, std::string>& activity, SimTime clock,
                                 const HomeConfig& config);

// --- snapshots ---------------------------------------------------------------

/// One discrete variable of the repository schema.
struct SchemaVariable {
    enum class Role { Context, Sensor, Presence, Activity, Actuator };
    std::string name;
    Role role = Role::Context;
    std::vector<std::string> states;
    // for Sensor and Actuator variables
    std::string source;  // measured or controlled variable name
    std::string room;
    std::optional<ContinuousDomain> range;
    int bins = 0;

    bool operator==(const SchemaVariable&) const = default;
};

struct Discretizer {
    double min = 0.0;
    double max = 1.0;
    int bins = 5;

    int bin(double v) const;
    double lower_edge(int b) const;
    double upper_edge(int b) const;
};

class EventSchema {
public:
    static EventSchema from_config(const HomeConfig& config);

    const std::vector<SchemaVariable>& variables() const { return vars_; }
    const SchemaVariable* find(const std::string& name) const;
    void add(SchemaVariable v);

    nlohmann::json to_json() const;
    static EventSchema from_json(const nlohmann::json& j);
    bool operator==(const EventSchema& o) const { return vars_ == o.vars_; }

private:
    std::vector<SchemaVariable> vars_;
};

struct EventRecord {
    SimTime t = 0;
    std::map<std::string, std::string> values;

    bool operator==(const EventRecord&) const = default;
};

/// Name of the snapshot variable for an actuated (controlled variable, room).
std::string actuator_variable_name(const std::string& variable, const std::string& room);

/// actuators maps actuator_variable_name -> state ("ON", "off", bin index, ...).
/// Throws Error(SchemaMismatch) if a produced value is not a state of the
/// schema or a schema variable is left without a value.
EventRecord snapshot_event(const GenericState& generic, const std::map<std::string, std::string>& actuators,
                           const EventSchema& schema, const HomeConfig& config);

} // namespace hearth
