#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "hearth/diagnostic.hpp"
#include "hearth/device_sim.hpp"
#include "hearth/error.hpp"
#include "hearth/home_model.hpp"
#include "hearth/rule_ast.hpp"
#include "hearth/security.hpp"
#include "hearth/state_flow.hpp"

namespace hearth {

// --- condition evaluation --------------------------------------------------------

enum class Truth { False, True, Unknown };

Truth truth_and(Truth a, Truth b);
Truth truth_or(Truth a, Truth b);
Truth truth_not(Truth a);

/// Kleene evaluation. Comparisons against missing or stale values, and time
/// keywords without semantics, are Unknown.
Truth evaluate_truth(const ConditionNode& node, const GenericState& state, const HomeConfig& config);

/// Collapses Unknown to false and appends an UnknownOperand diagnostic.
bool evaluate_condition(const ConditionNode& node, const GenericState& state, const HomeConfig& config,
                        std::vector<Diagnostic>& diagnostics, const std::string& rule_id = "");

/// EQUAL x holds for x - 0.5 <= v < x + 0.5.
bool compare_value(CompareOp op, double value, double threshold);

// --- state requests --------------------------------------------------------------

/// A closed band with optional ends; a missing end is unbounded.
struct KeepBand {
    std::optional<double> lo;
    std::optional<double> hi;

    static KeepBand from(const KeepTarget& t);
    bool contains(double v) const;
    bool contains(double a, double b) const;
    bool empty() const { return lo && hi && *lo > *hi; }
    KeepBand intersect(const KeepBand& o) const;
    std::string to_string() const;

    bool operator==(const KeepBand&) const = default;
};

struct SetDirective {
    std::string value;
    bool operator==(const SetDirective&) const = default;
};

struct KeepDirective {
    KeepBand band;
    bool operator==(const KeepDirective&) const = default;
};

struct NotifyDirective {
    Subject target;
    Severity severity = Severity::Notify;
    std::string message;
    bool operator==(const NotifyDirective&) const = default;
};

using Directive = std::variant<SetDirective, KeepDirective, NotifyDirective>;

struct RequestProvenance {
    std::string rule_id;      // rule id, or the override id
    std::string owner;        // rule owner or override subject
    int priority = 0;         // owner depth; overrides use -1
    std::size_t order = 0;    // script position
    std::size_t action = 0;   // action index within the rule
    bool override_request = false;
    std::vector<std::string> merged; // lower-priority rules folded into this request

    bool operator==(const RequestProvenance&) const = default;
};

/// Abstract decision of the generic layer. It names a state, never a device.
struct StateRequest {
    Scope scope;
    std::vector<std::string> rooms; // resolved rooms
    std::string variable;           // controlled variable; empty for notifications
    Directive directive;
    RequestProvenance provenance;

    nlohmann::json to_json() const;
    bool operator==(const StateRequest&) const = default;
};

constexpr int kOverridePriority = -1;

/// A rule in the running script with its owner's priority (tree depth).
struct ScriptRule {
    RuleAST rule;
    int priority = 0;
    bool dormant = false;       // superseded conflict loser kept for reactivation
    std::string superseded_by;  // winning rule id while dormant
};

struct ActiveScript {
    std::vector<ScriptRule> rules;
    std::uint64_t version = 0;
};

/// Rooms a scope denotes. Home resolves to every room served for the
/// variable (every room when variable is empty).
std::vector<std::string> resolve_scope(const Scope& scope, const std::string& variable, const HomeConfig& config);

struct TickResult {
    std::vector<StateRequest> requests; // one per (variable, room), then notifications
    std::vector<Diagnostic> diagnostics;
};

/// Evaluates every active rule against one snapshot. Per (variable, room)
/// the candidate with the smallest (priority, order) wins; compatible
/// lower-priority candidates (same Set value, intersecting Keep band) are
/// folded into it and incompatible ones dropped. Overrides pin their
/// (variable, room) and suppress rules there. Notifications always pass.
TickResult run_tick(const ActiveScript& script, const GenericState& state, const HomeConfig& config,
                    const std::vector<StateRequest>& overrides = {});

// --- concrete translation --------------------------------------------------------

/// What the concrete layer last commanded a device to do.
struct DeviceSettings {
    std::optional<std::string> switch_state;
    std::optional<double> setpoint;
    std::optional<Band> band;

    bool operator==(const DeviceSettings&) const = default;
};

constexpr double kOneSidedMargin = 1.0;

/// Devices in the room able to act on the request, cheapest first. Coolers
/// (negative effect) act on an upper bound only, heaters on a lower bound.
std::vector<const DeviceDescriptor*> eligible_devices(const StateRequest& request, const std::string& room,
                                                      const HomeConfig& config);

/// Commands for one resolved room. Devices already satisfying the request
/// get nothing. Only the first `engaged` eligible devices are addressed.
std::vector<DeviceCommand> translate_room(const StateRequest& request, const std::string& room,
                                          const HomeConfig& config,
                                          const std::map<std::string, DeviceSettings>& current, SimTime now,
                                          std::size_t engaged = 1);

/// translate_room over every resolved room. Notifications yield nothing.
std::vector<DeviceCommand> translate(const StateRequest& request, const HomeConfig& config,
                                     const std::map<std::string, DeviceSettings>& current, SimTime now,
                                     std::size_t engaged = 1);

constexpr int kDefaultPatience = 5;

/// Owns the device settings and the cost cascade. A further device is
/// engaged after `patience` consecutive ticks with the value outside band.
class ConcreteHomeManager {
public:
    explicit ConcreteHomeManager(const HomeConfig& config, int patience = kDefaultPatience);

    struct Outcome {
        std::vector<DeviceCommand> commands;
        std::vector<Diagnostic> diagnostics;
    };

    Outcome handle(const std::vector<StateRequest>& requests, const ConcreteState& state, SimTime now);

    /// Records a dispatched and acknowledged command.
    void acknowledge(const DeviceCommand& command);

    const std::map<std::string, DeviceSettings>& settings() const { return settings_; }
    std::size_t engaged(const std::string& variable, const std::string& room) const;

    /// Actuator states for repository snapshots, keyed by actuator_variable_name.
    std::map<std::string, std::string> actuator_states(const EventSchema& schema) const;

private:
    struct Cascade {
        KeepBand band;
        std::size_t engaged = 1;
        int outside = 0;
    };

    const HomeConfig& config_;
    int patience_;
    std::map<std::string, DeviceSettings> settings_;
    std::map<std::pair<std::string, std::string>, Cascade> cascades_;
    std::set<std::pair<std::string, std::string>> unserved_reported_;
};

// --- overrides -------------------------------------------------------------------

constexpr SimTime kDefaultOverrideHold = 3600;

struct OverrideRequest {
    std::string state;         // variable or quantity name ("Temperature", "LightSET")
    std::optional<Scope> scope; // defaults to the subject's own room
    std::variant<SetDirective, KeepDirective> directive;
};

struct OverrideOutcome {
    bool accepted = false;
    std::optional<ErrorCode> reason;
    std::string message;
    std::optional<StateRequest> request;
    SimTime until = 0;
    std::string subject;
};

using RoleLookup = std::function<std::vector<std::string>(const std::string&)>;

/// Manual override path. Requests are verified on submission, queued and
/// activated at the next tick boundary, then held for `hold` seconds.
class OverrideManager {
public:
    OverrideManager(const HomeConfig& config, const TrustStore& acs_trust, ReplayCache& replay, RoleLookup roles,
                    SimTime hold = kDefaultOverrideHold);

    /// ticket_wire is an ACS ticket. Errors: TicketInvalid, AclDenied, UnknownVariable.
    OverrideOutcome submit(const OverrideRequest& request, std::string_view ticket_wire, SimTime now);

    /// Moves queued overrides to active (tick boundary) and returns them.
    std::vector<StateRequest> activate(SimTime now);
    /// Active overrides, with expired ones removed.
    std::vector<StateRequest> active(SimTime now);
    std::size_t queued() const;

private:
    struct Held {
        StateRequest request;
        SimTime until = 0;
    };

    const HomeConfig& config_;
    const TrustStore& acs_trust_;
    ReplayCache& replay_;
    RoleLookup roles_;
    SimTime hold_;
    mutable std::mutex mu_;
    std::vector<Held> queue_;
    std::vector<Held> active_;
    std::uint64_t next_id_ = 0;
};

} // namespace hearth
