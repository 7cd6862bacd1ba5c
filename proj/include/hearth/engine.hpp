#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hearth/control_flow.hpp"
#include "hearth/device_sim.hpp"
#include "hearth/learning.hpp"
#include "hearth/notifications.hpp"
#include "hearth/recommend.hpp"
#include "hearth/repository.hpp"
#include "hearth/rule_admin.hpp"
#include "hearth/security.hpp"
#include "hearth/state_flow.hpp"

namespace hearth {

nlohmann::json concrete_state_to_json(const ConcreteState& s);
ConcreteState concrete_state_from_json(const nlohmann::json& j);
/// Inverse of StateRequest::to_json. Throws SchemaMismatch.
StateRequest state_request_from_json(const nlohmann::json& j);
nlohmann::json signed_request_to_json(const SignedRequest& r);
SignedRequest signed_request_from_json(const nlohmann::json& j);
nlohmann::json command_to_json(const DeviceCommand& c);

nlohmann::json diagnostic_json(const Diagnostic& d);
/// Loads and validates a script text; "ok" is true when no diagnostic was
/// raised.
nlohmann::json lint_script(const std::string& text, const HomeConfig& config);

/// Key of a service principal ("as", "acs", "engine"): the configured seed
/// material if any, else one derived from the run seed.
KeyPair principal_key(const std::string& principal, const SecurityConfig& sc, std::uint64_t seed);
TrustStore trust_of(const KeyPair& k);

/// What the local half reports back after applying one tick's requests.
struct ApplyReport {
    std::vector<std::string> commands; // describe() of each dispatched command
    std::vector<Diagnostic> diagnostics;
    std::map<std::string, std::string> actuators; // snapshot states
    std::size_t rejected = 0;                     // requests refused by the guard

    nlohmann::json to_json() const;
    static ApplyReport from_json(const nlohmann::json& j);
};

/// The half of the system that lives inside the home network: sensors,
/// devices, the concrete home manager and its request guard.
class ConcreteNode {
public:
    ConcreteNode(const HomeConfig& config, TrustStore engine_trust, AuditLog& audit, std::uint64_t seed,
                 double noise_sigma, SimTime start);

    /// Concrete state at t from the readings collected so far.
    ConcreteState observe(SimTime t);
    /// Guards, translates and dispatches the requests, then advances the
    /// physics to t + dt_seconds and collects the next readings.
    ApplyReport apply(const std::vector<SignedRequest>& requests, SimTime t, SimTime dt_seconds);

    void set_ambient(const std::string& quantity, double value, const std::string& room = "");
    void set_value(const std::string& room, const std::string& quantity, double value);
    nlohmann::json devices_json() const;
    const DeviceSimulator& simulator() const { return sim_; }
    const ConcreteHomeManager& manager() const { return manager_; }

private:
    const HomeConfig& config_;
    EventSchema schema_;
    ConcreteGuard guard_;
    SensorStateManager sensors_;
    DeviceSimulator sim_;
    ConcreteHomeManager manager_;
    mutable std::mutex mu_;
};

/// Transport between the generic half and the concrete half.
class ConcreteLink {
public:
    virtual ~ConcreteLink() = default;
    virtual ConcreteState observe(SimTime t) = 0;
    virtual ApplyReport apply(const std::vector<SignedRequest>& requests, SimTime t, SimTime dt_seconds) = 0;
    virtual void set_ambient(const std::string& quantity, double value, const std::string& room) = 0;
    virtual void set_value(const std::string& room, const std::string& quantity, double value) = 0;
    virtual nlohmann::json devices_json() = 0;
};

/// In-process link.
class LocalLink : public ConcreteLink {
public:
    explicit LocalLink(ConcreteNode& node) : node_(node) {}
    ConcreteState observe(SimTime t) override { return node_.observe(t); }
    ApplyReport apply(const std::vector<SignedRequest>& requests, SimTime t, SimTime dt) override
    {
        return node_.apply(requests, t, dt);
    }
    void set_ambient(const std::string& quantity, double value, const std::string& room) override
    {
        node_.set_ambient(quantity, value, room);
    }
    void set_value(const std::string& room, const std::string& quantity, double value) override
    {
        node_.set_value(room, quantity, value);
    }
    nlohmann::json devices_json() override { return node_.devices_json(); }

private:
    ConcreteNode& node_;
};

struct EngineOptions {
    SimTime start = 0;
    SimTime tick_seconds = 60;
    std::uint64_t seed = 0;
    double noise_sigma = 0.0;
    std::string repository_path;    // empty keeps the repository in memory
    std::string notifications_path;
    std::string proposals_path;
    std::string audit_path;
    bool learn_online = true;
    RecommendOptions recommend;
};

struct TickTrace {
    std::uint64_t tick = 0;
    SimTime t = 0;
    std::vector<nlohmann::json> requests;
    std::vector<std::string> commands;
    std::vector<nlohmann::json> diagnostics;
    std::vector<nlohmann::json> notifications;
    std::vector<nlohmann::json> events; // scenario and API inputs handled before the tick
    std::optional<std::uint64_t> swapped_version;
    std::size_t rejected = 0;

    nlohmann::json to_json() const;
};

/// The generic half plus the services around it: authentication, access
/// control, rule administration, overrides, notifications, the repository
/// and the learner. All public methods are safe to call from several
/// threads; mutations reach the rules only at tick boundaries.
class Engine {
public:
    /// Without a link the engine builds and owns a local concrete node.
    Engine(HomeConfig config, SecurityConfig security, PolicyConfig policy, const RuleScript& script,
           EngineOptions options, std::unique_ptr<ConcreteLink> link = nullptr);
    ~Engine();
    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    /// Runs one tick at now() and advances the clock.
    TickTrace tick();

    // inputs; resident and room names are resolved against the config
    void set_presence(const std::string& resident, const std::string& room); // "" for away
    void set_activity(const std::string& resident, const std::string& activity); // "" for none
    void set_ambient(const std::string& quantity, double value, const std::string& room = "");
    /// Sets the simulated value itself, in one room or all rooms holding it.
    void set_value(const std::string& quantity, double value, const std::string& room = "");

    // service calls, each under the engine lock
    Ticket login(const Credentials& c);
    Ticket authorize(const std::string& as_ticket_wire, const std::string& state, AclAction action,
                     std::optional<double> value);
    OverrideOutcome submit_override(const OverrideRequest& request, const std::string& acs_ticket_wire);
    RuleProposal propose(const std::string& as_ticket_wire, const std::string& text);
    RuleProposal resolve(const std::string& proposal_id, bool accept, const std::string& as_ticket_wire);
    /// Rescores the repository and forwards new recommendations to the rule
    /// administrator as recommend-only proposals.
    std::vector<Recommendation> recommendations();
    /// accept promotes the rule as a proposal of the verdict's author.
    nlohmann::json verdict(const std::string& recommendation_id, bool accept, const std::string& as_ticket_wire);

    // reads
    nlohmann::json state_json() const;
    nlohmann::json devices_json();
    nlohmann::json status_json() const;
    nlohmann::json lint(const std::string& text) const;

    SimTime now() const;
    std::uint64_t tick_index() const;
    const HomeConfig& config() const { return config_; }
    const EventSchema& schema() const { return schema_; }
    Repository& repository() { return repo_; }
    NotificationSink& notifications() { return sink_; }
    AuditLog& audit() { return audit_; }
    ProposalLog& proposal_log() { return proposal_log_; }
    RuleAdministrator& admin() { return admin_; }
    RecommendationBook& book() { return book_; }
    const BayesNet& learner() const { return net_; }
    const ActiveScript& active_script() const { return active_; }
    const KeyPair& engine_key() const { return engine_key_; }
    ConcreteNode* local_node() { return node_.get(); }
    /// Notes an input that arrived between ticks; it shows in the next trace.
    void note_event(nlohmann::json event);

private:
    std::string learner_ticket();

    HomeConfig config_;
    SecurityConfig security_;
    EngineOptions options_;
    EventSchema schema_;

    AuditLog audit_;
    KeyPair as_key_;
    KeyPair acs_key_;
    KeyPair engine_key_;
    TrustStore as_trust_;
    TrustStore acs_trust_;
    ReplayCache replay_;
    AuthService auth_;
    AccessControlService acs_;

    NotificationSink sink_;
    ProposalLog proposal_log_;
    ScriptSwapSlot slot_;
    RuleAdministrator admin_;
    OverrideManager overrides_;

    std::unique_ptr<ConcreteNode> node_;
    std::unique_ptr<ConcreteLink> link_;
    Repository repo_;
    BayesNet net_;
    RecommendationBook book_;
    std::map<std::string, std::string> forwarded_; // recommendation -> proposal

    mutable std::recursive_mutex mu_;
    ActiveScript active_;
    std::map<std::string, std::string> presence_;
    std::map<std::string, std::string> activity_;
    std::uint64_t tick_ = 0;
    std::optional<GenericState> last_generic_;
    std::optional<std::uint64_t> last_swap_tick_;
    std::vector<nlohmann::json> pending_events_;
    std::string learner_secret_;
};

} // namespace hearth
