#include "hearth/engine.hpp"

#include <algorithm>

#include "hearth/error.hpp"
#include "hearth/rule_parser.hpp"

namespace hearth {

using nlohmann::json;

// --- wire forms -----------------------------------------------------------------

json concrete_state_to_json(const ConcreteState& s)
{
    json rooms = json::object();
    for (const auto& [room, qs] : s.rooms) {
        json r = json::object();
        for (const auto& [q, st] : qs) {
            json e{{"units", st.units}, {"value", nullptr}, {"staleness", nullptr}};
            if (st.value)
                e["value"] = *st.value;
            if (st.staleness)
                e["staleness"] = *st.staleness;
            r[q] = e;
        }
        rooms[room] = r;
    }
    return json{{"clock", s.clock}, {"rooms", rooms}, {"meters", s.meters}};
}

ConcreteState concrete_state_from_json(const json& j)
{
    ConcreteState s;
    try {
        s.clock = j.at("clock").get<SimTime>();
        for (const auto& [room, qs] : j.at("rooms").items())
            for (const auto& [q, e] : qs.items()) {
                QuantityState st;
                st.units = e.value("units", std::string());
                if (e.contains("value") && !e.at("value").is_null())
                    st.value = e.at("value").get<double>();
                if (e.contains("staleness") && !e.at("staleness").is_null())
                    st.staleness = e.at("staleness").get<SimTime>();
                s.rooms[room][q] = st;
            }
        s.meters = j.at("meters").get<std::map<std::string, double>>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("concrete state: ") + e.what());
    }
    return s;
}

json diagnostic_json(const Diagnostic& d)
{
    json j{{"code", d.code}, {"severity", to_string(d.severity)}, {"subject", d.rule_id}, {"message", d.message}};
    if (d.offset)
        j["offset"] = *d.offset;
    return j;
}

namespace {

Scope::Kind scope_kind_from(const std::string& s)
{
    if (s == "room")
        return Scope::Kind::Room;
    if (s == "resident-room")
        return Scope::Kind::ResidentRoom;
    if (s == "home")
        return Scope::Kind::Home;
    throw Error(ErrorCode::SchemaMismatch, "unknown scope kind '" + s + "'");
}

Subject subject_from(const json& j)
{
    static const std::pair<const char*, Subject::Kind> kinds[] = {{"resident", Subject::Kind::Resident},
                                                                  {"role", Subject::Kind::Role},
                                                                  {"any", Subject::Kind::AnyResident},
                                                                  {"all", Subject::Kind::AllResidents}};
    auto k = j.at("kind").get<std::string>();
    for (const auto& [name, kind] : kinds)
        if (k == name)
            return Subject{kind, j.at("name").get<std::string>()};
    throw Error(ErrorCode::SchemaMismatch, "unknown subject kind '" + k + "'");
}

Diagnostic diagnostic_from(const json& j)
{
    Diagnostic d;
    d.code = j.at("code");
    auto sev = j.value("severity", std::string("Warning"));
    for (auto s : {DiagnosticSeverity::Info, DiagnosticSeverity::Warning, DiagnosticSeverity::Error})
        if (to_string(s) == sev)
            d.severity = s;
    d.rule_id = j.value("subject", std::string());
    d.message = j.value("message", std::string());
    if (j.contains("offset"))
        d.offset = j.at("offset").get<std::size_t>();
    return d;
}

} // namespace

StateRequest state_request_from_json(const json& j)
{
    StateRequest r;
    try {
        r.scope = Scope{scope_kind_from(j.at("scope").at("kind")), j.at("scope").at("name")};
        r.rooms = j.at("rooms").get<std::vector<std::string>>();
        r.variable = j.at("variable");
        const auto& d = j.at("directive");
        auto type = d.at("type").get<std::string>();
        if (type == "set") {
            r.directive = SetDirective{d.at("value")};
        } else if (type == "keep") {
            KeepBand band;
            if (!d.at("lo").is_null())
                band.lo = d.at("lo").get<double>();
            if (!d.at("hi").is_null())
                band.hi = d.at("hi").get<double>();
            r.directive = KeepDirective{band};
        } else if (type == "notify") {
            r.directive = NotifyDirective{subject_from(d.at("target")),
                                          d.at("severity") == "WARN" ? Severity::Warn : Severity::Notify,
                                          d.at("message")};
        } else {
            throw Error(ErrorCode::SchemaMismatch, "unknown directive '" + type + "'");
        }
        const auto& p = j.at("provenance");
        r.provenance.rule_id = p.at("rule");
        r.provenance.owner = p.at("owner");
        r.provenance.priority = p.at("priority");
        r.provenance.order = p.at("order");
        r.provenance.action = p.at("action");
        r.provenance.override_request = p.at("override");
        r.provenance.merged = p.at("merged").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("state request: ") + e.what());
    }
    return r;
}

json signed_request_to_json(const SignedRequest& r)
{
    return json{{"payload", r.payload}, {"issuer", r.issuer}, {"signature", r.signature}};
}

SignedRequest signed_request_from_json(const json& j)
{
    return SignedRequest{j.value("payload", std::string()), j.value("issuer", std::string()),
                         j.value("signature", std::string())};
}

json command_to_json(const DeviceCommand& c)
{
    json j{{"device", c.device}, {"issued_at", c.issued_at}, {"text", describe(c)}};
    if (const auto* s = std::get_if<SwitchPayload>(&c.payload))
        j["switch"] = s->value;
    else if (const auto* p = std::get_if<SetpointPayload>(&c.payload))
        j["setpoint"] = p->value;
    else if (const auto* r = std::get_if<RangePayload>(&c.payload))
        j["range"] = json::array({r->lo, r->hi});
    return j;
}

json ApplyReport::to_json() const
{
    json diags = json::array();
    for (const auto& d : diagnostics)
        diags.push_back(diagnostic_json(d));
    return json{{"commands", commands}, {"diagnostics", diags}, {"actuators", actuators}, {"rejected", rejected}};
}

ApplyReport ApplyReport::from_json(const json& j)
{
    ApplyReport r;
    try {
        r.commands = j.at("commands").get<std::vector<std::string>>();
        for (const auto& d : j.at("diagnostics"))
            r.diagnostics.push_back(diagnostic_from(d));
        r.actuators = j.at("actuators").get<std::map<std::string, std::string>>();
        r.rejected = j.at("rejected");
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("apply report: ") + e.what());
    }
    return r;
}

json TickTrace::to_json() const
{
    json j{{"tick", tick},
           {"t", t},
           {"time", format_iso_time(t)},
           {"requests", requests},
           {"commands", commands},
           {"diagnostics", diagnostics},
           {"notifications", notifications},
           {"events", events},
           {"rejected", rejected}};
    if (swapped_version)
        j["swapped_version"] = *swapped_version;
    return j;
}

// --- concrete node --------------------------------------------------------------

ConcreteNode::ConcreteNode(const HomeConfig& config, TrustStore engine_trust, AuditLog& audit, std::uint64_t seed,
                           double noise_sigma, SimTime start)
    : config_(config),
      schema_(EventSchema::from_config(config)),
      guard_(std::move(engine_trust), audit),
      sensors_(config),
      sim_(config, seed, noise_sigma),
      manager_(config)
{
    for (const auto& r : sim_.step(0.0, start))
        sensors_.ingest(r);
}

ConcreteState ConcreteNode::observe(SimTime t)
{
    std::lock_guard lock(mu_);
    return build_concrete_state(sensors_, config_, t);
}

ApplyReport ConcreteNode::apply(const std::vector<SignedRequest>& requests, SimTime t, SimTime dt)
{
    std::lock_guard lock(mu_);
    ApplyReport rep;
    std::vector<StateRequest> accepted;
    for (const auto& sr : requests) {
        auto f = guard_.check(sr, t);
        if (f != VerifyFailure::None) {
            ++rep.rejected;
            rep.diagnostics.push_back(Diagnostic{"RequestRejected", DiagnosticSeverity::Error, sr.issuer,
                                                 "internal request refused: " + std::string(to_string(f))});
            continue;
        }
        try {
            accepted.push_back(state_request_from_json(json::parse(sr.payload)));
        } catch (const std::exception& e) {
            ++rep.rejected;
            rep.diagnostics.push_back(
                Diagnostic{"RequestRejected", DiagnosticSeverity::Error, sr.issuer, e.what()});
        }
    }
    auto state = build_concrete_state(sensors_, config_, t);
    auto outcome = manager_.handle(accepted, state, t);
    rep.diagnostics.insert(rep.diagnostics.end(), outcome.diagnostics.begin(), outcome.diagnostics.end());
    for (const auto& cmd : outcome.commands) {
        try {
            auto ack = sim_.dispatch(cmd);
            if (ack.ok) {
                manager_.acknowledge(cmd);
                rep.commands.push_back(describe(cmd));
            } else {
                rep.diagnostics.push_back(Diagnostic{"CommandNotAcknowledged", DiagnosticSeverity::Warning,
                                                     cmd.device, describe(cmd)});
            }
        } catch (const Error& e) {
            rep.diagnostics.push_back(Diagnostic{std::string(to_string(e.code())), DiagnosticSeverity::Error,
                                                 cmd.device, e.what()});
        }
    }
    rep.actuators = manager_.actuator_states(schema_);
    for (const auto& r : sim_.step(static_cast<double>(dt) / 60.0, t + dt))
        sensors_.ingest(r);
    return rep;
}

void ConcreteNode::set_ambient(const std::string& quantity, double value, const std::string& room)
{
    std::lock_guard lock(mu_);
    if (room.empty())
        sim_.set_ambient(quantity, value);
    else
        sim_.set_ambient(room, quantity, value);
}

void ConcreteNode::set_value(const std::string& room, const std::string& quantity, double value)
{
    std::lock_guard lock(mu_);
    sim_.set_value(room, quantity, value);
}

json ConcreteNode::devices_json() const
{
    std::lock_guard lock(mu_);
    json out = json::array();
    for (const auto& [id, d] : sim_.devices())
        out.push_back(d.state_json());
    json rooms = json::array();
    for (const auto& [key, rq] : sim_.rooms())
        rooms.push_back(json{{"room", key.first}, {"quantity", key.second}, {"value", rq.value},
                             {"ambient", rq.ambient}});
    return json{{"devices", out}, {"physics", rooms}, {"energy", sim_.energy()}};
}

// --- engine ---------------------------------------------------------------------

namespace {

AuditLog make_audit(const std::string& path)
{
    if (path.empty())
        return AuditLog();
    return AuditLog(path);
}

NotificationSink make_sink(const std::string& path)
{
    if (path.empty())
        return NotificationSink();
    return NotificationSink(path);
}

ProposalLog make_proposal_log(const std::string& path)
{
    if (path.empty())
        return ProposalLog();
    return ProposalLog(path);
}

Repository make_repository(const EventSchema& schema, const std::string& path)
{
    if (path.empty())
        return Repository(schema);
    return Repository(schema, path);
}

} // namespace

json lint_script(const std::string& text, const HomeConfig& config)
{
    auto loaded = load_script(text, config);
    auto problems = validate_script(loaded.script.rules, config);
    json diags = json::array();
    for (const auto& d : loaded.diagnostics)
        diags.push_back(diagnostic_json(d));
    for (const auto& d : problems)
        diags.push_back(diagnostic_json(d));
    json rules = json::array();
    for (const auto& r : loaded.script.rules)
        rules.push_back(json{{"id", r.id}, {"owner", r.owner}, {"canonical", format_rule(r)}});
    return json{{"ok", diags.empty()}, {"diagnostics", diags}, {"rules", rules}};
}

KeyPair principal_key(const std::string& principal, const SecurityConfig& sc, std::uint64_t seed)
{
    auto scheme = make_scheme(sc.scheme);
    auto it = sc.key_seeds.find(principal);
    std::string material = it != sc.key_seeds.end() ? it->second : "hearth-" + principal + "-" + std::to_string(seed);
    return make_key_pair(principal, scheme, material);
}

TrustStore trust_of(const KeyPair& k)
{
    TrustStore t;
    t.trust(k);
    return t;
}

Engine::Engine(HomeConfig config, SecurityConfig security, PolicyConfig policy, const RuleScript& script,
               EngineOptions options, std::unique_ptr<ConcreteLink> link)
    : config_(std::move(config)),
      security_(std::move(security)),
      options_(std::move(options)),
      schema_(EventSchema::from_config(config_)),
      audit_(make_audit(options_.audit_path)),
      as_key_(principal_key("as", security_, options_.seed)),
      acs_key_(principal_key("acs", security_, options_.seed)),
      engine_key_(principal_key("engine", security_, options_.seed)),
      as_trust_(trust_of(as_key_)),
      acs_trust_(trust_of(acs_key_)),
      auth_(as_key_, security_.directory, audit_, counter_nonces("as"), security_.ttl),
      acs_(acs_key_, security_.acl, security_.directory, as_trust_, audit_, counter_nonces("acs"), security_.ttl),
      sink_(make_sink(options_.notifications_path)),
      proposal_log_(make_proposal_log(options_.proposals_path)),
      admin_(config_, std::move(policy), acs_, as_trust_, proposal_log_, slot_, &sink_),
      overrides_(config_, acs_trust_, replay_,
                 [this](const std::string& subject) { return security_.directory.roles_of(subject); }),
      link_(std::move(link)),
      repo_(make_repository(schema_, options_.repository_path)),
      net_(BayesNet::from_schema(schema_, options_.recommend.smoothing)),
      book_(options_.recommend)
{
    if (!link_) {
        node_ = std::make_unique<ConcreteNode>(config_, trust_of(engine_key_), audit_, options_.seed,
                                               options_.noise_sigma, options_.start);
        link_ = std::make_unique<LocalLink>(*node_);
    }
    learner_secret_ = "learner-" + engine_key_.scheme->name() + "-" + std::to_string(options_.seed);
    if (!security_.directory.find(kLearningOwner))
        security_.directory.add_user(kLearningOwner, learner_secret_, {"Learner"});
    admin_.load_script(script, 0);
}

Engine::~Engine() = default;

SimTime Engine::now() const
{
    std::lock_guard lock(mu_);
    return options_.start + static_cast<SimTime>(tick_) * options_.tick_seconds;
}

std::uint64_t Engine::tick_index() const
{
    std::lock_guard lock(mu_);
    return tick_;
}

void Engine::note_event(json event)
{
    std::lock_guard lock(mu_);
    pending_events_.push_back(std::move(event));
}

TickTrace Engine::tick()
{
    std::lock_guard lock(mu_);
    TickTrace tr;
    tr.tick = tick_;
    tr.t = now();
    tr.events = std::move(pending_events_);
    pending_events_.clear();

    // boundary: script swap, then overrides queued since the last tick
    auto receipt = slot_.apply(active_, tick_);
    if (receipt) {
        tr.swapped_version = receipt->version;
        last_swap_tick_ = tick_;
    }
    admin_.on_boundary(receipt, tick_);
    for (const auto& o : overrides_.activate(tr.t))
        repo_.append_override(json{{"t", tr.t}, {"tick", tick_}, {"request", o.to_json()}});
    auto held = overrides_.active(tr.t);

    auto concrete = link_->observe(tr.t);
    auto generic = build_generic_state(concrete, presence_, activity_, tr.t, config_);
    for (const auto& d : generic.diagnostics)
        tr.diagnostics.push_back(diagnostic_json(d));

    auto result = run_tick(active_, generic, config_, held);
    for (const auto& d : result.diagnostics)
        tr.diagnostics.push_back(diagnostic_json(d));
    std::vector<SignedRequest> signed_requests;
    for (const auto& r : result.requests) {
        tr.requests.push_back(r.to_json());
        if (!std::holds_alternative<NotifyDirective>(r.directive))
            signed_requests.push_back(sign_internal_request(r.to_json(), engine_key_));
    }
    auto report = link_->apply(signed_requests, tr.t, options_.tick_seconds);
    tr.commands = report.commands;
    tr.rejected = report.rejected;
    for (const auto& d : report.diagnostics)
        tr.diagnostics.push_back(diagnostic_json(d));

    for (const auto& n : sink_.deliver(result.requests, tr.t, config_))
        tr.notifications.push_back(n.to_json());

    auto record = snapshot_event(generic, report.actuators, schema_, config_);
    repo_.append(record);
    if (options_.learn_online)
        net_.observe(record);

    last_generic_ = std::move(generic);
    ++tick_;
    return tr;
}

void Engine::set_presence(const std::string& resident, const std::string& room)
{
    std::lock_guard lock(mu_);
    const auto* r = config_.resident(resident);
    if (!r)
        throw Error(ErrorCode::UnknownResident, "unknown resident '" + resident + "'");
    if (room.empty() || room == "away") {
        presence_.erase(r->name);
        return;
    }
    auto canonical = config_.room(room);
    if (!canonical)
        throw Error(ErrorCode::UnknownResident, "unknown room '" + room + "'");
    presence_[r->name] = *canonical;
}

void Engine::set_activity(const std::string& resident, const std::string& activity)
{
    std::lock_guard lock(mu_);
    const auto* r = config_.resident(resident);
    if (!r)
        throw Error(ErrorCode::UnknownResident, "unknown resident '" + resident + "'");
    if (activity.empty() || activity == "none") {
        activity_.erase(r->name);
        return;
    }
    auto canonical = config_.keywords.resolve_in(KeywordCategory::Activity, activity);
    if (!canonical)
        throw Error(ErrorCode::UnknownIdentifier, "unknown activity '" + activity + "'");
    activity_[r->name] = *canonical;
}

void Engine::set_ambient(const std::string& quantity, double value, const std::string& room)
{
    std::lock_guard lock(mu_);
    link_->set_ambient(quantity, value, room);
}

void Engine::set_value(const std::string& quantity, double value, const std::string& room)
{
    std::lock_guard lock(mu_);
    for (const auto& r : config_.rooms)
        if (room.empty() || r == room)
            link_->set_value(r, quantity, value);
}

Ticket Engine::login(const Credentials& c)
{
    std::lock_guard lock(mu_);
    return auth_.authenticate(c, now());
}

Ticket Engine::authorize(const std::string& wire, const std::string& state, AclAction action,
                         std::optional<double> value)
{
    std::lock_guard lock(mu_);
    auto t = Ticket::decode(wire);
    if (!t)
        throw Error(ErrorCode::TicketInvalid, "authentication ticket is malformed or altered");
    return acs_.authorize(*t, state, action, value, now());
}

OverrideOutcome Engine::submit_override(const OverrideRequest& request, const std::string& wire)
{
    std::lock_guard lock(mu_);
    return overrides_.submit(request, wire, now());
}

RuleProposal Engine::propose(const std::string& wire, const std::string& text)
{
    std::lock_guard lock(mu_);
    return admin_.propose(wire, text, now(), tick_);
}

RuleProposal Engine::resolve(const std::string& proposal_id, bool accept, const std::string& wire)
{
    std::lock_guard lock(mu_);
    return admin_.resolve(proposal_id, accept, wire, now(), tick_);
}

std::string Engine::learner_ticket()
{
    return auth_.authenticate(Credentials{kLearningOwner, learner_secret_, "engine", std::nullopt}, now()).encode();
}

std::vector<Recommendation> Engine::recommendations()
{
    std::lock_guard lock(mu_);
    auto proposed = book_.refresh(repo_.records(), schema_, config_);
    for (const auto& rec : proposed) {
        if (forwarded_.count(rec.id))
            continue;
        auto p = admin_.propose(learner_ticket(), rec.text, now(), tick_);
        forwarded_[rec.id] = p.id;
    }
    return proposed;
}

json Engine::verdict(const std::string& id, bool accept, const std::string& wire)
{
    std::lock_guard lock(mu_);
    auto v = verify_ticket(wire, std::nullopt, as_trust_, nullptr, now());
    if (!v.ok() || v.ticket->kind != "AS")
        throw Error(ErrorCode::TicketInvalid, "authentication ticket rejected");
    if (!accept) {
        auto rec = book_.reject(id);
        forwarded_.erase(id);
        return json{{"recommendation", rec.to_json()}, {"threshold", book_.threshold(rec.pattern)}};
    }
    auto rec = book_.promote(id);
    auto p = admin_.propose(wire, rec.text, now(), tick_);
    return json{{"recommendation", rec.to_json()}, {"proposal", p.to_json()}};
}

json Engine::state_json() const
{
    std::lock_guard lock(mu_);
    json j{{"tick", tick_}, {"time", format_iso_time(now())}, {"script_version", active_.version}};
    if (!last_generic_) {
        j["generic"] = nullptr;
        return j;
    }
    const auto& g = *last_generic_;
    json presence = json::object();
    for (const auto& r : config_.residents) {
        auto room = g.room_of(r.name);
        presence[r.name] = room ? json(*room) : json(nullptr);
    }
    j["generic"] = json{{"clock", g.time.clock},
                        {"time", format_iso_time(g.time.clock)},
                        {"period", to_string(g.time.period())},
                        {"day_type", to_string(g.time.day_type())},
                        {"season", to_string(g.time.season)},
                        {"presence", presence},
                        {"activity", g.activity},
                        {"concrete", concrete_state_to_json(g.concrete)}};
    return j;
}

json Engine::devices_json()
{
    std::lock_guard lock(mu_);
    return link_->devices_json();
}

json Engine::status_json() const
{
    std::lock_guard lock(mu_);
    json rules = json::array();
    RuleScript running;
    for (const auto& r : active_.rules) {
        rules.push_back(json{{"id", r.rule.id}, {"owner", r.rule.owner}, {"priority", r.priority},
                             {"dormant", r.dormant}, {"text", format_rule(r.rule)}});
        if (!r.dormant)
            running.rules.push_back(r.rule);
    }
    return json{{"tick", tick_},
                {"time", format_iso_time(now())},
                {"script_version", active_.version},
                {"script_hash", running.hash()},
                {"rules", rules},
                {"pending_proposals", admin_.pending().size()},
                {"last_swap_tick", last_swap_tick_ ? json(*last_swap_tick_) : json(nullptr)},
                {"records", repo_.records().size()}};
}

json Engine::lint(const std::string& text) const
{
    return lint_script(text, config_);
}

} // namespace hearth
