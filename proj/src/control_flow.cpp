#include "hearth/control_flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hearth/error.hpp"
#include "hearth/rule_parser.hpp"

namespace hearth {

using nlohmann::json;

// --- three-valued logic ----------------------------------------------------------

Truth truth_and(Truth a, Truth b)
{
    if (a == Truth::False || b == Truth::False)
        return Truth::False;
    if (a == Truth::Unknown || b == Truth::Unknown)
        return Truth::Unknown;
    return Truth::True;
}

Truth truth_or(Truth a, Truth b)
{
    if (a == Truth::True || b == Truth::True)
        return Truth::True;
    if (a == Truth::Unknown || b == Truth::Unknown)
        return Truth::Unknown;
    return Truth::False;
}

Truth truth_not(Truth a)
{
    if (a == Truth::Unknown)
        return a;
    return a == Truth::True ? Truth::False : Truth::True;
}

bool compare_value(CompareOp op, double v, double x)
{
    switch (op) {
    case CompareOp::Equal: return v >= x - 0.5 && v < x + 0.5;
    case CompareOp::Above: return v > x;
    case CompareOp::Below: return v < x;
    }
    return false;
}

namespace {

Truth of(bool b)
{
    return b ? Truth::True : Truth::False;
}

/// Applies pred to the residents a subject denotes, with the subject's
/// quantifier.
template <class Pred>
Truth quantify(const Subject& s, const HomeConfig& config, Pred pred)
{
    switch (s.kind) {
    case Subject::Kind::Resident: {
        const auto* r = config.resident(s.name);
        return r ? of(pred(*r)) : Truth::Unknown;
    }
    case Subject::Kind::Role:
        return of(std::any_of(config.residents.begin(), config.residents.end(),
                              [&](const auto& r) { return config.has_role(r, s.name) && pred(r); }));
    case Subject::Kind::AnyResident:
        return of(std::any_of(config.residents.begin(), config.residents.end(), pred));
    case Subject::Kind::AllResidents:
        return of(std::all_of(config.residents.begin(), config.residents.end(), pred));
    }
    return Truth::Unknown;
}

bool located(const std::optional<std::string>& room, const Scope& where, const HomeConfig& config)
{
    if (!room)
        return false;
    switch (where.kind) {
    case Scope::Kind::Home: return true;
    case Scope::Kind::Room: return iequals(*room, where.name);
    case Scope::Kind::ResidentRoom: {
        auto owned = config.owned_room(where.name);
        return owned && iequals(*room, *owned);
    }
    }
    return false;
}

struct Evaluator {
    const GenericState& state;
    const HomeConfig& config;

    Truth operator()(const Logical& l) const
    {
        if (l.op == LogicOp::Not)
            return l.children.empty() ? Truth::Unknown : truth_not(eval(l.children.front()));
        Truth acc = l.op == LogicOp::And ? Truth::True : Truth::False;
        for (const auto& c : l.children)
            acc = l.op == LogicOp::And ? truth_and(acc, eval(c)) : truth_or(acc, eval(c));
        return acc;
    }

    Truth operator()(const Presence& p) const
    {
        return quantify(p.subject, config,
                        [&](const ResidentDecl& r) { return located(state.room_of(r.name), p.location, config); });
    }

    Truth operator()(const ActivityAtom& a) const
    {
        return quantify(a.subject, config, [&](const ResidentDecl& r) {
            if (!state.present(r.name))
                return false;
            auto it = state.activity.find(r.name);
            return it != state.activity.end() && iequals(it->second, a.activity);
        });
    }

    Truth operator()(const TimeAtom& t) const
    {
        if (t.minute_of_day)
            return of(state.time.minute == *t.minute_of_day);
        if (t.keyword) {
            auto v = time_keyword_holds(*t.keyword, state.time);
            return v ? of(*v) : Truth::Unknown;
        }
        return Truth::Unknown;
    }

    Truth operator()(const Comparison& c) const
    {
        const auto* decl = config.variable(c.variable);
        if (!decl)
            return Truth::Unknown;
        const auto& q = decl->quantity;
        if (auto m = state.concrete.meters.find(q); m != state.concrete.meters.end())
            return of(compare_value(c.op, m->second, c.value));

        std::vector<std::string> rooms;
        Scope scope = c.scope.value_or(Scope::home());
        if (scope.kind == Scope::Kind::Room) {
            rooms.push_back(scope.name);
        } else if (scope.kind == Scope::Kind::ResidentRoom) {
            auto owned = config.owned_room(scope.name);
            if (!owned)
                return Truth::Unknown;
            rooms.push_back(*owned);
        } else {
            // an unscoped comparison asks whether any room satisfies it
            for (const auto& [room, quantities] : state.concrete.rooms)
                if (quantities.count(q))
                    rooms.push_back(room);
        }
        if (rooms.empty())
            return Truth::Unknown;
        Truth acc = Truth::False;
        for (const auto& room : rooms) {
            const auto* qs = state.concrete.get(room, q);
            Truth t = qs && qs->value ? of(compare_value(c.op, *qs->value, c.value)) : Truth::Unknown;
            acc = truth_or(acc, t);
        }
        return acc;
    }

    Truth eval(const ConditionNode& n) const { return std::visit(*this, n.node); }
};

} // namespace

Truth evaluate_truth(const ConditionNode& node, const GenericState& state, const HomeConfig& config)
{
    return Evaluator{state, config}.eval(node);
}

bool evaluate_condition(const ConditionNode& node, const GenericState& state, const HomeConfig& config,
                        std::vector<Diagnostic>& diagnostics, const std::string& rule_id)
{
    auto t = evaluate_truth(node, state, config);
    if (t == Truth::Unknown)
        diagnostics.push_back(Diagnostic{"UnknownOperand", DiagnosticSeverity::Warning, rule_id,
                                         "condition depends on an unknown value; treated as false", std::nullopt});
    return t == Truth::True;
}

// --- bands -----------------------------------------------------------------------

KeepBand KeepBand::from(const KeepTarget& t)
{
    switch (t.kind) {
    case KeepTarget::Kind::Between: return {t.lo, t.hi};
    case KeepTarget::Kind::Above: return {t.lo, std::nullopt};
    case KeepTarget::Kind::Below: return {std::nullopt, t.hi};
    }
    return {};
}

bool KeepBand::contains(double v) const
{
    return (!lo || v >= *lo) && (!hi || v <= *hi);
}

bool KeepBand::contains(double a, double b) const
{
    return contains(a) && contains(b);
}

KeepBand KeepBand::intersect(const KeepBand& o) const
{
    KeepBand r = *this;
    if (o.lo)
        r.lo = r.lo ? std::max(*r.lo, *o.lo) : *o.lo;
    if (o.hi)
        r.hi = r.hi ? std::min(*r.hi, *o.hi) : *o.hi;
    return r;
}

std::string KeepBand::to_string() const
{
    return "[" + (lo ? format_number(*lo) : std::string("-inf")) + ", " +
           (hi ? format_number(*hi) : std::string("inf")) + "]";
}

namespace {

std::string_view scope_kind(Scope::Kind k)
{
    switch (k) {
    case Scope::Kind::Home: return "home";
    case Scope::Kind::Room: return "room";
    case Scope::Kind::ResidentRoom: return "resident-room";
    }
    return "?";
}

json subject_json(const Subject& s)
{
    static const char* kinds[] = {"resident", "role", "any", "all"};
    return json{{"kind", kinds[static_cast<int>(s.kind)]}, {"name", s.name}};
}

} // namespace

json StateRequest::to_json() const
{
    json j{{"scope", {{"kind", scope_kind(scope.kind)}, {"name", scope.name}}},
           {"rooms", rooms},
           {"variable", variable}};
    if (const auto* s = std::get_if<SetDirective>(&directive)) {
        j["directive"] = {{"type", "set"}, {"value", s->value}};
    } else if (const auto* k = std::get_if<KeepDirective>(&directive)) {
        json d{{"type", "keep"}, {"lo", nullptr}, {"hi", nullptr}};
        if (k->band.lo)
            d["lo"] = *k->band.lo;
        if (k->band.hi)
            d["hi"] = *k->band.hi;
        j["directive"] = d;
    } else {
        const auto& n = std::get<NotifyDirective>(directive);
        j["directive"] = {{"type", "notify"},
                          {"target", subject_json(n.target)},
                          {"severity", n.severity == Severity::Warn ? "WARN" : "NOTIFY"},
                          {"message", n.message}};
    }
    j["provenance"] = {{"rule", provenance.rule_id},     {"owner", provenance.owner},
                       {"priority", provenance.priority}, {"order", provenance.order},
                       {"action", provenance.action},     {"override", provenance.override_request},
                       {"merged", provenance.merged}};
    return j;
}

// --- interpreter -----------------------------------------------------------------

std::vector<std::string> resolve_scope(const Scope& scope, const std::string& variable, const HomeConfig& config)
{
    switch (scope.kind) {
    case Scope::Kind::Room: {
        auto r = config.room(scope.name);
        return {r.value_or(scope.name)};
    }
    case Scope::Kind::ResidentRoom: {
        auto owned = config.owned_room(scope.name);
        if (!owned)
            return {};
        return {*owned};
    }
    case Scope::Kind::Home: break;
    }
    std::vector<std::string> served;
    if (!variable.empty())
        for (const auto& room : config.rooms)
            if (!config.devices_serving(variable, room).empty())
                served.push_back(room);
    return served.empty() ? config.rooms : served;
}

namespace {

bool by_authority(const StateRequest& a, const StateRequest& b)
{
    const auto& x = a.provenance;
    const auto& y = b.provenance;
    return std::tie(x.priority, x.order, x.action) < std::tie(y.priority, y.order, y.action);
}

} // namespace

TickResult run_tick(const ActiveScript& script, const GenericState& state, const HomeConfig& config,
                    const std::vector<StateRequest>& overrides)
{
    TickResult out;
    std::map<std::pair<std::string, std::string>, std::vector<StateRequest>> candidates;
    std::vector<StateRequest> notices;

    for (const auto& o : overrides)
        for (const auto& room : o.rooms) {
            auto one = o;
            one.rooms = {room};
            candidates[{o.variable, room}].push_back(std::move(one));
        }

    for (std::size_t i = 0; i < script.rules.size(); ++i) {
        const auto& sr = script.rules[i];
        if (sr.dormant)
            continue;
        if (!evaluate_condition(sr.rule.condition, state, config, out.diagnostics, sr.rule.id))
            continue;
        for (std::size_t a = 0; a < sr.rule.actions.size(); ++a) {
            const auto& action = sr.rule.actions[a];
            RequestProvenance prov{sr.rule.id, sr.rule.owner, sr.priority, i, a, false, {}};
            if (const auto* n = std::get_if<NotifyAction>(&action)) {
                notices.push_back(StateRequest{Scope::home(), {}, "", NotifyDirective{n->target, n->severity, n->message},
                                               prov});
                continue;
            }
            const auto& var = *written_variable(action);
            const auto& scope = *action_scope(action);
            Directive d;
            if (const auto* s = std::get_if<SetAction>(&action))
                d = SetDirective{s->value};
            else
                d = KeepDirective{KeepBand::from(std::get<KeepAction>(action).target)};
            auto rooms = resolve_scope(scope, var, config);
            if (rooms.empty())
                out.diagnostics.push_back(Diagnostic{"EmptyScope", DiagnosticSeverity::Warning, sr.rule.id,
                                                     "action scope resolves to no room", std::nullopt});
            for (const auto& room : rooms)
                candidates[{var, room}].push_back(StateRequest{scope, {room}, var, d, prov});
        }
    }

    for (auto& [key, list] : candidates) {
        std::stable_sort(list.begin(), list.end(), by_authority);
        StateRequest winner = list.front();
        bool pinned = winner.provenance.override_request;
        for (std::size_t k = 1; k < list.size(); ++k) {
            const auto& c = list[k];
            bool merged = false;
            if (!pinned) {
                if (const auto* s = std::get_if<SetDirective>(&winner.directive)) {
                    const auto* cs = std::get_if<SetDirective>(&c.directive);
                    merged = cs && iequals(cs->value, s->value);
                } else if (auto* kd = std::get_if<KeepDirective>(&winner.directive)) {
                    if (const auto* ck = std::get_if<KeepDirective>(&c.directive)) {
                        auto both = kd->band.intersect(ck->band);
                        if (!both.empty()) {
                            kd->band = both;
                            merged = true;
                        }
                    }
                }
            }
            if (merged) {
                winner.provenance.merged.push_back(c.provenance.rule_id);
            } else if (!c.provenance.override_request) {
                out.diagnostics.push_back(
                    Diagnostic{"RequestSuperseded", DiagnosticSeverity::Info, c.provenance.rule_id,
                               key.first + " in " + key.second + " held by " + winner.provenance.rule_id,
                               std::nullopt});
            }
        }
        out.requests.push_back(std::move(winner));
    }
    for (auto& n : notices)
        out.requests.push_back(std::move(n));
    return out;
}

// --- translation -----------------------------------------------------------------

std::vector<const DeviceDescriptor*> eligible_devices(const StateRequest& request, const std::string& room,
                                                      const HomeConfig& config)
{
    std::vector<const DeviceDescriptor*> out;
    if (std::holds_alternative<NotifyDirective>(request.directive))
        return out;
    const auto* keep = std::get_if<KeepDirective>(&request.directive);
    for (const auto* d : config.devices_serving(request.variable, room)) {
        if (!keep) {
            if (d->mode == ControlMode::DirectCommand)
                out.push_back(d);
            continue;
        }
        if (d->mode == ControlMode::DirectCommand)
            continue;
        if (d->effect < 0 && !keep->band.hi)
            continue;
        if (d->effect > 0 && !keep->band.lo)
            continue;
        out.push_back(d);
    }
    std::stable_sort(out.begin(), out.end(), [](const auto* a, const auto* b) {
        return std::tie(a->cost, a->id) < std::tie(b->cost, b->id);
    });
    return out;
}

std::vector<DeviceCommand> translate_room(const StateRequest& request, const std::string& room,
                                          const HomeConfig& config,
                                          const std::map<std::string, DeviceSettings>& current, SimTime now,
                                          std::size_t engaged)
{
    std::vector<DeviceCommand> out;
    auto devices = eligible_devices(request, room, config);
    auto settings_of = [&](const std::string& id) {
        auto it = current.find(id);
        return it == current.end() ? DeviceSettings{} : it->second;
    };

    if (const auto* s = std::get_if<SetDirective>(&request.directive)) {
        for (const auto* d : devices) {
            auto cur = settings_of(d->id).switch_state;
            if (cur && iequals(*cur, s->value))
                continue;
            out.push_back(DeviceCommand{d->id, SwitchPayload{s->value}, now});
        }
        return out;
    }
    const auto* keep = std::get_if<KeepDirective>(&request.directive);
    if (!keep)
        return out;
    const auto& band = keep->band;
    const auto* var = config.variable(request.variable);
    double dmin = var && var->range ? var->range->min : -std::numeric_limits<double>::infinity();
    double dmax = var && var->range ? var->range->max : std::numeric_limits<double>::infinity();
    auto clip = [&](double v) { return std::clamp(v, dmin, dmax); };

    if (devices.size() > engaged)
        devices.resize(engaged);
    for (const auto* d : devices) {
        auto cur = settings_of(d->id);
        if (d->mode == ControlMode::InternalLoop) {
            if (cur.setpoint && band.contains(*cur.setpoint))
                continue;
            double target;
            if (band.lo && band.hi)
                target = (*band.lo + *band.hi) / 2;
            else if (band.lo)
                target = *band.lo + kOneSidedMargin / 2;
            else if (band.hi)
                target = *band.hi - kOneSidedMargin / 2;
            else
                continue;
            out.push_back(DeviceCommand{d->id, SetpointPayload{clip(target)}, now});
        } else {
            if (cur.band && band.contains(cur.band->lo, cur.band->hi))
                continue;
            double lo, hi;
            if (band.lo && band.hi) {
                lo = *band.lo;
                hi = *band.hi;
            } else if (band.lo) {
                lo = *band.lo;
                hi = *band.lo + kOneSidedMargin;
            } else if (band.hi) {
                lo = *band.hi - kOneSidedMargin;
                hi = *band.hi;
            } else {
                continue;
            }
            out.push_back(DeviceCommand{d->id, RangePayload{clip(lo), clip(hi)}, now});
        }
    }
    return out;
}

std::vector<DeviceCommand> translate(const StateRequest& request, const HomeConfig& config,
                                     const std::map<std::string, DeviceSettings>& current, SimTime now,
                                     std::size_t engaged)
{
    std::vector<DeviceCommand> out;
    for (const auto& room : request.rooms) {
        auto part = translate_room(request, room, config, current, now, engaged);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

ConcreteHomeManager::ConcreteHomeManager(const HomeConfig& config, int patience)
    : config_(config), patience_(patience)
{
}

ConcreteHomeManager::Outcome ConcreteHomeManager::handle(const std::vector<StateRequest>& requests,
                                                         const ConcreteState& state, SimTime now)
{
    Outcome out;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& req : requests) {
        if (std::holds_alternative<NotifyDirective>(req.directive))
            continue;
        for (const auto& room : req.rooms) {
            std::pair key{req.variable, room};
            auto eligible = eligible_devices(req, room, config_);
            if (eligible.empty()) {
                if (unserved_reported_.insert(key).second)
                    out.diagnostics.push_back(Diagnostic{"NoServingDevice", DiagnosticSeverity::Warning,
                                                         req.provenance.rule_id,
                                                         "no device can serve " + req.variable + " in " + room,
                                                         std::nullopt});
                continue;
            }
            std::size_t engaged = eligible.size();
            if (const auto* k = std::get_if<KeepDirective>(&req.directive)) {
                seen.insert(key);
                auto& c = cascades_[key];
                if (c.band != k->band)
                    c = Cascade{k->band, 1, 0};
                const auto* var = config_.variable(req.variable);
                const auto* qs = var ? state.get(room, var->quantity) : nullptr;
                if (qs && qs->value && !k->band.contains(*qs->value))
                    ++c.outside;
                else
                    c.outside = 0;
                if (c.outside >= patience_ && c.engaged < eligible.size()) {
                    ++c.engaged;
                    c.outside = 0;
                }
                engaged = c.engaged;
            }
            auto part = translate_room(req, room, config_, settings_, now, engaged);
            out.commands.insert(out.commands.end(), part.begin(), part.end());
        }
    }
    for (auto it = cascades_.begin(); it != cascades_.end();)
        it = seen.count(it->first) ? std::next(it) : cascades_.erase(it);
    return out;
}

void ConcreteHomeManager::acknowledge(const DeviceCommand& c)
{
    auto& s = settings_[c.device];
    const auto* desc = config_.device(c.device);
    if (const auto* sw = std::get_if<SwitchPayload>(&c.payload)) {
        s.switch_state = sw->value;
    } else if (const auto* sp = std::get_if<SetpointPayload>(&c.payload)) {
        if (desc && desc->mode == ControlMode::ExternalLoop)
            s.band = Band{sp->value, sp->value};
        else
            s.setpoint = sp->value;
    } else {
        const auto& r = std::get<RangePayload>(c.payload);
        if (desc && desc->mode == ControlMode::InternalLoop)
            s.setpoint = (r.lo + r.hi) / 2;
        else
            s.band = Band{r.lo, r.hi};
    }
}

std::size_t ConcreteHomeManager::engaged(const std::string& variable, const std::string& room) const
{
    auto it = cascades_.find({variable, room});
    return it == cascades_.end() ? 0 : it->second.engaged;
}

std::map<std::string, std::string> ConcreteHomeManager::actuator_states(const EventSchema& schema) const
{
    std::map<std::string, std::string> out;
    for (const auto& sv : schema.variables()) {
        if (sv.role != SchemaVariable::Role::Actuator)
            continue;
        const auto* var = config_.variable(sv.source);
        if (!var)
            continue;
        auto devices = config_.devices_serving(sv.source, sv.room);
        std::sort(devices.begin(), devices.end(), [](const auto* a, const auto* b) {
            return std::tie(a->cost, a->id) < std::tie(b->cost, b->id);
        });
        if (var->kind == VariableKind::ControlledSet) {
            std::string state = idle_value(*var);
            for (const auto* d : devices) {
                auto it = settings_.find(d->id);
                if (it != settings_.end() && it->second.switch_state) {
                    state = *it->second.switch_state;
                    break;
                }
            }
            out[sv.name] = state;
            continue;
        }
        std::string state = "off";
        for (const auto* d : devices) {
            auto it = settings_.find(d->id);
            if (it == settings_.end())
                continue;
            std::optional<double> v = it->second.setpoint;
            if (!v && it->second.band)
                v = (it->second.band->lo + it->second.band->hi) / 2;
            if (v && sv.range) {
                state = std::to_string(Discretizer{sv.range->min, sv.range->max, sv.bins}.bin(*v));
                break;
            }
        }
        out[sv.name] = state;
    }
    return out;
}

// --- overrides -------------------------------------------------------------------

OverrideManager::OverrideManager(const HomeConfig& config, const TrustStore& acs_trust, ReplayCache& replay,
                                 RoleLookup roles, SimTime hold)
    : config_(config), acs_trust_(acs_trust), replay_(replay), roles_(std::move(roles)), hold_(hold)
{
}

OverrideOutcome OverrideManager::submit(const OverrideRequest& req, std::string_view wire, SimTime now)
{
    OverrideOutcome out;
    auto fail = [&](ErrorCode code, std::string msg) {
        out.accepted = false;
        out.reason = code;
        out.message = std::move(msg);
        return out;
    };

    auto ticket = Ticket::decode(wire);
    if (!ticket)
        return fail(ErrorCode::TicketInvalid, "ticket is malformed or altered");
    out.subject = ticket->subject;
    if (ticket->kind != "ACS" || !ticket->claim)
        return fail(ErrorCode::TicketInvalid, "an access-control ticket with a claim is required");

    // a request names a state; devices are not addressable
    if (config_.device(req.state))
        return fail(ErrorCode::UnknownVariable, "'" + req.state + "' is a device, not a state");
    bool keep = std::holds_alternative<KeepDirective>(req.directive);
    const VariableDecl* var = config_.variable(req.state);
    if (!var || var->kind == VariableKind::Measured) {
        auto q = config_.canonical_quantity(req.state);
        var = q ? config_.variable_for(*q, keep ? VariableKind::ControlledKeep : VariableKind::ControlledSet)
                : nullptr;
    }
    if (!var)
        return fail(ErrorCode::UnknownVariable, "no controllable state named '" + req.state + "'");
    if (keep != (var->kind == VariableKind::ControlledKeep))
        return fail(ErrorCode::InvalidValue, var->name + (keep ? " takes a value, not a band" : " takes a band"));

    Directive directive;
    ExpectedClaim expected{var->quantity, AclAction::Set};
    if (keep) {
        auto band = std::get<KeepDirective>(req.directive).band;
        if (band.empty())
            return fail(ErrorCode::InvalidValue, "empty band");
        if (band.lo && band.hi)
            expected.band = std::pair{*band.lo, *band.hi};
        else if (band.lo || band.hi)
            expected.value = band.lo ? *band.lo : *band.hi;
        directive = KeepDirective{band};
    } else {
        const auto& value = std::get<SetDirective>(req.directive).value;
        auto it = std::find_if(var->values.begin(), var->values.end(),
                               [&](const auto& x) { return iequals(x, value); });
        if (it == var->values.end())
            return fail(ErrorCode::InvalidValue, "'" + value + "' is not a value of " + var->name);
        expected.symbolic = true;
        directive = SetDirective{*it};
    }

    auto v = verify_ticket(*ticket, expected, acs_trust_, &replay_, now);
    if (v.failure == VerifyFailure::ClaimMismatch)
        return fail(ErrorCode::AclDenied, "ticket claim '" + ticket->claim->constraint.to_string() + "' on " +
                                              ticket->claim->state + " does not cover the request");
    if (!v.ok())
        return fail(ErrorCode::TicketInvalid, "ticket rejected: " + std::string(to_string(v.failure)));

    Scope scope;
    if (req.scope) {
        scope = *req.scope;
    } else if (auto owned = config_.owned_room(ticket->subject)) {
        scope = Scope{Scope::Kind::Room, *owned};
    } else {
        return fail(ErrorCode::InvalidValue, ticket->subject + " owns no room; name one");
    }
    if (scope.kind == Scope::Kind::Room && !config_.room(scope.name))
        return fail(ErrorCode::InvalidValue, "unknown room '" + scope.name + "'");
    auto rooms = resolve_scope(scope, var->name, config_);
    if (rooms.empty())
        return fail(ErrorCode::InvalidValue, "scope resolves to no room");

    auto roles = roles_ ? roles_(ticket->subject) : std::vector<std::string>{};
    bool resident = std::any_of(roles.begin(), roles.end(), [](const auto& r) { return iequals(r, "Resident"); });
    if (resident)
        for (const auto& room : rooms) {
            auto owner = config_.owner_of(room);
            if (owner && !iequals(*owner, ticket->subject))
                return fail(ErrorCode::AclDenied, room + " belongs to " + *owner);
        }

    std::lock_guard lock(mu_);
    auto n = ++next_id_;
    StateRequest sr{scope, rooms, var->name, directive,
                    RequestProvenance{"ovr-" + std::to_string(n), ticket->subject, kOverridePriority,
                                      static_cast<std::size_t>(n), 0, true, {}}};
    queue_.push_back(Held{sr, 0});
    out.accepted = true;
    out.request = sr;
    out.until = now + hold_;
    return out;
}

std::vector<StateRequest> OverrideManager::activate(SimTime now)
{
    std::lock_guard lock(mu_);
    std::vector<StateRequest> fresh;
    for (auto& h : queue_) {
        // a newer override on the same target replaces the older one
        std::erase_if(active_, [&](const Held& a) {
            return a.request.variable == h.request.variable && a.request.rooms == h.request.rooms;
        });
        h.until = now + hold_;
        fresh.push_back(h.request);
        active_.push_back(std::move(h));
    }
    queue_.clear();
    std::erase_if(active_, [&](const Held& a) { return a.until <= now; });
    return fresh;
}

std::vector<StateRequest> OverrideManager::active(SimTime now)
{
    std::lock_guard lock(mu_);
    std::erase_if(active_, [&](const Held& a) { return a.until <= now; });
    std::vector<StateRequest> out;
    for (const auto& a : active_)
        out.push_back(a.request);
    return out;
}

std::size_t OverrideManager::queued() const
{
    std::lock_guard lock(mu_);
    return queue_.size();
}

} // namespace hearth
