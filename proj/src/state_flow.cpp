#include "hearth/state_flow.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hearth/error.hpp"

namespace hearth {

using nlohmann::json;

// --- sensors ------------------------------------------------------------------

SensorStateManager::SensorStateManager(const HomeConfig& config)
{
    for (const auto& s : config.sensors)
        known_[s.id] = true;
}

void SensorStateManager::ingest(const SensorReading& r)
{
    if (!known_.count(r.sensor))
        throw Error(ErrorCode::UnknownSensor, "unknown sensor '" + r.sensor + "'");
    auto it = latest_.find(r.sensor);
    if (it != latest_.end() && r.t < it->second.t) {
        ++discarded_;
        return;
    }
    latest_[r.sensor] = Latest{r.value, r.units, r.t};
}

std::optional<SensorStateManager::Latest> SensorStateManager::latest(const std::string& sensor) const
{
    auto it = latest_.find(sensor);
    if (it == latest_.end())
        return std::nullopt;
    return it->second;
}

// --- concrete -----------------------------------------------------------------

const QuantityState* ConcreteState::get(const std::string& room, const std::string& quantity) const
{
    auto r = rooms.find(room);
    if (r == rooms.end())
        return nullptr;
    auto q = r->second.find(quantity);
    return q == r->second.end() ? nullptr : &q->second;
}

ConcreteState build_concrete_state(const SensorStateManager& sensors, const HomeConfig& config,
                                   SimTime clock, SimTime stale_after)
{
    ConcreteState out;
    out.clock = clock;
    std::set<std::string> meter_quantities;
    for (const auto& s : config.sensors)
        if (s.meter)
            meter_quantities.insert(s.quantity);
    for (const auto& room : config.rooms)
        for (const auto& v : config.variables)
            if (v.kind == VariableKind::Measured && !meter_quantities.count(v.quantity))
                out.rooms[room][v.quantity] = QuantityState{std::nullopt, v.units, std::nullopt};

    struct Acc {
        double sum = 0.0;
        int n = 0;
        SimTime newest = 0;
    };
    std::map<std::pair<std::string, std::string>, Acc> acc;
    for (const auto& s : config.sensors) {
        auto reading = sensors.latest(s.id);
        if (!reading)
            continue;
        if (s.meter) {
            out.meters[s.quantity] += reading->value;
            continue;
        }
        if (clock - reading->t > stale_after)
            continue;
        auto& a = acc[{s.room, s.quantity}];
        a.sum += reading->value;
        a.newest = a.n == 0 ? reading->t : std::max(a.newest, reading->t);
        ++a.n;
    }
    for (const auto& [key, a] : acc) {
        auto& q = out.rooms[key.first][key.second];
        q.value = a.sum / a.n;
        q.staleness = clock - a.newest;
    }
    return out;
}

// --- generic ------------------------------------------------------------------

bool GenericState::present(const std::string& resident) const
{
    auto it = presence.find(resident);
    return it != presence.end() && it->second.has_value();
}

std::optional<std::string> GenericState::room_of(const std::string& resident) const
{
    auto it = presence.find(resident);
    return it == presence.end() ? std::nullopt : it->second;
}

GenericState build_generic_state(const ConcreteState& concrete,
                                 const std::map<std::string, std::string>& presence,
                                 const std::map<std::string, std::string>& activity, SimTime clock,
                                 const HomeConfig& config)
{
    GenericState g;
    g.time = make_time_context(clock, config.calendar);
    g.concrete = concrete;
    for (const auto& r : config.residents)
        g.presence[r.name] = std::nullopt;
    for (const auto& [who, where] : presence) {
        const auto* r = config.resident(who);
        if (!r)
            throw Error(ErrorCode::UnknownResident, "unknown resident '" + who + "'");
        if (where.empty())
            continue;
        auto room = config.room(where);
        if (!room)
            throw Error(ErrorCode::UnknownResident,
                        "resident '" + who + "' reported in unknown room '" + where + "'");
        g.presence[r->name] = *room;
    }
    for (const auto& [who, what] : activity) {
        const auto* r = config.resident(who);
        if (!r)
            throw Error(ErrorCode::UnknownResident, "unknown resident '" + who + "'");
        if (what.empty())
            continue;
        if (!g.present(r->name)) {
            g.diagnostics.push_back(Diagnostic{"ActivityWithoutPresence", DiagnosticSeverity::Warning,
                                               r->name,
                                               "activity '" + what + "' dropped: " + r->name +
                                                   " is not home",
                                               std::nullopt});
            continue;
        }
        auto kw = config.keywords.resolve_in(KeywordCategory::Activity, what);
        g.activity[r->name] = kw.value_or(what);
    }
    return g;
}

// --- schema -------------------------------------------------------------------

int Discretizer::bin(double v) const
{
    double width = (max - min) / bins;
    int b = static_cast<int>(std::floor((v - min) / width));
    return std::clamp(b, 0, bins - 1);
}

double Discretizer::lower_edge(int b) const
{
    return min + (max - min) * b / bins;
}

double Discretizer::upper_edge(int b) const
{
    return min + (max - min) * (b + 1) / bins;
}

namespace {

std::vector<std::string> bin_states(int bins)
{
    std::vector<std::string> out;
    for (int i = 0; i < bins; ++i)
        out.push_back(std::to_string(i));
    return out;
}

std::string_view role_name(SchemaVariable::Role r)
{
    switch (r) {
    case SchemaVariable::Role::Context: return "context";
    case SchemaVariable::Role::Sensor: return "sensor";
    case SchemaVariable::Role::Presence: return "presence";
    case SchemaVariable::Role::Activity: return "activity";
    case SchemaVariable::Role::Actuator: return "actuator";
    }
    return "?";
}

SchemaVariable::Role role_from(const std::string& s)
{
    for (auto r : {SchemaVariable::Role::Context, SchemaVariable::Role::Sensor,
                   SchemaVariable::Role::Presence, SchemaVariable::Role::Activity,
                   SchemaVariable::Role::Actuator})
        if (role_name(r) == s)
            return r;
    throw Error(ErrorCode::SchemaMismatch, "unknown schema role '" + s + "'");
}

Discretizer discretizer_of(const SchemaVariable& v)
{
    return Discretizer{v.range->min, v.range->max, v.bins};
}

} // namespace

std::string actuator_variable_name(const std::string& variable, const std::string& room)
{
    return variable + "_" + room;
}

const SchemaVariable* EventSchema::find(const std::string& name) const
{
    for (const auto& v : vars_)
        if (v.name == name)
            return &v;
    return nullptr;
}

void EventSchema::add(SchemaVariable v)
{
    if (find(v.name))
        throw Error(ErrorCode::SchemaMismatch, "duplicate schema variable '" + v.name + "'");
    vars_.push_back(std::move(v));
}

EventSchema EventSchema::from_config(const HomeConfig& config)
{
    using Role = SchemaVariable::Role;
    EventSchema s;
    s.add({"Period", Role::Context, {"Morning", "Afternoon", "Evening", "Night"}});
    s.add({"DayType", Role::Context, {"Weekday", "Weekend", "Holiday"}});
    s.add({"Season", Role::Context, {"Winter", "Spring", "Summer", "Autumn"}});

    std::set<std::pair<std::string, std::string>> sensed; // (room, quantity)
    std::set<std::string> meters;
    for (const auto& sd : config.sensors) {
        if (sd.meter)
            meters.insert(sd.quantity);
        else
            sensed.insert({sd.room, sd.quantity});
    }
    for (const auto& room : config.rooms) {
        for (const auto& v : config.variables) {
            if (v.kind != VariableKind::Measured || !v.continuous() || !sensed.count({room, v.quantity}))
                continue;
            SchemaVariable sv{v.name + "_" + room, Role::Sensor, bin_states(v.bins)};
            sv.states.push_back("unknown");
            sv.source = v.name;
            sv.room = room;
            sv.range = v.range;
            sv.bins = v.bins;
            s.add(std::move(sv));
        }
    }
    for (const auto& q : meters) {
        const auto* v = config.variable_for(q, VariableKind::Measured);
        SchemaVariable sv{q + "_Meter", Role::Sensor, bin_states(v->bins)};
        sv.states.push_back("unknown");
        sv.source = v->name;
        sv.range = v->range;
        sv.bins = v->bins;
        s.add(std::move(sv));
    }
    for (const auto& r : config.residents) {
        s.add({r.name + "_IN_Home", Role::Presence, {"false", "true"}});
        for (const auto& room : config.rooms)
            s.add({r.name + "_IN_" + room, Role::Presence, {"false", "true"}});
    }
    auto activities = config.keywords.names(KeywordCategory::Activity);
    for (const auto& r : config.residents) {
        SchemaVariable sv{r.name + "_ACTIVITY", Role::Activity, {"none"}};
        sv.states.insert(sv.states.end(), activities.begin(), activities.end());
        s.add(std::move(sv));
    }
    for (const auto& room : config.rooms) {
        for (const auto& v : config.variables) {
            if (v.kind == VariableKind::Measured || config.devices_serving(v.name, room).empty())
                continue;
            SchemaVariable sv{actuator_variable_name(v.name, room), Role::Actuator, {}};
            sv.source = v.name;
            sv.room = room;
            if (v.kind == VariableKind::ControlledSet) {
                sv.states = v.values;
            } else {
                sv.states = {"off"};
                auto b = bin_states(v.bins);
                sv.states.insert(sv.states.end(), b.begin(), b.end());
                sv.range = v.range;
                sv.bins = v.bins;
            }
            s.add(std::move(sv));
        }
    }
    return s;
}

json EventSchema::to_json() const
{
    json vars = json::array();
    for (const auto& v : vars_) {
        json j{{"name", v.name}, {"role", role_name(v.role)}, {"states", v.states}};
        if (!v.source.empty())
            j["source"] = v.source;
        if (!v.room.empty())
            j["room"] = v.room;
        if (v.range) {
            j["min"] = v.range->min;
            j["max"] = v.range->max;
            j["bins"] = v.bins;
        }
        vars.push_back(std::move(j));
    }
    return vars;
}

EventSchema EventSchema::from_json(const json& j)
{
    EventSchema s;
    try {
        for (const auto& v : j) {
            SchemaVariable sv;
            sv.name = v.at("name").get<std::string>();
            sv.role = role_from(v.at("role").get<std::string>());
            sv.states = v.at("states").get<std::vector<std::string>>();
            sv.source = v.value("source", std::string());
            sv.room = v.value("room", std::string());
            if (v.contains("min")) {
                sv.range = ContinuousDomain{v.at("min").get<double>(), v.at("max").get<double>()};
                sv.bins = v.at("bins").get<int>();
            }
            s.add(std::move(sv));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("malformed schema: ") + e.what());
    }
    return s;
}

// --- snapshot -----------------------------------------------------------------

EventRecord snapshot_event(const GenericState& g, const std::map<std::string, std::string>& actuators,
                           const EventSchema& schema, const HomeConfig& config)
{
    using Role = SchemaVariable::Role;
    EventRecord rec;
    rec.t = g.time.clock;
    for (const auto& v : schema.variables()) {
        std::string value;
        switch (v.role) {
        case Role::Context:
            if (v.name == "Period")
                value = to_string(g.time.period());
            else if (v.name == "DayType")
                value = to_string(g.time.day_type());
            else if (v.name == "Season")
                value = to_string(g.time.season);
            break;
        case Role::Sensor: {
            std::optional<double> x;
            if (v.room.empty()) {
                const auto* decl = config.variable(v.source);
                auto it = decl ? g.concrete.meters.find(decl->quantity) : g.concrete.meters.end();
                if (it != g.concrete.meters.end())
                    x = it->second;
            } else if (const auto* decl = config.variable(v.source)) {
                if (const auto* q = g.concrete.get(v.room, decl->quantity))
                    x = q->value;
            }
            value = x ? std::to_string(discretizer_of(v).bin(*x)) : "unknown";
            break;
        }
        case Role::Presence: {
            auto sep = v.name.find("_IN_");
            auto who = v.name.substr(0, sep);
            auto where = v.name.substr(sep + 4);
            auto room = g.room_of(who);
            bool in = room && (where == "Home" || *room == where);
            value = in ? "true" : "false";
            break;
        }
        case Role::Activity: {
            auto who = v.name.substr(0, v.name.size() - std::string("_ACTIVITY").size());
            auto it = g.activity.find(who);
            value = it == g.activity.end() ? "none" : it->second;
            break;
        }
        case Role::Actuator: {
            auto it = actuators.find(v.name);
            if (it != actuators.end())
                value = it->second;
            break;
        }
        }
        if (std::find(v.states.begin(), v.states.end(), value) == v.states.end())
            throw Error(ErrorCode::SchemaMismatch,
                        "value '" + value + "' is not a state of snapshot variable '" + v.name + "'");
        rec.values[v.name] = value;
    }
    for (const auto& [name, _] : actuators)
        if (!schema.find(name))
            throw Error(ErrorCode::SchemaMismatch, "actuator '" + name + "' is not in the schema");
    return rec;
}

} // namespace hearth
