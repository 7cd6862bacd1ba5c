#include "hearth/home_model.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "hearth/error.hpp"

namespace hearth {

using nlohmann::json;

namespace {

constexpr KeywordCategory kSearchOrder[] = {
    KeywordCategory::Location,      KeywordCategory::Resident, KeywordCategory::Role,
    KeywordCategory::Activity,      KeywordCategory::DateTimeEvent, KeywordCategory::Action,
};

[[noreturn]] void schema_error(const std::string& what)
{
    throw Error(ErrorCode::SchemaError, what);
}

[[noreturn]] void dangling(const std::string& what)
{
    throw Error(ErrorCode::DanglingReference, what);
}

std::string require_string(const json& obj, const char* key, const std::string& ctx)
{
    if (!obj.is_object() || !obj.contains(key) || !obj.at(key).is_string())
        schema_error(ctx + ": missing string field '" + key + "'");
    return obj.at(key).get<std::string>();
}

std::string require_identifier(const json& obj, const char* key, const std::string& ctx)
{
    auto s = require_string(obj, key, ctx);
    if (!is_identifier(s))
        schema_error(ctx + ": '" + s + "' is not a valid identifier");
    return s;
}

const json& array_field(const json& doc, const char* key)
{
    static const json empty = json::array();
    if (!doc.contains(key))
        return empty;
    if (!doc.at(key).is_array())
        schema_error(std::string("field '") + key + "' must be an array");
    return doc.at(key);
}

double number_field(const json& obj, const char* key, double fallback, const std::string& ctx)
{
    if (!obj.contains(key))
        return fallback;
    if (!obj.at(key).is_number())
        schema_error(ctx + ": field '" + key + "' must be a number");
    return obj.at(key).get<double>();
}

} // namespace

std::string_view to_string(KeywordCategory c)
{
    switch (c) {
    case KeywordCategory::Location: return "Location";
    case KeywordCategory::Role: return "Role";
    case KeywordCategory::Resident: return "Resident";
    case KeywordCategory::Activity: return "Activity";
    case KeywordCategory::DateTimeEvent: return "DateTimeEvent";
    case KeywordCategory::Action: return "Action";
    }
    return "?";
}

std::optional<KeywordCategory> category_from_string(std::string_view s)
{
    for (auto c : kSearchOrder)
        if (iequals(to_string(c), s))
            return c;
    return std::nullopt;
}

std::string fold_case(std::string_view s)
{
    std::string out(s);
    for (auto& ch : out)
        ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return out;
}

bool iequals(std::string_view a, std::string_view b)
{
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

bool is_identifier(std::string_view s)
{
    if (s.empty() || !std::isalpha(static_cast<unsigned char>(s.front())))
        return false;
    return std::all_of(s.begin(), s.end(), [](char ch) {
        return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_';
    });
}

// ---------------------------------------------------------------------------
// KeywordRegistry

KeywordRegistry::KeywordRegistry()
{
    for (auto n : {"Home", "Kitchen", "LivingRoom", "BedRoom", "AllRooms"})
        add_default(KeywordCategory::Location, n);
    for (auto n : {"AM", "PM", "Morning", "Afternoon", "Evening", "Night", "Holiday", "Xmas",
                   "Easter", "Weekend", "Today", "Tomorrow", "Minute", "Hour", "Day", "Week",
                   "Month", "Year", "Always",
                   // seasons are needed by rules such as "SUMMER AND MORNING"
                   "Summer", "Autumn", "Winter", "Spring"})
        add_default(KeywordCategory::DateTimeEvent, n);
    for (auto n : {"SET", "KEEP", "ON", "OFF", "CLOSE", "OPEN", "NOTIFY", "WARN"})
        add_default(KeywordCategory::Action, n);
    for (auto n : {"Resident", "Homeowner", "CleaningPerson", "MaintenancePerson", "EnergySupplier"})
        add_default(KeywordCategory::Role, n);
    for (auto n : {"Sleeping", "Resting", "Exercising", "Working"})
        add_default(KeywordCategory::Activity, n);
    // resident-set quantifiers
    for (auto n : {"Anyone", "AllTenants"})
        add_default(KeywordCategory::Resident, n);
}

void KeywordRegistry::add_default(KeywordCategory category, std::string_view name)
{
    entries_[category].emplace(fold_case(name), Entry{std::string(name), Provenance::SystemDefault});
}

void KeywordRegistry::register_keyword(KeywordCategory category, std::string_view name)
{
    if (!is_identifier(name))
        throw Error(ErrorCode::InvalidIdentifier, "invalid keyword name '" + std::string(name) + "'");
    auto& bucket = entries_[category];
    auto key = fold_case(name);
    if (bucket.count(key))
        throw Error(ErrorCode::DuplicateKeyword, std::string(to_string(category)) + " '" +
                                                     std::string(name) + "' already registered");
    bucket.emplace(std::move(key), Entry{std::string(name), Provenance::UserDefined});
}

void KeywordRegistry::register_keyword(std::string_view category, std::string_view name)
{
    auto c = category_from_string(category);
    if (!c)
        throw Error(ErrorCode::UnknownCategory, "unknown keyword category '" + std::string(category) + "'");
    register_keyword(*c, name);
}

std::optional<ResolvedKeyword> KeywordRegistry::resolve(std::string_view name) const
{
    for (auto c : kSearchOrder)
        if (auto hit = resolve_in(c, name))
            return ResolvedKeyword{c, *hit};
    return std::nullopt;
}

std::optional<std::string> KeywordRegistry::resolve_in(KeywordCategory category,
                                                       std::string_view name) const
{
    auto it = entries_.find(category);
    if (it == entries_.end())
        return std::nullopt;
    auto e = it->second.find(fold_case(name));
    if (e == it->second.end())
        return std::nullopt;
    return e->second.canonical;
}

std::optional<Provenance> KeywordRegistry::provenance(KeywordCategory category,
                                                      std::string_view name) const
{
    auto it = entries_.find(category);
    if (it == entries_.end())
        return std::nullopt;
    auto e = it->second.find(fold_case(name));
    if (e == it->second.end())
        return std::nullopt;
    return e->second.provenance;
}

std::vector<std::string> KeywordRegistry::names(KeywordCategory category) const
{
    std::vector<std::string> out;
    if (auto it = entries_.find(category); it != entries_.end())
        for (const auto& [_, e] : it->second)
            out.push_back(e.canonical);
    return out;
}

// ---------------------------------------------------------------------------
// Variables and devices

std::optional<std::pair<std::string, VariableKind>> split_variable_name(std::string_view name)
{
    auto head = [&](std::size_t n) {
        auto q = std::string(name.substr(0, name.size() - n));
        while (!q.empty() && q.back() == '_')
            q.pop_back();
        return q;
    };
    // postfixes are upper-case by convention; LaundryVal in the wild is
    // handled by the parser's rewrite path, not here
    if (name.size() > 3 && name.substr(name.size() - 3) == "VAL")
        return std::pair{head(3), VariableKind::Measured};
    if (name.size() > 3 && name.substr(name.size() - 3) == "SET")
        return std::pair{head(3), VariableKind::ControlledSet};
    if (name.size() > 4 && name.substr(name.size() - 4) == "KEEP")
        return std::pair{head(4), VariableKind::ControlledKeep};
    return std::nullopt;
}

std::string_view to_string(ControlMode m)
{
    switch (m) {
    case ControlMode::DirectCommand: return "DirectCommand";
    case ControlMode::InternalLoop: return "InternalLoop";
    case ControlMode::ExternalLoop: return "ExternalLoop";
    }
    return "?";
}

std::optional<std::string> HomeConfig::room(std::string_view name) const
{
    for (const auto& r : rooms)
        if (iequals(r, name))
            return r;
    return std::nullopt;
}

const ResidentDecl* HomeConfig::resident(std::string_view name) const
{
    for (const auto& r : residents)
        if (iequals(r.name, name))
            return &r;
    return nullptr;
}

std::optional<std::string> HomeConfig::owned_room(std::string_view resident_name) const
{
    for (const auto& [who, where] : ownership)
        if (iequals(who, resident_name))
            return where;
    return std::nullopt;
}

std::optional<std::string> HomeConfig::owner_of(std::string_view room_name) const
{
    for (const auto& [who, where] : ownership)
        if (iequals(where, room_name))
            return who;
    return std::nullopt;
}

bool HomeConfig::has_role(const ResidentDecl& r, std::string_view role) const
{
    return std::any_of(r.roles.begin(), r.roles.end(),
                       [&](const std::string& x) { return iequals(x, role); });
}

const VariableDecl* HomeConfig::variable(std::string_view name) const
{
    for (const auto& v : variables)
        if (iequals(v.name, name))
            return &v;
    return nullptr;
}

const VariableDecl* HomeConfig::variable_for(std::string_view quantity, VariableKind kind) const
{
    for (const auto& v : variables)
        if (v.kind == kind && iequals(v.quantity, quantity))
            return &v;
    return nullptr;
}

std::optional<std::string> HomeConfig::canonical_quantity(std::string_view name) const
{
    for (const auto& v : variables) {
        if (iequals(v.quantity, name))
            return v.quantity;
        for (const auto& a : v.aliases)
            if (iequals(a, name))
                return v.quantity;
    }
    return std::nullopt;
}

const DeviceDescriptor* HomeConfig::device(std::string_view id) const
{
    for (const auto& d : devices)
        if (iequals(d.id, id))
            return &d;
    return nullptr;
}

const SensorDescriptor* HomeConfig::sensor(std::string_view id) const
{
    for (const auto& s : sensors)
        if (s.id == id)
            return &s;
    return nullptr;
}

std::vector<const DeviceDescriptor*> HomeConfig::devices_serving(std::string_view var,
                                                                 std::string_view room_name) const
{
    std::vector<const DeviceDescriptor*> out;
    for (const auto& d : devices)
        if (iequals(d.variable, var) && iequals(d.room, room_name))
            out.push_back(&d);
    std::stable_sort(out.begin(), out.end(),
                     [](const auto* a, const auto* b) { return a->cost < b->cost; });
    return out;
}

QuantityPhysics HomeConfig::physics_for(std::string_view quantity) const
{
    for (const auto& [q, p] : physics)
        if (iequals(q, quantity))
            return p;
    return QuantityPhysics{};
}

// ---------------------------------------------------------------------------
// Loading

namespace {

VariableDecl parse_variable(const json& v)
{
    auto name = require_identifier(v, "name", "variable");
    auto split = split_variable_name(name);
    if (!split)
        schema_error("variable '" + name + "' must end in VAL, SET or KEEP");
    VariableDecl decl;
    decl.name = name;
    decl.quantity = split->first;
    decl.kind = split->second;
    if (decl.quantity.empty())
        schema_error("variable '" + name + "' has no base quantity");
    if (v.contains("units")) {
        if (!v.at("units").is_string())
            schema_error("variable '" + name + "': units must be a string");
        decl.units = v.at("units").get<std::string>();
    }
    if (!v.contains("domain") || !v.at("domain").is_object())
        schema_error("variable '" + name + "': missing domain");
    const auto& dom = v.at("domain");
    if (dom.contains("values")) {
        if (!dom.at("values").is_array() || dom.at("values").empty())
            schema_error("variable '" + name + "': discrete domain must be a non-empty array");
        for (const auto& x : dom.at("values")) {
            if (!x.is_string())
                schema_error("variable '" + name + "': discrete values must be strings");
            decl.values.push_back(x.get<std::string>());
        }
    } else if (dom.contains("min") && dom.contains("max")) {
        ContinuousDomain r{number_field(dom, "min", 0, name), number_field(dom, "max", 0, name)};
        if (!(r.min < r.max))
            schema_error("variable '" + name + "': domain min must be below max");
        decl.range = r;
    } else {
        schema_error("variable '" + name + "': domain needs either values or min/max");
    }
    if (decl.kind == VariableKind::ControlledKeep && !decl.continuous())
        schema_error("variable '" + name + "': KEEP variables need a continuous domain");
    if (decl.kind == VariableKind::ControlledSet && decl.continuous())
        schema_error("variable '" + name + "': SET variables need a discrete domain");
    if (v.contains("bins")) {
        decl.bins = static_cast<int>(number_field(v, "bins", 5, name));
        if (decl.bins < 1)
            schema_error("variable '" + name + "': bins must be positive");
    }
    for (const auto& a : array_field(v, "aliases")) {
        if (!a.is_string() || !is_identifier(a.get<std::string>()))
            schema_error("variable '" + name + "': aliases must be identifiers");
        decl.aliases.push_back(a.get<std::string>());
    }
    return decl;
}

ControlMode parse_mode(const std::string& s, const std::string& ctx)
{
    for (auto m : {ControlMode::DirectCommand, ControlMode::InternalLoop, ControlMode::ExternalLoop})
        if (iequals(to_string(m), s))
            return m;
    schema_error(ctx + ": unknown control mode '" + s + "'");
}

} // namespace

HomeConfig load_home_config(const json& doc)
{
    if (!doc.is_object())
        schema_error("home config must be a JSON object");
    HomeConfig cfg;

    for (const auto& r : array_field(doc, "rooms")) {
        if (!r.is_string() || !is_identifier(r.get<std::string>()))
            schema_error("rooms must be identifiers");
        auto name = r.get<std::string>();
        if (iequals(name, "Home") || iequals(name, "AllRooms"))
            schema_error("room name '" + name + "' is reserved");
        if (cfg.room(name))
            schema_error("duplicate room '" + name + "'");
        cfg.rooms.push_back(name);
        if (!cfg.keywords.resolve_in(KeywordCategory::Location, name))
            cfg.keywords.register_keyword(KeywordCategory::Location, name);
    }
    if (cfg.rooms.empty())
        schema_error("home config needs at least one room");

    for (const auto& r : array_field(doc, "roles")) {
        if (!r.is_string() || !is_identifier(r.get<std::string>()))
            schema_error("roles must be identifiers");
        auto name = r.get<std::string>();
        cfg.roles.push_back(name);
        if (!cfg.keywords.resolve_in(KeywordCategory::Role, name))
            cfg.keywords.register_keyword(KeywordCategory::Role, name);
    }

    for (const auto& r : array_field(doc, "residents")) {
        ResidentDecl res;
        res.name = require_identifier(r, "name", "resident");
        auto room = require_string(r, "room", "resident " + res.name);
        auto canon = cfg.room(room);
        if (!canon)
            dangling("resident '" + res.name + "' refers to unknown room '" + room + "'");
        res.room = *canon;
        for (const auto& role : array_field(r, "roles")) {
            if (!role.is_string())
                schema_error("resident '" + res.name + "': roles must be strings");
            auto rname = cfg.keywords.resolve_in(KeywordCategory::Role, role.get<std::string>());
            if (!rname)
                dangling("resident '" + res.name + "' has unknown role '" + role.get<std::string>() + "'");
            res.roles.push_back(*rname);
        }
        if (cfg.resident(res.name))
            schema_error("duplicate resident '" + res.name + "'");
        if (cfg.keywords.resolve_in(KeywordCategory::Resident, res.name))
            schema_error("resident name '" + res.name + "' collides with a reserved word");
        cfg.keywords.register_keyword(KeywordCategory::Resident, res.name);
        cfg.residents.push_back(std::move(res));
    }

    if (doc.contains("ownership")) {
        if (!doc.at("ownership").is_object())
            schema_error("ownership must be an object");
        for (const auto& [who, where] : doc.at("ownership").items()) {
            if (!cfg.resident(who))
                dangling("ownership names unknown resident '" + who + "'");
            if (!where.is_string() || !cfg.room(where.get<std::string>()))
                dangling("ownership of '" + who + "' names an unknown room");
            cfg.ownership[cfg.resident(who)->name] = *cfg.room(where.get<std::string>());
        }
    } else {
        for (const auto& r : cfg.residents)
            cfg.ownership[r.name] = r.room;
    }

    for (const auto& v : array_field(doc, "variables")) {
        auto decl = parse_variable(v);
        if (cfg.variable(decl.name))
            schema_error("duplicate variable '" + decl.name + "'");
        cfg.variables.push_back(std::move(decl));
    }

    for (const auto& s : array_field(doc, "sensors")) {
        SensorDescriptor sd;
        sd.id = require_string(s, "id", "sensor");
        auto room = require_string(s, "room", "sensor " + sd.id);
        auto canon = cfg.room(room);
        if (!canon)
            dangling("sensor '" + sd.id + "' refers to unknown room '" + room + "'");
        sd.room = *canon;
        auto q = require_string(s, "quantity", "sensor " + sd.id);
        const auto* var = cfg.variable_for(q, VariableKind::Measured);
        if (!var)
            dangling("sensor '" + sd.id + "' measures undeclared quantity '" + q + "'");
        sd.quantity = var->quantity;
        sd.units = s.contains("units") && s.at("units").is_string() ? s.at("units").get<std::string>()
                                                                   : var->units;
        sd.meter = s.value("meter", false);
        if (cfg.sensor(sd.id))
            schema_error("duplicate sensor '" + sd.id + "'");
        cfg.sensors.push_back(std::move(sd));
    }

    for (const auto& d : array_field(doc, "devices")) {
        DeviceDescriptor dd;
        dd.id = require_identifier(d, "id", "device");
        auto room = require_string(d, "room", "device " + dd.id);
        auto canon = cfg.room(room);
        if (!canon)
            dangling("device '" + dd.id + "' refers to unknown room '" + room + "'");
        dd.room = *canon;
        auto var = require_string(d, "variable", "device " + dd.id);
        const auto* decl = cfg.variable(var);
        if (!decl || decl->kind == VariableKind::Measured)
            dangling("device '" + dd.id + "' serves undeclared controlled variable '" + var + "'");
        dd.variable = decl->name;
        dd.mode = parse_mode(require_string(d, "mode", "device " + dd.id), "device " + dd.id);
        if (dd.mode == ControlMode::DirectCommand && decl->kind != VariableKind::ControlledSet)
            schema_error("device '" + dd.id + "': DirectCommand devices serve SET variables only");
        if (dd.mode != ControlMode::DirectCommand && decl->kind != VariableKind::ControlledKeep)
            schema_error("device '" + dd.id + "': loop devices serve KEEP variables only");
        dd.effect = number_field(d, "effect", 0.0, dd.id);
        dd.cost = number_field(d, "cost", 1.0, dd.id);
        if (d.contains("adapter"))
            dd.adapter = require_string(d, "adapter", "device " + dd.id);
        for (const auto& s : array_field(d, "sensors")) {
            if (!s.is_string())
                schema_error("device '" + dd.id + "': sensors must be ids");
            const auto* sd = cfg.sensor(s.get<std::string>());
            if (!sd)
                dangling("device '" + dd.id + "' references unknown sensor '" + s.get<std::string>() + "'");
            if (sd->room != dd.room || !iequals(sd->quantity, decl->quantity))
                schema_error("device '" + dd.id + "': sensor '" + sd->id +
                             "' must measure " + decl->quantity + " in " + dd.room);
            dd.sensors.push_back(sd->id);
        }
        if (dd.mode == ControlMode::ExternalLoop && dd.sensors.empty())
            schema_error("device '" + dd.id + "': ExternalLoop devices need a sensor");
        if (cfg.device(dd.id))
            schema_error("duplicate device '" + dd.id + "'");
        cfg.devices.push_back(std::move(dd));
    }

    for (const auto& k : array_field(doc, "keywords")) {
        auto cat = require_string(k, "category", "keyword");
        auto name = require_string(k, "name", "keyword");
        cfg.keywords.register_keyword(std::string_view(cat), name);
    }

    if (doc.contains("physics")) {
        const auto& ph = doc.at("physics");
        if (!ph.is_object())
            schema_error("physics must be an object");
        double alpha = number_field(ph, "alpha", 0.1, "physics");
        if (ph.contains("quantities")) {
            for (const auto& [q, spec] : ph.at("quantities").items()) {
                QuantityPhysics p;
                p.alpha = number_field(spec, "alpha", alpha, q);
                if (spec.contains("initial"))
                    p.initial = number_field(spec, "initial", 0, q);
                if (spec.contains("ambient"))
                    p.ambient = number_field(spec, "ambient", 0, q);
                cfg.physics[q] = p;
            }
        }
        for (const auto& v : cfg.variables)
            if (v.kind == VariableKind::Measured && v.continuous() && !cfg.physics.count(v.quantity))
                cfg.physics[v.quantity] = QuantityPhysics{alpha, std::nullopt, std::nullopt};
    }

    if (doc.contains("calendar")) {
        const auto& cal = doc.at("calendar");
        for (const auto& h : array_field(cal, "holidays")) {
            if (!h.is_string())
                schema_error("calendar holidays must be YYYY-MM-DD strings");
            cfg.calendar.holidays.insert(h.get<std::string>());
        }
        cfg.calendar.southern_hemisphere = cal.value("hemisphere", std::string("north")) == "south";
    }
    return cfg;
}

HomeConfig load_home_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::Io, "cannot open home config '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaError, "home config '" + path + "': " + e.what());
    }
    return load_home_config(doc);
}

} // namespace hearth
