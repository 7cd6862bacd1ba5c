#include "hearth/conflicts.hpp"

#include <algorithm>
#include <set>

#include "hearth/calendar.hpp"
#include "hearth/control_flow.hpp"
#include "hearth/rule_parser.hpp"

namespace hearth {

namespace {

constexpr int kUnassigned = -2;
constexpr int kNone = -1; // away, or no activity

struct Measure {
    std::string room; // empty for meters
    std::string quantity;
    std::vector<double> values;
};

struct Space {
    std::vector<std::string> residents;
    std::vector<std::string> activities;
    std::vector<TimeContext> moments;
    std::vector<Measure> measures;
    std::set<int> presence_used;
    std::set<int> activity_used;
    bool time_used = false;
};

struct World {
    std::vector<int> presence;
    std::vector<int> activity;
    int moment = kUnassigned;
    std::vector<int> measure;
};

Truth of(bool b)
{
    return b ? Truth::True : Truth::False;
}

std::vector<int> residents_of(const Subject& s, const HomeConfig& config)
{
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(config.residents.size()); ++i) {
        const auto& r = config.residents[i];
        bool hit = false;
        switch (s.kind) {
        case Subject::Kind::Resident: hit = iequals(r.name, s.name); break;
        case Subject::Kind::Role: hit = config.has_role(r, s.name); break;
        case Subject::Kind::AnyResident:
        case Subject::Kind::AllResidents: hit = true; break;
        }
        if (hit)
            out.push_back(i);
    }
    return out;
}

std::vector<std::string> sensed_rooms(const std::string& quantity, const HomeConfig& config)
{
    std::vector<std::string> out;
    for (const auto& room : config.rooms)
        for (const auto& s : config.sensors)
            if (!s.meter && iequals(s.room, room) && iequals(s.quantity, quantity)) {
                out.push_back(room);
                break;
            }
    return out;
}

bool is_meter(const std::string& quantity, const HomeConfig& config)
{
    return std::any_of(config.sensors.begin(), config.sensors.end(),
                       [&](const auto& s) { return s.meter && iequals(s.quantity, quantity); });
}

/// Rooms a comparison reads; empty room name stands for a meter.
std::vector<std::string> comparison_rooms(const Comparison& c, const HomeConfig& config)
{
    const auto* decl = config.variable(c.variable);
    if (!decl)
        return {};
    if (is_meter(decl->quantity, config))
        return {""};
    Scope scope = c.scope.value_or(Scope::home());
    if (scope.kind == Scope::Kind::Room)
        return {scope.name};
    if (scope.kind == Scope::Kind::ResidentRoom) {
        auto owned = config.owned_room(scope.name);
        return owned ? std::vector<std::string>{*owned} : std::vector<std::string>{};
    }
    return sensed_rooms(decl->quantity, config);
}

void collect(const ConditionNode& n, const HomeConfig& config, Space& space,
             std::map<std::pair<std::string, std::string>, std::set<double>>& thresholds, std::set<int>& minutes)
{
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Logical>) {
                for (const auto& c : x.children)
                    collect(c, config, space, thresholds, minutes);
            } else if constexpr (std::is_same_v<T, Presence>) {
                for (int i : residents_of(x.subject, config))
                    space.presence_used.insert(i);
            } else if constexpr (std::is_same_v<T, ActivityAtom>) {
                for (int i : residents_of(x.subject, config)) {
                    space.presence_used.insert(i);
                    space.activity_used.insert(i);
                }
            } else if constexpr (std::is_same_v<T, TimeAtom>) {
                space.time_used = true;
                if (x.minute_of_day)
                    minutes.insert(*x.minute_of_day);
            } else if constexpr (std::is_same_v<T, Comparison>) {
                const auto* decl = config.variable(x.variable);
                if (!decl)
                    return;
                for (const auto& room : comparison_rooms(x, config)) {
                    auto& t = thresholds[{room, decl->quantity}];
                    t.insert(x.value - 0.5);
                    t.insert(x.value);
                    t.insert(x.value + 0.5);
                }
            }
        },
        n.node);
}

/// Calendar day classes that actually occur, each paired with minutes that
/// straddle every period boundary and clock literal.
std::vector<TimeContext> representative_moments(const HomeConfig& config, const std::set<int>& literal_minutes)
{
    std::set<int> minutes{0, 359, 360, 719, 720, 1079, 1080, 1319, 1320, 1439};
    for (int m : literal_minutes)
        for (int d : {-1, 0, 1})
            if (m + d >= 0 && m + d < 1440)
                minutes.insert(m + d);

    std::set<int> years{2024, 2025};
    for (const auto& h : config.calendar.holidays)
        if (h.size() >= 4)
            years.insert(std::stoi(h.substr(0, 4)));

    std::set<std::tuple<bool, bool, bool, bool, int, int>> seen;
    std::vector<TimeContext> days;
    for (int y : years) {
        SimTime t = parse_iso_time(std::to_string(y) + "-01-01");
        for (int d = 0; d < 366; ++d, t += 86400) {
            auto tc = make_time_context(t, config.calendar);
            if (civil_date(t).year != y)
                break;
            auto key = std::tuple{tc.weekend, tc.holiday, tc.xmas, tc.easter, static_cast<int>(tc.season), tc.month};
            if (seen.insert(key).second)
                days.push_back(tc);
        }
    }
    std::vector<TimeContext> out;
    for (const auto& day : days)
        for (int m : minutes) {
            auto tc = day;
            tc.clock += m * 60;
            tc.minute = m;
            out.push_back(tc);
        }
    return out;
}

std::vector<double> representatives(const std::set<double>& points, const std::optional<ContinuousDomain>& range)
{
    std::vector<double> pts(points.begin(), points.end());
    std::vector<double> out;
    if (pts.empty())
        return out;
    out.push_back(pts.front() - 1);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        out.push_back(pts[i]);
        if (i + 1 < pts.size())
            out.push_back((pts[i] + pts[i + 1]) / 2);
    }
    out.push_back(pts.back() + 1);
    if (range) {
        std::erase_if(out, [&](double v) { return v < range->min || v > range->max; });
        out.push_back(range->min);
        out.push_back(range->max);
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
    }
    return out;
}

struct PartialEvaluator {
    const Space& space;
    const World& world;
    const HomeConfig& config;

    template <class Pred>
    Truth quantify(const Subject& s, Pred pred) const
    {
        auto who = residents_of(s, config);
        if (s.kind == Subject::Kind::Resident)
            return who.empty() ? Truth::Unknown : pred(who.front());
        bool all = s.kind == Subject::Kind::AllResidents;
        Truth acc = all ? Truth::True : Truth::False;
        for (int i : who)
            acc = all ? truth_and(acc, pred(i)) : truth_or(acc, pred(i));
        return acc;
    }

    Truth operator()(const Logical& l) const
    {
        if (l.op == LogicOp::Not)
            return l.children.empty() ? Truth::Unknown : truth_not(eval(l.children.front()));
        Truth acc = l.op == LogicOp::And ? Truth::True : Truth::False;
        for (const auto& c : l.children) {
            acc = l.op == LogicOp::And ? truth_and(acc, eval(c)) : truth_or(acc, eval(c));
            if ((l.op == LogicOp::And && acc == Truth::False) || (l.op == LogicOp::Or && acc == Truth::True))
                break;
        }
        return acc;
    }

    Truth operator()(const Presence& p) const
    {
        return quantify(p.subject, [&](int i) {
            int at = world.presence[i];
            if (at == kUnassigned)
                return Truth::Unknown;
            if (at == kNone)
                return Truth::False;
            const auto& room = config.rooms[at];
            switch (p.location.kind) {
            case Scope::Kind::Home: return Truth::True;
            case Scope::Kind::Room: return of(iequals(room, p.location.name));
            case Scope::Kind::ResidentRoom: {
                auto owned = config.owned_room(p.location.name);
                return of(owned && iequals(room, *owned));
            }
            }
            return Truth::Unknown;
        });
    }

    Truth operator()(const ActivityAtom& a) const
    {
        return quantify(a.subject, [&](int i) {
            int at = world.presence[i];
            int act = world.activity[i];
            if (at == kNone || act == kNone)
                return Truth::False;
            if (at == kUnassigned || act == kUnassigned)
                return Truth::Unknown;
            return of(iequals(space.activities[act], a.activity));
        });
    }

    Truth operator()(const TimeAtom& t) const
    {
        if (world.moment == kUnassigned)
            return Truth::Unknown;
        const auto& tc = space.moments[world.moment];
        if (t.minute_of_day)
            return of(tc.minute == *t.minute_of_day);
        if (t.keyword) {
            auto v = time_keyword_holds(*t.keyword, tc);
            return v ? of(*v) : Truth::Unknown;
        }
        return Truth::Unknown;
    }

    Truth operator()(const Comparison& c) const
    {
        const auto* decl = config.variable(c.variable);
        if (!decl)
            return Truth::Unknown;
        auto rooms = comparison_rooms(c, config);
        if (rooms.empty())
            return Truth::Unknown;
        Truth acc = Truth::False;
        for (const auto& room : rooms) {
            Truth t = Truth::Unknown;
            for (std::size_t m = 0; m < space.measures.size(); ++m) {
                const auto& ms = space.measures[m];
                if (ms.room == room && iequals(ms.quantity, decl->quantity)) {
                    int v = world.measure[m];
                    if (v != kUnassigned)
                        t = of(compare_value(c.op, ms.values[v], c.value));
                }
            }
            acc = truth_or(acc, t);
        }
        return acc;
    }

    Truth eval(const ConditionNode& n) const { return std::visit(*this, n.node); }
};

std::string describe(const Space& space, const World& w, const HomeConfig& config)
{
    std::vector<std::string> parts;
    for (int i : space.presence_used) {
        int at = w.presence[i];
        if (at == kUnassigned)
            continue;
        std::string s = space.residents[i] + (at == kNone ? " away" : " in " + config.rooms[at]);
        if (at != kNone && space.activity_used.count(i) && w.activity[i] >= 0)
            s += " " + space.activities[w.activity[i]];
        parts.push_back(s);
    }
    if (w.moment != kUnassigned) {
        const auto& tc = space.moments[w.moment];
        char hm[8];
        std::snprintf(hm, sizeof hm, "%02d:%02d", tc.minute / 60, tc.minute % 60);
        std::string s = std::string(to_string(tc.season)) + " month " + std::to_string(tc.month) + " " +
                        std::string(to_string(tc.day_type())) + " " + hm;
        if (tc.xmas)
            s += " Xmas";
        if (tc.easter)
            s += " Easter";
        parts.push_back(s);
    }
    for (std::size_t m = 0; m < space.measures.size(); ++m) {
        if (w.measure[m] == kUnassigned)
            continue;
        const auto& ms = space.measures[m];
        parts.push_back(ms.quantity + (ms.room.empty() ? "" : " in " + ms.room) + " = " +
                        format_number(ms.values[w.measure[m]]));
    }
    if (parts.empty())
        return "always";
    std::string out;
    for (const auto& p : parts)
        out += (out.empty() ? "" : "; ") + p;
    return out;
}

} // namespace

Overlap condition_overlap(const ConditionNode& a, const ConditionNode& b, const HomeConfig& config,
                          std::size_t budget)
{
    Space space;
    for (const auto& r : config.residents)
        space.residents.push_back(r.name);
    space.activities = config.keywords.names(KeywordCategory::Activity);
    std::map<std::pair<std::string, std::string>, std::set<double>> thresholds;
    std::set<int> minutes;
    collect(a, config, space, thresholds, minutes);
    collect(b, config, space, thresholds, minutes);
    if (space.time_used)
        space.moments = representative_moments(config, minutes);
    for (const auto& [key, pts] : thresholds) {
        const auto* var = config.variable_for(key.second, VariableKind::Measured);
        Measure m{key.first, key.second, representatives(pts, var ? var->range : std::nullopt)};
        if (!m.values.empty())
            space.measures.push_back(std::move(m));
    }

    World w;
    w.presence.assign(space.residents.size(), kUnassigned);
    w.activity.assign(space.residents.size(), kUnassigned);
    w.measure.assign(space.measures.size(), kUnassigned);

    // decision variables: (kind, index)
    enum class Kind { Presence, Activity, Moment, Measure };
    std::vector<std::pair<Kind, int>> vars;
    for (int i : space.presence_used) {
        vars.push_back({Kind::Presence, i});
        if (space.activity_used.count(i))
            vars.push_back({Kind::Activity, i});
    }
    if (space.time_used)
        vars.push_back({Kind::Moment, 0});
    for (int m = 0; m < static_cast<int>(space.measures.size()); ++m)
        vars.push_back({Kind::Measure, m});

    ConditionNode both{Logical{LogicOp::And, {a, b}}};
    PartialEvaluator ev{space, w, config};
    std::size_t visited = 0;
    Overlap result;

    auto slot = [&](Kind k, int i) -> int& {
        switch (k) {
        case Kind::Presence: return w.presence[i];
        case Kind::Activity: return w.activity[i];
        case Kind::Moment: return w.moment;
        case Kind::Measure: break;
        }
        return w.measure[i];
    };
    auto options = [&](Kind k, int i) {
        switch (k) {
        case Kind::Presence: return static_cast<int>(config.rooms.size());
        case Kind::Activity: return static_cast<int>(space.activities.size());
        case Kind::Moment: return static_cast<int>(space.moments.size());
        case Kind::Measure: break;
        }
        return static_cast<int>(space.measures[i].values.size());
    };

    std::function<bool(std::size_t)> search = [&](std::size_t k) -> bool {
        if (++visited > budget) {
            result.exhausted = true;
            return false;
        }
        Truth t = ev.eval(both);
        if (t == Truth::False)
            return false;
        if (t == Truth::True)
            return true;
        if (k == vars.size())
            return false;
        auto [kind, idx] = vars[k];
        int& s = slot(kind, idx);
        int first = kind == Kind::Moment || kind == Kind::Measure ? 0 : kNone;
        for (int v = first; v < options(kind, idx); ++v) {
            s = v;
            if (search(k + 1))
                return true;
            if (result.exhausted)
                break;
        }
        s = kUnassigned;
        return false;
    };

    if (search(0)) {
        result.satisfiable = true;
        result.witness = describe(space, w, config);
    } else if (result.exhausted) {
        result.satisfiable = true; // cannot rule it out
        result.witness = "search budget exhausted";
    }
    return result;
}

namespace {

struct Target {
    std::string variable;
    std::string quantity;
    bool keep = false;
    std::string value;
    KeepBand band;
    std::vector<std::string> rooms;
};

std::vector<Target> targets(const RuleAST& r, const HomeConfig& config)
{
    std::vector<Target> out;
    for (const auto& a : r.actions) {
        const auto* var = written_variable(a);
        if (!var)
            continue;
        Target t;
        t.variable = *var;
        const auto* decl = config.variable(*var);
        t.quantity = decl ? decl->quantity : *var;
        if (const auto* s = std::get_if<SetAction>(&a)) {
            t.value = s->value;
        } else {
            t.keep = true;
            t.band = KeepBand::from(std::get<KeepAction>(a).target);
        }
        t.rooms = resolve_scope(*action_scope(a), *var, config);
        std::sort(t.rooms.begin(), t.rooms.end());
        out.push_back(std::move(t));
    }
    return out;
}

} // namespace

std::optional<Conflict> conflict_between(const RuleAST& a, const RuleAST& b, const HomeConfig& config)
{
    std::optional<Conflict> found;
    for (const auto& x : targets(a, config)) {
        for (const auto& y : targets(b, config)) {
            if (!iequals(x.quantity, y.quantity))
                continue;
            std::vector<std::string> shared;
            std::set_intersection(x.rooms.begin(), x.rooms.end(), y.rooms.begin(), y.rooms.end(),
                                  std::back_inserter(shared));
            if (shared.empty())
                continue;
            std::string reason;
            if (x.keep != y.keep)
                reason = "SetVersusKeep";
            else if (!x.keep && !iequals(x.value, y.value))
                reason = "DisjointValues";
            else if (x.keep && x.band.intersect(y.band).empty())
                reason = "DisjointBands";
            if (reason.empty())
                continue;
            if (!found) {
                auto overlap = condition_overlap(a.condition, b.condition, config);
                if (!overlap.satisfiable)
                    return std::nullopt; // no action pair can clash if the rules never co-fire
                found = Conflict{a.id, b.id, x.variable, shared, reason, overlap.witness, overlap.exhausted};
            }
            return found;
        }
    }
    return found;
}

std::vector<Conflict> detect_conflicts(const RuleAST& incoming, const std::vector<RuleAST>& script,
                                       const HomeConfig& config)
{
    std::vector<Conflict> out;
    for (const auto& r : script) {
        if (r.id == incoming.id)
            continue;
        if (auto c = conflict_between(incoming, r, config))
            out.push_back(std::move(*c));
    }
    return out;
}

} // namespace hearth
