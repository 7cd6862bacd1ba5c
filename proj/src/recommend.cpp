#include "hearth/recommend.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <unordered_map>

#include "hearth/error.hpp"
#include "hearth/rule_parser.hpp"

namespace hearth {

using nlohmann::json;

std::string_view to_string(RecommendationStatus s)
{
    switch (s) {
    case RecommendationStatus::Proposed: return "Proposed";
    case RecommendationStatus::Rejected: return "Rejected";
    case RecommendationStatus::Promoted: return "Promoted";
    }
    return "?";
}

namespace {

RecommendationStatus status_from(const std::string& s)
{
    for (auto v : {RecommendationStatus::Proposed, RecommendationStatus::Rejected, RecommendationStatus::Promoted})
        if (to_string(v) == s)
            return v;
    throw Error(ErrorCode::SchemaMismatch, "unknown recommendation status '" + s + "'");
}

std::string fnv_hex(std::string_view s)
{
    std::uint32_t h = 2166136261u;
    for (unsigned char c : s) {
        h ^= c;
        h *= 16777619u;
    }
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", h);
    return buf;
}

// One cause-variable state as a condition, or nothing when the state has no
// atom in the rule language.
std::optional<ConditionNode> cause_atom(const SchemaVariable& v, const std::string& state)
{
    using Role = SchemaVariable::Role;
    auto resident = [](const std::string& name) { return Subject{Subject::Kind::Resident, name}; };
    auto negate = [](ConditionNode n) {
        return ConditionNode{Logical{LogicOp::Not, {std::move(n)}}};
    };
    switch (v.role) {
    case Role::Context:
        if (v.name == "DayType" && state == "Weekday")
            return ConditionNode{Logical{LogicOp::And,
                                         {negate(ConditionNode{TimeAtom{std::string("Weekend"), std::nullopt}}),
                                          negate(ConditionNode{TimeAtom{std::string("Holiday"), std::nullopt}})}}};
        return ConditionNode{TimeAtom{state, std::nullopt}};
    case Role::Presence: {
        auto sep = v.name.find("_IN_");
        auto who = v.name.substr(0, sep);
        auto where = v.name.substr(sep + 4);
        Presence p{resident(who), where == "Home" ? Scope::home() : Scope{Scope::Kind::Room, where}};
        ConditionNode atom{p};
        return state == "true" ? atom : negate(atom);
    }
    case Role::Activity: {
        if (state == "none")
            return std::nullopt;
        auto who = v.name.substr(0, v.name.size() - std::string("_ACTIVITY").size());
        return ConditionNode{ActivityAtom{resident(who), state}};
    }
    case Role::Sensor: {
        if (state == "unknown" || !v.range)
            return std::nullopt;
        Discretizer d{v.range->min, v.range->max, v.bins};
        int b = std::stoi(state);
        std::optional<Scope> scope;
        if (!v.room.empty())
            scope = Scope{Scope::Kind::Room, v.room};
        std::vector<ConditionNode> parts;
        if (b > 0)
            parts.push_back(ConditionNode{Comparison{v.source, scope, CompareOp::Above, d.lower_edge(b)}});
        if (b < v.bins - 1)
            parts.push_back(ConditionNode{Comparison{v.source, scope, CompareOp::Below, d.upper_edge(b)}});
        if (parts.size() == 1)
            return parts.front();
        return ConditionNode{Logical{LogicOp::And, std::move(parts)}};
    }
    case Role::Actuator:
        return std::nullopt; // never a cause
    }
    return std::nullopt;
}

std::optional<ActionNode> effect_action(const SchemaVariable& v, const std::string& state)
{
    Scope scope{Scope::Kind::Room, v.room};
    if (v.range) {
        if (state == "off")
            return std::nullopt;
        Discretizer d{v.range->min, v.range->max, v.bins};
        int b = std::stoi(state);
        return ActionNode{KeepAction{v.source, scope, KeepTarget::between(d.lower_edge(b), d.upper_edge(b))}};
    }
    return ActionNode{SetAction{v.source, scope, state}};
}

ConditionNode conjunction(std::vector<ConditionNode> parts)
{
    if (parts.size() == 1)
        return std::move(parts.front());
    std::vector<ConditionNode> flat;
    for (auto& p : parts) {
        auto* l = std::get_if<Logical>(&p.node);
        if (l && l->op == LogicOp::And)
            for (auto& c : l->children)
                flat.push_back(std::move(c));
        else
            flat.push_back(std::move(p));
    }
    return ConditionNode{Logical{LogicOp::And, std::move(flat)}};
}

struct Atom {
    int var;   // schema index
    int state; // index into the variable's states
};

struct Tally {
    std::uint32_t n = 0;
    std::vector<std::uint32_t> effect; // flattened over every actuator state
};

} // namespace

json Recommendation::to_json() const
{
    json c = json::array();
    for (const auto& [var, state] : causes)
        c.push_back(json{{"variable", var}, {"state", state}});
    return json{{"id", id},           {"pattern", pattern}, {"causes", c},
                {"effect", effect},   {"effect_state", effect_state},
                {"rule", text},       {"owner", rule.owner},
                {"score", score},     {"prior", prior},
                {"support", support}, {"hits", hits},
                {"threshold", threshold}, {"status", std::string(to_string(status))}};
}

std::vector<Recommendation> recommend_rules(const std::vector<EventRecord>& log, const EventSchema& schema,
                                            const HomeConfig& config, const RecommendOptions& options,
                                            const std::map<std::string, double>& thresholds)
{
    (void)config;
    using Role = SchemaVariable::Role;
    if (log.empty())
        return {};
    const auto& vars = schema.variables();

    std::vector<Atom> atoms;
    std::map<std::pair<int, int>, int> atom_of;
    std::vector<int> effects; // schema indices of actuators
    std::vector<int> offset;  // effect -> first flattened state
    int effect_states = 0;
    for (int i = 0; i < static_cast<int>(vars.size()); ++i) {
        const auto& v = vars[i];
        if (v.role == Role::Actuator) {
            effects.push_back(i);
            offset.push_back(effect_states);
            effect_states += static_cast<int>(v.states.size());
            continue;
        }
        for (int s = 0; s < static_cast<int>(v.states.size()); ++s)
            if (cause_atom(v, v.states[s])) {
                atom_of[{i, s}] = static_cast<int>(atoms.size());
                atoms.push_back(Atom{i, s});
            }
    }

    auto state_index = [&](int var, const std::string& value) {
        const auto& st = vars[var].states;
        auto it = std::find(st.begin(), st.end(), value);
        if (it == st.end())
            throw Error(ErrorCode::SchemaMismatch, "'" + value + "' is not a state of '" + vars[var].name + "'");
        return static_cast<int>(it - st.begin());
    };

    std::vector<Tally> singles(atoms.size(), Tally{0, std::vector<std::uint32_t>(effect_states, 0)});
    std::unordered_map<std::uint64_t, Tally> pairs;
    std::vector<std::uint32_t> effect_totals(effect_states, 0);
    std::vector<int> present;
    std::vector<int> eff;
    for (const auto& r : log) {
        present.clear();
        eff.clear();
        for (int i = 0; i < static_cast<int>(vars.size()); ++i) {
            auto it = r.values.find(vars[i].name);
            if (it == r.values.end())
                throw Error(ErrorCode::SchemaMismatch, "record lacks '" + vars[i].name + "'");
            int s = state_index(i, it->second);
            if (vars[i].role == Role::Actuator) {
                eff.push_back(offset[eff.size()] + s);
            } else if (auto a = atom_of.find({i, s}); a != atom_of.end()) {
                present.push_back(a->second);
            }
        }
        for (int e : eff)
            ++effect_totals[e];
        for (int a : present) {
            ++singles[a].n;
            for (int e : eff)
                ++singles[a].effect[e];
        }
        if (options.width < 2)
            continue;
        for (std::size_t x = 0; x < present.size(); ++x)
            for (std::size_t y = x + 1; y < present.size(); ++y) {
                auto key = (static_cast<std::uint64_t>(present[x]) << 32) | static_cast<std::uint32_t>(present[y]);
                auto& t = pairs[key];
                if (t.effect.empty())
                    t.effect.assign(effect_states, 0);
                ++t.n;
                for (int e : eff)
                    ++t.effect[e];
            }
    }

    const double n = static_cast<double>(log.size());
    auto pattern_key = [&](const std::vector<int>& pat, int effect, int state) {
        std::string key;
        for (int a : pat) {
            if (!key.empty())
                key += " & ";
            key += vars[atoms[a].var].name + "=" + vars[atoms[a].var].states[atoms[a].state];
        }
        const auto& ev = vars[effects[effect]];
        return key + " => " + ev.name + "=" + ev.states[state];
    };

    std::vector<Recommendation> out;
    std::set<std::string> emitted; // strong single-atom patterns, "atom|effect-state"
    auto consider = [&](const std::vector<int>& pat, const Tally& t) {
        if (t.n < options.support)
            return;
        for (std::size_t k = 0; k < effects.size(); ++k) {
            const auto& ev = vars[effects[k]];
            double card = static_cast<double>(ev.states.size());
            for (int s = 0; s < static_cast<int>(ev.states.size()); ++s) {
                int flat = offset[k] + s;
                auto action = effect_action(ev, ev.states[s]);
                if (!action)
                    continue;
                auto key = pattern_key(pat, static_cast<int>(k), s);
                auto th = thresholds.find(key);
                double gate = th == thresholds.end() ? options.threshold : th->second;
                double quick = (t.effect[flat] + options.smoothing) / (t.n + options.smoothing * card);
                double prior = (effect_totals[flat] + options.smoothing) / (n + options.smoothing * card);
                // a strong single atom covers its refinements even when a raised
                // gate hides it, so rejecting it does not surface wider variants
                if (pat.size() == 1 && quick >= options.threshold - 1e-9 && quick >= prior + options.min_lift - 1e-9)
                    emitted.insert(std::to_string(pat[0]) + "|" + std::to_string(flat));
                if (quick < gate - 1e-9)
                    continue;
                if (pat.size() > 1) {
                    bool redundant = false;
                    for (int a : pat)
                        redundant = redundant || emitted.count(std::to_string(a) + "|" + std::to_string(flat));
                    if (redundant)
                        continue;
                }
                // with evidence on every pattern variable the posterior equals quick
                if (quick < prior + options.min_lift - 1e-9)
                    continue;

                // score in the network whose causes are exactly the pattern variables
                std::vector<NetVariable> causes;
                Assignment evidence;
                for (int a : pat) {
                    const auto& cv = vars[atoms[a].var];
                    causes.push_back(NetVariable{cv.name, cv.states});
                    evidence[cv.name] = cv.states[atoms[a].state];
                }
                auto net = BayesNet::estimate(log, causes, {NetVariable{ev.name, ev.states}}, options.smoothing);
                double score = net.posterior_marginal(ev.name, ev.states[s], evidence);
                if (score < gate || score < prior + options.min_lift)
                    continue;

                Recommendation rec;
                rec.pattern = key;
                rec.id = "rec-" + fnv_hex(key);
                std::vector<ConditionNode> parts;
                for (int a : pat) {
                    const auto& cv = vars[atoms[a].var];
                    rec.causes.emplace_back(cv.name, cv.states[atoms[a].state]);
                    parts.push_back(*cause_atom(cv, cv.states[atoms[a].state]));
                }
                rec.effect = ev.name;
                rec.effect_state = ev.states[s];
                rec.rule.id = rec.id;
                rec.rule.owner = kLearningOwner;
                rec.rule.condition = conjunction(std::move(parts));
                rec.rule.actions = {*action};
                rec.text = format_rule(rec.rule);
                rec.rule.source = rec.text;
                rec.score = score;
                rec.prior = prior;
                rec.support = t.n;
                rec.hits = t.effect[flat];
                rec.threshold = gate;
                out.push_back(std::move(rec));
            }
        }
    };

    for (int a = 0; a < static_cast<int>(atoms.size()); ++a)
        consider({a}, singles[a]);
    if (options.width >= 2) {
        std::vector<std::uint64_t> keys;
        for (const auto& [k, _] : pairs)
            keys.push_back(k);
        std::sort(keys.begin(), keys.end()); // unordered_map order is not stable
        for (auto k : keys)
            consider({static_cast<int>(k >> 32), static_cast<int>(k & 0xffffffffu)}, pairs.at(k));
    }

    std::stable_sort(out.begin(), out.end(), [](const Recommendation& a, const Recommendation& b) {
        if (a.score != b.score)
            return a.score > b.score;
        return a.pattern < b.pattern;
    });
    return out;
}

// --- book -----------------------------------------------------------------------

std::vector<Recommendation> RecommendationBook::refresh(const std::vector<EventRecord>& log,
                                                        const EventSchema& schema, const HomeConfig& config)
{
    auto fresh = recommend_rules(log, schema, config, options_, thresholds_);
    std::set<std::string> seen;
    for (auto& rec : fresh) {
        seen.insert(rec.id);
        auto it = recs_.find(rec.id);
        if (it == recs_.end()) {
            order_.push_back(rec.id);
            recs_.emplace(rec.id, rec);
            continue;
        }
        if (it->second.status == RecommendationStatus::Promoted)
            rec.status = RecommendationStatus::Promoted;
        // a rejected pattern that clears its raised gate is proposed again
        it->second = rec;
    }
    for (auto it = recs_.begin(); it != recs_.end();) {
        if (it->second.status == RecommendationStatus::Proposed && !seen.count(it->first)) {
            order_.erase(std::remove(order_.begin(), order_.end(), it->first), order_.end());
            it = recs_.erase(it);
        } else {
            ++it;
        }
    }
    return proposed();
}

Recommendation RecommendationBook::reject(const std::string& id)
{
    auto it = recs_.find(id);
    if (it == recs_.end())
        throw Error(ErrorCode::UnknownRecommendation, "no recommendation '" + id + "'");
    auto& rec = it->second;
    if (rec.status != RecommendationStatus::Proposed)
        throw Error(ErrorCode::InvalidTransition, "recommendation '" + id + "' is " + std::string(to_string(rec.status)));
    double cur = threshold(rec.pattern);
    thresholds_[rec.pattern] = std::min(1.0, std::max(cur, rec.score + options_.margin));
    rec.status = RecommendationStatus::Rejected;
    rec.threshold = thresholds_[rec.pattern];
    return rec;
}

Recommendation RecommendationBook::promote(const std::string& id)
{
    auto it = recs_.find(id);
    if (it == recs_.end())
        throw Error(ErrorCode::UnknownRecommendation, "no recommendation '" + id + "'");
    if (it->second.status != RecommendationStatus::Proposed)
        throw Error(ErrorCode::InvalidTransition,
                    "recommendation '" + id + "' is " + std::string(to_string(it->second.status)));
    it->second.status = RecommendationStatus::Promoted;
    return it->second;
}

double RecommendationBook::threshold(const std::string& pattern) const
{
    auto it = thresholds_.find(pattern);
    return it == thresholds_.end() ? options_.threshold : it->second;
}

std::optional<Recommendation> RecommendationBook::find(const std::string& id) const
{
    auto it = recs_.find(id);
    if (it == recs_.end())
        return std::nullopt;
    return it->second;
}

std::vector<Recommendation> RecommendationBook::all() const
{
    std::vector<Recommendation> out;
    for (const auto& id : order_)
        out.push_back(recs_.at(id));
    return out;
}

std::vector<Recommendation> RecommendationBook::proposed() const
{
    std::vector<Recommendation> out;
    for (const auto& id : order_)
        if (recs_.at(id).status == RecommendationStatus::Proposed)
            out.push_back(recs_.at(id));
    return out;
}

json RecommendationBook::to_json() const
{
    json recs = json::array();
    for (const auto& r : all())
        recs.push_back(r.to_json());
    return json{{"thresholds", thresholds_}, {"recommendations", recs}};
}

RecommendationBook RecommendationBook::from_json(const json& j, const HomeConfig& config, RecommendOptions options)
{
    RecommendationBook book(options);
    try {
        book.thresholds_ = j.value("thresholds", std::map<std::string, double>{});
        for (const auto& r : j.value("recommendations", json::array())) {
            Recommendation rec;
            rec.id = r.at("id");
            rec.pattern = r.at("pattern");
            for (const auto& c : r.at("causes"))
                rec.causes.emplace_back(c.at("variable"), c.at("state"));
            rec.effect = r.at("effect");
            rec.effect_state = r.at("effect_state");
            rec.text = r.at("rule");
            rec.rule = parse_rule(rec.text, config, rec.id, r.value("owner", std::string(kLearningOwner))).rule;
            rec.score = r.at("score");
            rec.prior = r.value("prior", 0.0);
            rec.support = r.at("support");
            rec.hits = r.at("hits");
            rec.threshold = r.at("threshold");
            rec.status = status_from(r.at("status"));
            book.order_.push_back(rec.id);
            book.recs_.emplace(rec.id, std::move(rec));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("malformed recommendation book: ") + e.what());
    }
    return book;
}

void RecommendationBook::save(const std::string& path) const
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw Error(ErrorCode::Io, "cannot write '" + path + "'");
    out << to_json().dump(2) << '\n';
}

RecommendationBook RecommendationBook::load(const std::string& path, const HomeConfig& config,
                                            RecommendOptions options)
{
    std::ifstream in(path);
    if (!in)
        return RecommendationBook(options);
    try {
        return from_json(json::parse(in), config, options);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::SchemaMismatch, std::string("malformed recommendation book: ") + e.what());
    }
}

} // namespace hearth
