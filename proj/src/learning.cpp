#include "hearth/learning.hpp"

#include <algorithm>

#include "hearth/error.hpp"

namespace hearth {

using nlohmann::json;

namespace {

constexpr int kFree = -1;
constexpr double kMaxEnumeration = 1 << 22;

} // namespace

std::vector<NetVariable> cause_variables(const EventSchema& schema)
{
    std::vector<NetVariable> out;
    for (const auto& v : schema.variables())
        if (v.role != SchemaVariable::Role::Actuator)
            out.push_back(NetVariable{v.name, v.states});
    return out;
}

std::vector<NetVariable> effect_variables(const EventSchema& schema)
{
    std::vector<NetVariable> out;
    for (const auto& v : schema.variables())
        if (v.role == SchemaVariable::Role::Actuator)
            out.push_back(NetVariable{v.name, v.states});
    return out;
}

BayesNet::BayesNet(std::vector<NetVariable> causes, std::vector<NetVariable> effects, double smoothing)
    : causes_(std::move(causes)), effects_(std::move(effects)), smoothing_(smoothing)
{
    for (const auto* group : {&causes_, &effects_})
        for (const auto& v : *group)
            if (v.states.empty())
                throw Error(ErrorCode::SchemaMismatch, "variable '" + v.name + "' has no states");
    for (const auto& c : causes_)
        cause_counts_.emplace_back(c.states.size(), 0);
}

BayesNet BayesNet::from_schema(const EventSchema& schema, double smoothing)
{
    return BayesNet(cause_variables(schema), effect_variables(schema), smoothing);
}

BayesNet BayesNet::estimate(const std::vector<EventRecord>& log, std::vector<NetVariable> causes,
                            std::vector<NetVariable> effects, double smoothing)
{
    if (log.empty())
        throw Error(ErrorCode::EmptyLog, "no records to estimate from");
    BayesNet net(std::move(causes), std::move(effects), smoothing);
    for (const auto& r : log)
        net.observe(r);
    return net;
}

int BayesNet::state_index(const NetVariable& v, const std::string& state)
{
    auto it = std::find(v.states.begin(), v.states.end(), state);
    return it == v.states.end() ? -1 : static_cast<int>(it - v.states.begin());
}

int BayesNet::cause_index(const std::string& name) const
{
    for (std::size_t i = 0; i < causes_.size(); ++i)
        if (causes_[i].name == name)
            return static_cast<int>(i);
    return -1;
}

int BayesNet::effect_index(const std::string& name) const
{
    for (std::size_t i = 0; i < effects_.size(); ++i)
        if (effects_[i].name == name)
            return static_cast<int>(i);
    return -1;
}

bool BayesNet::is_cause(const std::string& name) const
{
    return cause_index(name) >= 0;
}

bool BayesNet::is_effect(const std::string& name) const
{
    return effect_index(name) >= 0;
}

void BayesNet::observe(const EventRecord& r)
{
    auto state_of = [&](const NetVariable& v) {
        auto it = r.values.find(v.name);
        if (it == r.values.end())
            throw Error(ErrorCode::SchemaMismatch, "record at t=" + std::to_string(r.t) + " lacks '" + v.name + "'");
        int s = state_index(v, it->second);
        if (s < 0)
            throw Error(ErrorCode::SchemaMismatch, "'" + it->second + "' is not a state of '" + v.name + "'");
        return s;
    };
    std::vector<int> config;
    for (const auto& c : causes_)
        config.push_back(state_of(c));
    std::vector<int> eff;
    for (const auto& e : effects_)
        eff.push_back(state_of(e));

    ++n_;
    for (std::size_t i = 0; i < config.size(); ++i)
        ++cause_counts_[i][config[i]];
    auto& cc = configs_[config];
    if (cc.effect.empty())
        for (const auto& e : effects_)
            cc.effect.emplace_back(e.states.size(), 0);
    ++cc.n;
    for (std::size_t k = 0; k < eff.size(); ++k)
        ++cc.effect[k][eff[k]];
}

double BayesNet::theta_cause(int c, int s) const
{
    double k = static_cast<double>(causes_[c].states.size());
    double den = static_cast<double>(n_) + smoothing_ * k;
    if (den == 0.0)
        return 1.0 / k;
    return (static_cast<double>(cause_counts_[c][s]) + smoothing_) / den;
}

double BayesNet::theta_effect(int e, int s, const ConfigCounts* cc) const
{
    double k = static_cast<double>(effects_[e].states.size());
    double d_pa = cc ? static_cast<double>(cc->n) : 0.0;
    double den = d_pa + smoothing_ * k;
    if (den == 0.0)
        return 1.0 / k;
    double d = cc ? static_cast<double>(cc->effect[e][s]) : 0.0;
    return (d + smoothing_) / den;
}

double BayesNet::config_probability(const std::vector<int>& config) const
{
    double p = 1.0;
    for (std::size_t i = 0; i < config.size(); ++i)
        if (config[i] != kFree)
            p *= theta_cause(static_cast<int>(i), config[i]);
    return p;
}

std::vector<int> BayesNet::resolve(const Assignment& a, bool allow_effects, std::vector<int>& effect_states) const
{
    std::vector<int> config(causes_.size(), kFree);
    effect_states.assign(effects_.size(), kFree);
    for (const auto& [name, state] : a) {
        if (int c = cause_index(name); c >= 0) {
            int s = state_index(causes_[c], state);
            if (s < 0)
                throw Error(ErrorCode::SchemaMismatch, "'" + state + "' is not a state of '" + name + "'");
            config[c] = s;
        } else if (int e = effect_index(name); e >= 0) {
            if (!allow_effects)
                throw Error(ErrorCode::EvidenceOnEffect, "'" + name + "' is an effect variable");
            int s = state_index(effects_[e], state);
            if (s < 0)
                throw Error(ErrorCode::SchemaMismatch, "'" + state + "' is not a state of '" + name + "'");
            effect_states[e] = s;
        } else {
            throw Error(ErrorCode::SchemaMismatch, "unknown variable '" + name + "'");
        }
    }
    return config;
}

namespace {

std::vector<std::string> parent_names(const std::vector<NetVariable>& causes)
{
    std::vector<std::string> out;
    for (const auto& c : causes)
        out.push_back(c.name);
    return out;
}

} // namespace

std::uint64_t BayesNet::count(const std::string& var, const std::string& value, const Assignment& parents) const
{
    if (int c = cause_index(var); c >= 0) {
        int s = state_index(causes_[c], value);
        return s < 0 ? 0 : cause_counts_[c][s];
    }
    int e = effect_index(var);
    if (e < 0)
        throw Error(ErrorCode::SchemaMismatch, "unknown variable '" + var + "'");
    int s = state_index(effects_[e], value);
    if (s < 0)
        return 0;
    std::vector<int> unused;
    auto config = resolve(parents, false, unused);
    std::uint64_t total = 0;
    for (const auto& [cfg, cc] : configs_) {
        bool match = true;
        for (std::size_t i = 0; i < cfg.size() && match; ++i)
            match = config[i] == kFree || config[i] == cfg[i];
        if (match)
            total += cc.effect[e][s];
    }
    return total;
}

std::uint64_t BayesNet::parent_count(const std::string& var, const Assignment& parents) const
{
    if (cause_index(var) >= 0)
        return n_;
    if (effect_index(var) < 0)
        throw Error(ErrorCode::SchemaMismatch, "unknown variable '" + var + "'");
    std::vector<int> unused;
    auto config = resolve(parents, false, unused);
    std::uint64_t total = 0;
    for (const auto& [cfg, cc] : configs_) {
        bool match = true;
        for (std::size_t i = 0; i < cfg.size() && match; ++i)
            match = config[i] == kFree || config[i] == cfg[i];
        if (match)
            total += cc.n;
    }
    return total;
}

double BayesNet::theta(const std::string& var, const std::string& value, const Assignment& parents) const
{
    if (int c = cause_index(var); c >= 0) {
        int s = state_index(causes_[c], value);
        if (s < 0)
            throw Error(ErrorCode::SchemaMismatch, "'" + value + "' is not a state of '" + var + "'");
        return theta_cause(c, s);
    }
    int e = effect_index(var);
    if (e < 0)
        throw Error(ErrorCode::SchemaMismatch, "unknown variable '" + var + "'");
    int s = state_index(effects_[e], value);
    if (s < 0)
        throw Error(ErrorCode::SchemaMismatch, "'" + value + "' is not a state of '" + var + "'");
    std::vector<int> unused;
    auto config = resolve(parents, false, unused);
    if (std::count(config.begin(), config.end(), kFree))
        throw Error(ErrorCode::PartialAssignment, "theta of an effect needs every parent: " +
                                                      [&] {
                                                          std::string s;
                                                          for (const auto& n : parent_names(causes_))
                                                              s += n + " ";
                                                          return s;
                                                      }());
    auto it = configs_.find(config);
    return theta_effect(e, s, it == configs_.end() ? nullptr : &it->second);
}

double BayesNet::joint_probability(const Assignment& full) const
{
    std::vector<int> eff;
    auto config = resolve(full, true, eff);
    if (std::count(config.begin(), config.end(), kFree) || std::count(eff.begin(), eff.end(), kFree))
        throw Error(ErrorCode::PartialAssignment, "joint probability needs a value for every variable");
    auto it = configs_.find(config);
    const ConfigCounts* cc = it == configs_.end() ? nullptr : &it->second;
    double p = config_probability(config);
    for (std::size_t e = 0; e < eff.size(); ++e)
        p *= theta_effect(static_cast<int>(e), eff[e], cc);
    return p;
}

double BayesNet::probability_of_evidence(const Assignment& evidence) const
{
    std::vector<int> eff;
    auto config = resolve(evidence, true, eff);
    // causes are independent roots, so the cause part factorizes
    double cause_mass = config_probability(config);
    double unseen_factor = 1.0;
    bool any_effect = false;
    for (std::size_t e = 0; e < eff.size(); ++e)
        if (eff[e] != kFree) {
            any_effect = true;
            unseen_factor *= theta_effect(static_cast<int>(e), eff[e], nullptr);
        }
    if (!any_effect)
        return cause_mass;

    double seen_mass = 0.0;
    double seen_value = 0.0;
    for (const auto& [cfg, cc] : configs_) {
        bool match = true;
        for (std::size_t i = 0; i < cfg.size() && match; ++i)
            match = config[i] == kFree || config[i] == cfg[i];
        if (!match)
            continue;
        // probability of the free causes taking this configuration's values
        double p = 1.0;
        for (std::size_t i = 0; i < cfg.size(); ++i)
            p *= theta_cause(static_cast<int>(i), cfg[i]);
        seen_mass += p;
        double v = p;
        for (std::size_t e = 0; e < eff.size(); ++e)
            if (eff[e] != kFree)
                v *= theta_effect(static_cast<int>(e), eff[e], &cc);
        seen_value += v;
    }
    return seen_value + std::max(0.0, cause_mass - seen_mass) * unseen_factor;
}

double BayesNet::posterior_marginal(const std::string& effect, const std::string& value,
                                    const Assignment& cause_evidence) const
{
    int e = effect_index(effect);
    if (e < 0) {
        if (cause_index(effect) >= 0)
            throw Error(ErrorCode::EvidenceOnEffect, "'" + effect + "' is a cause, not an effect");
        throw Error(ErrorCode::SchemaMismatch, "unknown variable '" + effect + "'");
    }
    std::vector<int> unused;
    resolve(cause_evidence, false, unused);
    double den = probability_of_evidence(cause_evidence);
    if (den <= 0.0)
        throw Error(ErrorCode::ZeroEvidenceProbability, "evidence has probability zero");
    auto with = cause_evidence;
    with[effect] = value;
    if (state_index(effects_[e], value) < 0)
        throw Error(ErrorCode::SchemaMismatch, "'" + value + "' is not a state of '" + effect + "'");
    return probability_of_evidence(with) / den;
}

Assignment BayesNet::most_probable_explanation(const Assignment& effect_evidence) const
{
    std::vector<int> eff;
    auto given = resolve(effect_evidence, true, eff);
    for (std::size_t i = 0; i < given.size(); ++i)
        if (given[i] != kFree)
            throw Error(ErrorCode::EvidenceOnEffect, "explanation evidence must be on effects; '" +
                                                         causes_[i].name + "' is a cause");
    double space = 1.0;
    for (const auto& c : causes_)
        space *= static_cast<double>(c.states.size());
    if (space > kMaxEnumeration)
        throw Error(ErrorCode::TooLarge, "cause space too large to enumerate");

    std::vector<int> config(causes_.size(), 0);
    std::vector<int> best;
    double best_p = -1.0;
    while (true) {
        auto it = configs_.find(config);
        const ConfigCounts* cc = it == configs_.end() ? nullptr : &it->second;
        double p = config_probability(config);
        for (std::size_t e = 0; e < eff.size(); ++e)
            if (eff[e] != kFree)
                p *= theta_effect(static_cast<int>(e), eff[e], cc);
        if (p > best_p) {
            best_p = p;
            best = config;
        }
        // odometer: the last variable turns fastest, giving lexicographic order
        int i = static_cast<int>(config.size()) - 1;
        while (i >= 0 && ++config[i] == static_cast<int>(causes_[i].states.size()))
            config[i--] = 0;
        if (i < 0)
            break;
    }
    if (best_p <= 0.0)
        throw Error(ErrorCode::ZeroEvidenceProbability, "evidence has probability zero");
    Assignment out;
    for (std::size_t i = 0; i < best.size(); ++i)
        out[causes_[i].name] = causes_[i].states[best[i]];
    return out;
}

bool BayesNet::same_counts(const BayesNet& o) const
{
    return causes_ == o.causes_ && effects_ == o.effects_ && n_ == o.n_ && cause_counts_ == o.cause_counts_ &&
           configs_ == o.configs_;
}

json BayesNet::to_json() const
{
    json causes = json::array();
    for (std::size_t i = 0; i < causes_.size(); ++i) {
        json counts = json::object();
        for (std::size_t s = 0; s < causes_[i].states.size(); ++s)
            counts[causes_[i].states[s]] = cause_counts_[i][s];
        causes.push_back(json{{"name", causes_[i].name}, {"counts", counts}});
    }
    json effects = json::array();
    for (const auto& e : effects_)
        effects.push_back(json{{"name", e.name}, {"states", e.states}});
    return json{{"records", n_},
                {"smoothing", smoothing_},
                {"causes", causes},
                {"effects", effects},
                {"parent_configurations", configs_.size()}};
}

} // namespace hearth
