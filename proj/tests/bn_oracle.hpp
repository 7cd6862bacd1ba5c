#pragma once

#include <random>
#include <string>
#include <vector>

#include "hearth/learning.hpp"

namespace hearth::test {

/// Straight from the records: a full joint of independent root causes and
/// effects conditioned on every cause, each table smoothed with s.
struct Oracle {
    std::vector<NetVariable> causes, effects;
    std::vector<EventRecord> log;
    double s;

    double joint(const Assignment& a) const
    {
        double p = 1.0;
        for (const auto& c : causes) {
            double k = static_cast<double>(c.states.size());
            double hits = 0;
            for (const auto& r : log)
                hits += r.values.at(c.name) == a.at(c.name);
            double den = static_cast<double>(log.size()) + s * k;
            p *= den == 0 ? 1.0 / k : (hits + s) / den;
        }
        for (const auto& e : effects) {
            double k = static_cast<double>(e.states.size());
            double parents = 0, hits = 0;
            for (const auto& r : log) {
                bool match = true;
                for (const auto& c : causes)
                    match = match && r.values.at(c.name) == a.at(c.name);
                if (!match)
                    continue;
                ++parents;
                hits += r.values.at(e.name) == a.at(e.name);
            }
            double den = parents + s * k;
            p *= den == 0 ? 1.0 / k : (hits + s) / den;
        }
        return p;
    }

    template <class F>
    void each(F&& f) const
    {
        std::vector<const NetVariable*> vars;
        for (const auto& c : causes)
            vars.push_back(&c);
        for (const auto& e : effects)
            vars.push_back(&e);
        std::vector<std::size_t> idx(vars.size(), 0);
        while (true) {
            Assignment a;
            for (std::size_t i = 0; i < vars.size(); ++i)
                a[vars[i]->name] = vars[i]->states[idx[i]];
            f(a);
            std::size_t i = vars.size();
            while (i > 0) {
                --i;
                if (++idx[i] < vars[i]->states.size())
                    break;
                idx[i] = 0;
                if (i == 0)
                    return;
            }
            if (vars.empty())
                return;
        }
    }

    double evidence(const Assignment& ev) const
    {
        double total = 0;
        each([&](const Assignment& a) {
            for (const auto& [k, v] : ev)
                if (a.at(k) != v)
                    return;
            total += joint(a);
        });
        return total;
    }
};

/// Random net data with some dependence of effects on causes. Odd effects
/// get three states unless binary is set.
inline Oracle random_fixture(std::mt19937& rng, int n_causes, int n_effects, int records, double s,
                             bool binary = false)
{
    Oracle o;
    o.s = s;
    for (int i = 0; i < n_causes; ++i)
        o.causes.push_back(NetVariable{"c" + std::to_string(i), {"a", "b"}});
    for (int i = 0; i < n_effects; ++i)
        o.effects.push_back(NetVariable{"e" + std::to_string(i), i % 2 && !binary
                                                                     ? std::vector<std::string>{"on", "off", "dim"}
                                                                     : std::vector<std::string>{"on", "off"}});
    std::uniform_real_distribution<double> u(0, 1);
    for (int r = 0; r < records; ++r) {
        EventRecord e{r, {}};
        for (const auto& c : o.causes)
            e.values[c.name] = u(rng) < 0.3 ? "a" : "b";
        for (std::size_t i = 0; i < o.effects.size(); ++i) {
            const auto& v = o.effects[i];
            bool driven = e.values[o.causes[i % o.causes.size()].name] == "a";
            std::size_t pick = driven && u(rng) < 0.8 ? 0 : rng() % v.states.size();
            e.values[v.name] = v.states[pick];
        }
        o.log.push_back(e);
    }
    return o;
}

} // namespace hearth::test
