#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hearth/state_flow.hpp"

namespace hearth {

struct NetVariable {
    std::string name;
    std::vector<std::string> states;

    bool operator==(const NetVariable&) const = default;
};

/// Variable name -> state.
using Assignment = std::map<std::string, std::string>;

/// Discrete network whose causes are independent roots and whose effects
/// each have every cause as a parent. Parameters are count tables with
/// additive smoothing; configurations never seen are stored implicitly.
class BayesNet {
public:
    BayesNet(std::vector<NetVariable> causes, std::vector<NetVariable> effects, double smoothing = 1.0);

    /// Causes are the context, sensor, presence and activity variables of
    /// the schema; effects are its actuator variables.
    static BayesNet from_schema(const EventSchema& schema, double smoothing = 1.0);

    /// Batch count over a log. Throws EmptyLog or SchemaMismatch.
    static BayesNet estimate(const std::vector<EventRecord>& log, std::vector<NetVariable> causes,
                             std::vector<NetVariable> effects, double smoothing = 1.0);

    /// Online update with one record. Throws SchemaMismatch when a variable
    /// is missing or holds an unknown state.
    void observe(const EventRecord& record);

    /// D(x, pa(x)): records with var = value and the given parent states.
    std::uint64_t count(const std::string& var, const std::string& value, const Assignment& parents = {}) const;
    /// D(pa(x)).
    std::uint64_t parent_count(const std::string& var, const Assignment& parents = {}) const;
    /// (D(x, pa) + s) / (D(pa) + s |X|); uniform when the denominator is zero.
    double theta(const std::string& var, const std::string& value, const Assignment& parents = {}) const;

    /// Chain rule over a full assignment. Throws PartialAssignment.
    double joint_probability(const Assignment& full) const;
    /// Sum of the joint over completions of a partial assignment.
    double probability_of_evidence(const Assignment& evidence) const;
    /// P(effect = value | evidence over causes). Throws EvidenceOnEffect or
    /// ZeroEvidenceProbability.
    double posterior_marginal(const std::string& effect, const std::string& value,
                              const Assignment& cause_evidence) const;
    /// Cause assignment maximizing the joint with the effect evidence; ties
    /// go to the lexicographically first state indices in variable order.
    /// Throws ZeroEvidenceProbability, EvidenceOnEffect (evidence on a
    /// cause) or TooLarge.
    Assignment most_probable_explanation(const Assignment& effect_evidence) const;

    const std::vector<NetVariable>& causes() const { return causes_; }
    const std::vector<NetVariable>& effects() const { return effects_; }
    double smoothing() const { return smoothing_; }
    std::uint64_t records() const { return n_; }
    bool is_cause(const std::string& name) const;
    bool is_effect(const std::string& name) const;

    /// Counts only; two nets built from the same records compare equal.
    bool same_counts(const BayesNet& o) const;
    nlohmann::json to_json() const;

private:
    struct ConfigCounts {
        std::uint64_t n = 0;
        std::vector<std::vector<std::uint64_t>> effect; // [effect][state]

        bool operator==(const ConfigCounts&) const = default;
    };

    int cause_index(const std::string& name) const;
    int effect_index(const std::string& name) const;
    static int state_index(const NetVariable& v, const std::string& state);
    double theta_cause(int c, int s) const;
    double theta_effect(int e, int s, const ConfigCounts* cc) const;
    double config_probability(const std::vector<int>& config) const;
    std::vector<int> resolve(const Assignment& a, bool effects, std::vector<int>& effect_states) const;

    std::vector<NetVariable> causes_;
    std::vector<NetVariable> effects_;
    double smoothing_;
    std::uint64_t n_ = 0;
    std::vector<std::vector<std::uint64_t>> cause_counts_;
    std::map<std::vector<int>, ConfigCounts> configs_;
};

/// Records from a repository replay, for batch estimation.
std::vector<NetVariable> cause_variables(const EventSchema& schema);
std::vector<NetVariable> effect_variables(const EventSchema& schema);

} // namespace hearth
