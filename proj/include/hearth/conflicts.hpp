#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hearth/home_model.hpp"
#include "hearth/rule_ast.hpp"

namespace hearth {

struct Conflict {
    std::string rule_a;
    std::string rule_b;
    std::string variable;
    std::vector<std::string> rooms; // shared target rooms
    std::string reason;             // DisjointValues, DisjointBands, SetVersusKeep
    std::string witness;            // a situation in which both rules fire
    bool exhausted = false;         // search budget ran out; reported conservatively
};

/// Whether some situation makes both conditions true at once. Searches
/// presence, activity, representative moments of the calendar and
/// representative measured values, pruning on partial evaluation.
struct Overlap {
    bool satisfiable = false;
    std::string witness;
    bool exhausted = false;
};

Overlap condition_overlap(const ConditionNode& a, const ConditionNode& b, const HomeConfig& config,
                          std::size_t budget = 500000);

/// Symmetric in a and b up to the witness text and rule order.
std::optional<Conflict> conflict_between(const RuleAST& a, const RuleAST& b, const HomeConfig& config);

std::vector<Conflict> detect_conflicts(const RuleAST& incoming, const std::vector<RuleAST>& script,
                                       const HomeConfig& config);

} // namespace hearth
