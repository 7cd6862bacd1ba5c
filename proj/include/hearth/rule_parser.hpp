#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hearth/diagnostic.hpp"
#include "hearth/home_model.hpp"
#include "hearth/rule_ast.hpp"

namespace hearth {

struct ParsedRule {
    RuleAST rule;
    std::vector<Diagnostic> diagnostics; // grammar normalizations applied while parsing
};

/// Parses one rule. Identifiers are resolved against the registry, then
/// against the variables declared in the config. Throws Error with
/// ParseError, UnknownIdentifier, MisplacedVariable, InvalidValue or
/// LexError.
ParsedRule parse_rule(std::string_view text, const KeywordRegistry& registry,
                      const HomeConfig& config, std::string id = "r1",
                      std::string owner = "admin");
ParsedRule parse_rule(std::string_view text, const HomeConfig& config, std::string id = "r1",
                      std::string owner = "admin");

/// Canonical text: "IF (<condition>) THEN <action> [AND <action>]...".
/// parse_rule(format_rule(a)) reproduces a for any AST the parser can build.
std::string format_rule(const RuleAST& rule);
std::string format_condition(const ConditionNode& node);
std::string format_action(const ActionNode& action);
std::string format_number(double v);

/// Semantic checks over a parsed script. An empty result means clean.
std::vector<Diagnostic> validate_script(const std::vector<RuleAST>& rules, const HomeConfig& config);

struct RuleScript {
    std::vector<RuleAST> rules;

    /// Stable FNV-1a digest of the canonical script text.
    std::string hash() const;
};

struct ScriptLoadResult {
    RuleScript script;
    std::vector<Diagnostic> diagnostics; // parse normalizations and parse failures
};

/// Script files hold one rule per line; '#' starts a comment. A line may
/// carry an "<id>@<owner>:" prefix, otherwise the id is "L<line>" and the
/// owner is "admin". Unparseable lines become Error diagnostics.
ScriptLoadResult load_script(std::string_view text, const HomeConfig& config);
ScriptLoadResult load_script_file(const std::string& path, const HomeConfig& config);
std::string format_script(const RuleScript& script);

} // namespace hearth
