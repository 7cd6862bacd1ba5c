#include "hearth/rule_parser.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>
#include <utility>

#include "hearth/error.hpp"
#include "hearth/rule_lexer.hpp"

namespace hearth {

namespace {

std::string squash(std::string_view s)
{
    std::string out;
    for (char c : s)
        if (c != '_')
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

bool starts_with(std::string_view s, std::string_view prefix)
{
    return s.size() > prefix.size() && s.substr(0, prefix.size()) == prefix;
}

bool is_value_token(TokenKind k)
{
    return k == TokenKind::On || k == TokenKind::Off || k == TokenKind::Open ||
           k == TokenKind::Close || k == TokenKind::Ident || k == TokenKind::Number;
}

class Parser {
public:
    Parser(std::string_view text, const KeywordRegistry& reg, const HomeConfig& cfg)
        : text_(text), reg_(reg), cfg_(cfg), toks_(tokenize(text))
    {
    }

    ParsedRule run(std::string id, std::string owner)
    {
        ParsedRule out;
        rule_id_ = id;
        out.rule.id = std::move(id);
        out.rule.owner = std::move(owner);
        out.rule.source = std::string(text_);
        expect(TokenKind::If);
        out.rule.condition = or_expr();
        expect(TokenKind::Then);
        out.rule.actions.push_back(action());
        while (accept(TokenKind::And))
            out.rule.actions.push_back(action());
        if (!at_end())
            fail({"AND", "end of rule"});
        out.diagnostics = std::move(diags_);
        return out;
    }

private:
    // -- token plumbing ----------------------------------------------------

    bool at_end() const { return pos_ >= toks_.size(); }
    const Token* peek(std::size_t ahead = 0) const
    {
        return pos_ + ahead < toks_.size() ? &toks_[pos_ + ahead] : nullptr;
    }
    bool check(TokenKind k, std::size_t ahead = 0) const
    {
        const auto* t = peek(ahead);
        return t && t->kind == k;
    }
    bool accept(TokenKind k)
    {
        if (check(k)) {
            ++pos_;
            return true;
        }
        return false;
    }
    std::size_t here() const { return at_end() ? text_.size() : toks_[pos_].offset; }

    [[noreturn]] void fail(std::vector<std::string> expected) const
    {
        std::string msg = "expected ";
        for (std::size_t i = 0; i < expected.size(); ++i)
            msg += (i ? " or " : "") + expected[i];
        msg += at_end() ? " at end of rule" : " but found '" + toks_[pos_].text + "'";
        throw Error(ErrorCode::ParseError, msg, here(), std::move(expected));
    }
    [[noreturn]] void unknown(const Token& t) const
    {
        throw Error(ErrorCode::UnknownIdentifier, "unknown identifier '" + t.text + "'", t.offset);
    }
    const Token& expect(TokenKind k)
    {
        if (!check(k))
            fail({std::string(to_string(k))});
        return toks_[pos_++];
    }
    const Token& expect_ident(const char* what)
    {
        if (!check(TokenKind::Ident))
            fail({what});
        return toks_[pos_++];
    }
    void note(std::string code, DiagnosticSeverity sev, std::string msg, std::size_t offset)
    {
        diags_.push_back(Diagnostic{std::move(code), sev, rule_id_, std::move(msg), offset});
    }

    // -- conditions --------------------------------------------------------

    ConditionNode or_expr()
    {
        auto first = and_expr();
        if (!check(TokenKind::Or))
            return first;
        Logical node{LogicOp::Or, {}};
        absorb(node, std::move(first));
        while (accept(TokenKind::Or))
            absorb(node, and_expr());
        return ConditionNode{std::move(node)};
    }

    ConditionNode and_expr()
    {
        auto first = not_expr();
        // AND followed by an action verb belongs to the action list, which
        // cannot happen before THEN; no lookahead needed here
        if (!check(TokenKind::And))
            return first;
        Logical node{LogicOp::And, {}};
        absorb(node, std::move(first));
        while (accept(TokenKind::And))
            absorb(node, not_expr());
        return ConditionNode{std::move(node)};
    }

    // nested chains of the same operator are flattened
    static void absorb(Logical& into, ConditionNode child)
    {
        if (auto* l = std::get_if<Logical>(&child.node); l && l->op == into.op) {
            for (auto& c : l->children)
                into.children.push_back(std::move(c));
        } else {
            into.children.push_back(std::move(child));
        }
    }

    ConditionNode not_expr()
    {
        if (accept(TokenKind::Not))
            return ConditionNode{Logical{LogicOp::Not, {not_expr()}}};
        return primary();
    }

    ConditionNode primary()
    {
        if (accept(TokenKind::LParen)) {
            auto inner = or_expr();
            expect(TokenKind::RParen);
            return inner;
        }
        if (check(TokenKind::Clock))
            return ConditionNode{TimeAtom{std::nullopt, toks_[pos_++].minute_of_day}};
        if (accept(TokenKind::At)) {
            if (check(TokenKind::Clock))
                return ConditionNode{TimeAtom{std::nullopt, toks_[pos_++].minute_of_day}};
            const auto& t = expect_ident("clock literal or time keyword");
            auto kw = reg_.resolve_in(KeywordCategory::DateTimeEvent, t.text);
            if (!kw)
                unknown(t);
            return ConditionNode{TimeAtom{*kw, std::nullopt}};
        }
        if (!check(TokenKind::Ident))
            fail({"(", "condition atom"});
        const Token& t = toks_[pos_];

        if (const auto* var = cfg_.variable(t.text)) {
            ++pos_;
            return comparison(*var, t);
        }
        if (split_variable_name(t.text) || looks_like_val(t.text)) {
            // VAL/SET/KEEP-suffixed but undeclared
            unknown(t);
        }
        if (auto subj = subject(t)) {
            ++pos_;
            return subject_atom(*subj);
        }
        if (auto kw = reg_.resolve_in(KeywordCategory::DateTimeEvent, t.text)) {
            ++pos_;
            return ConditionNode{TimeAtom{*kw, std::nullopt}};
        }
        unknown(t);
    }

    static bool looks_like_val(std::string_view s)
    {
        return s.size() > 3 && iequals(s.substr(s.size() - 3), "val");
    }

    std::optional<Subject> subject(const Token& t) const
    {
        if (auto r = reg_.resolve_in(KeywordCategory::Resident, t.text)) {
            if (iequals(*r, "Anyone"))
                return Subject{Subject::Kind::AnyResident, *r};
            if (iequals(*r, "AllTenants"))
                return Subject{Subject::Kind::AllResidents, *r};
            const auto* decl = cfg_.resident(*r);
            return Subject{Subject::Kind::Resident, decl ? decl->name : *r};
        }
        if (auto r = reg_.resolve_in(KeywordCategory::Role, t.text))
            return Subject{Subject::Kind::Role, *r};
        return std::nullopt;
    }

    ConditionNode subject_atom(const Subject& subj)
    {
        if (accept(TokenKind::In))
            return ConditionNode{Presence{subj, location()}};
        if (accept(TokenKind::Not)) {
            expect(TokenKind::In);
            return ConditionNode{Logical{LogicOp::Not, {ConditionNode{Presence{subj, location()}}}}};
        }
        if (accept(TokenKind::Activity)) {
            if (!accept(TokenKind::Is) && !accept(TokenKind::Equal))
                fail({"IS", "EQUAL"});
            return ConditionNode{ActivityAtom{subj, activity()}};
        }
        if (accept(TokenKind::Is))
            return ConditionNode{ActivityAtom{subj, activity()}};
        fail({"IN", "NOT IN", "IS", "ACTIVITY IS"});
    }

    std::string activity()
    {
        const auto& t = expect_ident("activity");
        auto kw = reg_.resolve_in(KeywordCategory::Activity, t.text);
        if (!kw)
            unknown(t);
        return *kw;
    }

    Scope location()
    {
        const auto& t = expect_ident("location");
        if (auto loc = reg_.resolve_in(KeywordCategory::Location, t.text)) {
            if (iequals(*loc, "Home") || iequals(*loc, "AllRooms"))
                return Scope::home();
            return Scope{Scope::Kind::Room, cfg_.room(*loc).value_or(*loc)};
        }
        if (auto r = reg_.resolve_in(KeywordCategory::Resident, t.text)) {
            if (accept(TokenKind::Room)) {
                const auto* decl = cfg_.resident(*r);
                return Scope{Scope::Kind::ResidentRoom, decl ? decl->name : *r};
            }
            fail({"ROOM"});
        }
        unknown(t);
    }

    ConditionNode comparison(const VariableDecl& var, const Token& tok)
    {
        if (var.kind != VariableKind::Measured)
            throw Error(ErrorCode::MisplacedVariable,
                        "controlled variable '" + var.name + "' cannot appear in a condition",
                        tok.offset);
        Comparison c;
        c.variable = var.name;
        if (accept(TokenKind::In))
            c.scope = location();
        if (accept(TokenKind::Equal))
            c.op = CompareOp::Equal;
        else if (accept(TokenKind::Above))
            c.op = CompareOp::Above;
        else if (accept(TokenKind::Below))
            c.op = CompareOp::Below;
        else
            fail({"EQUAL", "ABOVE", "BELOW"});
        c.value = expect(TokenKind::Number).number;
        return ConditionNode{std::move(c)};
    }

    // -- actions -----------------------------------------------------------

    ActionNode action()
    {
        if (check(TokenKind::Notify) || check(TokenKind::Warn)) {
            NotifyAction n;
            n.severity = toks_[pos_++].kind == TokenKind::Warn ? Severity::Warn : Severity::Notify;
            const auto& t = expect_ident("resident or role");
            auto subj = subject(t);
            if (!subj)
                unknown(t);
            n.target = *subj;
            if (check(TokenKind::String))
                n.message = toks_[pos_++].text;
            return n;
        }
        bool keep = false;
        std::size_t verb_offset = here();
        if (accept(TokenKind::Keep))
            keep = true;
        else if (!accept(TokenKind::Set))
            fail({"SET", "KEEP", "NOTIFY", "WARN"});

        std::optional<Scope> scope = leading_scope();
        const auto& name_tok = expect_ident("variable");
        bool all_prefix = false;
        const VariableDecl* var = resolve_controlled(name_tok, keep, all_prefix);
        if (all_prefix && !scope)
            scope = Scope::home();

        // "ROOM_TEMPERATURE KEEP": the postfix spelled as a separate word
        if (keep)
            accept(TokenKind::Keep);
        else
            accept(TokenKind::Set);

        if (accept(TokenKind::In)) {
            if (scope)
                fail({"value"});
            scope = location();
        }
        Scope sc = scope.value_or(Scope::home());

        bool relational = check(TokenKind::Between) || check(TokenKind::Above) ||
                          check(TokenKind::Below) || check(TokenKind::Equal);
        if (keep || var->kind == VariableKind::ControlledKeep) {
            if (!relational) {
                if (keep)
                    fail({"BETWEEN", "ABOVE", "BELOW"});
                throw Error(ErrorCode::InvalidValue,
                            "'" + var->name + "' is continuous and needs a bound", here());
            }
            if (var->kind != VariableKind::ControlledKeep)
                throw Error(ErrorCode::MisplacedVariable,
                            "KEEP needs a continuous controlled variable, got '" + var->name + "'",
                            name_tok.offset);
            if (!keep)
                note("SetRewrittenAsKeep", DiagnosticSeverity::Warning,
                     "SET with a relational bound on '" + var->name + "' rewritten as KEEP",
                     verb_offset);
            return KeepAction{var->name, sc, keep_target()};
        }
        if (relational)
            throw Error(ErrorCode::InvalidValue,
                        "'" + var->name + "' is discrete; SET needs a value", here());
        if (at_end() || !is_value_token(toks_[pos_].kind))
            fail({"value"});
        const auto& vt = toks_[pos_++];
        for (const auto& allowed : var->values)
            if (iequals(allowed, vt.text))
                return SetAction{var->name, sc, allowed};
        throw Error(ErrorCode::InvalidValue,
                    "'" + vt.text + "' is not in the domain of " + var->name, vt.offset);
    }

    // Resident [ROOM] or Location placed between the verb and the variable.
    std::optional<Scope> leading_scope()
    {
        if (!check(TokenKind::Ident))
            return std::nullopt;
        const auto& t = toks_[pos_];
        if (cfg_.variable(t.text))
            return std::nullopt;
        if (auto r = reg_.resolve_in(KeywordCategory::Resident, t.text);
            r && !iequals(*r, "Anyone") && !iequals(*r, "AllTenants")) {
            ++pos_;
            accept(TokenKind::Room);
            const auto* decl = cfg_.resident(*r);
            return Scope{Scope::Kind::ResidentRoom, decl ? decl->name : *r};
        }
        if (auto loc = reg_.resolve_in(KeywordCategory::Location, t.text)) {
            ++pos_;
            if (iequals(*loc, "Home") || iequals(*loc, "AllRooms"))
                return Scope::home();
            return Scope{Scope::Kind::Room, cfg_.room(*loc).value_or(*loc)};
        }
        return std::nullopt;
    }

    const VariableDecl* find_squashed(std::string_view key) const
    {
        for (const auto& v : cfg_.variables)
            if (squash(v.name) == key)
                return &v;
        return nullptr;
    }

    const VariableDecl* by_quantity(std::string_view key, bool keep) const
    {
        const VariableDecl* fallback = nullptr;
        for (const auto& v : cfg_.variables) {
            if (v.kind == VariableKind::Measured)
                continue;
            bool match = squash(v.quantity) == key;
            for (const auto& a : v.aliases)
                match = match || squash(a) == key;
            if (!match)
                continue;
            if ((v.kind == VariableKind::ControlledKeep) == keep)
                return &v;
            fallback = &v;
        }
        return fallback;
    }

    // Maps the spelled variable to a declared controlled variable:
    // TemperatureKEEP, TEMPERATURE_KEEP, ROOM_TEMPERATURE, LIGHT, AllVolume.
    const VariableDecl* resolve_controlled(const Token& tok, bool keep, bool& all_prefix)
    {
        auto key = squash(tok.text);
        const VariableDecl* var = find_squashed(key);
        if (!var) {
            var = by_quantity(key, keep);
            for (std::string_view prefix : {"room", "all"}) {
                if (var || !starts_with(key, prefix))
                    continue;
                var = by_quantity(key.substr(prefix.size()), keep);
                if (var && prefix == "all")
                    all_prefix = true;
            }
        }
        if (!var && looks_like_val(tok.text)) {
            auto base = key.substr(0, key.size() - 3);
            if (auto* counterpart = by_quantity(base, keep)) {
                note("ValPostfixRewritten", DiagnosticSeverity::Warning,
                     "'" + tok.text + "' used as an action target; mapped to " + counterpart->name,
                     tok.offset);
                return counterpart;
            }
        }
        if (!var)
            unknown(tok);
        if (var->kind == VariableKind::Measured) {
            if (auto* counterpart = by_quantity(squash(var->quantity), keep)) {
                note("ValPostfixRewritten", DiagnosticSeverity::Warning,
                     "'" + tok.text + "' used as an action target; mapped to " + counterpart->name,
                     tok.offset);
                return counterpart;
            }
            throw Error(ErrorCode::MisplacedVariable,
                        "measured variable '" + var->name + "' cannot be an action target",
                        tok.offset);
        }
        return var;
    }

    KeepTarget keep_target()
    {
        if (accept(TokenKind::Between)) {
            const auto& a = expect(TokenKind::Number);
            const auto& b = expect(TokenKind::Number);
            if (a.number > b.number)
                note("BandNormalized", DiagnosticSeverity::Info,
                     "BETWEEN " + a.text + " " + b.text + " normalized to BETWEEN " + b.text +
                         " " + a.text,
                     a.offset);
            return KeepTarget::between(a.number, b.number);
        }
        if (accept(TokenKind::Above))
            return KeepTarget::above(expect(TokenKind::Number).number);
        if (accept(TokenKind::Below))
            return KeepTarget::below(expect(TokenKind::Number).number);
        if (accept(TokenKind::Equal)) {
            double x = expect(TokenKind::Number).number;
            return KeepTarget::between(x, x);
        }
        fail({"BETWEEN", "ABOVE", "BELOW"});
    }

    std::string_view text_;
    const KeywordRegistry& reg_;
    const HomeConfig& cfg_;
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    std::string rule_id_;
    std::vector<Diagnostic> diags_;
};

std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace

std::string_view to_string(DiagnosticSeverity s)
{
    switch (s) {
    case DiagnosticSeverity::Info: return "info";
    case DiagnosticSeverity::Warning: return "warning";
    case DiagnosticSeverity::Error: return "error";
    }
    return "?";
}

KeepTarget KeepTarget::between(double a, double b)
{
    return {Kind::Between, std::min(a, b), std::max(a, b)};
}

const std::string* written_variable(const ActionNode& a)
{
    if (const auto* s = std::get_if<SetAction>(&a))
        return &s->variable;
    if (const auto* k = std::get_if<KeepAction>(&a))
        return &k->variable;
    return nullptr;
}

const Scope* action_scope(const ActionNode& a)
{
    if (const auto* s = std::get_if<SetAction>(&a))
        return &s->scope;
    if (const auto* k = std::get_if<KeepAction>(&a))
        return &k->scope;
    return nullptr;
}

ParsedRule parse_rule(std::string_view text, const KeywordRegistry& registry,
                      const HomeConfig& config, std::string id, std::string owner)
{
    return Parser(text, registry, config).run(std::move(id), std::move(owner));
}

ParsedRule parse_rule(std::string_view text, const HomeConfig& config, std::string id,
                      std::string owner)
{
    return parse_rule(text, config.keywords, config, std::move(id), std::move(owner));
}

std::string RuleScript::hash() const
{
    std::ostringstream os;
    os << std::hex << fnv1a(format_script(*this));
    auto s = os.str();
    return std::string(16 - s.size(), '0') + s;
}

ScriptLoadResult load_script(std::string_view text, const HomeConfig& config)
{
    static const std::regex prefix(R"(^\s*([A-Za-z][A-Za-z0-9_\-]*)@([A-Za-z][A-Za-z0-9_\-]*)\s*:\s*)");
    ScriptLoadResult out;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            // '#' inside a NOTIFY message string is not a comment
            auto quote = line.find('"');
            if (quote == std::string::npos || hash < quote)
                line.erase(hash);
        }
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        std::string id = "L" + std::to_string(lineno);
        std::string owner = "admin";
        std::smatch m;
        if (std::regex_search(line, m, prefix)) {
            id = m[1];
            owner = m[2];
            line = m.suffix();
        }
        while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
            line.pop_back();
        try {
            auto parsed = parse_rule(line, config, id, owner);
            for (auto& d : parsed.diagnostics)
                out.diagnostics.push_back(std::move(d));
            out.script.rules.push_back(std::move(parsed.rule));
        } catch (const Error& e) {
            out.diagnostics.push_back(Diagnostic{std::string(to_string(e.code())),
                                                 DiagnosticSeverity::Error, id,
                                                 "line " + std::to_string(lineno) + ": " + e.what(),
                                                 e.offset()});
        }
    }
    return out;
}

ScriptLoadResult load_script_file(const std::string& path, const HomeConfig& config)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::Io, "cannot open rule script '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return load_script(buf.str(), config);
}

std::string format_script(const RuleScript& script)
{
    std::string out;
    for (const auto& r : script.rules)
        out += r.id + "@" + r.owner + ": " + format_rule(r) + "\n";
    return out;
}

} // namespace hearth
