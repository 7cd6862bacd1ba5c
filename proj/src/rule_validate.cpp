#include <set>

#include "hearth/rule_parser.hpp"

namespace hearth {

namespace {

class Validator {
public:
    Validator(const RuleAST& rule, const HomeConfig& cfg, std::vector<Diagnostic>& out)
        : rule_(rule), cfg_(cfg), out_(out)
    {
    }

    void run()
    {
        condition(rule_.condition);
        for (const auto& a : rule_.actions)
            action(a);
    }

private:
    void emit(std::string code, std::string msg)
    {
        out_.push_back(Diagnostic{std::move(code), DiagnosticSeverity::Error, rule_.id,
                                  std::move(msg), std::nullopt});
    }

    void scope(const Scope& s)
    {
        if (s.kind == Scope::Kind::Room && !cfg_.room(s.name))
            emit("UnknownScope", "room '" + s.name + "' is not configured");
        if (s.kind == Scope::Kind::ResidentRoom) {
            if (!cfg_.resident(s.name))
                emit("UnknownScope", "'" + s.name + "' is not a configured resident");
            else if (!cfg_.owned_room(s.name))
                emit("UnknownScope", "resident '" + s.name + "' owns no room");
        }
    }

    void subject(const Subject& s)
    {
        if (s.kind == Subject::Kind::Resident && !cfg_.resident(s.name))
            emit("UnknownSubject", "'" + s.name + "' is not a configured resident");
    }

    void in_domain(const VariableDecl& v, double x, const char* what)
    {
        if (v.range && (x < v.range->min || x > v.range->max))
            emit("OutOfDomain", std::string(what) + " " + format_number(x) + " outside the domain of " +
                                    v.name + " [" + format_number(v.range->min) + ", " +
                                    format_number(v.range->max) + "]");
    }

    void condition(const ConditionNode& n)
    {
        if (const auto* l = std::get_if<Logical>(&n.node)) {
            for (const auto& c : l->children)
                condition(c);
        } else if (const auto* p = std::get_if<Presence>(&n.node)) {
            subject(p->subject);
            scope(p->location);
        } else if (const auto* a = std::get_if<ActivityAtom>(&n.node)) {
            subject(a->subject);
        } else if (const auto* c = std::get_if<Comparison>(&n.node)) {
            if (c->scope)
                scope(*c->scope);
            const auto* v = cfg_.variable(c->variable);
            if (!v)
                emit("UnknownVariable", "'" + c->variable + "' is not declared");
            else if (!v->range && !v->values.empty())
                emit("OutOfDomain", "'" + c->variable + "' is discrete and cannot be compared");
        }
    }

    void action(const ActionNode& a)
    {
        if (const auto* n = std::get_if<NotifyAction>(&a)) {
            subject(n->target);
            return;
        }
        scope(*action_scope(a));
        const auto* v = cfg_.variable(*written_variable(a));
        if (!v) {
            emit("UnknownVariable", "'" + *written_variable(a) + "' is not declared");
            return;
        }
        if (const auto* k = std::get_if<KeepAction>(&a)) {
            switch (k->target.kind) {
            case KeepTarget::Kind::Between:
                in_domain(*v, k->target.lo, "lower bound");
                in_domain(*v, k->target.hi, "upper bound");
                break;
            case KeepTarget::Kind::Above: in_domain(*v, k->target.lo, "bound"); break;
            case KeepTarget::Kind::Below: in_domain(*v, k->target.hi, "bound"); break;
            }
        } else if (const auto* s = std::get_if<SetAction>(&a)) {
            bool ok = false;
            for (const auto& value : v->values)
                ok = ok || iequals(value, s->value);
            if (!ok)
                emit("OutOfDomain", "'" + s->value + "' is not a value of " + v->name);
        }
    }

    const RuleAST& rule_;
    const HomeConfig& cfg_;
    std::vector<Diagnostic>& out_;
};

} // namespace

std::vector<Diagnostic> validate_script(const std::vector<RuleAST>& rules, const HomeConfig& config)
{
    std::vector<Diagnostic> out;
    std::set<std::string> seen;
    for (const auto& r : rules) {
        if (!seen.insert(r.id).second)
            out.push_back(Diagnostic{"DuplicateRuleId", DiagnosticSeverity::Error, r.id,
                                     "rule id '" + r.id + "' is used more than once", std::nullopt});
        Validator(r, config, out).run();
    }
    return out;
}

} // namespace hearth
