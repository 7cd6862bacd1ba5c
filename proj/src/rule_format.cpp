#include <charconv>
#include <cstdio>
#include <string>

#include "hearth/rule_parser.hpp"

namespace hearth {

namespace {

std::string subject_text(const Subject& s)
{
    return s.name;
}

std::string location_text(const Scope& s)
{
    switch (s.kind) {
    case Scope::Kind::Home: return "Home";
    case Scope::Kind::Room: return s.name;
    case Scope::Kind::ResidentRoom: return s.name + " ROOM";
    }
    return {};
}

std::string clock_text(int minute_of_day)
{
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02d:%02d", minute_of_day / 60, minute_of_day % 60);
    return buf;
}

std::string quoted(const std::string& s)
{
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\')
            out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string compare_text(CompareOp op)
{
    switch (op) {
    case CompareOp::Equal: return "EQUAL";
    case CompareOp::Above: return "ABOVE";
    case CompareOp::Below: return "BELOW";
    }
    return {};
}

std::string format_node(const ConditionNode& n);

struct NodePrinter {
    std::string operator()(const Logical& l) const
    {
        if (l.op == LogicOp::Not) {
            const auto& child = l.children.front();
            if (const auto* p = std::get_if<Presence>(&child.node))
                return subject_text(p->subject) + " NOT IN " + location_text(p->location);
            if (std::holds_alternative<Logical>(child.node) &&
                std::get<Logical>(child.node).op != LogicOp::Not)
                return "NOT (" + format_node(child) + ")";
            return "NOT " + format_node(child);
        }
        std::string sep = l.op == LogicOp::And ? " AND " : " OR ";
        std::string out;
        for (std::size_t i = 0; i < l.children.size(); ++i) {
            const auto& child = l.children[i];
            std::string part = format_node(child);
            if (const auto* cl = std::get_if<Logical>(&child.node);
                cl && cl->op != LogicOp::Not && (l.op == LogicOp::And || cl->op == l.op))
                part = "(" + part + ")";
            out += (i ? sep : "") + part;
        }
        return out;
    }
    std::string operator()(const Presence& p) const
    {
        return subject_text(p.subject) + " IN " + location_text(p.location);
    }
    std::string operator()(const ActivityAtom& a) const
    {
        return subject_text(a.subject) + " ACTIVITY IS " + a.activity;
    }
    std::string operator()(const TimeAtom& t) const
    {
        if (t.keyword)
            return *t.keyword;
        return "AT " + clock_text(t.minute_of_day.value_or(0));
    }
    std::string operator()(const Comparison& c) const
    {
        std::string out = c.variable;
        if (c.scope)
            out += " IN " + location_text(*c.scope);
        return out + " " + compare_text(c.op) + " " + format_number(c.value);
    }
};

std::string format_node(const ConditionNode& n)
{
    return std::visit(NodePrinter{}, n.node);
}

std::string scoped_variable(const std::string& variable, const Scope& scope)
{
    switch (scope.kind) {
    case Scope::Kind::Home: return variable;
    case Scope::Kind::Room: return variable + " IN " + scope.name;
    case Scope::Kind::ResidentRoom: return scope.name + " ROOM " + variable;
    }
    return variable;
}

struct ActionPrinter {
    std::string operator()(const SetAction& s) const
    {
        return "SET " + scoped_variable(s.variable, s.scope) + " " + s.value;
    }
    std::string operator()(const KeepAction& k) const
    {
        std::string out = "KEEP " + scoped_variable(k.variable, k.scope);
        switch (k.target.kind) {
        case KeepTarget::Kind::Between:
            return out + " BETWEEN " + format_number(k.target.lo) + " " + format_number(k.target.hi);
        case KeepTarget::Kind::Above: return out + " ABOVE " + format_number(k.target.lo);
        case KeepTarget::Kind::Below: return out + " BELOW " + format_number(k.target.hi);
        }
        return out;
    }
    std::string operator()(const NotifyAction& n) const
    {
        std::string out = (n.severity == Severity::Warn ? "WARN " : "NOTIFY ") + subject_text(n.target);
        if (!n.message.empty())
            out += " " + quoted(n.message);
        return out;
    }
};

} // namespace

std::string format_number(double v)
{
    if (v == 0.0)
        v = 0.0; // drop negative zero
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string format_condition(const ConditionNode& node)
{
    return format_node(node);
}

std::string format_action(const ActionNode& action)
{
    return std::visit(ActionPrinter{}, action);
}

std::string format_rule(const RuleAST& rule)
{
    std::string out = "IF (" + format_condition(rule.condition) + ") THEN ";
    for (std::size_t i = 0; i < rule.actions.size(); ++i)
        out += (i ? " AND " : "") + format_action(rule.actions[i]);
    return out;
}

} // namespace hearth
