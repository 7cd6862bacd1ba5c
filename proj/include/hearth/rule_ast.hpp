#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace hearth {

/// Who a presence or activity atom is about.
struct Subject {
    enum class Kind { Resident, Role, AnyResident, AllResidents };
    Kind kind = Kind::Resident;
    std::string name; // canonical keyword spelling

    bool operator==(const Subject&) const = default;
};

/// A place a rule refers to. ResidentRoom is "<Resident> ROOM", resolved
/// against the room ownership map at evaluation time.
struct Scope {
    enum class Kind { Home, Room, ResidentRoom };
    Kind kind = Kind::Home;
    std::string name; // room or resident; empty for Home

    bool operator==(const Scope&) const = default;
    static Scope home() { return {}; }
};

enum class LogicOp { And, Or, Not };
enum class CompareOp { Equal, Above, Below };

struct ConditionNode;

struct Logical {
    LogicOp op = LogicOp::And;
    std::vector<ConditionNode> children;

    bool operator==(const Logical&) const;
};

struct Presence {
    Subject subject;
    Scope location; // Home for "IN Home" and "IN AllRooms"

    bool operator==(const Presence&) const = default;
};

struct ActivityAtom {
    Subject subject;
    std::string activity;

    bool operator==(const ActivityAtom&) const = default;
};

struct TimeAtom {
    std::optional<std::string> keyword;  // DateTimeEvent keyword
    std::optional<int> minute_of_day;    // clock literal, 0..1439

    bool operator==(const TimeAtom&) const = default;
};

struct Comparison {
    std::string variable; // measured, VAL postfix
    std::optional<Scope> scope;
    CompareOp op = CompareOp::Equal;
    double value = 0.0;

    bool operator==(const Comparison&) const = default;
};

struct ConditionNode {
    std::variant<Logical, Presence, ActivityAtom, TimeAtom, Comparison> node;

    bool operator==(const ConditionNode& o) const { return node == o.node; }
};

inline bool Logical::operator==(const Logical& o) const
{
    return op == o.op && children == o.children;
}

struct KeepTarget {
    enum class Kind { Between, Above, Below };
    Kind kind = Kind::Between;
    double lo = 0.0; // Between lower bound, or the Above threshold
    double hi = 0.0; // Between upper bound, or the Below threshold

    bool operator==(const KeepTarget&) const = default;
    static KeepTarget between(double a, double b);
    static KeepTarget above(double x) { return {Kind::Above, x, 0.0}; }
    static KeepTarget below(double x) { return {Kind::Below, 0.0, x}; }
};

enum class Severity { Notify, Warn };

struct SetAction {
    std::string variable; // SET postfix
    Scope scope;
    std::string value;    // canonical spelling from the variable's domain

    bool operator==(const SetAction&) const = default;
};

struct KeepAction {
    std::string variable; // KEEP postfix
    Scope scope;
    KeepTarget target;

    bool operator==(const KeepAction&) const = default;
};

struct NotifyAction {
    Subject target;
    Severity severity = Severity::Notify;
    std::string message;

    bool operator==(const NotifyAction&) const = default;
};

using ActionNode = std::variant<SetAction, KeepAction, NotifyAction>;

struct RuleAST {
    std::string id;
    std::string owner;
    ConditionNode condition;
    std::vector<ActionNode> actions;
    std::string source;

    /// Structural equality: ignores source text.
    bool same_structure(const RuleAST& o) const
    {
        return id == o.id && owner == o.owner && condition == o.condition && actions == o.actions;
    }
};

/// The controlled variable an action writes, or empty for notifications.
const std::string* written_variable(const ActionNode& a);
const Scope* action_scope(const ActionNode& a);

} // namespace hearth
