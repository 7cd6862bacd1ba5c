#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hearth/conflicts.hpp"
#include "hearth/control_flow.hpp"
#include "hearth/notifications.hpp"
#include "hearth/rule_parser.hpp"
#include "hearth/security.hpp"

namespace hearth {

enum class ConflictMode { Drop, WarnSource, Escalate, PriorityAuto };

std::string_view to_string(ConflictMode m);

struct RuleManagementPolicy {
    ConflictMode conflict_mode = ConflictMode::PriorityAuto;
    std::string update_mode = "QuiescentSwap";
    std::string permissions = "acl"; // where permission checks come from
    std::set<std::string> recommend_only;

    bool is_recommend_only(const std::string& owner) const;
    nlohmann::json to_json() const;
};

struct OwnerNode {
    std::string id;
    std::string role;
    std::string parent; // empty for the root
};

/// Rule owners as a tree rooted at the rule administrator. Priority is
/// depth: the root is 0 and smaller numbers carry more authority.
class OwnerHierarchy {
public:
    /// Parents must be added before children. Throws UnknownOwner for a
    /// missing parent and ConfigError for a second root or a duplicate.
    void add(OwnerNode node);

    bool contains(const std::string& id) const;
    const OwnerNode& node(const std::string& id) const; // throws UnknownOwner
    int depth(const std::string& id) const;            // throws UnknownOwner
    std::string root() const { return root_; }
    /// Ancestors from the parent up to the root.
    std::vector<std::string> ancestors(const std::string& id) const;
    /// Deepest owner that is a proper ancestor of both (the root when one is
    /// the root).
    std::string closest_shared_parent(const std::string& a, const std::string& b) const;
    /// a is b or an ancestor of b.
    bool governs(const std::string& a, const std::string& b) const;
    std::vector<OwnerNode> nodes() const;

private:
    std::map<std::string, OwnerNode> nodes_; // keyed by folded id
    std::vector<std::string> order_;
    std::string root_;
};

/// Policy and owner tree from one JSON document.
struct PolicyConfig {
    RuleManagementPolicy policy;
    OwnerHierarchy hierarchy;

    static PolicyConfig from_json(const nlohmann::json& doc);
    static PolicyConfig from_file(const std::string& path);
};

enum class ProposalStatus { Pending, Accepted, Rejected, Escalated, RecommendationOnly };

std::string_view to_string(ProposalStatus s);

struct RuleProposal {
    std::string id;
    std::string text;
    std::string owner;
    ProposalStatus status = ProposalStatus::Pending;
    std::string reason;       // Rejected: SyntaxError, PermissionDenied, SupersededByPriority, Dropped, ...
    std::string detail;
    std::string escalated_to; // Escalated: the deciding owner
    std::optional<RuleAST> rule;
    std::vector<Conflict> conflicts;
    std::vector<std::string> superseded; // rules made dormant by this one
    SimTime submitted = 0;
    std::uint64_t tick = 0;
    std::uint64_t staged_version = 0; // script version that first contains the rule
    bool swapped = false;

    nlohmann::json to_json() const;
};

/// Append-only proposal audit trail, one JSON object per line.
class ProposalLog {
public:
    ProposalLog() = default;
    explicit ProposalLog(const std::string& path);

    void record(nlohmann::json entry);
    std::vector<nlohmann::json> entries() const;

private:
    mutable std::mutex mu_;
    std::vector<nlohmann::json> entries_;
    std::unique_ptr<std::ofstream> out_;
};

struct SwapReceipt {
    std::uint64_t version = 0;
    std::uint64_t requested_tick = 0;
    std::uint64_t activated_tick = 0;
    std::size_t rules = 0;
};

/// Single-slot staging area between the administrator and the tick loop.
class ScriptSwapSlot {
public:
    /// Throws SwapPending when a previous swap has not been applied.
    void request(ActiveScript staged, std::uint64_t current_tick);
    bool pending() const;
    /// Called by the tick loop between ticks: installs the staged script
    /// as the one tick `next_tick` will run.
    std::optional<SwapReceipt> apply(ActiveScript& active, std::uint64_t next_tick);

private:
    mutable std::mutex mu_;
    std::optional<ActiveScript> staged_;
    std::uint64_t requested_tick_ = 0;
};

/// The rule script manager: checks proposals, resolves conflicts against
/// the owner tree, and stages accepted rules for a quiescent swap.
class RuleAdministrator {
public:
    RuleAdministrator(const HomeConfig& config, PolicyConfig policy, AccessControlService& acs,
                      const TrustStore& as_trust, ProposalLog& log, ScriptSwapSlot& slot,
                      NotificationSink* sink = nullptr);

    /// Installs an initial script without conflict checks. Throws
    /// UnknownOwner for owners outside the tree.
    void load_script(const RuleScript& script, std::uint64_t tick = 0);

    /// Throws TicketInvalid when the authentication ticket does not verify.
    RuleProposal propose(std::string_view as_ticket, const std::string& text, SimTime now, std::uint64_t tick);

    /// Decides an escalated proposal. The resolver must govern the owner it
    /// was escalated to. Throws TicketInvalid, UnknownProposal,
    /// InvalidTransition, PermissionDenied.
    RuleProposal resolve(const std::string& proposal_id, bool accept, std::string_view as_ticket, SimTime now,
                         std::uint64_t tick);

    /// Removes an active rule; dormant rules it superseded come back when
    /// they no longer conflict with anything active.
    bool remove_rule(const std::string& rule_id, std::uint64_t tick);

    /// Between ticks, after the slot was applied: logs the swap step and
    /// re-stages edits that found the slot busy.
    void on_boundary(const std::optional<SwapReceipt>& applied, std::uint64_t tick);

    std::vector<RuleProposal> proposals() const;
    std::vector<RuleProposal> pending() const; // Escalated, awaiting a decision
    std::vector<RuleProposal> recommendations() const;
    std::optional<RuleProposal> proposal(const std::string& id) const;
    ActiveScript staged() const;
    const OwnerHierarchy& hierarchy() const { return policy_.hierarchy; }
    const RuleManagementPolicy& policy() const { return policy_.policy; }

    /// Names of variables the rule reads and writes, with the ACL verdicts
    /// (also used by tests to audit acceptance).
    std::vector<std::string> permission_failures(const RuleAST& rule, SimTime now);

private:
    std::vector<RuleAST> active_rules() const;
    void stage(std::uint64_t tick);
    RuleProposal& decide(RuleProposal& p, SimTime now, std::uint64_t tick);
    void accept(RuleProposal& p, const std::vector<std::string>& losers, std::uint64_t tick, SimTime now);
    void reject(RuleProposal& p, std::string reason, std::string detail, SimTime now, std::uint64_t tick);
    void log_step(int step, const std::string& name, const RuleProposal* p, nlohmann::json extra, SimTime now,
                  std::uint64_t tick);
    std::string verify_subject(std::string_view as_ticket, SimTime now);

    const HomeConfig& config_;
    PolicyConfig policy_;
    AccessControlService& acs_;
    const TrustStore& as_trust_;
    ProposalLog& log_;
    ScriptSwapSlot& slot_;
    NotificationSink* sink_;

    mutable std::mutex mu_;
    ActiveScript script_; // the staged working copy
    std::map<std::string, RuleProposal> proposals_;
    std::vector<std::string> proposal_order_;
    std::uint64_t next_proposal_ = 0;
    bool dirty_ = false;
};

} // namespace hearth
